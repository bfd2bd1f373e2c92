# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Soft and hard edge counting for knowledge-graph question answering.

Every answer choice of a multiple-choice question comes with a schema graph:
a context node linked to the question and answer entities, plus typed
knowledge-graph edges between entities. The package scores such graphs by
counting their edges.

Core capabilities
-----------------
1. **Graph Soft Counter (GSC)**
   A tiny edge encoder turns every edge triplet (head type, relation, tail
   type) into a soft count in ``(0, 1)``; parameter-free layers sum these
   counts along the paths that end at the context node.

2. **Hard counter**
   Integer histograms of one-hop triplets (and two-hop pairs) fed to a
   small MLP, the explicit-counting baseline.

3. **SparseVD dissection**
   Sparse variational dropout layers whose per-weight dropout rates reveal
   which inputs and layers a model can do without.

4. **Harness**
   Reverse-mode differentiation on a tape, RAdam, synthetic corpora with a
   planted counting signal, training, evaluation, prediction overlap and
   run-time scaling, all behind the ``softcounter`` command.

Design principles
-----------------
- **Determinism**: a seed fixes every metric, checkpoint byte and file.
- **Verifiability**: the soft-counting layers are checked against explicit
  path enumeration and every gradient against central differences.
- **Performance-oriented**: the graph kernels are accelerated using Numba.
"""
from ._version import __author__
from ._version import __author_email__
from ._version import __copyright__
from ._version import __description__
from ._version import __license__
from ._version import __name_soft__
from ._version import __title__
from ._version import __url__
from ._version import __version__
from .gsc import GSCConfig
from .gsc import GSCParams
from .gsc import gsc_forward
from .logging_config import get_logger
from .models import build_model
from .schema_graph import QAInstance
from .schema_graph import SchemaGraph
from .trainer import TrainConfig
from .trainer import Trainer
from .vocabulary import TripletVocabulary

logger = get_logger(__name__)

logger.debug(
    "{name} V{version} imported", name=__name_soft__, version=__version__
)

__all__ = [
    "GSCConfig",
    "GSCParams",
    "QAInstance",
    "SchemaGraph",
    "TrainConfig",
    "Trainer",
    "TripletVocabulary",
    "build_model",
    "gsc_forward",
]
