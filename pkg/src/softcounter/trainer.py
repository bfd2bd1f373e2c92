# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Training and evaluation of the scoring models.

Training minimises the mean softmax cross-entropy over the choices of every
instance of a batch, plus the model regularizer (the scaled KL term of the
variational layers). Parameters are updated by RAdam, one step per batch.
After every epoch the dev accuracy is measured; the parameters of the best
dev epoch are restored at the end, and training stops early after
``patience`` epochs without improvement.

Everything is determined by the seed: the batch order comes from one random
stream, the variational noise from another.
"""
import json
from collections.abc import Callable
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .exception import CheckpointError
from .exception import InvalidConfigError
from .instance_io import Prediction
from .logging_config import get_logger
from .logging_config import log_stat
from .models import EncodedInstance
from .models import ScoringModel
from .monitoring import UtilsMonitoring
from .optimizer import RAdam
from .optimizer import RAdamHyper
from .schema_graph import QAInstance
from .schema_graph import validate_graph

logger = get_logger(__name__)

LR_SCHEDULES = ("constant", "linear")
LONG_RUN_EPOCHS = 75


@dataclass(frozen=True)
class TrainConfig:
    """
    Attributes
    ----------
    lr : float
        Learning rate (default 1e-2).
    batch_size : int
        Instances per update (default 128).
    max_epochs : int
        Epoch budget (default 30).
    long_run : bool
        Use the long budget of 75 epochs instead of ``max_epochs``.
    patience : int
        Stop after this many epochs without dev improvement (0 disables).
    seed : int
        Seed of the batch order, the initialisation and the variational noise.
    beta1, beta2, eps : float
        RAdam settings.
    lr_schedule : str
        ``constant`` or ``linear`` decay to zero over the epoch budget.
    select_best : bool
        Restore the parameters of the best dev epoch at the end; otherwise
        keep the last ones.
    """

    lr: float = 1e-2
    batch_size: int = 128
    max_epochs: int = 30
    long_run: bool = False
    patience: int = 5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_schedule: str = "constant"
    select_best: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise InvalidConfigError("lr", self.lr, "must be > 0")
        if self.batch_size < 1:
            raise InvalidConfigError("batch_size", self.batch_size, "must be >= 1")
        if self.max_epochs < 1:
            raise InvalidConfigError("max_epochs", self.max_epochs, "must be >= 1")
        if self.patience < 0:
            raise InvalidConfigError("patience", self.patience, "must be >= 0")
        if self.lr_schedule not in LR_SCHEDULES:
            raise InvalidConfigError(
                "lr_schedule", self.lr_schedule, f"expected one of {LR_SCHEDULES}"
            )
        # validates beta1, beta2 and eps
        self.hyper()

    @property
    def epochs(self) -> int:
        return LONG_RUN_EPOCHS if self.long_run else self.max_epochs

    def hyper(self) -> RAdamHyper:
        return RAdamHyper(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)

    def learning_rate(self, epoch: int) -> float:
        """Learning rate of 0-based ``epoch``."""
        if self.lr_schedule == "linear":
            return self.lr * (1.0 - epoch / self.epochs)
        return self.lr

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    dev_accuracy: float
    lr: float
    kl_coefficient: float
    best: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    """Trained model (best dev parameters restored) and the epoch log."""

    model: ScoringModel
    history: list[EpochMetrics] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_accuracy: float = 0.0
    stopped_early: bool = False


@dataclass(frozen=True)
class EvaluationResult:
    accuracy: float
    predictions: list[Prediction]


def argmax_prediction(instance_id: str, scores: np.ndarray) -> Prediction:
    """Prediction of one instance; ties go to the lowest choice index."""
    return Prediction(
        id=instance_id,
        pred=int(np.argmax(scores)),
        scores=tuple(float(score) for score in scores),
    )


def accuracy(predictions, labels) -> float:
    labels = list(labels)
    if not labels:
        return 0.0
    hits = sum(
        int(prediction.pred == label)
        for prediction, label in zip(predictions, labels)
    )
    return hits / len(labels)


def _batches(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def predict_encoded(
    model: ScoringModel, encoded: list[EncodedInstance], batch_size: int = 128
) -> list[Prediction]:
    predictions = []
    for batch in _batches(encoded, batch_size):
        for item, scores in zip(batch, model.predict(batch)):
            predictions.append(argmax_prediction(item.id, scores))
    return predictions


def batch_loss(
    model: ScoringModel,
    batch: list[EncodedInstance],
    rng: np.random.Generator,
    kl_coefficient: float,
    n_train: int,
) -> tuple[ad.Value, np.ndarray]:
    """
    Mean cross-entropy of a batch plus the model regularizer.

    Must run inside a tape. Returns the loss and the flat training-mode scores.
    """
    scores = model.batch_scores(batch, rng, training=True)
    bounds = np.cumsum([0] + [item.num_choices for item in batch])
    losses = [
        ad.softmax_cross_entropy(
            ad.take(scores, np.arange(bounds[k], bounds[k + 1])), item.label
        )
        for k, item in enumerate(batch)
    ]
    loss = ad.mean(ad.stack(losses))
    regularizer = model.regularizer(kl_coefficient, n_train)
    if regularizer is not None:
        loss = ad.add(loss, regularizer)
    return loss, scores.data


class Trainer:
    """
    Mini-batch trainer with best-dev model selection.

    Epoch callbacks are called after every epoch as
    ``callback(epoch, metrics)`` with the 1-based epoch index.
    """

    def __init__(self, model: ScoringModel, config: TrainConfig | None = None):
        self.model = model
        self.config = config if config is not None else TrainConfig()
        self.callbacks: list[Callable] = []

    def add_epoch_callback(self, callback: Callable) -> None:
        self.callbacks.append(callback)

    def _kl_coefficient(self, epoch: int) -> float:
        sparse_config = getattr(self.model, "sparse_config", None)
        if sparse_config is None:
            return 0.0
        return sparse_config.kl_coefficient(epoch, self.config.epochs)

    def _snapshot(self) -> dict[str, np.ndarray]:
        parameters = self.model.named_parameters()
        return {name: value.data.copy() for name, value in parameters.items()}

    def _restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, value in self.model.named_parameters().items():
            value.data[...] = snapshot[name]

    def _run_epoch(self, encoded, optimizer, order_rng, noise_rng, epoch) -> tuple:
        config = self.config
        lr = config.learning_rate(epoch)
        coefficient = self._kl_coefficient(epoch)
        order = order_rng.permutation(len(encoded))
        shuffled = [encoded[index] for index in order]
        total_loss, hits = 0.0, 0
        for batch in _batches(shuffled, config.batch_size):
            optimizer.zero_grad()
            with ad.Tape() as tape:
                loss, scores = batch_loss(
                    self.model, batch, noise_rng, coefficient, len(encoded)
                )
                tape.backward(loss)
            optimizer.step(lr=lr)
            total_loss += loss.item() * len(batch)
            bounds = np.cumsum([0] + [item.num_choices for item in batch])
            hits += sum(
                int(np.argmax(scores[bounds[k] : bounds[k + 1]]) == item.label)
                for k, item in enumerate(batch)
            )
        return total_loss / len(encoded), hits / len(encoded), lr, coefficient

    @UtilsMonitoring.time_spend(level="INFO")
    def train(
        self,
        train_instances: list[QAInstance],
        dev_instances: list[QAInstance] | None = None,
    ) -> TrainResult:
        """
        Train the model and restore its best-dev parameters.

        Without dev instances, the training accuracy selects the model.

        Raises
        ------
        InvalidConfigError
            For an empty training set.
        """
        if not train_instances:
            raise InvalidConfigError("train", 0, "the training set is empty")
        config = self.config
        encoded = self.model.encode_all(train_instances)
        dev = self.model.encode_all(dev_instances) if dev_instances else []
        optimizer = RAdam(self.model.named_parameters(), config.hyper())
        order_rng = np.random.default_rng([config.seed, 0])
        noise_rng = np.random.default_rng([config.seed, 1])
        result = TrainResult(model=self.model, best_dev_accuracy=-1.0)
        best_snapshot = self._snapshot()
        stall = 0
        logger.info(
            "training {kind} | train={n} dev={m} epochs={epochs} batch={batch} lr={lr}",
            kind=self.model.kind,
            n=len(encoded),
            m=len(dev),
            epochs=config.epochs,
            batch=config.batch_size,
            lr=config.lr,
        )
        for epoch in range(config.epochs):
            train_loss, train_accuracy, lr, coefficient = self._run_epoch(
                encoded, optimizer, order_rng, noise_rng, epoch
            )
            if dev:
                predictions = predict_encoded(self.model, dev, config.batch_size)
                dev_accuracy = accuracy(predictions, [item.label for item in dev])
            else:
                dev_accuracy = train_accuracy
            improved = dev_accuracy > result.best_dev_accuracy
            if improved:
                result.best_dev_accuracy = dev_accuracy
                result.best_epoch = epoch + 1
                best_snapshot = self._snapshot()
                stall = 0
            else:
                stall += 1
            metrics = EpochMetrics(
                epoch=epoch + 1,
                train_loss=train_loss,
                train_accuracy=train_accuracy,
                dev_accuracy=dev_accuracy,
                lr=lr,
                kl_coefficient=coefficient,
                best=improved,
            )
            result.history.append(metrics)
            log_stat("epoch", model=self.model.kind, **metrics.to_dict())
            logger.info(
                "epoch {epoch}/{total} | loss={loss:.4f} train acc={train:.4f} dev acc={dev:.4f}",
                epoch=epoch + 1,
                total=config.epochs,
                loss=train_loss,
                train=train_accuracy,
                dev=dev_accuracy,
            )
            for callback in self.callbacks:
                callback(epoch + 1, metrics)
            if config.patience and stall >= config.patience:
                result.stopped_early = True
                logger.info("early stop after {n} stall epoch(s)", n=stall)
                break
        if config.select_best:
            self._restore(best_snapshot)
        logger.info(
            "best epoch {epoch} | dev acc={acc:.4f}",
            epoch=result.best_epoch,
            acc=result.best_dev_accuracy,
        )
        return result


def train(
    model: ScoringModel,
    train_instances: list[QAInstance],
    dev_instances: list[QAInstance] | None = None,
    config: TrainConfig | None = None,
) -> TrainResult:
    return Trainer(model, config).train(train_instances, dev_instances)


def check_compatible(model: ScoringModel, instances: list[QAInstance]) -> None:
    """
    Raises
    ------
    CheckpointError
        If a graph does not fit the vocabulary of the model.
    """
    for instance in instances:
        for index, choice in enumerate(instance.choices):
            diagnostics = validate_graph(choice.graph, model.vocab)
            if diagnostics:
                raise CheckpointError(
                    f"instance '{instance.id}' choice {index} does not fit the "
                    f"checkpoint vocabulary: {diagnostics[0]}"
                )


@UtilsMonitoring.time_spend(level="INFO")
def evaluate(
    model: ScoringModel, instances: list[QAInstance], batch_size: int = 128
) -> EvaluationResult:
    """Accuracy and per-instance predictions, argmax with lowest-index tie-break."""
    check_compatible(model, instances)
    encoded = model.encode_all(instances)
    predictions = predict_encoded(model, encoded, batch_size)
    score = accuracy(predictions, [instance.label for instance in instances])
    log_stat("evaluate", model=model.kind, count=len(instances), accuracy=score)
    logger.info(
        "evaluated {kind} on {n} instance(s) | accuracy={acc:.4f}",
        kind=model.kind,
        n=len(instances),
        acc=score,
    )
    return EvaluationResult(accuracy=score, predictions=predictions)


def write_metric_log(history: list[EpochMetrics], path: str | Path) -> None:
    """Write one compact JSON object per epoch; identical runs give identical bytes."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as stream:
        for metrics in history:
            stream.write(json.dumps(metrics.to_dict(), separators=(",", ":")) + "\n")


def read_metric_log(path: str | Path) -> list[EpochMetrics]:
    with open(path, encoding="utf-8") as stream:
        return [EpochMetrics(**json.loads(line)) for line in stream if line.strip()]
