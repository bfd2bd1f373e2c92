# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Loguru sinks of softcounter.

A run writes two streams:

- the operational log: coloured text on ``stderr`` (or JSON with
  ``json_console``), and JSON lines in ``log_file`` when given;
- the statistics log: one JSON object per line in ``stats_file``, built by
  :func:`log_stat`. Events are ``epoch``, ``evaluate``, ``sparse_ratio``,
  ``bench`` and ``generate``.

Statistics carry a wall-clock timestamp. They are never mixed with the
metric log of the trainer, whose bytes must not depend on the clock.

Modules log through a bound logger::

    logger = get_logger(__name__)
    logger.info("model built | kind={kind} params={n}", kind="gsc", n=1537)
"""
import json
import sys
from datetime import datetime
from datetime import timezone
from pathlib import Path

from loguru import logger

CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{extra[module]}</cyan> | "
    "{message}"
)
STAT_MODULE = "stats"

_configured = False


def _not_stat(record: dict) -> bool:
    """Operational sinks drop statistics records."""
    return not record["extra"].get("stat", False)


def _only_stat(record: dict) -> bool:
    return record["extra"].get("stat", False)


def _json_formatter(record: dict) -> str:
    """One JSON line per operational record; bound extras become fields."""
    payload = {
        "ts": record["time"].isoformat(),
        "level": record["level"].name,
        "module": record["extra"].get("module", record["name"]),
        "msg": record["message"],
    }
    payload.update(
        (key, value)
        for key, value in record["extra"].items()
        if key not in ("module", "stat")
    )
    if record["exception"]:
        payload["exc"] = str(record["exception"])
    # loguru formats the returned string again
    line = json.dumps(payload, default=str)
    return line.replace("{", "{{").replace("}", "}}") + "\n"


def _add_console(level: str, as_json: bool) -> None:
    if as_json:
        logger.add(
            sys.stderr,
            level=level,
            format=_json_formatter,
            colorize=False,
            filter=_not_stat,
        )
    else:
        logger.add(
            sys.stderr,
            level=level,
            format=CONSOLE_FORMAT,
            colorize=True,
            filter=_not_stat,
        )


def _add_file(path: str, rotation: str, retention: str, **options) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    logger.add(
        path, rotation=rotation, retention=retention, encoding="utf-8", **options
    )


def setup_logging(
    log_level: str = "INFO",
    log_file: str | None = None,
    stats_file: str | None = None,
    rotation: str = "50 MB",
    retention: str = "30 days",
    json_console: bool = False,
) -> None:
    """
    Replace the default loguru sink by the softcounter sinks.

    Only the first call configures anything.

    Parameters
    ----------
    log_level : str
        Minimum level of the operational log.
    log_file : str | None
        Rotating, compressed JSON-lines operational log.
    stats_file : str | None
        JSON-lines statistics log; without it statistics are dropped, since
        the console and ``log_file`` sinks filter them out.
    rotation, retention : str
        loguru policies of the file sinks.
    json_console : bool
        Emit JSON on the console instead of coloured text.
    """
    global _configured
    if _configured:
        return
    _configured = True

    logger.remove()
    _add_console(log_level, json_console)
    if log_file:
        _add_file(
            log_file,
            rotation,
            retention,
            level=log_level,
            format=_json_formatter,
            compression="gz",
            filter=_not_stat,
        )
    if stats_file:
        _add_file(
            stats_file,
            rotation,
            retention,
            level="DEBUG",
            format="{message}",
            filter=_only_stat,
        )
    get_logger(__name__).info(
        "logging ready | level={level} log_file={log_file} stats_file={stats_file}",
        level=log_level,
        log_file=log_file or "-",
        stats_file=stats_file or "-",
    )


def get_logger(name: str):
    """Logger bound with ``module=name``, shown in every sink."""
    return logger.bind(module=name)


def log_stat(event: str, **fields) -> None:
    """
    Write one statistics record.

    Parameters
    ----------
    event : str
        Record kind, e.g. ``"epoch"`` or ``"bench"``.
    **fields
        JSON-serialisable values; anything else is rendered with ``str``.
        Epoch records carry ``model``, ``epoch``, ``train_loss``,
        ``dev_accuracy`` and ``kl_coefficient``.
    """
    record = {
        "log_type": "stat",
        "event": event,
        "ts": datetime.now(timezone.utc).isoformat(),
        **fields,
    }
    logger.bind(stat=True, module=STAT_MODULE).debug(json.dumps(record, default=str))
