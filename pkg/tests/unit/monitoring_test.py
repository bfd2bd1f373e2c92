"""
# Test Suite for UtilsMonitoring and the logging helpers

1. **Mock logger**:
   The monitoring logger is mocked so that the records can be inspected
   without reaching the configured sinks.

2. **Tests for `time_spend`**:
   - the duration is logged at the requested level;
   - a call slower than `threshold_in_ms` is logged as a WARNING;
   - the wrapped function keeps its name and its result.

3. **Tests for `log_stat`**:
   Statistics records are single JSON lines tagged with `log_type`.
"""
import json
import time
from unittest.mock import ANY
from unittest.mock import MagicMock

import pytest
from softcounter.logging_config import _json_formatter
from softcounter.logging_config import _not_stat
from softcounter.logging_config import _only_stat
from softcounter.logging_config import log_stat
from softcounter.monitoring import UtilsMonitoring


# Mock logger to prevent actual logging during tests
@pytest.fixture(autouse=True)
def mock_logger(mocker):
    mock_logger = mocker.patch("softcounter.monitoring.logger", new_callable=MagicMock)
    yield mock_logger


# Tests for the time_spend decorator
def test_time_spend_logs_function_duration(mock_logger):
    @UtilsMonitoring.time_spend(level="INFO")
    def sleep_func():
        time.sleep(0.01)
        return 42

    assert sleep_func() == 42
    assert sleep_func.__name__ == "sleep_func"
    mock_logger.log.assert_any_call("INFO", ANY)
    log_calls = [call for call in mock_logger.log.call_args_list]
    assert any("finished in" in str(call) for call in log_calls)


def test_time_spend_without_arguments(mock_logger):
    @UtilsMonitoring.time_spend
    def quick_func(a, b):
        return a + b

    assert quick_func(3, 4) == 7
    mock_logger.log.assert_called_once_with("DEBUG", ANY)


def test_time_spend_warns_above_threshold(mock_logger):
    @UtilsMonitoring.time_spend(level="INFO", threshold_in_ms=1)
    def slow_func():
        time.sleep(0.02)

    slow_func()
    mock_logger.log.assert_called_once_with("WARNING", ANY)


def test_time_spend_propagates_exceptions(mock_logger):
    @UtilsMonitoring.time_spend(level="INFO")
    def failing_func():
        raise ValueError("boom")

    with pytest.raises(ValueError):
        failing_func()
    mock_logger.log.assert_not_called()


# Tests for the statistics stream
def test_log_stat_emits_json_line(mocker):
    stats_logger = mocker.patch("softcounter.logging_config.logger")
    log_stat("epoch", model="gsc", epoch=3, dev_accuracy=0.9)
    stats_logger.bind.assert_called_once_with(stat=True, module="stats")
    record = json.loads(stats_logger.bind.return_value.debug.call_args[0][0])
    assert record["log_type"] == "stat"
    assert record["event"] == "epoch"
    assert record["epoch"] == 3
    assert "ts" in record


def test_stat_filters():
    assert _only_stat({"extra": {"stat": True}})
    assert not _not_stat({"extra": {"stat": True}})
    assert _not_stat({"extra": {"module": "softcounter.gsc"}})


def test_json_formatter_escapes_braces():
    record = {
        "time": MagicMock(isoformat=MagicMock(return_value="2026-01-01T00:00:00")),
        "level": MagicMock(),
        "extra": {"module": "softcounter.trainer", "epoch": 2},
        "name": "softcounter.trainer",
        "message": "epoch {done}",
        "exception": None,
    }
    record["level"].name = "INFO"
    line = _json_formatter(record)
    assert line.endswith("\n")
    payload = json.loads(line.replace("{{", "{").replace("}}", "}"))
    assert payload["module"] == "softcounter.trainer"
    assert payload["epoch"] == 2
