import json

import matplotlib

matplotlib.use("Agg")

import pytest  # noqa: E402
from softcounter.__main__ import EXIT_CONFIG  # noqa: E402
from softcounter.__main__ import EXIT_OK  # noqa: E402
from softcounter.__main__ import EXIT_VALIDATION  # noqa: E402
from softcounter.__main__ import main  # noqa: E402
from softcounter.__main__ import parse_cli  # noqa: E402
from softcounter.instance_io import load_instances  # noqa: E402
from softcounter.instance_io import load_predictions  # noqa: E402

# -----------------------------------------------------------------------------
# Fixtures
# -----------------------------------------------------------------------------


@pytest.fixture(autouse=True)
def quiet_setup(mocker):
    """Keep the test sinks of loguru in place."""
    return mocker.patch("softcounter.__main__.setup_logging")


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps({"train": {"batch_size": 8, "max_epochs": 2, "patience": 0}}),
        encoding="utf-8",
    )
    return path


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "data" / "train.jsonl"
    assert main(["gen", "--out", str(path), "--count", "24", "--seed", "2"]) == EXIT_OK
    return path


@pytest.fixture
def gsc_run(tmp_path, config_file, corpus):
    out = tmp_path / "gsc"
    code = main(
        [
            "--config",
            str(config_file),
            "train",
            "--model",
            "gsc",
            "--data",
            str(corpus),
            "--dev",
            str(corpus),
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK
    return out


# -----------------------------------------------------------------------------
# Parser
# -----------------------------------------------------------------------------


def test_parse_cli_defaults():
    options = parse_cli(["bench", "--edges", "10", "20"])

    assert options.command == "bench"
    assert options.edges == [10, 20]
    assert options.level == "INFO"


def test_parse_cli_requires_a_command():
    with pytest.raises(SystemExit):
        parse_cli([])


def test_main_configures_logging(quiet_setup, tmp_path):
    out = str(tmp_path / "a.jsonl")

    main(["--level", "DEBUG", "gen", "--out", out, "--count", "2"])

    quiet_setup.assert_called_once_with(
        log_level="DEBUG", log_file=None, stats_file=None
    )


# -----------------------------------------------------------------------------
# Subcommands
# -----------------------------------------------------------------------------


def test_gen_writes_corpus(corpus):
    instances = load_instances(corpus)

    assert len(instances) == 24
    assert all(instance.num_choices == 5 for instance in instances)


def test_gen_dissection_preset(tmp_path):
    path = tmp_path / "dissection.jsonl"

    code = main(["gen", "--preset", "dissection", "--count", "6", "--out", str(path)])

    assert code == EXIT_OK
    assert len(load_instances(path)) == 6


def test_train_writes_run_files(gsc_run):
    checkpoint = json.loads((gsc_run / "checkpoint.json").read_text("utf-8"))
    metrics = (gsc_run / "metrics.jsonl").read_text("utf-8").splitlines()

    assert checkpoint["model"] == "gsc"
    assert len(metrics) == 2
    assert len(load_predictions(gsc_run / "dev_predictions.jsonl")) == 24


def test_eval_and_overlap(tmp_path, gsc_run, corpus):
    preds = tmp_path / "preds.jsonl"
    report = tmp_path / "overlap.json"

    code = main(
        [
            "eval",
            "--checkpoint",
            str(gsc_run / "checkpoint.json"),
            "--data",
            str(corpus),
            "--preds-out",
            str(preds),
        ]
    )
    assert code == EXIT_OK

    code = main(
        [
            "overlap",
            "--a",
            str(preds),
            "--b",
            str(gsc_run / "dev_predictions.jsonl"),
            "--gold",
            str(corpus),
            "--out",
            str(report),
        ]
    )
    assert code == EXIT_OK
    data = json.loads(report.read_text("utf-8"))
    assert data["total"] == 24
    assert data["agreement"] == pytest.approx(100.0)


def test_inspect_writes_counts_and_traces(tmp_path, gsc_run, corpus):
    out = tmp_path / "inspect"

    code = main(
        [
            "inspect",
            "--checkpoint",
            str(gsc_run / "checkpoint.json"),
            "--top-k",
            "5",
            "--named",
            "--data",
            str(corpus),
            "--plot",
            "--out",
            str(out),
        ]
    )

    assert code == EXIT_OK
    rows = (out / "soft_counts.csv").read_text("utf-8").splitlines()
    assert rows[0] == "head_type,relation,tail_type,soft_count"
    assert len(rows) == 6
    assert len(json.loads((out / "traces.json").read_text("utf-8"))) == 5
    assert len(list(out.glob("trace_*.png"))) == 5


def test_inspect_needs_a_gsc_checkpoint(tmp_path, config_file, corpus):
    out = tmp_path / "counter"
    main(
        [
            "--config",
            str(config_file),
            "train",
            "--model",
            "counter1",
            "--data",
            str(corpus),
            "--out",
            str(out),
        ]
    )

    code = main(
        [
            "inspect",
            "--checkpoint",
            str(out / "checkpoint.json"),
            "--out",
            str(tmp_path / "inspect"),
        ]
    )

    assert code == EXIT_CONFIG


def test_bench_writes_report(tmp_path):
    out = tmp_path / "bench.json"

    code = main(
        ["bench", "--edges", "100", "200", "--repetitions", "1", "--out", str(out)]
    )

    assert code == EXIT_OK
    assert [row["edges"] for row in json.loads(out.read_text("utf-8"))["rows"]] == [
        100,
        200,
    ]


# -----------------------------------------------------------------------------
# Exit codes
# -----------------------------------------------------------------------------


def test_prune_without_data_is_a_config_error(tmp_path):
    assert main(["prune", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_invalid_config_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"train": {"lr": -1.0}}), encoding="utf-8")

    code = main(["--config", str(path), "gen", "--out", str(tmp_path / "x.jsonl")])

    assert code == EXIT_CONFIG


def test_unknown_planted_key_is_a_config_error(tmp_path):
    path = tmp_path / "planted.json"
    planted = {"head_type": 1, "relation": 2, "tail_type": 1, "delta": 1, "w": 2}
    path.write_text(
        json.dumps({"synthetic": {"planted": [planted]}}), encoding="utf-8"
    )

    code = main(["--config", str(path), "gen", "--out", str(tmp_path / "x.jsonl")])

    assert code == EXIT_CONFIG


def test_missing_instance_file(tmp_path):
    code = main(
        [
            "train",
            "--data",
            str(tmp_path / "absent.jsonl"),
            "--out",
            str(tmp_path / "run"),
        ]
    )

    assert code == EXIT_VALIDATION


def test_unreadable_checkpoint(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": "q1"\n', encoding="utf-8")

    code = main(["eval", "--checkpoint", str(path), "--data", str(path)])

    assert code != EXIT_OK


def test_malformed_training_file(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": "q1"\n', encoding="utf-8")

    code = main(["train", "--data", str(path), "--out", str(tmp_path / "run")])

    assert code == EXIT_VALIDATION
