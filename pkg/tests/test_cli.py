import json
from pathlib import Path

import pytest

from topicsim.cli import main


@pytest.fixture()
def tiny_config(tmp_path):
    cfg = {
        "n_users": 60,
        "n_domains": 2000,
        "sites": ["wa.example", "wb.example"],
        "epochs": 4,
        "seed": 5,
        "out": str(tmp_path / "run"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path, Path(cfg["out"])


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_full_pipeline(tiny_config, capsys):
    cfg, out = tiny_config
    assert run_cli("generate", "--config", cfg) == 0
    stdout = capsys.readouterr().out
    for label in ("Number of users", "Unique observed domains",
                  "Unique observed topics", "Unique top profiles"):
        assert label in stdout
    assert (out / "population.ndjson").exists()

    assert run_cli("simulate", "--config", cfg) == 0
    assert (out / "log.ndjson").exists() and (out / "truth.ndjson").exists()

    assert run_cli("denoise", "--config", cfg) == 0
    metrics = (out / "denoise_metrics.csv").read_text().splitlines()
    assert metrics[0].startswith("# topicsim=")
    assert metrics[1].startswith("epoch,accuracy,precision,tpr,fpr")
    assert len(metrics) == 2 + 4

    assert run_cli("reidentify", "--config", cfg) == 0
    report = (out / "reid_report.csv").read_text().splitlines()
    assert report[1] == "epoch,unique_rate,better_than_random_rate"
    assert (out / "reid_kcdf_epoch_01.csv").exists()

    assert run_cli("report", "--config", cfg) == 0
    hist = (out / "prevalence_hist.csv").read_text().splitlines()
    assert len(hist) == 2 + 349


def test_generate_single_user(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_users": 1, "n_domains": 500, "out": str(tmp_path / "o")}))
    assert run_cli("generate", "--config", cfg) == 0
    lines = (tmp_path / "o" / "population.ndjson").read_text().splitlines()
    assert len(lines) == 2  # header + one user


def test_rerun_is_byte_identical(tiny_config):
    cfg, out = tiny_config
    run_cli("generate", "--config", cfg)
    run_cli("simulate", "--config", cfg)
    first = {name: (out / name).read_bytes() for name in
             ("population.ndjson", "log.ndjson", "truth.ndjson")}
    run_cli("generate", "--config", cfg)
    run_cli("simulate", "--config", cfg)
    for name, blob in first.items():
        assert (out / name).read_bytes() == blob


def test_workers_flag_does_not_change_outputs(tiny_config):
    cfg, out = tiny_config
    run_cli("generate", "--config", cfg, "--workers", 1)
    one = (out / "population.ndjson").read_bytes()
    run_cli("generate", "--config", cfg, "--workers", 2)
    assert (out / "population.ndjson").read_bytes() == one


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"not_a_key": 1}))
    assert run_cli("analytics", "--config", cfg) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_missing_upstream_artifact_names_subcommand(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"out": str(tmp_path / "empty")}))
    assert run_cli("simulate", "--config", cfg) == 2
    err = capsys.readouterr().err
    assert "generate" in err and "population.ndjson" in err


def test_analytics_prints_expected_tail_probability(tmp_path, capsys):
    assert run_cli("analytics", "--out", tmp_path / "a") == 0
    out = capsys.readouterr().out
    assert "0.99275" in out
    payload = json.loads((tmp_path / "a" / "analytics.json").read_text())
    assert payload["prob_at_least_2_genuine"] == pytest.approx(0.99275)
    assert payload["expected_collection_epochs_ceiled"] == 13
    assert payload["consecutive_api_calls"] == 11


def test_filter_subcommand_reproduces_golden_fixtures(tmp_path, capsys):
    scores = tmp_path / "scores.tsv"
    rows = []
    v1 = ["0.0"] * 350
    v1[349] = "1.0"  # Unknown dominant
    rows.append("unknown-site.example\t" + " ".join(v1))
    v2 = ["0.0"] * 350
    v2[0], v2[1], v2[2] = "0.5", "0.3", "0.1"
    rows.append("two-topics.example\t" + " ".join(v2))
    v3 = ["0.0"] * 350
    v3[349], v3[0] = "0.5", "0.1"
    rows.append("sensitive.example\t" + " ".join(v3))
    scores.write_text("\n".join(rows) + "\n")

    assert run_cli("filter", "--scores", scores, "--out", tmp_path / "f") == 0
    lines = (tmp_path / "f" / "filtered_classification.tsv").read_text().splitlines()
    got = dict(line.split("\t") for line in lines[1:])
    assert got["unknown-site.example"] == ""  # Unknown -> empty topic set
    assert got["two-topics.example"] == "1,2"
    assert got["sensitive.example"] == ""


def test_seed_override_changes_outputs(tiny_config):
    cfg, out = tiny_config
    run_cli("generate", "--config", cfg)
    base = (out / "population.ndjson").read_bytes()
    run_cli("generate", "--config", cfg, "--seed", 99)
    assert (out / "population.ndjson").read_bytes() != base


def test_generate_from_rank_bucket_files(tmp_path):
    crux = tmp_path / "crux.csv"
    crux.write_text(
        "origin,rank_bucket\n"
        + "\n".join(f"host-{i}.example,1k" for i in range(40))
        + "\n"
        + "\n".join(f"tail-{i}.example,5k" for i in range(40))
        + "\n"
    )
    tranco = tmp_path / "tranco.csv"
    tranco.write_text(
        "rank,domain\n" + "\n".join(f"{i + 1},host-{i}.example" for i in range(40)) + "\n"
    )
    classification = tmp_path / "cls.tsv"
    classification.write_text(
        "\n".join(f"host-{i}.example\t{(i % 5) + 1}" for i in range(40))
        + "\n"
        + "\n".join(f"tail-{i}.example\t" for i in range(40))
        + "\n"
    )
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "n_users": 25,
        "crux": str(crux),
        "tranco": str(tranco),
        "classification": str(classification),
        "out": str(tmp_path / "o"),
        "histogram": None,
        "seed": 3,
    }))
    assert run_cli("generate", "--config", cfg) == 0
    lines = (tmp_path / "o" / "population.ndjson").read_text().splitlines()
    assert len(lines) == 1 + 25
