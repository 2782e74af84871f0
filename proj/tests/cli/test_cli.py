"""End-to-end checks of the tppmix command-line tool."""

import csv
import json
import os
import subprocess
from pathlib import Path

import pytest

BIN = os.environ.get("TPPMIX_BIN", "tppmix")
CONFIGS = Path(os.environ.get("TPPMIX_CONFIGS", Path(__file__).resolve().parents[2] / "configs"))
SMOKE = str(CONFIGS / "smoke.json")


def run(*args, check=True):
    proc = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


def read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    run("generate", "-c", SMOKE, "-o", out)
    return out / "dataset.jsonl"


@pytest.fixture(scope="module")
def trained(tmp_path_factory, dataset):
    out = tmp_path_factory.mktemp("train")
    run("train", "-c", SMOKE, "--dataset", dataset, "-o", out, "--workers", "1")
    return out


def test_generate_counts_and_bytes(tmp_path, dataset):
    records = read_jsonl(dataset)
    assert len(records) == 40
    assert sorted({r["label"] for r in records}) == [0, 1]
    assert sum(r["label"] == 0 for r in records) == 20
    again = tmp_path / "again"
    proc = run("generate", "-c", SMOKE, "-o", again)
    assert "cluster 0" in proc.stdout
    assert (again / "dataset.jsonl").read_bytes() == dataset.read_bytes()


def test_generate_four_clusters(tmp_path):
    proc = run("generate", "-c", SMOKE, "-o", tmp_path,
               "-s", 'generate.clusters=["sine","negative-sine","constant","bimodal"]',
               "-s", "generate.per_cluster=5")
    labels = {r["label"] for r in read_jsonl(tmp_path / "dataset.jsonl")}
    assert labels == {0, 1, 2, 3}
    assert proc.stdout.count("cluster ") == 4


def test_seed_changes_data(tmp_path, dataset):
    run("generate", "-c", SMOKE, "-o", tmp_path, "--seed", "4")
    assert (tmp_path / "dataset.jsonl").read_bytes() != dataset.read_bytes()


def test_train_outputs(trained, dataset):
    history = read_jsonl(trained / "history.jsonl")
    assert history[0]["iteration"] == 0
    assert all("wall_seconds" not in row for row in history)
    assert len(read_jsonl(trained / "timing.jsonl")) == len(history)
    labels = read_jsonl(trained / "labels.jsonl")
    assert len(labels) == 40
    assert {l["cluster"] for l in labels} <= {0, 1}
    summary = json.loads((trained / "summary.json").read_text())
    final = trained / summary["final_checkpoint"]
    for name in ("policy_0.json", "policy_1.json", "discriminator_0.json", "classifier.json", "assignment.json"):
        assert (final / name).exists()
    echo = json.loads((trained / "train.config.json").read_text())
    assert echo["training"]["em"]["workers"] == 1


def test_train_zero_iterations(tmp_path, dataset):
    run("train", "-c", SMOKE, "--dataset", dataset, "-o", tmp_path, "-s", "training.em.max_iterations=0")
    history = read_jsonl(tmp_path / "history.jsonl")
    assert [row["iteration"] for row in history] == [0]


def test_train_rerun_identical(tmp_path, trained, dataset):
    run("train", "-c", SMOKE, "--dataset", dataset, "-o", tmp_path, "--workers", "2")
    for name in ("history.jsonl", "labels.jsonl", "training_log.jsonl", "summary.json"):
        assert (tmp_path / name).read_bytes() == (trained / name).read_bytes(), name


def test_evaluate_true_labels_score_one(tmp_path, dataset):
    labels = tmp_path / "truth.jsonl"
    labels.write_text("".join(json.dumps({"id": r["id"], "cluster": r["label"]}) + "\n" for r in read_jsonl(dataset)))
    proc = run("evaluate", "-c", SMOKE, "--dataset", dataset, "-o", tmp_path / "eval",
               "-s", f"evaluate.labels={labels}", "-s", 'evaluate.metrics=["purity","rand_index"]')
    report = json.loads((tmp_path / "eval" / "metrics.json").read_text())
    values = {m["name"]: m["value"] for m in report["metrics"]}
    assert values == {"purity": 1.0, "rand_index": 1.0}
    assert "purity 1" in proc.stdout


def test_evaluate_checkpoint(tmp_path, trained, dataset):
    run("evaluate", "-c", SMOKE, "--dataset", dataset, "-o", tmp_path, "-s", f"evaluate.checkpoint={trained}")
    values = {m["name"]: m["value"] for m in json.loads((tmp_path / "metrics.json").read_text())["metrics"]}
    assert 0.5 <= values["purity"] <= 1.0
    assert values["eid"] >= 0.0


def test_export_constant_cluster(tmp_path, trained, dataset):
    run("export-intensity", "-c", SMOKE, "--dataset", dataset, "-o", tmp_path,
        "-s", f"export_intensity.checkpoint={trained}", "-s", "export_intensity.samples=2000")
    with open(tmp_path / "intensity.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"source", "cluster", "bin_center", "rate"}
    truth_constant = [float(r["rate"]) for r in rows if r["source"] == "truth" and r["cluster"] == "1"]
    assert len(truth_constant) == 20
    assert all(abs(v - 0.1) < 0.03 for v in truth_constant)
    centers = sorted({float(r["bin_center"]) for r in rows})
    assert centers[0] == 2.5 and centers[-1] == 97.5
    assert {r["source"] for r in rows} == {"truth", "policy"}


def test_echoed_config_reproduces(tmp_path, dataset):
    run("generate", "-c", SMOKE, "-o", tmp_path / "a", "-s", "generate.per_cluster=3")
    echo = tmp_path / "a" / "generate.config.json"
    run("generate", "-c", echo, "-o", tmp_path / "b")
    assert (tmp_path / "a" / "dataset.jsonl").read_bytes() == (tmp_path / "b" / "dataset.jsonl").read_bytes()


@pytest.mark.parametrize("args,code,kind", [
    (["train", "-s", "training.em.bogus=1"], 1, "invalid_argument"),
    (["generate", "-s", "seed=abc"], 1, "invalid_argument"),
    (["train", "--dataset", "/nonexistent/data.jsonl"], 1, "runtime_error"),
    (["evaluate", "--nope"], 2, "usage"),
    ([], 2, "usage"),
])
def test_errors(tmp_path, args, code, kind):
    proc = run(*args, "-o", tmp_path, check=False) if args else run(check=False)
    assert proc.returncode == code
    err = json.loads(proc.stderr.strip().splitlines()[-1])
    assert err["error"] == kind
    assert err["message"]
