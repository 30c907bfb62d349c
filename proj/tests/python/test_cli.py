import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("GAPKIT_CLI", "gapkit")
DATA = Path(__file__).resolve().parent.parent / "data"
SMALL = {"corpus": {"n_classes": 4, "rows": 400, "dim": 16, "seed": 3},
         "train": {"epochs": 2, "batch_size": 64}}


def run(*args, check=True):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check and p.returncode != 0:
        raise AssertionError(f"{args}: exit {p.returncode}\n{p.stderr}")
    return p


@pytest.fixture
def small(tmp_path):
    cfg = tmp_path / "small.json"
    cfg.write_text(json.dumps(SMALL))
    corpus = tmp_path / "small.clse"
    run("synth", "--spec", cfg, "--seed", 3, "--out", corpus)
    return cfg, corpus


def test_synth_is_byte_identical(tmp_path, small):
    cfg, _ = small
    a, b = tmp_path / "a.clse", tmp_path / "b.clse"
    run("synth", "--spec", cfg, "--seed", 7, "--out", a)
    run("synth", "--spec", cfg, "--seed", 7, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    run("synth", "--spec", cfg, "--seed", 8, "--out", b)
    assert a.read_bytes() != b.read_bytes()
    meta = json.loads(Path(str(a) + ".meta.json").read_text())
    assert meta["spec"]["seed"] == 7


def test_transfer_shape(small):
    cfg, _ = small
    doc = json.loads(run("transfer", "--config", cfg, "--conditions", "none,noise:0.08",
                         "--seeds", "1,2,3").stdout)
    assert [c["name"] for c in doc["conditions"]] == ["none", "noise:0.08"]
    assert all(len(c["cells"]) == 3 for c in doc["conditions"])
    csv = run("transfer", "--config", cfg, "--seeds", "1,2", "--format", "csv").stdout
    assert len(csv.strip().splitlines()) == 1 + 2 * 2


def test_repeated_commands_match(small, tmp_path):
    _, corpus = small
    for args in (["gap-stats", "--corpus", corpus, "--seed", 5, "--vector"],
                 ["pca", "--corpus", corpus, "--split", "val", "--split-seed", 2],
                 ["sensitivity", "--corpus", corpus, "--runs", 1, "--seed", 5]):
        assert run(*args).stdout == run(*args).stdout


def test_pca_matches_module(small):
    gapkit = pytest.importorskip("gapkit")
    _, corpus = small
    cli = json.loads(run("pca", "--corpus", corpus, "--components", 8).stdout)
    mod = gapkit.diff_pca(gapkit.load_corpus(corpus), 8)
    for a, b in zip(cli["explained_ratio"], mod["explained_ratio"]):
        assert abs(a - b) < 1e-12


def test_fit_and_apply(small, tmp_path):
    _, corpus = small
    adapter = tmp_path / "mean.json"
    run("fit-adapter", "--kind", "mean_shift", "--corpus", corpus, "--out", adapter)
    assert json.loads(adapter.read_text())["type"] == "constant_shift"
    out = tmp_path / "shifted.clse"
    run("apply", "--corpus", corpus, "--adapter", adapter, "--noise", 0.05, "--seed", 1,
        "--out", out)
    assert run("validate", "--corpus", out).returncode == 0
    before = json.loads(run("gap-stats", "--corpus", corpus, "--seed", 1).stdout)
    after = json.loads(run("gap-stats", "--corpus", out, "--seed", 1).stdout)
    assert after["gap_norm"] < before["gap_norm"]


def test_prompt_pipeline(tmp_path):
    caps = tmp_path / "caps.txt"
    words = ["dog", "cat", "red", "car", "park", "tree", "ball", "bird"]
    caps.write_text("".join(f"a {words[i % 8]} with the {words[(i * 3 + 1) % 8]}\n"
                            for i in range(40)))
    prompts = tmp_path / "prompts.jsonl"
    run("prompt-build", "--captions", caps, "--n", 6, "--examples", 2, "--seed", 1,
        "--out", prompts)
    lines = [json.loads(l) for l in prompts.read_text().splitlines()]
    assert [l["prompt_id"] for l in lines] == list(range(6))
    for l in lines:
        assert l["prompt_text"].endswith(", ".join(l["keywords"]) + ":")
        assert len(l["prompt_text"].splitlines()) == 2 + 2
    cands = tmp_path / "cands.jsonl"
    cands.write_text("".join(json.dumps({"prompt_id": l["prompt_id"],
                                         "candidates": [" ".join(l["keywords"]), "nothing"]}) + "\n"
                             for l in lines))
    picked = [json.loads(l) for l in run("prompt-filter", "--prompts", prompts, "--candidates",
                                         cands, "--seed", 2).stdout.splitlines()]
    assert all(p["contains_keywords"] and p["index"] == 0 for p in picked)
    stats = json.loads(run("keyword-stats", "--prompts", prompts, "--candidates", cands).stdout)
    assert stats["individual_rate"] == 0.5
    assert stats["any_rate"] == 1.0


def test_exit_codes(tmp_path):
    assert run("validate", "--corpus", DATA / "golden3.clse").returncode == 0
    assert run("frobnicate", check=False).returncode == 2
    assert run("gap-stats", "--corpus", DATA / "golden3.clse", check=False).returncode == 2
    assert run("gap-stats", "--corpus", tmp_path / "missing.clse", "--seed", 1,
               check=False).returncode == 1
    bad = tmp_path / "bad.clse"
    bad.write_bytes(b"CLSX" + bytes(16))
    assert run("gap-stats", "--corpus", bad, "--seed", 1, check=False).returncode == 2
    assert run("transfer", "--corpus", DATA / "golden3.clse", "--conditions", "warp",
               "--seeds", 1, check=False).returncode == 2
    assert run("--help").stdout.startswith("gapkit")
