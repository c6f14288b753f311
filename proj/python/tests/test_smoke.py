# Copyright 2026 The poolab Authors
# SPDX-License-Identifier: Apache-2.0

import json
import math
import os
import pathlib

import numpy as np
import pytest
from scipy import stats

import poolab

SOURCE = pathlib.Path(os.environ.get("POOLAB_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
FIXTURES = SOURCE / "fixtures" / "results"


def test_wilcoxon_matches_scipy_without_ties():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=12), rng.normal(size=12)
    got = poolab.wilcoxon(x.tolist(), y.tolist())
    want = stats.wilcoxon(y - x, method="exact")
    assert got["exact"]
    assert got["statistic"] == pytest.approx(want.statistic, abs=1e-12)
    assert got["p_value"] == pytest.approx(want.pvalue, rel=1e-12)


def test_wilcoxon_all_positive():
    r = poolab.wilcoxon([0.0] * 8, [float(i + 1) for i in range(8)])
    assert r["p_value"] == 0.0078125
    assert r["w_plus"] == 36.0
    with pytest.raises(poolab.ConfigError):
        poolab.wilcoxon([0.0], [1.0], zeros="bogus")


def test_spearman_matches_scipy_with_ties():
    x, y = [1.0, 2.0, 2.0, 4.0], [1.0, 3.0, 2.0, 4.0]
    assert poolab.spearman(x, y) == pytest.approx(stats.spearmanr(x, y).statistic, abs=1e-12)
    assert poolab.spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None


def test_ranking_and_clustering_metrics():
    assert poolab.ndcg_at_k(["d2", "d1", "d3"], {"d1": 1.0}) == pytest.approx(1 / math.log2(3))
    assert poolab.v_measure([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2]) == pytest.approx(0.5158037429793889)
    with pytest.raises(poolab.ContractError):
        poolab.ndcg_at_k(["a", "a"], {"a": 1.0})


def test_compare_report_on_fixtures():
    report = json.loads(
        poolab.compare_report((FIXTURES / "model1.json").read_text(), (FIXTURES / "model2.json").read_text())
    )
    assert report["baseline_id"] == "model1"
    sts = next(r for r in report["rows"] if r["task"] == "STS")
    assert sts["p_value"] == 0.0078125
    assert sts["significant"]
    with pytest.raises(poolab.DataError):
        poolab.compare_report("[]", "{")


def test_train_encode_and_analyze(tmp_path):
    code, out, err = poolab.run_cli(
        ["gen-synthetic", "--out", str(tmp_path / "synth"), "--clusters", "4", "--size", "64", "--seed", "1"]
    )
    assert code == 0, err
    config = json.loads((SOURCE / "configs" / "model5.json").read_text())
    config["model"].update(n_layers=2, hidden_dim=16, n_heads=2, ffn_dim=32, vocab_size=512, max_seq_len=32)
    config["pooling"]["heads"] = 2
    config["train"].update(batch_size=8, max_steps=3)
    (tmp_path / "tiny.json").write_text(json.dumps(config))
    ckpt = str(tmp_path / "m.ckpt")
    code, out, err = poolab.run_cli(
        ["train", "--config", str(tmp_path / "tiny.json"), "--data", str(tmp_path / "synth"), "--out", ckpt]
    )
    assert code == 0, err

    enc = poolab.Encoder(ckpt)
    emb = enc.encode(["alpha beta", "gamma", ""])
    assert emb.shape == (3, 16)
    np.testing.assert_allclose(np.linalg.norm(emb, axis=1), 1.0, atol=1e-12)
    assert json.loads(enc.config_json)["preset"] == "model5"

    corpus = str(tmp_path / "synth" / "eval" / "retrieval" / "corpus.jsonl")
    code, _, err = poolab.run_cli(
        ["encode", "--ckpt", ckpt, "--input", corpus, "--out", str(tmp_path / "e.emb"),
         "--dump-hidden", str(tmp_path / "e.hsd")]
    )
    assert code == 0, err
    corr = poolab.layer_correlation(str(tmp_path / "e.hsd"))
    assert corr.shape == (2, 2)
    np.testing.assert_allclose(np.diag(corr), 1.0, atol=1e-12)
    np.testing.assert_allclose(corr, corr.T, atol=1e-12)


def test_errors_map_to_python_exceptions(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"nope")
    with pytest.raises(poolab.DataError):
        poolab.Encoder(str(bad))
    assert issubclass(poolab.DataError, poolab.PoolabError)
    code, _, _ = poolab.run_cli(["eval", "--task", "bogus"])
    assert code == 2
