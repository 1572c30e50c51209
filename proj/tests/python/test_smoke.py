# SPDX-License-Identifier: Apache-2.0
import math

import numpy as np
import pytest

import sten

sklearn_metrics = pytest.importorskip("sklearn.metrics")


def small_config(**kw):
    base = dict(n_train=1500, n_test=1000, d_model=8, epochs=1, seed=3)
    base.update(kw)
    return sten.config(**base)


def test_config_roundtrip_and_errors():
    c = small_config(alpha=0.5)
    assert "alpha = 0.5" in c.echo()
    assert "d_model" in sten.Config.keys()
    with pytest.raises(sten.ConfigError):
        sten.config(no_such_key=1)
    with pytest.raises(ValueError):
        sten.config(window=99)


def test_pipeline(tmp_path):
    c = small_config()
    data = sten.synth(c)
    assert data["train"].shape == (1500, 5)
    assert data["labels"].shape == (1000,)
    assert data["labels"].sum() > 0

    model = sten.train(data["train"], c)
    assert model.input_dim == 5
    assert len(model.trace) == 1
    path = tmp_path / "m.ckpt"
    model.save(path)
    again = sten.Model.load(path)
    assert again.to_bytes() == model.to_bytes()
    assert sten.train(data["train"], c).to_bytes() == model.to_bytes()

    out = sten.score(model, data["test"], c)
    assert out["score"].shape == (1000,)
    assert np.all(np.isfinite(out["score"]))
    np.testing.assert_allclose(out["score"], out["otn"] + out["dsn"], rtol=1e-12)

    report = sten.evaluate(out["score"], data["labels"], c, point_adjust="both")
    for key in ("pa_auc_pr", "auc_pr", "aff_recall", "r_auc_roc", "vus_pr"):
        assert key in report
    assert 0.0 <= report["pa_auc_roc"] <= 1.0


def test_bad_input_raises_data_error():
    c = small_config()
    bad = np.zeros((50, 2))
    bad[3, 1] = np.nan
    with pytest.raises(sten.DataError):
        sten.train(bad, c)


def test_metrics_agree_with_sklearn():
    rng = np.random.default_rng(0)
    for _ in range(25):
        y = (rng.random(300) < 0.1).astype(np.uint8)
        y[0], y[1] = 1, 0
        s = np.round(rng.normal(size=300) + y, 1)  # ties on purpose
        assert math.isclose(sten.roc_auc(s, y), sklearn_metrics.roc_auc_score(y, s), abs_tol=1e-12)
        assert math.isclose(sten.pr_auc(s, y), sklearn_metrics.average_precision_score(y, s), abs_tol=1e-12)
        roc0, pr0 = sten.range_auc(s, y, 0.0)
        assert roc0 == sten.roc_auc(s, y)
        assert pr0 == sten.pr_auc(s, y)


def test_point_adjust_and_js():
    y = np.array([0, 1, 1, 0], dtype=np.uint8)
    s = np.array([0.1, 0.2, 0.9, 0.3])
    np.testing.assert_array_equal(sten.point_adjust(s, y), [0.1, 0.9, 0.9, 0.3])
    assert abs(sten.js_divergence([1.0, 0.0], [0.5, 0.5]) - 0.431523) < 1e-6
    assert sten.roc_auc(s, np.zeros(4, dtype=np.uint8)) is None
