import pytest

import tppmix


def test_simulate_constant():
    seq = tppmix.simulate("constant", 100.0, 3)
    assert seq["horizon"] == 100.0
    assert seq["times"] == sorted(seq["times"])
    assert all(0.0 < t <= 100.0 for t in seq["times"])
    assert tppmix.simulate("constant", 100.0, 3) == seq


def test_generate_and_intensity():
    data = tppmix.generate_dataset(["sine", "constant"], 50, 100.0, 1)
    assert len(data) == 100
    assert sorted({s["label"] for s in data}) == [0, 1]
    const = [s for s in data if s["label"] == 1]
    centers, rates = tppmix.empirical_intensity(const, 5.0)
    assert len(centers) == 20
    assert abs(sum(rates) / len(rates) - 0.1) < 0.03
    assert tppmix.eid(const, const) == 0.0


def test_metrics():
    assert tppmix.purity([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert tppmix.rand_index([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        tppmix.purity([0, 1], [0])


def test_fit_small():
    data = tppmix.generate_dataset(["sine", "constant"], 6, 100.0, 2)
    config = {
        "policy": {"hidden_dim": 4},
        "discriminator": {"hidden_dim": 4},
        "classifier": {"hidden_dim": 4, "embed_dim": 4, "epochs": 2},
        "gail": {"rounds": 2, "batch_size": 4},
        "em": {"max_iterations": 1, "classifier_samples": 16, "workers": 1},
    }
    out = tppmix.fit(data, config, seed=5)
    assert len(out["assignment"]) == len(data)
    assert out["history"][0]["iteration"] == 0
    again = tppmix.fit(data, config, seed=5)
    for run in (out, again):
        for row in run["history"]:
            row.pop("wall_seconds")
    assert out == again
    assert "em" in tppmix.default_training_config()
    with pytest.raises(ValueError):
        tppmix.fit(data, {"em": {"nope": 1}})
