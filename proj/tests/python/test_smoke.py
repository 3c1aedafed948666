import numpy as np
import pytest

import rsm


def test_generate_and_inspect(tmp_path):
    ds = rsm.generate_dataset("shapes", "train", count=3, length=4, seed=2)
    assert len(ds) == 3
    assert ds.env == "shapes" and ds.split == "train"
    frames = ds.frames(0)
    assert frames.shape == (5, 50, 50, 3) and frames.dtype == np.uint8
    assert len(ds.actions(0)) == 4
    path = tmp_path / "d.rsmd"
    ds.save(path)
    again = rsm.load_dataset(path)
    assert np.array_equal(again.frames(2), ds.frames(2))


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(ValueError):
        rsm.generate_dataset("atari", "train", 1)
    bad = tmp_path / "bad.rsmd"
    bad.write_bytes(b"nope")
    with pytest.raises(rsm.FormatError):
        rsm.load_dataset(bad)


def test_contrastive_loss_matches_numpy():
    rng = np.random.default_rng(0)
    p, t, n = (rng.normal(size=(4, 20)) for _ in range(3))
    h = ((p - t) ** 2).mean(axis=1)
    hn = ((n - t) ** 2).mean(axis=1)
    expected = np.mean(h + np.maximum(0.0, 1.0 - hn))
    assert rsm.contrastive_loss(p, t, n, 1.0) == pytest.approx(expected, abs=1e-12)


def test_train_encode_step_and_evaluate(tmp_path):
    train = rsm.generate_dataset("shapes", "train", count=16, length=5, seed=3)
    test = rsm.generate_dataset("shapes", "test-iid", count=6, length=5, seed=4)
    cfg = rsm.make_config("shapes", {"hidden": "16", "encoder_hidden": "16", "cnn_channels": "4",
                                     "epochs": "2", "batch_size": "32"})
    world, losses = rsm.train_world_model(train, cfg)
    assert len(losses) == 2
    obs = test.observations([(0, 0), (1, 2)])
    slots = world.encode(obs)
    assert slots.shape == (2, 20)
    maps = world.feature_maps(obs)
    assert maps.shape == (2, 500) and ((maps > 0) & (maps < 1)).all()
    nxt, sel = world.step(slots, np.zeros((2, 20), dtype=np.float32), [0, 1, 2, 3, 4] * 2)
    assert nxt.shape == (2, 20) and len(sel) == 10
    hits = rsm.evaluate(world, test, horizons=[1, 5], override="oracle")
    assert hits == {1: 100.0, 5: 100.0}
    path = tmp_path / "w.ckpt"
    world.save(path)
    assert rsm.load_world_model(path).config == world.config
