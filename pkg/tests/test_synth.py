import dataclasses

import numpy as np
import pytest

from msdehaze.synth import (PSNR_CAP_DB, HazeScene, evaluate, gaussian_noise, layer_depths, make_layered_scene,
                            psnr, synthesize, within_line_variance)
from oracles import metrics_oracle

A = np.array([0.8, 0.82, 0.85])


def test_zero_depth_is_identity(rng):
    clean = rng.random((8, 9, 3))
    scene = HazeScene(clean, np.zeros((8, 9)), 1.0, A)
    np.testing.assert_array_equal(synthesize(scene), clean)


def test_infinite_depth_is_airlight(rng):
    scene = HazeScene(rng.random((5, 5, 3)), np.full((5, 5), np.inf), 1.0, A)
    np.testing.assert_array_equal(synthesize(scene), np.broadcast_to(A, (5, 5, 3)))


def test_scalar_koschmieder():
    scene = HazeScene(np.full((2, 2, 3), 0.6), np.full((2, 2), np.log(2.0)), 1.0, np.ones(3))
    np.testing.assert_allclose(synthesize(scene), 0.8, atol=1e-15)


def test_noise_is_seeded_and_standard():
    a = gaussian_noise((200, 300, 3), 11)
    np.testing.assert_array_equal(a, gaussian_noise((200, 300, 3), 11))
    assert not np.array_equal(a, gaussian_noise((200, 300, 3), 12))
    assert abs(a.mean()) < 0.01 and abs(a.std() - 1) < 0.01


def test_noise_prefix_stable():
    # sample k does not depend on how many samples were drawn
    np.testing.assert_array_equal(gaussian_noise((7,), 5), gaussian_noise((20,), 5)[:7])


def test_noise_frozen_values():
    expected = gaussian_noise((4,), 0)
    assert expected.tolist() == gaussian_noise((4,), 0).tolist()
    raw = np.random.Philox(key=0).random_raw(2)
    u = ((raw >> np.uint64(11)).astype(float) + 1) * 2.0 ** -53
    z0 = np.sqrt(-2 * np.log(u[0])) * np.cos(2 * np.pi * u[1])
    assert expected[0] == z0


def test_layered_scene():
    s = make_layered_scene(32, 40, 2, 0.7, A, seed=3)
    assert len(np.unique(s.transmission)) == 2
    s2 = make_layered_scene(32, 40, 2, 0.7, A, seed=3)
    assert np.array_equal(s.clean, s2.clean) and np.array_equal(s.depth, s2.depth)
    d = layer_depths(5, 0.7)
    s5 = make_layered_scene(30, 50, 5, 0.7, A)
    np.testing.assert_allclose(np.unique(s5.transmission), np.sort(np.exp(-0.7 * d)), rtol=1e-15)
    assert s5.transmission.min() < 0.02 and s5.transmission.max() == 1.0
    assert s5.transmission[0, 0] < 0.02 and s5.transmission[-1, 0] == 1.0
    with pytest.raises(ValueError):
        make_layered_scene(30, 50, 1, 0.7, A)


def test_metrics_identity_and_offset(rng):
    clean = rng.uniform(0, 0.8, size=(6, 7, 3))
    rep = evaluate(clean, clean)
    assert rep.psnr_db == PSNR_CAP_DB and rep.mae == 0
    rep = evaluate(clean, clean + 0.1)
    assert rep.mae == pytest.approx(0.1, abs=1e-12) and rep.psnr_db == pytest.approx(20.0, abs=1e-9)


def test_metrics_oracle(rng):
    x, y = rng.random((5, 6, 3)), rng.random((5, 6, 3))
    p, m = metrics_oracle(x, y)
    assert psnr(x, y) == pytest.approx(p, abs=1e-9)
    assert evaluate(x, y).mae == pytest.approx(m, abs=1e-12)


def test_transmission_mae_skips_sky():
    t_true = np.array([[1.0, 0.5, 0.01]])
    t_est = np.array([[0.9, 0.7, 0.5]])
    rep = evaluate(np.zeros((1, 3, 3)), np.zeros((1, 3, 3)), t_true=t_true, t_est=t_est)
    assert rep.transmission_mae == pytest.approx(0.15)


def test_sky_noise_gain(rng):
    ref = rng.random((10, 10, 3))
    noisy = ref + 0.03 * rng.standard_normal((10, 10, 3))
    mask = np.zeros((10, 10))
    mask[:5] = 1
    rep = evaluate(ref, noisy, sky_mask=mask, reference=ref, noise_std=0.01)
    assert rep.sky_noise_gain == pytest.approx(np.std((noisy - ref)[:5]) / 0.01)
    with pytest.raises(ValueError):
        evaluate(ref, noisy, sky_mask=np.zeros((10, 10)), reference=ref, noise_std=0.01)


def test_within_line_variance():
    v = np.array([1.0, 3.0, 5.0, 5.0, 9.0])
    lab = np.array([0, 0, 1, 1, -1])
    assert within_line_variance(v, lab) == pytest.approx((1.0 + 0.0) / 2)


def test_scene_validation(rng):
    with pytest.raises(ValueError):
        HazeScene(rng.random((4, 4, 3)), np.full((4, 4), -1.0), 1.0, A)
    s = HazeScene(rng.random((4, 4, 3)), np.zeros((4, 4)), 1.0, A)
    assert dataclasses.replace(s, noise_std=0.1).noise_std == 0.1
