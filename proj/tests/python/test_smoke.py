"""Smoke tests for the python bindings."""

import numpy as np
import pytest

import posecloak as pc


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def image(rng):
    return rng.uniform(0.2, 0.8, size=(8, 8, 3))


def test_clamp_and_projection(rng):
    img = rng.uniform(-0.5, 1.5, size=(8, 8, 3))
    clamped = pc.clamp_valid(img)
    assert clamped.min() >= 0.0
    assert clamped.max() <= 1.0

    delta = rng.uniform(-0.5, 0.5, size=(8, 8, 3))
    eta = 16 / 255
    projected = pc.linf_project(delta, eta)
    assert pc.linf_norm(projected) <= eta
    np.testing.assert_allclose(projected, np.clip(delta, -eta, eta))


def test_protect_respects_budget_and_is_deterministic(image):
    bundle = pc.build_toy_stack(seed=0, latent_channels=4)
    cfg = pc.ProtectionConfig()
    cfg.iterations = 8
    cfg.seed = 42

    first = pc.protect(image, cfg, bundle)
    second = pc.protect(image, cfg, bundle)

    assert pc.linf_norm(first["delta"]) <= cfg.eta + 1e-15
    np.testing.assert_array_equal(first["image"], second["image"])
    np.testing.assert_array_equal(first["delta"], second["delta"])

    trace = first["trace"]
    assert len(trace["iterations"]) == 8
    assert trace["seed"] == 42
    for record in trace["iterations"]:
        assert record["delta_linf"] <= cfg.eta + 1e-15


def test_protect_moves_the_latents(image):
    bundle = pc.build_toy_stack(seed=1)
    cfg = pc.ProtectionConfig()
    cfg.iterations = 40
    cfg.eot.enabled = False
    result = pc.protect(image, cfg, bundle)
    trace = result["trace"]["iterations"]
    assert trace[-1]["total"] > trace[0]["total"]


def test_psnr_hand_value():
    a = np.full((8, 8, 3), 0.5)
    b = np.full((8, 8, 3), 0.75)
    assert pc.psnr(a, b) == pytest.approx(12.0412, abs=1e-3)
    assert pc.psnr(a, a) == 100.0


def test_frechet_closed_form():
    mu1 = np.array([0.0])
    mu2 = np.array([1.0])
    cov = np.array([[1.0]])
    assert pc.frechet_distance(mu1, cov, mu2, cov) == pytest.approx(1.0, abs=1e-9)


def test_fid_zero_for_identical_sets(rng):
    emb = rng.normal(size=(64, 8))
    assert pc.fid_from_embeddings(emb, emb) == pytest.approx(0.0, abs=1e-9)


def test_purifier_fixed_point(image):
    out = pc.interpolate_average_purify([image] * 5)
    np.testing.assert_array_equal(out, image)


def test_purifier_closed_form(rng):
    images = [rng.uniform(size=(8, 8, 3)) for _ in range(5)]
    out = pc.interpolate_average_purify(images)
    weights = np.array([1, 2, 2, 2, 1]) / 8
    expected = sum(w * img for w, img in zip(weights, images))
    np.testing.assert_allclose(out, expected, atol=1e-9)


def test_countermeasures(image):
    squeezed = pc.apply_countermeasure("bit", 1, image)
    assert set(np.unique(squeezed)) <= {0.0, 1.0}

    jpeg = pc.apply_countermeasure("jpeg", 75, image)
    assert jpeg.shape == image.shape

    with pytest.raises(Exception):
        pc.apply_countermeasure("median", 4, image)


def test_simulated_animation_shapes(image):
    bundle = pc.build_toy_stack(seed=3)
    frames = pc.simulate_animation(image, bundle, frames=6, jitter=0.2, seed=11)
    assert len(frames) == 6
    assert frames[0].shape == (8, 8, 3)


def test_png_round_trip(tmp_path, image):
    path = str(tmp_path / "img.png")
    pc.write_png(path, image)
    back, lossy = pc.read_image(path)
    assert not lossy
    np.testing.assert_allclose(back, np.round(image * 255) / 255, atol=1e-9)
