import math

import numpy as np
import pytest

from wincss.measurement import (
    compose_windowed,
    rip_empirical,
    rip_reference_bounds,
    rip_success_probability,
    sample_ensemble,
    two_stability_energy,
)
from wincss.spectrum_core import MultiToneSpec, synthesize
from wincss.window_lab import NAMED_KINDS, generate_window, wsc


def test_ensemble_determinism_and_shape():
    a, b = sample_ensemble(8, 16, 3), sample_ensemble(8, 16, 3)
    assert a.entries.shape == (8, 16)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, sample_ensemble(8, 16, 4).entries)


def test_ensemble_rejects_expansion():
    with pytest.raises(ValueError):
        sample_ensemble(17, 16, 0)


def test_ensemble_entry_statistics():
    e = sample_ensemble(64, 256, 11).entries
    # standard error of the mean: (1/sqrt(M)) / sqrt(M N)
    assert abs(e.mean()) < 3 / math.sqrt(64 * 256 * 64)
    assert np.var(e) == pytest.approx(1 / 64, rel=0.05)


def test_ensemble_energy_normalization():
    # E ||Psi x||^2 / ||x||^2 = 1; 2e4 fresh 16x16 draws keeps this fast
    x = np.random.default_rng(0).standard_normal(16)
    ratios = [np.sum((sample_ensemble(16, 16, s).entries @ x) ** 2) for s in range(20_000)]
    assert np.mean(ratios) / np.dot(x, x) == pytest.approx(1.0, abs=0.02)


def test_compose_identity_window_is_unwindowed():
    ens = sample_ensemble(8, 16, 2)
    op = compose_windowed(ens, generate_window("rectangular", 16))
    f = np.fft.fft(np.eye(16), axis=0, norm="ortho")
    np.testing.assert_allclose(op.matrix, ens.entries @ f, atol=1e-12)


def test_compose_matrix_matches_sequential_apply():
    rng = np.random.default_rng(9)
    ens = sample_ensemble(8, 16, 5)
    win = generate_window("hann", 16)
    op = compose_windowed(ens, win)
    x = rng.standard_normal(16)
    n = np.arange(16)
    # sequential oracle: window, explicit unitary DFT sum, project
    windowed = win.coefficients * x
    spectrum = np.array([np.sum(windowed * np.exp(-2j * np.pi * k * n / 16)) for k in range(16)]) / 4.0
    expected = ens.entries @ spectrum
    np.testing.assert_allclose(op.matrix @ x, expected, atol=1e-10)
    np.testing.assert_allclose(op.apply(x), expected, atol=1e-10)


def test_compose_length_mismatch():
    with pytest.raises(ValueError):
        compose_windowed(sample_ensemble(8, 16, 0), generate_window("hann", 32))


def test_composition_leaves_window_untouched():
    win = generate_window("blackman", 64)
    before = win.coefficients.copy()
    op = compose_windowed(sample_ensemble(16, 64, 0), win)
    _ = op.matrix
    assert np.array_equal(op.window.coefficients, before)
    assert op.window is win


def test_hann_measurement_energy_below_rectangular():
    n = 256
    ens = sample_ensemble(64, n, 1)
    x = synthesize(MultiToneSpec.from_bins(n, [20.4]))
    hann = compose_windowed(ens, generate_window("hann", n)).apply(x)
    rect = compose_windowed(ens, generate_window("rectangular", n)).apply(x)
    assert np.sum(np.abs(hann) ** 2) < np.sum(np.abs(rect) ** 2)


def test_two_stability_rectangular():
    x = np.random.default_rng(2).standard_normal(16)
    op = compose_windowed(sample_ensemble(8, 16, 0), generate_window("rectangular", 16))
    assert two_stability_energy(op, x, 100_000, seed=1) == pytest.approx(np.dot(x, x), rel=0.02)


def test_two_stability_annihilated_support():
    x = np.zeros(16)
    x[[0, 15]] = 1.0
    op = compose_windowed(sample_ensemble(8, 16, 0), generate_window("hann", 16))
    assert two_stability_energy(op, x, 10_000) < 1e-20


def test_two_stability_hann_ones():
    win = generate_window("hann", 16)
    op = compose_windowed(sample_ensemble(8, 16, 0), win)
    expected = 16 * np.mean(win.coefficients ** 2)
    assert two_stability_energy(op, np.ones(16), 100_000, seed=3) == pytest.approx(expected, rel=0.02)


def test_two_stability_requires_trials():
    op = compose_windowed(sample_ensemble(8, 16, 0), generate_window("hann", 16))
    with pytest.raises(ValueError):
        two_stability_energy(op, np.ones(16), 100)


def test_two_stability_order_independent():
    op = compose_windowed(sample_ensemble(4, 8, 0), generate_window("hann", 8))
    x = np.arange(8.0)
    assert two_stability_energy(op, x, 12_000, seed=4) == two_stability_energy(op, x, 12_000, seed=4)


@pytest.mark.parametrize("kind,lower,upper", [
    ("rectangular", 0.7, 1.3),
    ("triangular", 0.35, 0.65),
    ("hamming", 0.3776, 0.7019),
    ("hann", 0.3496, 0.6495),
    ("blackman", 0.2937, 0.5455),
    ("gaussian", 0.3463, 0.6434),
])
def test_reference_bounds_table(kind, lower, upper):
    lo, hi = rip_reference_bounds(generate_window(kind, 1000), 0.3)
    assert lo == pytest.approx(lower, abs=1e-3)
    assert hi == pytest.approx(upper, abs=1e-3)


def test_reference_bounds_degenerate():
    w = generate_window("hann", 128)
    assert rip_reference_bounds(w, 0.0) == (wsc(w), wsc(w))
    with pytest.raises(ValueError):
        rip_reference_bounds(w, 1.0)


def test_rip_empirical_full_sampling_straddles_one():
    op = compose_windowed(sample_ensemble(64, 64, 0), generate_window("rectangular", 64))
    est = rip_empirical(op, 1, 1000, seed=0)
    assert 0 <= est.empirical_lower < 1 < est.empirical_upper
    assert (est.theoretical_lower, est.theoretical_upper) == pytest.approx((0.7, 1.3))


def test_rip_empirical_validation():
    op = compose_windowed(sample_ensemble(8, 16, 0), generate_window("hann", 16))
    with pytest.raises(ValueError):
        rip_empirical(op, 9, 1000)
    with pytest.raises(ValueError):
        rip_empirical(op, 0, 1000)
    with pytest.raises(ValueError):
        rip_empirical(op, 2, 10)


def test_rip_empirical_deterministic():
    op = compose_windowed(sample_ensemble(16, 64, 0), generate_window("hann", 64))
    assert rip_empirical(op, 4, 1500, seed=8) == rip_empirical(op, 4, 1500, seed=8)


def test_blackman_midpoint_below_rectangular():
    ens = sample_ensemble(64, 256, 4)
    mids = {k: rip_empirical(compose_windowed(ens, generate_window(k, 256)), 8, 1000, seed=2).midpoint
            for k in ("blackman", "rectangular")}
    assert mids["blackman"] < mids["rectangular"]


def test_interval_shrinks_with_m():
    n, k = 256, 8
    win = generate_window("rectangular", n)
    widths = []
    for m in (n // 8, n // 4, n // 2):
        est = rip_empirical(compose_windowed(sample_ensemble(m, n, 0), win), k, 2000, seed=1)
        widths.append(est.empirical_upper - est.empirical_lower)
    assert widths[0] > widths[1] > widths[2]


def test_mean_ratio_tracks_mean_square_window():
    # energy identity at random supports: mean ratio ~ mean(w^2)
    n = 256
    ens = sample_ensemble(128, n, 0)
    for kind in NAMED_KINDS:
        w = generate_window(kind, n)
        est = rip_empirical(compose_windowed(ens, w), 8, 4000, seed=0)
        assert est.mean_ratio == pytest.approx(np.mean(w.coefficients ** 2), rel=0.05)


def test_success_probability():
    p = rip_success_probability(0.5, 4, 10_000)
    # 2 * 24^4 * exp(-35.807...) evaluated at 40 digits
    assert 1 - p == pytest.approx(1.866232635e-10, rel=1e-6)
    assert rip_success_probability(0.5, 4, 2000) == 0.0
    assert rip_success_probability(0.5, 4, 10 ** 7) == 1.0
    with pytest.raises(ValueError):
        rip_success_probability(1.0, 4, 10)
