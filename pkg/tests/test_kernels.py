import math

import numpy as np
import pytest

from obslab import (
    AnnularCutoff,
    Cutoff,
    FilterBand,
    State,
    band_kernel_config,
    bandpass,
    continuous_from_discrete,
    decay_profile,
    discrete_from_continuous,
    dft,
    evolve_continuous,
    evolve_discrete,
    forward_kernel,
    gauss4,
    GridFunction,
    kernel_config,
    kernel_grid,
    make_transport_spectrum,
    midpoint,
    operator_norm_check,
    phase_inverse,
    reverse_kernel,
)

# reference kernel values for midpoint, tau = 0.1, delta = 1, eps = 0.5,
# computed with mpmath.quad at 40 digits on the split intervals
RHO_REF = {
    (0.0, 0.0): 3.5241638234956672582,
    (0.3, 0.25): 3.1700194913908491548,
    (0.7, 1.0): 0.25729466972912752511,
    (0.2, 2.0): 0.077855240493057763881,
}
Q_REF = {
    (0.0, 0.0): 3.9788735772973833942,
    (0.3, 0.25): 3.5202147577360000782,
    (0.7, 1.0): 0.033857656883909054589,
}


def _random_filtered_state(n, band_hi, seed):
    sp = make_transport_spectrum(n)
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(len(sp)) + 1j * rng.standard_normal(len(sp))
    return bandpass(State(sp, raw), FilterBand(0.0, band_hi))


def test_cutoff_plateau_and_support_are_exact():
    chi = Cutoff(0.9, 1.3)
    assert chi(0.0) == 1.0
    assert chi(0.9) == 1.0
    assert chi(-0.9) == 1.0
    assert chi(1.3) == 0.0
    assert chi(5.0) == 0.0
    mid = chi(np.linspace(0.91, 1.29, 50))
    assert np.all((mid >= 0) & (mid <= 1))
    assert np.all(np.diff(mid) <= 0)
    assert 0 < chi(1.1) < 1


def test_cutoff_is_smooth_at_the_seams():
    chi = Cutoff(0.9, 1.3)
    h = 1e-3
    xs = np.array([0.9, 1.3])
    second = (chi(xs + h) - 2 * chi(xs) + chi(xs - h)) / h**2
    # a C-infinity joint has vanishing one-sided derivatives of all orders
    assert np.max(np.abs(second)) < 1e-6


def test_annular_cutoff_shape():
    chi = AnnularCutoff(0.5, 1.0, 2.0, 2.5)
    assert chi(0.0) == 0.0
    assert chi(0.5) == 0.0
    assert chi(1.0) == 1.0
    assert chi(1.5) == 1.0
    assert chi(2.0) == 1.0
    assert chi(2.5) == 0.0
    assert chi(-1.5) == 1.0
    assert 0 < chi(0.75) < 1
    assert 0 < chi(2.25) < 1


def test_config_rejects_band_reaching_the_domain_edge():
    with pytest.raises(ValueError):
        kernel_config(gauss4(), 0.1, 3.0, 0.5)
    with pytest.raises(ValueError):
        kernel_config(midpoint(), -0.1, 1.0, 0.5)


def test_forward_kernel_matches_reference_quadrature():
    cfg = kernel_config(midpoint(), 0.1, 1.0, 0.5)
    for (t, s), want in RHO_REF.items():
        got = forward_kernel(cfg, t, s)
        assert abs(got.imag) < 1e-12
        assert got.real == pytest.approx(want, abs=2e-10)


def test_reverse_kernel_matches_reference_quadrature():
    cfg = kernel_config(midpoint(), 0.1, 1.0, 0.5)
    for (t, s), want in Q_REF.items():
        got = reverse_kernel(cfg, t, s)
        assert abs(got.imag) < 1e-12
        assert got.real == pytest.approx(want, abs=2e-10)


def test_kernels_are_real_valued():
    cfg = kernel_config(gauss4(), 0.05, 1.0, 0.5)
    ss = np.linspace(-1.0, 2.0, 7)
    rho = forward_kernel(cfg, 0.4, ss)
    assert np.max(np.abs(rho.imag)) < 1e-10
    ts = np.linspace(-1.0, 2.0, 7)
    q = reverse_kernel(cfg, ts, 0.4)
    assert np.max(np.abs(q.imag)) < 1e-10


def test_kernel_vectorization_consistency():
    cfg = kernel_config(midpoint(), 0.1, 1.0, 0.5)
    ss = np.array([-0.3, 0.1, 0.9])
    batch = forward_kernel(cfg, 0.5, ss)
    single = [forward_kernel(cfg, 0.5, float(s)) for s in ss]
    assert np.allclose(batch, single, atol=1e-14)
    grid = kernel_grid(cfg, np.array([0.2, 0.5]), ss, "forward")
    assert grid.shape == (2, 3)
    assert np.allclose(grid[1], batch, atol=1e-14)


def test_forward_multiplier_identity():
    # the time-grid transform of rho(t, .) is the phase-inverse multiplier
    # exp(-i g(mu tau) t / tau) on the cutoff plateau
    scheme = midpoint()
    tau = 0.02
    cfg = kernel_config(scheme, tau, 1.0, 0.5)
    t = 0.4
    k_lo = int(math.floor((t / cfg.sup_dphase - 12.0) / tau))
    k_hi = int(math.ceil((t / cfg.inf_dphase + 12.0) / tau))
    ks = np.arange(k_lo, k_hi + 1)
    u = GridFunction(tau, k_lo, forward_kernel(cfg, t, ks * tau))
    mus = np.linspace(-1.4 / tau, 1.4 / tau, 23)
    alpha = mus * tau
    chi = cfg.chi_fwd(alpha)
    cap = cfg.chi_fwd.support_radius * (1 - 1e-9)
    g_vals = phase_inverse(scheme, np.clip(alpha, -cap, cap))
    want = np.where(chi == 0.0, 0.0, np.exp(-1j * g_vals * t / tau) * chi)
    assert np.max(np.abs(dft(u, mus) - want)) < 1e-8


def test_forward_transmutation_matches_flow():
    scheme = midpoint()
    tau = 0.05
    cfg = kernel_config(scheme, tau, 1.0, 0.5, k_margin=12.0)
    y0 = _random_filtered_state(8, 1.0 / tau, seed=21)
    for t in (0.15, 0.6):
        rec = continuous_from_discrete(cfg, y0, t)
        ex = evolve_continuous(y0, t)
        err = State(y0.spectrum, rec.coefficients - ex.coefficients).norm()
        assert err / ex.norm() < 1e-6


def test_reverse_transmutation_matches_scheme():
    scheme = gauss4()
    tau = 0.05
    cfg = kernel_config(scheme, tau, 1.0, 0.5, t_margin=8.0)
    y0 = _random_filtered_state(8, 1.0 / tau, seed=22)
    for k in (1, 7):
        rec = discrete_from_continuous(cfg, y0, k)
        ex = evolve_discrete(y0, scheme, tau, k)
        err = State(y0.spectrum, rec.coefficients - ex.coefficients).norm()
        assert err / ex.norm() < 1e-6


def test_transmutation_is_linear():
    cfg = kernel_config(midpoint(), 0.05, 1.0, 0.5)
    a = _random_filtered_state(6, 20.0, seed=31)
    b = _random_filtered_state(6, 20.0, seed=32)
    combo = State(a.spectrum, 2.0 * a.coefficients - 1j * b.coefficients)
    lhs = continuous_from_discrete(cfg, combo, 0.3)
    ra = continuous_from_discrete(cfg, a, 0.3)
    rb = continuous_from_discrete(cfg, b, 0.3)
    want = 2.0 * ra.coefficients - 1j * rb.coefficients
    assert np.allclose(lhs.coefficients, want, atol=1e-12)


def test_band_config_reconstructs_annulus_modes():
    scheme = midpoint()
    tau = 0.02
    # modes with |mu| in (25, 50] only
    cfg = band_kernel_config(scheme, tau, lo=0.5, hi=1.0, eps=0.3, k_margin=12.0)
    sp = make_transport_spectrum(8)
    rng = np.random.default_rng(40)
    raw = rng.standard_normal(len(sp)) + 1j * rng.standard_normal(len(sp))
    keep = (np.abs(sp.frequencies) > 0.5 / tau) & (
        np.abs(sp.frequencies) <= 1.0 / tau
    )
    y0 = State(sp, np.where(keep, raw, 0.0))
    assert np.count_nonzero(y0.coefficients) > 0
    rec = continuous_from_discrete(cfg, y0, 0.4)
    ex = evolve_continuous(y0, 0.4)
    err = State(sp, rec.coefficients - ex.coefficients).norm()
    assert err / ex.norm() < 1e-6


def test_band_config_validation():
    with pytest.raises(ValueError):
        band_kernel_config(midpoint(), 0.1, lo=0.2, hi=1.0, eps=0.3)
    with pytest.raises(ValueError):
        band_kernel_config(midpoint(), 0.1, lo=1.0, hi=0.5, eps=0.1)


def test_plateau_check_rejects_ramp_modes():
    cfg = kernel_config(midpoint(), 0.1, 1.0, 0.5)
    sp = make_transport_spectrum(2)
    # |mu| tau = 2 pi * 0.1 = 0.628 is fine; push tau so the top mode sits
    # on the ramp where chi < 1
    cfg_bad = kernel_config(midpoint(), 0.2, 1.0, 0.5)
    st = State(sp, np.ones(5, dtype=complex))
    with pytest.raises(ValueError, match="plateau"):
        continuous_from_discrete(cfg_bad, st, 0.1)
    ok = bandpass(st, FilterBand(0.0, 1.0 / 0.1))
    continuous_from_discrete(cfg, ok, 0.1)


def test_decay_profile_rejects_points_on_the_cone():
    with pytest.raises(ValueError, match="cone"):
        decay_profile(
            midpoint(), 1.0, 0.5, 0.9, 1.0, [0.02, 0.01], which="forward"
        )


def test_off_cone_decay_is_superpolynomial():
    taus = [0.02, 0.01, 0.005, 0.0025]
    fwd = decay_profile(midpoint(), 1.0, 0.5, 0.2, 2.0, taus, which="forward")
    rev = decay_profile(midpoint(), 1.0, 0.5, 0.2, 2.0, taus, which="reverse")
    assert fwd.slope > 3.0
    assert rev.slope > 3.0
    assert np.all(np.diff(fwd.values) < 0)


def test_larger_window_tightens_the_reconstruction():
    scheme = midpoint()
    tau = 0.05
    y0 = _random_filtered_state(8, 1.0 / tau, seed=50)
    ex = evolve_continuous(y0, 0.3)

    def err_with_margin(margin):
        cfg = kernel_config(scheme, tau, 1.0, 0.5, k_margin=margin)
        rec, info = continuous_from_discrete(cfg, y0, 0.3, details=True)
        e = State(y0.spectrum, rec.coefficients - ex.coefficients).norm()
        return e, info["tail_estimate"]

    e_small, tail_small = err_with_margin(1.5)
    e_big, tail_big = err_with_margin(4.0)
    assert e_big < e_small
    assert tail_big < tail_small


def test_operator_norms_respect_bounds():
    cfg = kernel_config(midpoint(), 0.1, 1.0, 0.5)
    report = operator_norm_check(cfg, n_trials=25, seed=5, input_len=24)
    assert report.forward_bound == pytest.approx(1.0, abs=1e-12)
    assert report.reverse_bound == pytest.approx(1.25, abs=1e-12)
    assert report.forward_measured <= report.forward_bound * (1 + 1e-6)
    assert report.reverse_measured <= report.reverse_bound * (1 + 1e-6)
    assert report.forward_measured > 0.3
    assert report.reverse_measured > 0.3
