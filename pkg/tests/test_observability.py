import math

import numpy as np
import pytest
import scipy.linalg

from obslab import (
    FilterBand,
    FrequencyOutOfSchemeDomain,
    ObservationOperator,
    Spectrum,
    State,
    concentrated_packet,
    continuous_gramian,
    discrete_gramian,
    exact_phase,
    ingham_bounds,
    liouville_check,
    make_transport_spectrum,
    make_wave_spectrum,
    midpoint,
    packet_mass_decay,
    packet_outside_mass,
    point_obs_transport,
    point_obs_wave,
    rayleigh_minimum,
    uniformity_sweep,
    weak_obs_sweep,
    weak_star_norm,
)

X0 = math.sqrt(2.0) - 1.0


def test_transport_gramian_is_identity_at_full_period():
    sp = make_transport_spectrum(4)
    op = point_obs_transport(sp)
    g = continuous_gramian(op, 1.0)
    assert np.max(np.abs(g.matrix - np.eye(9))) < 1e-13
    g2 = continuous_gramian(op, 2.0)
    assert np.max(np.abs(g2.matrix - 2.0 * np.eye(9))) < 1e-13
    assert g2.lam_min == pytest.approx(2.0, abs=1e-12)


def test_continuous_gramian_matches_quadrature():
    sp = Spectrum(np.array([-3.0, 0.5, 2.0]), (0, 1, 2))
    rng = np.random.default_rng(3)
    b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    op = ObservationOperator(sp, b, order=1.0)
    horizon, t_start = 1.7, 0.4
    g = continuous_gramian(op, horizon, t_start=t_start)
    ts = np.linspace(t_start, t_start + horizon, 20001)
    for j in range(3):
        for l in range(3):
            vals = np.conj(b[j]) * b[l] * np.exp(
                1j * (sp.frequencies[l] - sp.frequencies[j]) * ts
            )
            brute = np.trapezoid(vals, ts)
            assert g.matrix[j, l] == pytest.approx(brute, abs=1e-8)


def test_discrete_gramian_matches_explicit_sum():
    sp = make_transport_spectrum(3)
    op = point_obs_transport(sp)
    scheme, tau, horizon = midpoint(), 0.21, 1.6
    g = discrete_gramian(op, scheme, tau, horizon)
    n_steps = int(math.floor(horizon / tau))
    phases = scheme.phase(sp.frequencies * tau)
    brute = np.zeros((7, 7), dtype=complex)
    for k in range(1, n_steps + 1):
        e = np.exp(1j * phases * k)
        brute += np.conj(e)[:, None] * e[None, :]
    brute *= tau
    assert np.max(np.abs(g.matrix - brute)) < 1e-12
    assert g.params["n_steps"] == n_steps


def test_discrete_gramian_exact_phase_identity():
    sp = make_transport_spectrum(4)
    op = point_obs_transport(sp)
    for n_steps in (10, 16):
        g = discrete_gramian(op, exact_phase(), 1.0 / n_steps, 1.0)
        assert np.max(np.abs(g.matrix - np.eye(9))) < 1e-12


def test_gramian_shift_invariance():
    sp = make_transport_spectrum(3)
    op = point_obs_transport(sp)
    base = continuous_gramian(op, 1.3)
    shifted = continuous_gramian(op, 1.3, t_start=-2.9)
    assert abs(base.lam_min - shifted.lam_min) < 1e-10
    assert abs(base.lam_max - shifted.lam_max) < 1e-10
    d0 = discrete_gramian(op, midpoint(), 0.07, 1.3)
    d9 = discrete_gramian(op, midpoint(), 0.07, 1.3, k_start=9)
    assert abs(d0.lam_min - d9.lam_min) < 1e-10
    assert abs(d0.lam_max - d9.lam_max) < 1e-10


def test_gramian_band_restriction():
    sp = make_transport_spectrum(4)
    op = point_obs_transport(sp)
    g = discrete_gramian(op, midpoint(), 0.05, 1.0, FilterBand(0.0, 2 * math.pi))
    assert g.n_modes == 3
    assert g.labels == (-1, 0, 1)


def test_discrete_gramian_rejects_out_of_domain_band():
    sp = make_transport_spectrum(4)
    op = point_obs_transport(sp)
    from obslab import gauss4

    with pytest.raises(FrequencyOutOfSchemeDomain):
        discrete_gramian(op, gauss4(), 0.5, 1.0)


def test_rayleigh_minimum_agrees_with_eigensolver():
    rng = np.random.default_rng(17)
    for n in (6, 20):
        q, _ = np.linalg.qr(
            rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        )
        lams = np.linspace(1.0, 4.0, n)
        lams[0] = 0.3
        h = (q * lams) @ q.conj().T
        lam = rayleigh_minimum(h, n_random=400, seed=1)
        assert lam == pytest.approx(0.3, rel=1e-8)


def test_observation_operator_constant_certification():
    sp = Spectrum(np.array([0.0, 10.0]), (0, 1))
    op = ObservationOperator(sp, np.array([1.0, 5.0]), order=0.0)
    assert op.c_p == pytest.approx(5.0 / math.sqrt(2.0))
    with pytest.raises(ValueError):
        ObservationOperator(sp, np.array([1.0, 5.0]), order=0.0, c_p=2.0)
    # order 1 absorbs the growth: 5 <= c sqrt(101) already with c = 1/2
    op1 = ObservationOperator(sp, np.array([1.0, 5.0]), order=1.0)
    assert op1.c_p == pytest.approx(1.0)


def test_point_obs_wave_values():
    sp = make_wave_spectrum(3)
    op = point_obs_wave(sp, 0.3)
    for idx, (j, sign) in enumerate(sp.labels):
        want = -sign * 1j * math.sqrt(2) * math.sin(j * math.pi * 0.3) / (2 * j * math.pi)
        assert op.values[idx] == pytest.approx(want, abs=1e-15)


def test_uniformity_sweep_above_threshold_is_flat():
    taus = [0.05, 0.025]
    sp = make_transport_spectrum(16)
    sweep = uniformity_sweep(sp, point_obs_transport, midpoint(), 1.0, 1.5, taus)
    cs = [row["C_obs"] for row in sweep.rows]
    assert max(cs) / min(cs) < 1.2
    assert all(row["modes"] >= 3 for row in sweep.rows)


def test_uniformity_sweep_rejects_short_spectrum():
    sp = make_transport_spectrum(2)
    with pytest.raises(ValueError, match="truncation"):
        uniformity_sweep(sp, point_obs_transport, midpoint(), 1.0, 1.5, [0.01])


def test_packet_norm_approaches_limit():
    limit = 1.0 / (2 * math.pi)
    coarse = concentrated_packet(1e-2, 1.0, 0.5).norm() ** 2
    fine = concentrated_packet(1e-4, 1.0, 0.5).norm() ** 2
    assert abs(fine - limit) < abs(coarse - limit)
    assert fine == pytest.approx(limit, rel=5e-3)


def test_packet_spectrum_sits_at_the_band_edge():
    tau, delta = 1e-3, 1.0
    st = concentrated_packet(tau, delta, 0.25)
    active = np.abs(st.coefficients) > 0
    mus = st.spectrum.frequencies[active]
    assert np.all(mus > delta / tau - 1.0 / math.sqrt(tau))
    assert np.all(mus < delta / tau + 1.0 / math.sqrt(tau))


def test_packet_outside_mass_decreases_with_radius():
    st = concentrated_packet(1e-3, 1.0, 0.5)
    m1 = packet_outside_mass(st, 0.5, 0.1)
    m2 = packet_outside_mass(st, 0.5, 0.3)
    assert m2 < m1
    assert m1 < st.norm() ** 2


def test_packet_mass_decay_slope_positive():
    dec = packet_mass_decay([4e-4, 2e-4, 1e-4], 1.0, 0.5, 0.3)
    assert dec.slope > 1.0
    assert np.all(np.diff(dec.outside_masses) < 0)


def test_ingham_bounds_validation():
    with pytest.raises(ValueError, match="distinct"):
        ingham_bounds([1.0, 1.0], midpoint(), 0.01, 1.0, 1.5)
    with pytest.raises(ValueError, match="band"):
        ingham_bounds([0.0, 200.0], midpoint(), 0.01, 1.0, 1.5)


def test_ingham_threshold_value():
    freqs = [2 * math.pi * j for j in range(-2, 3)]
    b = ingham_bounds(freqs, midpoint(), 0.01, 1.0, 1.5)
    # gap 2 pi, inf f' = 0.8 on [0, 1]: threshold 2 pi / (2 pi 0.8) = 1.25
    assert b.gap == pytest.approx(2 * math.pi, abs=1e-12)
    assert b.threshold == pytest.approx(1.25, abs=1e-9)
    assert b.lower > 0
    assert b.upper >= b.lower


def test_weak_star_norm_diagonal_identity():
    # the weak norm of a branch state equals the observation-weighted
    # coefficient norm: sum |c|^2 sin^2(j pi x0) / (2 (j pi)^2)
    sp = make_wave_spectrum(5)
    rng = np.random.default_rng(23)
    c = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    st = State(sp, c)
    direct = weak_star_norm(st, X0) ** 2
    weights = np.array(
        [
            math.sin(j * math.pi * X0) ** 2 / (2.0 * (j * math.pi) ** 2)
            for j, _sign in sp.labels
        ]
    )
    assert direct == pytest.approx(float(np.sum(np.abs(c) ** 2 * weights)), rel=1e-12)


def test_weak_star_norm_single_mode():
    sp = make_wave_spectrum(2)
    c = np.zeros(4, dtype=complex)
    c[sp.labels.index((1, +1))] = 2.0
    got = weak_star_norm(State(sp, c), 0.5)
    # alpha = 1/(i pi), beta = 1: (1/pi^2 + 1/pi^2) sin^2(pi/2) = 2/pi^2
    assert got == pytest.approx(math.sqrt(2.0) / math.pi, rel=1e-12)


def test_generalized_eigenvalues_match_unit_observation_gramian():
    # G v = lam S v with S = diag(|b|^2) has the same spectrum as the
    # Gramian built from unit observation values on the same modes
    tau, horizon = 0.05, 2.6
    sp = make_wave_spectrum(8)
    band = FilterBand(0.0, 1.0 / tau)
    op = point_obs_wave(sp, X0)
    g = discrete_gramian(op, midpoint(), tau, horizon, band)
    weights = np.array(
        [
            math.sin(j * math.pi * X0) ** 2 / (2.0 * (j * math.pi) ** 2)
            for j, _sign in g.labels
        ]
    )
    gen = scipy.linalg.eigh(g.matrix, np.diag(weights), eigvals_only=True)
    ones = ObservationOperator(
        Spectrum(
            np.array([mu for mu in sp.frequencies if abs(mu) <= 1.0 / tau]),
            tuple(l for mu, l in zip(sp.frequencies, sp.labels) if abs(mu) <= 1.0 / tau),
        ),
        np.ones(g.n_modes),
        order=1.0,
    )
    unit = discrete_gramian(ones, midpoint(), tau, horizon)
    want = np.linalg.eigvalsh(unit.matrix)
    assert np.max(np.abs(gen - want)) < 1e-9


def test_liouville_check_trio():
    good = liouville_check(X0, -2.0, 10_000)
    assert good.passed
    assert good.min_margin > 0
    flat = liouville_check(X0, 0.0, 10_000)
    assert not flat.passed
    assert flat.growth > 2.0
    rational = liouville_check(1.0 / 3.0, -2.0, 1000)
    assert not rational.passed
    assert rational.witness_j == 3
    assert rational.best_c == math.inf


def test_weak_obs_sweep_is_uniform():
    sweep = weak_obs_sweep(X0, midpoint(), 1.0, 2.6, [0.05, 0.025])
    lams = [row["lambda_min"] for row in sweep.rows]
    assert min(lams) > 0
    assert max(lams) / min(lams) < 1.5


def test_weak_obs_sweep_refuses_rational_points():
    with pytest.raises(ValueError, match="rational"):
        weak_obs_sweep(0.5, midpoint(), 1.0, 2.6, [0.05])
    with pytest.raises(ValueError, match="rational"):
        weak_obs_sweep(1.0 / 3.0, midpoint(), 1.0, 2.6, [0.05])
