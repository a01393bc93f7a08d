"""Observability and admissibility measurements via Gramians.

For an observation functional ``B`` with per-mode values ``b_j``, the
observed energy over a window is a quadratic form in the mode
coefficients.  Its matrix, the Gramian, has closed-form entries for both
the flow (plain Fourier integrals) and the scheme trajectory (geometric
sums in the discrete phases ``f(mu_j tau)``).  The smallest eigenvalue is
the inverse observability constant, the largest the admissibility
constant; everything in this module reduces to assembling such matrices
on filtered mode sets and reading off their extreme eigenvalues, exactly
or through a generalized problem against a reference norm.

Discrete time windows follow one convention everywhere: a horizon ``T``
uses steps ``k = 1 .. floor(T / tau)``.  For every non-integer ``T/tau``
this is the open-window count ``ceil(T/tau) - 1``; when ``T`` is an exact
multiple of ``tau`` the end sample is included, so a full period of an
exactly periodic trajectory sums to a complete geometric block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .schemes import Scheme, band_dphase_range
from .spectral import (
    FilterBand,
    FrequencyOutOfSchemeDomain,
    Spectrum,
    State,
    make_transport_spectrum,
)
from .kernels import Cutoff, _composite_gl

__all__ = [
    "ObservationOperator",
    "GramianResult",
    "point_obs_transport",
    "point_obs_wave",
    "continuous_gramian",
    "discrete_gramian",
    "rayleigh_minimum",
    "SweepResult",
    "uniformity_sweep",
    "concentrated_packet",
    "packet_outside_mass",
    "packet_mass_decay",
    "PacketDecay",
    "InghamBounds",
    "ingham_bounds",
    "weak_star_norm",
    "LiouvilleReport",
    "liouville_check",
    "weak_obs_sweep",
]


@dataclass(frozen=True)
class ObservationOperator:
    """Mode values of an admissible observation functional.

    The admissibility order ``p`` and constant ``c_p`` certify
    ``|b_j| <= c_p (mu_j^(2p) + 1)^(1/2)`` for every mode; the inequality
    is checked on construction (and ``c_p`` is computed as the smallest
    valid constant when not given).
    """

    spectrum: Spectrum
    values: np.ndarray
    order: float
    c_p: float | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (len(self.spectrum),):
            raise ValueError("one observation value per mode required")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        mu = self.spectrum.frequencies
        scale = np.sqrt(mu ** (2 * self.order) + 1.0)
        needed = float(np.max(np.abs(vals) / scale))
        if self.c_p is None:
            object.__setattr__(self, "c_p", needed)
        elif needed > self.c_p * (1 + 1e-12):
            raise ValueError(
                f"boundedness fails: |b_j| / (mu^(2p)+1)^(1/2) reaches "
                f"{needed:.6g} > c_p = {self.c_p:.6g}"
            )


def point_obs_transport(spectrum: Spectrum) -> ObservationOperator:
    """Point observation for the transport system: every mode is seen with
    weight one (the modes all have unit modulus at the observation point)."""
    return ObservationOperator(spectrum, np.ones(len(spectrum)), order=1.0)


def point_obs_wave(spectrum: Spectrum, x0: float) -> ObservationOperator:
    """Position observation y(t, x0) for the string, in branch coordinates.

    Labels must be ``(j, sign)`` as produced by make_wave_spectrum.  In the
    first-order diagonalization the position trace picks up the factor
    ``-+ i sqrt(2) sin(j pi x0) / (2 j pi)`` on the two branches, so both
    carry the same weight ``sin(j pi x0) / (sqrt(2) j pi)`` in modulus.
    """
    values = np.empty(len(spectrum), dtype=complex)
    for idx, label in enumerate(spectrum.labels):
        j, sign = label
        values[idx] = -sign * 1j * math.sqrt(2.0) * math.sin(j * math.pi * x0) / (
            2.0 * j * math.pi
        )
    return ObservationOperator(spectrum, values, order=0.0)


@dataclass(frozen=True)
class GramianResult:
    """Hermitian observation Gramian on a filtered mode set."""

    matrix: np.ndarray
    labels: tuple
    lam_min: float
    lam_max: float
    params: dict

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0]

    @property
    def c_obs(self) -> float:
        """Observability constant 1 / lambda_min."""
        return 1.0 / self.lam_min

    @property
    def admissibility(self) -> float:
        return self.lam_max


def _band_select(op: ObservationOperator, band: FilterBand | None):
    if band is None:
        idx = np.arange(len(op.spectrum))
    else:
        idx = np.nonzero(band.keeps(op.spectrum.frequencies))[0]
    if idx.size == 0:
        raise ValueError("no modes inside the band")
    return (
        op.spectrum.frequencies[idx],
        op.values[idx],
        tuple(op.spectrum.labels[i] for i in idx),
    )


def _finish(matrix, labels, params) -> GramianResult:
    eig = np.linalg.eigvalsh(matrix)
    return GramianResult(
        matrix=matrix,
        labels=labels,
        lam_min=float(eig[0]),
        lam_max=float(eig[-1]),
        params=params,
    )


def continuous_gramian(
    op: ObservationOperator,
    horizon: float,
    band: FilterBand | None = None,
    t_start: float = 0.0,
) -> GramianResult:
    """Gramian of the flow over (t_start, t_start + horizon), closed form.

    Entries ``conj(b_j) b_l int exp(i (mu_l - mu_j) t) dt``; the integral
    is evaluated analytically, never by quadrature.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    mu, b, labels = _band_select(op, band)
    dmu = mu[None, :] - mu[:, None]
    t1 = t_start + horizon
    with np.errstate(divide="ignore", invalid="ignore"):
        integral = (np.exp(1j * dmu * t1) - np.exp(1j * dmu * t_start)) / (1j * dmu)
    np.fill_diagonal(integral, horizon)
    g = np.conj(b)[:, None] * b[None, :] * integral
    params = {"kind": "continuous", "horizon": horizon, "t_start": t_start}
    return _finish(g, labels, params)


def discrete_gramian(
    op: ObservationOperator,
    scheme: Scheme,
    tau: float,
    horizon: float,
    band: FilterBand | None = None,
    k_start: int = 0,
) -> GramianResult:
    """Gramian of the scheme trajectory over steps k_start + 1 .. k_start + K.

    ``K = floor(horizon / tau)`` (see the module docstring for the window
    convention).  Entries are exact geometric sums of the discrete phase
    differences; nothing is iterated in time.
    """
    if tau <= 0 or horizon <= 0:
        raise ValueError("tau and horizon must be positive")
    n_steps = int(math.floor(horizon / tau + 1e-9))
    if n_steps < 1:
        raise ValueError(f"horizon {horizon:g} holds no step of size {tau:g}")
    mu, b, labels = _band_select(op, band)
    alpha = mu * tau
    if np.any(np.abs(alpha) >= scheme.radius):
        worst = float(np.max(np.abs(alpha)))
        raise FrequencyOutOfSchemeDomain(
            f"band frequencies reach |mu tau| = {worst:.6g} >= radius "
            f"{scheme.radius:.6g} of '{scheme.name}'"
        )
    phi = np.asarray(scheme.phase(alpha), dtype=float)
    dphi = phi[None, :] - phi[:, None]
    half = 0.5 * dphi
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(n_steps * half) / np.sin(half)
    geom = np.exp(1j * dphi * (n_steps + 1) * 0.5) * ratio
    np.fill_diagonal(geom, n_steps)
    if k_start:
        geom = geom * np.exp(1j * dphi * k_start)
    g = tau * np.conj(b)[:, None] * b[None, :] * geom
    params = {
        "kind": "discrete",
        "scheme": scheme.name,
        "tau": tau,
        "horizon": horizon,
        "n_steps": n_steps,
        "k_start": k_start,
    }
    return _finish(g, labels, params)


def rayleigh_minimum(
    matrix: np.ndarray,
    n_random: int = 1000,
    n_refine: int = 400,
    seed: int = 0,
) -> float:
    """Brute-force minimum of the Rayleigh quotient of a Hermitian matrix.

    Best of many random unit states, then a projected-gradient descent on
    the sphere with an exact line search (the quotient is quadratic, so
    the optimal step within span{v, residual} is a 2x2 eigenproblem).
    Used as an eigensolver-independent oracle in tests.
    """
    n = matrix.shape[0]
    rng = np.random.default_rng(seed)
    states = rng.standard_normal((n_random, n)) + 1j * rng.standard_normal((n_random, n))
    states /= np.linalg.norm(states, axis=1)[:, None]
    quot = np.einsum("ri,ij,rj->r", np.conj(states), matrix, states).real
    v = states[int(np.argmin(quot))]

    lam = float(np.real(np.conj(v) @ (matrix @ v)))
    for _ in range(n_refine):
        r = matrix @ v - lam * v
        rn = np.linalg.norm(r)
        if rn < 1e-15:
            break
        u = r / rn
        u = u - (np.conj(v) @ u) * v
        un = np.linalg.norm(u)
        if un < 1e-15:
            break
        u /= un
        # 2x2 restriction of the form to span{v, u}
        a = np.array(
            [
                [np.conj(v) @ (matrix @ v), np.conj(v) @ (matrix @ u)],
                [np.conj(u) @ (matrix @ v), np.conj(u) @ (matrix @ u)],
            ]
        )
        w, vec = np.linalg.eigh(0.5 * (a + a.conj().T))
        c = vec[:, 0]
        v_new = c[0] * v + c[1] * u
        v_new /= np.linalg.norm(v_new)
        lam_new = float(w[0])
        if abs(lam - lam_new) < 1e-16 * max(1.0, abs(lam)):
            lam = lam_new
            v = v_new
            break
        lam, v = lam_new, v_new
    return lam


@dataclass(frozen=True)
class SweepResult:
    rows: list
    params: dict


def uniformity_sweep(
    spectra,
    obs_factory,
    scheme: Scheme,
    delta: float,
    horizon: float,
    taus,
) -> SweepResult:
    """Observability constants across a tau ladder, per spectrum member.

    ``spectra`` is a single Spectrum or an iterable of (label, Spectrum)
    pairs (a parametrized family is swept member by member).  For each tau
    the band (0, delta/tau] is cut out of the member spectrum; the member
    must be truncated generously enough to fill the band, otherwise the
    sweep would silently understate the constants and this raises instead.
    """
    if isinstance(spectra, Spectrum):
        members = [("", spectra)]
    else:
        members = list(spectra)
    rows = []
    for member_label, spectrum in members:
        op = obs_factory(spectrum)
        for tau in taus:
            tau = float(tau)
            hi = delta / tau
            if float(np.max(np.abs(spectrum.frequencies))) < hi:
                raise ValueError(
                    f"spectrum truncation (max |mu| = "
                    f"{np.max(np.abs(spectrum.frequencies)):.6g}) cannot fill "
                    f"the band (0, {hi:.6g}] at tau = {tau:g}"
                )
            g = discrete_gramian(op, scheme, tau, horizon, FilterBand(0.0, hi))
            rows.append(
                {
                    "member": member_label,
                    "tau": tau,
                    "T": horizon,
                    "delta": delta,
                    "lambda_min": g.lam_min,
                    "lambda_max": g.lam_max,
                    "C_obs": g.c_obs,
                    "modes": g.n_modes,
                }
            )
    return SweepResult(
        rows=rows,
        params={
            "scheme": scheme.name,
            "delta": delta,
            "T": horizon,
            "taus": [float(t) for t in taus],
        },
    )


# ----------------------------------------------------------------------
# concentrated packets (sharpness of the thresholds)

_PROFILE = Cutoff(0.5, 1.0)


def _profile_l2() -> float:
    nodes, weights = _composite_gl(-1.0, 1.0, 64, 8)
    return float(np.sum(weights * np.asarray(_PROFILE(nodes)) ** 2))


def concentrated_packet(tau: float, delta: float, x0: float) -> State:
    """Transport state concentrated at x0 with frequencies near delta / tau.

    Coefficients ``a_j = tau^(1/4) chi(sqrt(tau) 2 pi j - delta / sqrt(tau))
    exp(-2 pi i j x0)`` with a unit-L2 bump ``chi`` supported in (-1, 1).
    Its squared norm tends to 1/(2 pi) as tau -> 0 while its energy leaves
    every ball around x0 faster than any fixed power of tau; it is the
    witness that the observability thresholds cannot be relaxed.
    """
    if tau <= 0 or delta <= 0:
        raise ValueError("tau and delta must be positive")
    chi_scale = 1.0 / math.sqrt(_profile_l2())
    j_hi = (delta / tau + 1.0 / math.sqrt(tau)) / (2 * math.pi)
    n = int(math.ceil(j_hi)) + 2
    spectrum = make_transport_spectrum(n)
    js = np.arange(-n, n + 1)
    arg = math.sqrt(tau) * 2 * math.pi * js - delta / math.sqrt(tau)
    amps = tau**0.25 * chi_scale * np.asarray(_PROFILE(arg))
    coeffs = amps * np.exp(-2j * math.pi * js * x0)
    return State(spectrum, coeffs)


def packet_outside_mass(state: State, x0: float, radius: float, n_grid: int | None = None) -> float:
    """Mass of the position-space profile outside the circle ball B(x0, radius).

    The state must live on a transport spectrum (integer labels); the
    profile ``sum_j a_j exp(2 pi i j x)`` is sampled on a uniform grid fine
    enough for its (narrow-band) intensity and summed where the geodesic
    distance to x0 exceeds radius.
    """
    if not 0 < radius < 0.5:
        raise ValueError("radius must lie in (0, 1/2)")
    js = np.asarray([int(l) for l in state.spectrum.labels])
    active = np.nonzero(state.coefficients != 0)[0]
    if active.size == 0:
        return 0.0
    span = int(js[active].max() - js[active].min()) + 1
    m = int(n_grid) if n_grid else max(8192, 32 * span)
    xs = np.arange(m) / m
    profile = np.einsum(
        "j,jx->x",
        state.coefficients[active],
        np.exp(2j * math.pi * js[active][:, None] * xs[None, :]),
    )
    dist = np.abs(((xs - x0 + 0.5) % 1.0) - 0.5)
    outside = dist > radius
    return float(np.sum(np.abs(profile[outside]) ** 2) / m)


@dataclass(frozen=True)
class PacketDecay:
    taus: np.ndarray
    norms_sq: np.ndarray
    outside_masses: np.ndarray
    slope: float


def packet_mass_decay(taus, delta: float, x0: float, radius: float) -> PacketDecay:
    """Packet norms and outside-ball masses along a tau ladder, with the
    fitted log-log decay slope of the outside mass."""
    norms, masses = [], []
    for tau in taus:
        st = concentrated_packet(float(tau), delta, x0)
        norms.append(st.norm() ** 2)
        masses.append(packet_outside_mass(st, x0, radius))
    taus = np.asarray(list(taus), dtype=float)
    masses_arr = np.asarray(masses)
    slope = float(
        np.polyfit(np.log(taus), np.log(np.maximum(masses_arr, 1e-300)), 1)[0]
    )
    return PacketDecay(
        taus=taus,
        norms_sq=np.asarray(norms),
        outside_masses=masses_arr,
        slope=slope,
    )


# ----------------------------------------------------------------------
# nonharmonic frame bounds


@dataclass(frozen=True)
class InghamBounds:
    lower: float
    upper: float
    gap: float
    threshold: float
    params: dict


def ingham_bounds(
    frequencies,
    scheme: Scheme,
    tau: float,
    delta: float,
    horizon: float,
) -> InghamBounds:
    """Frame bounds of the discrete exponentials for a gapped frequency set.

    The all-ones observation turns the frame inequality
    ``c sum |a_j|^2 <= tau sum_k |sum_j a_j exp(i f(mu_j tau) k)|^2
    <= C sum |a_j|^2`` into eigenvalue bounds of a Gramian; the classical
    continuous statement needs ``T > 2 pi / gap`` and the discrete phases
    stretch that to ``2 pi / (gap inf f')`` on the band ``|mu tau| <= delta``.
    """
    freqs = np.asarray(sorted(float(f) for f in frequencies))
    if freqs.size < 2:
        raise ValueError("need at least two frequencies")
    gap = float(np.min(np.diff(freqs)))
    if gap <= 0:
        raise ValueError("frequencies must be distinct")
    if float(np.max(np.abs(freqs))) * tau > delta:
        raise ValueError(
            f"frequencies leave the band |mu| tau <= delta = {delta:g}"
        )
    spectrum = Spectrum(freqs, tuple(range(freqs.size)))
    op = ObservationOperator(spectrum, np.ones(freqs.size), order=1.0)
    g = discrete_gramian(op, scheme, tau, horizon)
    inf_dp, _ = band_dphase_range(scheme, delta)
    return InghamBounds(
        lower=g.lam_min,
        upper=g.lam_max,
        gap=gap,
        threshold=2 * math.pi / (gap * inf_dp),
        params={"scheme": scheme.name, "tau": tau, "T": horizon, "delta": delta},
    )


# ----------------------------------------------------------------------
# weak observability of the string at a point


def _branch_pairs(state: State):
    by_j = {}
    for idx, label in enumerate(state.spectrum.labels):
        j, sign = label
        by_j.setdefault(int(j), {})[int(sign)] = state.coefficients[idx]
    for j, pair in sorted(by_j.items()):
        yield j, pair.get(+1, 0.0), pair.get(-1, 0.0)


def weak_star_norm(state: State, x0: float) -> float:
    """Observation-weighted norm of a string state.

    In displacement/velocity coordinates (alpha_j, beta_j) per physical
    mode, the squared norm is
    ``sum_j (|alpha_j|^2 + |beta_j|^2 / (j pi)^2) sin^2(j pi x0)``; branch
    coefficients are mapped back through the diagonalization first.
    """
    total = 0.0
    for j, c_plus, c_minus in _branch_pairs(state):
        jp = j * math.pi
        alpha = (c_plus - c_minus) / (2j * jp)
        beta = (c_plus + c_minus) / 2.0
        total += (abs(alpha) ** 2 + abs(beta) ** 2 / jp**2) * math.sin(jp * x0) ** 2
    return math.sqrt(total)


class LiouvilleReport(NamedTuple):
    passed: bool
    min_margin: float
    best_c: float
    growth: float
    witness_j: int


def liouville_check(x0: float, r: float, j_max: int) -> LiouvilleReport:
    """Test the Diophantine weight inequality
    ``(1 + (j pi)^2)^(r/2) <= C sin^2(j pi x0)`` for j = 1 .. j_max.

    Reports the worst margin ``sin^2(j pi x0) (1 + (j pi)^2)^(-r/2)``, the
    best constant ``C`` over the range, and the growth of ``C`` from
    ``j_max // 10`` to ``j_max``; the check passes when no margin vanishes
    and ``C`` has stopped growing (factor below 2 per decade), which holds
    for algebraic ``x0`` of degree 2 such as sqrt(2) - 1 once ``r <= -2``.
    """
    if j_max < 100:
        raise ValueError("j_max must be at least 100")
    js = np.arange(1, j_max + 1)
    s2 = np.sin(js * math.pi * x0) ** 2
    # a computed sin below round-off scale is an exact resonance in disguise
    # (rational x0 never yields a true zero in floating point)
    resonant = s2 <= (js * 1e-12) ** 2
    if np.any(resonant):
        j_res = int(js[np.argmax(resonant)])
        return LiouvilleReport(
            passed=False,
            min_margin=0.0,
            best_c=math.inf,
            growth=math.inf,
            witness_j=j_res,
        )
    weight = (1.0 + (js * math.pi) ** 2) ** (r / 2.0)
    margins = s2 / weight
    i_worst = int(np.argmin(margins))
    min_margin = float(margins[i_worst])
    best_c = 1.0 / min_margin
    early = float(np.min(margins[: j_max // 10]))
    growth = early / min_margin
    return LiouvilleReport(
        passed=bool(growth < 2.0),
        min_margin=min_margin,
        best_c=best_c,
        growth=growth,
        witness_j=int(js[i_worst]),
    )


def _refuse_rational(x0: float):
    frac = Fraction(x0).limit_denominator(10_000)
    if abs(x0 * frac.denominator - frac.numerator) < 1e-8:
        raise ValueError(
            f"x0 = {x0!r} is (numerically) the rational "
            f"{frac.numerator}/{frac.denominator}; sin(j pi x0) vanishes at "
            f"j = {frac.denominator} and the point observation misses that "
            f"mode entirely, so an irrational, badly approximable x0 is "
            f"required"
        )


def weak_obs_sweep(
    x0: float,
    scheme: Scheme,
    delta: float,
    horizon: float,
    taus,
    n_extra: int = 2,
) -> SweepResult:
    """Weak observability constants of the string point observation.

    For each tau, the wave spectrum is truncated to fill the band
    (0, delta/tau], the discrete Gramian G of the position trace is
    assembled, and the smallest generalized eigenvalue of ``G v = lam S v``
    is computed, where S is the diagonal Gram matrix of the
    observation-weighted norm.  ``lam_min`` bounded away from zero along
    the ladder is uniform weak observability.
    """
    _refuse_rational(x0)
    from .spectral import make_wave_spectrum

    rows = []
    for tau in taus:
        tau = float(tau)
        j_band = int(math.floor(delta / (math.pi * tau) + 1e-9))
        if j_band < 1:
            raise ValueError(f"band (0, {delta / tau:g}] holds no string mode")
        spectrum = make_wave_spectrum(j_band + n_extra)
        op = point_obs_wave(spectrum, x0)
        band = FilterBand(0.0, delta / tau)
        g = discrete_gramian(op, scheme, tau, horizon, band)
        weights = np.asarray(
            [
                math.sin(j * math.pi * x0) ** 2 / (2.0 * (j * math.pi) ** 2)
                for j, _sign in g.labels
            ]
        )
        eig = scipy.linalg.eigh(g.matrix, np.diag(weights), eigvals_only=True)
        rows.append(
            {
                "tau": tau,
                "T": horizon,
                "delta": delta,
                "lambda_min": float(eig[0]),
                "lambda_max": float(eig[-1]),
                "C_obs": 1.0 / float(eig[0]),
                "modes": g.n_modes,
            }
        )
    return SweepResult(
        rows=rows,
        params={
            "x0": x0,
            "scheme": scheme.name,
            "delta": delta,
            "T": horizon,
            "taus": [float(t) for t in taus],
        },
    )
