"""Transfer kernels between a conservative flow and its time discretization.

Two oscillatory integrals do all the work.  With ``f`` the scheme's phase
map, ``g`` its inverse and ``chi`` a smooth even cutoff,

    forward:  rho(t, s) = (1 / 2 pi tau) * int exp(i (a s - g(a) t) / tau) chi(a) da
    reverse:  q(t, s)   = (1 / 2 pi tau) * int exp(i (f(a) s - a t) / tau) chi(a) da

both over the support of ``chi``.  Sampling the forward kernel on the time
grid turns a discrete trajectory back into the continuous flow,

    y(t) = tau * sum_k rho(t, k tau) y^k,

exactly on modes whose ``|mu| tau`` lies on the cutoff plateau; the reverse
kernel inverts that,

    y^k = int q(t, k tau) y(t) dt.

Stationary-phase geometry confines both kernels to the cone
``t ~ f'(a) s``; away from it they decay like a high power of ``tau``,
which is what makes truncated sums and integrals affordable.  Everything
here is plain fixed quadrature: composite Gauss-Legendre panels sized to
the worst local phase rate, no FFTs, no randomness, summations in a fixed
order so equal configs give bitwise-equal results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .schemes import Scheme, band_dphase_range, phase_inverse
from .spectral import State

__all__ = [
    "Cutoff",
    "AnnularCutoff",
    "KernelConfig",
    "kernel_config",
    "band_kernel_config",
    "forward_kernel",
    "reverse_kernel",
    "kernel_grid",
    "continuous_from_discrete",
    "discrete_from_continuous",
    "decay_profile",
    "DecayProfile",
    "operator_norm_check",
    "OperatorNormReport",
]


# ----------------------------------------------------------------------
# cutoffs


def _bump_ramp(x):
    """Smooth ramp: 0 for x <= 0, 1 for x >= 1, C-infinity in between."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        left = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        right = np.where(1.0 - x > 0.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return left / (left + right)


@dataclass(frozen=True)
class Cutoff:
    """Even C-infinity cutoff, exactly 1 on [-plateau, plateau] and exactly 0
    outside (-support, support), glued with exp(-1/x) ramps."""

    plateau: float
    support: float

    def __post_init__(self):
        if not 0 <= self.plateau < self.support:
            raise ValueError(
                f"cutoff needs 0 <= plateau < support, got "
                f"({self.plateau}, {self.support})"
            )

    @property
    def support_radius(self) -> float:
        return self.support

    def __call__(self, alpha):
        a = np.abs(np.asarray(alpha, dtype=float))
        return _bump_ramp((self.support - a) / (self.support - self.plateau))


@dataclass(frozen=True)
class AnnularCutoff:
    """Even cutoff equal to 1 on the annulus lo_plateau <= |a| <= hi_plateau,
    vanishing outside (lo_support, hi_support) in |a|."""

    lo_support: float
    lo_plateau: float
    hi_plateau: float
    hi_support: float

    def __post_init__(self):
        ok = 0 <= self.lo_support < self.lo_plateau <= self.hi_plateau < self.hi_support
        if not ok:
            raise ValueError(
                "annular cutoff needs 0 <= lo_support < lo_plateau <= "
                f"hi_plateau < hi_support, got {self}"
            )

    @property
    def support_radius(self) -> float:
        return self.hi_support

    def __call__(self, alpha):
        a = np.abs(np.asarray(alpha, dtype=float))
        outer = _bump_ramp((self.hi_support - a) / (self.hi_support - self.hi_plateau))
        inner = _bump_ramp((self.lo_plateau - a) / (self.lo_plateau - self.lo_support))
        return outer * (1.0 - inner)


# ----------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class KernelConfig:
    """Everything a kernel evaluation needs, with precomputed band data.

    ``chi_fwd`` acts on the phase variable (plateau ``f(delta)``, support
    ``f(delta + eps)`` in the plain case); ``chi_rev`` acts on the
    frequency variable (plateau ``delta``, support ``delta + eps``).
    ``inf_dphase``/``sup_dphase`` are the extremes of f' over
    ``|a| <= delta + eps``; they set the propagation cone, the quadrature
    panel counts and the truncation windows (margin defaults to
    ``5 * eps`` in time units on both sides).
    """

    scheme: Scheme
    tau: float
    delta: float
    eps: float
    chi_fwd: object
    chi_rev: object
    inf_dphase: float
    sup_dphase: float
    nodes_per_panel: int = 8
    panel_rate: float = 4.0
    k_margin: float | None = None
    t_margin: float | None = None
    _rules: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def forward_margin(self) -> float:
        return 5.0 * self.eps if self.k_margin is None else self.k_margin

    @property
    def reverse_margin(self) -> float:
        return 5.0 * self.eps if self.t_margin is None else self.t_margin

    def cone_interval(self, s: float):
        """Travel-time interval {f'(a) * s} over the cutoff band."""
        ends = (s * self.inf_dphase, s * self.sup_dphase)
        return min(ends), max(ends)


def _validated_band(scheme: Scheme, tau: float, delta: float, eps: float):
    if tau <= 0:
        raise ValueError("tau must be positive")
    if delta <= 0 or eps <= 0:
        raise ValueError("delta and eps must be positive")
    if delta + eps >= scheme.radius:
        raise ValueError(
            f"delta + eps = {delta + eps:g} reaches the radius "
            f"{scheme.radius:g} of '{scheme.name}'; the cutoff support must "
            f"stay inside the open domain where |f| < pi holds"
        )


def kernel_config(
    scheme: Scheme,
    tau: float,
    delta: float,
    eps: float,
    nodes_per_panel: int = 8,
    panel_rate: float = 4.0,
    k_margin: float | None = None,
    t_margin: float | None = None,
) -> KernelConfig:
    """Standard configuration: cutoff plateau at the working band delta,
    smoothly off within delta + eps."""
    _validated_band(scheme, tau, delta, eps)
    a = float(scheme.phase(delta))
    b = float(scheme.phase(delta + eps))
    inf_dp, sup_dp = band_dphase_range(scheme, delta + eps)
    return KernelConfig(
        scheme=scheme,
        tau=tau,
        delta=delta,
        eps=eps,
        chi_fwd=Cutoff(a, b),
        chi_rev=Cutoff(delta, delta + eps),
        inf_dphase=inf_dp,
        sup_dphase=sup_dp,
        nodes_per_panel=nodes_per_panel,
        panel_rate=panel_rate,
        k_margin=k_margin,
        t_margin=t_margin,
    )


def band_kernel_config(
    scheme: Scheme,
    tau: float,
    lo: float,
    hi: float,
    eps: float,
    **kwargs,
) -> KernelConfig:
    """Configuration for data filtered to the frequency annulus (lo, hi].

    The cutoff plateau covers exactly the annulus image; it needs room on
    both sides, so ``eps < lo`` is required as well as ``hi + eps`` inside
    the scheme domain.
    """
    if not 0 < lo < hi:
        raise ValueError("band needs 0 < lo < hi")
    if eps >= lo:
        raise ValueError(
            f"transition width eps = {eps:g} must be smaller than the inner "
            f"band edge {lo:g}"
        )
    _validated_band(scheme, tau, hi, eps)
    f = scheme.phase
    chi_fwd = AnnularCutoff(
        float(f(lo - eps)), float(f(lo)), float(f(hi)), float(f(hi + eps))
    )
    chi_rev = AnnularCutoff(lo - eps, lo, hi, hi + eps)
    inf_dp, sup_dp = band_dphase_range(scheme, hi + eps)
    return KernelConfig(
        scheme=scheme,
        tau=tau,
        delta=hi,
        eps=eps,
        chi_fwd=chi_fwd,
        chi_rev=chi_rev,
        inf_dphase=inf_dp,
        sup_dphase=sup_dp,
        **kwargs,
    )


# ----------------------------------------------------------------------
# quadrature rules


def _gl_unit(n: int):
    x, w = roots_legendre(n)
    return np.asarray(x, dtype=float), np.asarray(w, dtype=float)


def _composite_gl(lo: float, hi: float, n_panels: int, nodes_per_panel: int):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = _gl_unit(nodes_per_panel)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _fwd_panels(cfg: KernelConfig, max_s: float, max_t: float) -> int:
    rate = (max_s + max_t / cfg.inf_dphase) / (math.pi * cfg.tau)
    return max(64, int(math.ceil(cfg.panel_rate * rate)))


def _rev_panels(cfg: KernelConfig, max_s: float, max_t: float) -> int:
    rate = (cfg.sup_dphase * max_s + max_t) / (math.pi * cfg.tau)
    return max(64, int(math.ceil(cfg.panel_rate * rate)))


def _fwd_rule(cfg: KernelConfig, n_panels: int):
    """Nodes over the phase-variable support with g and chi precomputed."""
    key = ("fwd", n_panels)
    if key not in cfg._rules:
        b = cfg.chi_fwd.support_radius
        nodes, weights = _composite_gl(-b, b, n_panels, cfg.nodes_per_panel)
        g_nodes = phase_inverse(cfg.scheme, nodes)
        chi_nodes = np.asarray(cfg.chi_fwd(nodes), dtype=float)
        cfg._rules[key] = (nodes, weights, g_nodes, chi_nodes)
    return cfg._rules[key]


def _rev_rule(cfg: KernelConfig, n_panels: int):
    """Nodes over the frequency-variable support with f and chi precomputed."""
    key = ("rev", n_panels)
    if key not in cfg._rules:
        b = cfg.chi_rev.support_radius
        nodes, weights = _composite_gl(-b, b, n_panels, cfg.nodes_per_panel)
        f_nodes = np.asarray(cfg.scheme.phase(nodes), dtype=float)
        chi_nodes = np.asarray(cfg.chi_rev(nodes), dtype=float)
        cfg._rules[key] = (nodes, weights, f_nodes, chi_nodes)
    return cfg._rules[key]


def _osc_sum(core, nodes, xs, tau):
    """sum_n core[n] exp(i nodes[n] x / tau) for each x, chunked, fixed order."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.size, dtype=complex)
    chunk = max(8, int(6e6 // max(nodes.size, 1)))
    for i0 in range(0, xs.size, chunk):
        blk = np.exp(1j * nodes[:, None] * (xs[None, i0 : i0 + chunk] / tau))
        out[i0 : i0 + chunk] = np.einsum("n,nm->m", core, blk)
    return out


# ----------------------------------------------------------------------
# pointwise kernels


def forward_kernel(cfg: KernelConfig, t: float, s):
    """rho(t, s) for scalar t and scalar or 1-D array s.

    Real-valued in exact arithmetic (even cutoff, odd phase inverse); the
    tiny imaginary residue is kept so callers can check it.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    n_panels = _fwd_panels(cfg, float(np.max(np.abs(s_arr), initial=0.0)), abs(t))
    nodes, weights, g_nodes, chi_nodes = _fwd_rule(cfg, n_panels)
    core = weights * chi_nodes * np.exp(-1j * g_nodes * (t / cfg.tau))
    vals = _osc_sum(core, nodes, s_arr, cfg.tau) / (2 * np.pi * cfg.tau)
    return complex(vals[0]) if np.isscalar(s) or np.asarray(s).ndim == 0 else vals


def reverse_kernel(cfg: KernelConfig, t, s: float):
    """q(t, s) for scalar or 1-D array t and scalar s."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    n_panels = _rev_panels(cfg, abs(s), float(np.max(np.abs(t_arr), initial=0.0)))
    nodes, weights, f_nodes, chi_nodes = _rev_rule(cfg, n_panels)
    core = weights * chi_nodes * np.exp(1j * f_nodes * (s / cfg.tau))
    vals = _osc_sum(core, nodes, -t_arr, cfg.tau) / (2 * np.pi * cfg.tau)
    return complex(vals[0]) if np.isscalar(t) or np.asarray(t).ndim == 0 else vals


def kernel_grid(cfg: KernelConfig, ts, ss, which: str = "forward"):
    """Kernel values on a (t, s) grid, shaped (len(ts), len(ss))."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    ss = np.atleast_1d(np.asarray(ss, dtype=float))
    out = np.empty((ts.size, ss.size), dtype=complex)
    if which == "forward":
        for i, t in enumerate(ts):
            out[i, :] = forward_kernel(cfg, float(t), ss)
    elif which == "reverse":
        for j, s in enumerate(ss):
            out[:, j] = reverse_kernel(cfg, ts, float(s))
    else:
        raise ValueError(f"which must be forward or reverse, got {which!r}")
    return out


# ----------------------------------------------------------------------
# transmutation of states


def _check_on_plateau(cfg: KernelConfig, y0: State, which: str):
    alpha = y0.spectrum.frequencies * cfg.tau
    active = y0.coefficients != 0
    if not np.any(active):
        return
    if np.any(np.abs(alpha[active]) >= cfg.scheme.radius):
        raise ValueError(
            f"active modes exceed the domain of '{cfg.scheme.name}'"
        )
    chi = cfg.chi_fwd(cfg.scheme.phase(alpha)) if which == "fwd" else cfg.chi_rev(alpha)
    off = active & (np.asarray(chi) < 1.0 - 1e-12)
    if np.any(off):
        j = int(np.argmax(off))
        raise ValueError(
            f"mode {y0.spectrum.labels[j]} (|mu tau| = {abs(alpha[j]):.6g}) is "
            f"outside the cutoff plateau; the representation only holds for "
            f"states filtered to the plateau band"
        )


def continuous_from_discrete(cfg: KernelConfig, y0: State, t: float, details: bool = False):
    """Continuous state at time t rebuilt from the discrete trajectory of y0.

    Evaluates ``y(t) = tau * sum_k rho(t, k tau) y^k`` with the sum
    truncated to the propagation cone ``[t / sup f', t / inf f']`` fattened
    by the forward margin.  ``y0`` must be filtered to the cutoff plateau.

    With ``details=True`` also returns a dict with the window, panel count
    and a crude tail estimate (the integrated fourth-power decay beyond the
    window edges), against which truncation experiments can be compared.
    """
    _check_on_plateau(cfg, y0, "fwd")
    lo_v, hi_v = cfg.cone_interval(1.0)  # f' range
    ends = (t / hi_v, t / lo_v)
    margin = cfg.forward_margin
    lo = min(ends) - margin
    hi = max(ends) + margin
    ks = np.arange(math.ceil(lo / cfg.tau - 1e-9), math.floor(hi / cfg.tau + 1e-9) + 1)
    rho_vals = forward_kernel(cfg, t, ks * cfg.tau)

    fj = np.asarray(cfg.scheme.phase(y0.spectrum.frequencies * cfg.tau), dtype=float)
    phases = np.exp(1j * fj[:, None] * ks[None, :])
    mult = cfg.tau * np.einsum("k,jk->j", rho_vals, phases)
    out = State(y0.spectrum, y0.coefficients * mult)
    if not details:
        return out

    def edge_tail(k_edge):
        s_edge = k_edge * cfg.tau
        c_lo, c_hi = cfg.cone_interval(s_edge)
        dist = max(c_lo - t, t - c_hi, 0.0)
        val = abs(forward_kernel(cfg, t, float(s_edge)))
        return val * dist / (3.0 * cfg.inf_dphase) if dist > 0 else np.inf

    info = {
        "k_lo": int(ks[0]),
        "k_hi": int(ks[-1]),
        "n_panels": _fwd_panels(cfg, float(np.max(np.abs(ks)) * cfg.tau), abs(t)),
        "tail_estimate": edge_tail(ks[0]) + edge_tail(ks[-1]),
    }
    return out, info


def discrete_from_continuous(cfg: KernelConfig, y0: State, k: int, details: bool = False):
    """Discrete step-k state rebuilt from the continuous trajectory of y0.

    Evaluates ``y^k = int q(t, k tau) y(t) dt`` by composite Gauss-Legendre
    quadrature over the cone ``[k tau inf f', k tau sup f']`` fattened by
    the reverse margin.
    """
    _check_on_plateau(cfg, y0, "rev")
    s = k * cfg.tau
    c_lo, c_hi = cfg.cone_interval(s)
    margin = cfg.reverse_margin
    lo, hi = c_lo - margin, c_hi + margin

    # combined oscillation rate: kernel frequencies up to (delta+eps)/tau,
    # mode frequencies up to delta/tau
    rate = (2 * cfg.delta + cfg.eps) / cfg.tau
    n_panels = max(64, int(math.ceil(0.5 * (hi - lo) * rate)))
    t_nodes, t_weights = _composite_gl(lo, hi, n_panels, cfg.nodes_per_panel)
    q_vals = reverse_kernel(cfg, t_nodes, s)

    mu = y0.spectrum.frequencies
    phases = np.exp(1j * mu[:, None] * t_nodes[None, :])
    mult = np.einsum("m,jm->j", t_weights * q_vals, phases)
    out = State(y0.spectrum, y0.coefficients * mult)
    if not details:
        return out

    def edge_tail(t_edge):
        dist = max(c_lo - t_edge, t_edge - c_hi, 0.0)
        val = abs(reverse_kernel(cfg, float(t_edge), s))
        return val * dist / (3.0 * cfg.inf_dphase) if dist > 0 else np.inf

    info = {
        "t_lo": lo,
        "t_hi": hi,
        "n_t_panels": n_panels,
        "tail_estimate": edge_tail(lo) + edge_tail(hi),
    }
    return out, info


# ----------------------------------------------------------------------
# decay off the cone


@dataclass(frozen=True)
class DecayProfile:
    taus: np.ndarray
    values: np.ndarray
    slope: float


def decay_profile(
    scheme: Scheme,
    delta: float,
    eps: float,
    t: float,
    s: float,
    taus,
    which: str = "forward",
    **config_kwargs,
) -> DecayProfile:
    """|kernel(t, s)| along a tau ladder with the fitted log-log slope.

    The point must lie strictly outside the fattened cone
    ``[s inf f' - eps, s sup f' + eps]``; inside it the kernel does not
    decay and the fit would be meaningless, so that is a hard error.
    """
    probe = kernel_config(scheme, float(taus[0]), delta, eps, **config_kwargs)
    c_lo, c_hi = probe.cone_interval(s)
    if not (t < c_lo - eps or t > c_hi + eps):
        raise ValueError(
            f"(t, s) = ({t:g}, {s:g}) lies inside the propagation cone "
            f"[{c_lo - eps:g}, {c_hi + eps:g}]; off-cone decay is only "
            f"defined outside it"
        )
    vals = []
    for tau in taus:
        cfg = kernel_config(scheme, float(tau), delta, eps, **config_kwargs)
        if which == "forward":
            v = forward_kernel(cfg, t, float(s))
        elif which == "reverse":
            v = reverse_kernel(cfg, float(t), s)
        else:
            raise ValueError(f"which must be forward or reverse, got {which!r}")
        vals.append(abs(v))
    taus = np.asarray(list(taus), dtype=float)
    values = np.asarray(vals, dtype=float)
    slope = float(np.polyfit(np.log(taus), np.log(np.maximum(values, 1e-300)), 1)[0])
    return DecayProfile(taus=taus, values=values, slope=slope)


# ----------------------------------------------------------------------
# operator norms


@dataclass(frozen=True)
class OperatorNormReport:
    forward_measured: float
    forward_bound: float
    reverse_measured: float
    reverse_bound: float
    forward_ratios: np.ndarray
    reverse_ratios: np.ndarray


def _gaussian_mix_norm_sq(c, centers, sigmas, nus) -> float:
    """Exact L2(R) norm^2 of sum_m c_m exp(-(t-p_m)^2/(2 s_m^2) + i nu_m t)."""
    a = 1.0 / (2.0 * sigmas**2)
    asum = a[:, None] + a[None, :]
    m = (a[:, None] * centers[:, None] + a[None, :] * centers[None, :]) / asum
    omega = nus[None, :] - nus[:, None]
    overlap = (
        np.sqrt(np.pi / asum)
        * np.exp(-(a[:, None] * a[None, :] / asum) * (centers[:, None] - centers[None, :]) ** 2)
        * np.exp(1j * omega * m - omega**2 / (4.0 * asum))
    )
    total = np.einsum("i,j,ij->", np.conj(c), c, overlap)
    return float(total.real)


def operator_norm_check(
    cfg: KernelConfig,
    n_trials: int = 100,
    seed: int = 0,
    input_len: int = 40,
) -> OperatorNormReport:
    """Monte-Carlo lower estimates of both transfer operator norms.

    Forward direction: random complex sequences w supported on
    ``input_len`` grid points are pushed through
    ``(I w)(t) = tau sum_k rho(t, k tau) w_k`` and the image norm is
    measured by quadrature over the fattened cone, giving ratios
    ``||I w|| / ||w||``.  Closed-form bound: ``max chi * sqrt(sup f')``.

    Reverse direction: random Gaussian wave packets (exact input norms via
    Gaussian overlap integrals) are pushed through
    ``(J w)(k tau) = int q(t, k tau) w(t) dt``.  Closed-form bound:
    ``max chi / sqrt(inf f')``.

    Window truncation only discards image mass, so every ratio is a lower
    estimate and must stay below its bound.
    """
    rng = np.random.default_rng(seed)
    margin = cfg.forward_margin
    tau = cfg.tau

    # --- forward operator: sequences -> functions
    ks = np.arange(input_len)
    s_max = float(ks[-1]) * tau
    cone_lo, cone_hi = cfg.cone_interval(s_max)
    t_lo = min(0.0, cone_lo) - margin
    t_hi = max(0.0, cone_hi) + margin
    rate = (cfg.delta + cfg.eps) / tau
    n_t_panels = max(64, int(math.ceil(0.5 * (t_hi - t_lo) * rate)))
    t_nodes, t_weights = _composite_gl(t_lo, t_hi, n_t_panels, cfg.nodes_per_panel)

    n_panels = _fwd_panels(cfg, s_max, max(abs(t_lo), abs(t_hi)))
    nodes, weights, g_nodes, chi_nodes = _fwd_rule(cfg, n_panels)
    base = weights * chi_nodes
    # phases exp(i a s / tau) with s = k tau reduce to exp(i a k)
    osc_k = np.exp(1j * nodes[:, None] * ks[None, :])
    rho_matrix = np.empty((t_nodes.size, input_len), dtype=complex)
    chunk = max(8, int(4e6 // max(nodes.size, 1)))
    for i0 in range(0, t_nodes.size, chunk):
        tc = t_nodes[i0 : i0 + chunk]
        core = base[:, None] * np.exp(-1j * g_nodes[:, None] * (tc[None, :] / tau))
        rho_matrix[i0 : i0 + chunk, :] = np.einsum("nm,nk->mk", core, osc_k) / (
            2 * np.pi * tau
        )

    fwd_bound = float(np.sqrt(cfg.sup_dphase))  # max chi = 1 by construction
    fwd_ratios = np.empty(n_trials)
    for i in range(n_trials):
        w = rng.standard_normal(input_len) + 1j * rng.standard_normal(input_len)
        image = tau * np.einsum("mk,k->m", rho_matrix, w)
        num = np.sum(t_weights * np.abs(image) ** 2)
        den = tau * np.sum(np.abs(w) ** 2)
        fwd_ratios[i] = math.sqrt(num / den)

    # --- reverse operator: functions -> sequences
    n_mix = 6
    s_support = input_len * tau
    sig_lo, sig_hi = 2.0 * tau, 6.0 * tau
    pad = 8.0 * sig_hi
    in_lo, in_hi = -pad, s_support + pad
    inf_v, sup_v = cfg.cone_interval(1.0)
    k_lo = math.floor((min(in_lo / inf_v, in_lo / sup_v) - margin) / tau)
    k_hi = math.ceil((max(in_hi / inf_v, in_hi / sup_v) + margin) / tau)
    out_ks = np.arange(k_lo, k_hi + 1)

    nu_max = 0.9 * (cfg.delta + cfg.eps) / tau
    rate_rev = (cfg.delta + cfg.eps) / tau + nu_max
    n_panels_t = max(64, int(math.ceil(0.5 * (in_hi - in_lo) * rate_rev)))
    tq_nodes, tq_weights = _composite_gl(in_lo, in_hi, n_panels_t, cfg.nodes_per_panel)

    n_rev = _rev_panels(cfg, float(np.max(np.abs(out_ks))) * tau, max(abs(in_lo), abs(in_hi)))
    rnodes, rweights, f_nodes, rchi = _rev_rule(cfg, n_rev)
    rbase = rweights * rchi
    osc_out = np.exp(1j * f_nodes[:, None] * out_ks[None, :])
    q_matrix = np.empty((tq_nodes.size, out_ks.size), dtype=complex)
    chunk = max(8, int(4e6 // max(rnodes.size, 1)))
    for i0 in range(0, tq_nodes.size, chunk):
        tc = tq_nodes[i0 : i0 + chunk]
        core = rbase[:, None] * np.exp(-1j * rnodes[:, None] * (tc[None, :] / tau))
        q_matrix[i0 : i0 + chunk, :] = np.einsum("nm,nk->mk", core, osc_out) / (
            2 * np.pi * tau
        )

    rev_bound = float(1.0 / np.sqrt(cfg.inf_dphase))
    rev_ratios = np.empty(n_trials)
    for i in range(n_trials):
        c = rng.standard_normal(n_mix) + 1j * rng.standard_normal(n_mix)
        centers = rng.uniform(0.0, s_support, n_mix)
        sigmas = rng.uniform(sig_lo, sig_hi, n_mix)
        nus = rng.uniform(-nu_max, nu_max, n_mix)
        w_vals = np.einsum(
            "m,mt->t",
            c,
            np.exp(
                -((tq_nodes[None, :] - centers[:, None]) ** 2)
                / (2.0 * sigmas[:, None] ** 2)
                + 1j * nus[:, None] * tq_nodes[None, :]
            ),
        )
        image = np.einsum("t,tk->k", tq_weights * w_vals, q_matrix)
        num = tau * np.sum(np.abs(image) ** 2)
        den = _gaussian_mix_norm_sq(c, centers, sigmas, nus)
        rev_ratios[i] = math.sqrt(num / den)

    return OperatorNormReport(
        forward_measured=float(np.max(fwd_ratios)),
        forward_bound=fwd_bound,
        reverse_measured=float(np.max(rev_ratios)),
        reverse_bound=rev_bound,
        forward_ratios=fwd_ratios,
        reverse_ratios=rev_ratios,
    )
