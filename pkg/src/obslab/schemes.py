"""Conservative one-step integrators as phase maps.

Every scheme here advances a single oscillator ``y' = i mu y`` by rotating
its coefficient through the angle ``f(mu tau)`` per step.  The function
``f`` (the scheme's *phase map*) fully determines the integrator on
conservative systems, so schemes are represented as plain records carrying
``f`` and its first two derivatives on the open interval ``(-radius,
radius)``.

A usable phase map satisfies four hypotheses on its certification band:

1. consistency, ``f(0) = 0`` and ``f'(0) = 1``;
2. oddness, ``f(-a) = -f(a)``;
3. range, ``|f(a)| < pi`` for ``|a| < radius`` (no aliasing across the
   sampling cell);
4. invertibility, ``inf f' > 0`` on the band.

:func:`certify` measures all four numerically and reports failures instead
of raising, so deliberately broken maps can be inspected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Scheme",
    "midpoint",
    "gauss4",
    "newmark",
    "exact_phase",
    "parse_scheme",
    "phase_inverse",
    "band_dphase_range",
    "uniform_threshold",
    "certify",
    "CheckResult",
    "HypothesisReport",
]


@dataclass(frozen=True)
class Scheme:
    """A conservative integrator reduced to its phase map.

    Parameters
    ----------
    name : str
        Identifier used in reports and error messages.
    radius : float
        Largest admissible ``|mu tau|`` (open bound); ``inf`` allowed.
    phase, dphase, d2phase : callable
        ``f``, ``f'`` and ``f''``, each vectorized over numpy arrays.
    """

    name: str
    radius: float
    phase: Callable
    dphase: Callable
    d2phase: Callable

    def __repr__(self):
        return f"Scheme({self.name!r}, radius={self.radius:g})"


def midpoint() -> Scheme:
    """Implicit midpoint rule: f(a) = 2 atan(a/2), defined for all a."""
    return Scheme(
        name="midpoint",
        radius=np.inf,
        phase=lambda a: 2.0 * np.arctan(np.asarray(a) / 2.0),
        dphase=lambda a: 1.0 / (1.0 + np.asarray(a) ** 2 / 4.0),
        d2phase=lambda a: -(np.asarray(a) / 2.0) / (1.0 + np.asarray(a) ** 2 / 4.0) ** 2,
    )


def _gauss4_phase(a):
    a = np.asarray(a, dtype=float)
    return 2.0 * np.arctan(6.0 * a / (12.0 - a**2))


def _gauss4_dphase(a):
    a2 = np.asarray(a, dtype=float) ** 2
    return (144.0 + 12.0 * a2) / (144.0 + 12.0 * a2 + a2**2)


def _gauss4_d2phase(a):
    a = np.asarray(a, dtype=float)
    a2 = a**2
    return -24.0 * a**3 * (24.0 + a2) / (144.0 + 12.0 * a2 + a2**2) ** 2


def gauss4() -> Scheme:
    """Two-stage Gauss collocation (order 4): f(a) = 2 atan(6a / (12 - a^2)).

    The rational argument has a pole at ``a = 2 sqrt(3)``, which is exactly
    where ``f`` reaches ``pi``; beyond it the formula aliases, so the
    radius is ``2 sqrt(3)``.
    """
    return Scheme(
        name="gauss4",
        radius=2.0 * math.sqrt(3.0),
        phase=_gauss4_phase,
        dphase=_gauss4_dphase,
        d2phase=_gauss4_d2phase,
    )


def newmark(beta: float) -> Scheme:
    """Conservative Newmark family, gamma = 1/2, 0 <= beta <= 1/4.

    ``f(a) = 2 atan((a/2) / sqrt(1 + (beta - 1/4) a^2))``.  At
    ``beta = 1/4`` this is the midpoint rule and the radius is infinite.
    For ``beta < 1/4`` the square root vanishes at ``2 / sqrt(1 - 4 beta)``
    and the step operator loses its meaning there, so that value is the
    radius (f itself tends to pi at it, keeping the range hypothesis).
    """
    if not 0.0 <= beta <= 0.25:
        raise ValueError(f"newmark needs 0 <= beta <= 1/4, got {beta}")
    c = beta - 0.25
    if beta == 0.25:
        radius = np.inf
    else:
        radius = 2.0 / math.sqrt(1.0 - 4.0 * beta)

    def phase(a):
        a = np.asarray(a, dtype=float)
        return 2.0 * np.arctan((a / 2.0) / np.sqrt(1.0 + c * a**2))

    def dphase(a):
        a2 = np.asarray(a, dtype=float) ** 2
        return 1.0 / ((1.0 + beta * a2) * np.sqrt(1.0 + c * a2))

    def d2phase(a):
        a = np.asarray(a, dtype=float)
        a2 = a**2
        bracket = 2.0 * beta * (1.0 + c * a2) + c * (1.0 + beta * a2)
        return -a * bracket / ((1.0 + beta * a2) ** 2 * (1.0 + c * a2) ** 1.5)

    return Scheme(f"newmark({beta:g})", radius, phase, dphase, d2phase)


def exact_phase(radius: float = np.pi) -> Scheme:
    """Identity phase map f(a) = a.

    With the default radius pi this is the exact propagator sampled at the
    grid times, and all four hypotheses hold.  With ``radius = inf`` it is
    the standard counterexample: consistent, odd and invertible, but the
    range hypothesis fails the moment ``|a|`` reaches pi.
    """
    one = lambda a: np.ones_like(np.asarray(a, dtype=float))
    return Scheme(
        name="exact",
        radius=radius,
        phase=lambda a: np.asarray(a, dtype=float) + 0.0,
        dphase=one,
        d2phase=lambda a: np.zeros_like(np.asarray(a, dtype=float)),
    )


def parse_scheme(text: str) -> Scheme:
    """Build a scheme from its command-line name.

    Accepted forms: ``midpoint``, ``gauss4``, ``newmark:<beta>``.
    """
    text = text.strip()
    if text == "midpoint":
        return midpoint()
    if text == "gauss4":
        return gauss4()
    if text.startswith("newmark:"):
        try:
            beta = float(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"cannot parse newmark parameter in {text!r}") from None
        return newmark(beta)
    raise ValueError(
        f"unknown scheme {text!r}; expected midpoint, gauss4 or newmark:<beta>"
    )


def phase_inverse(scheme: Scheme, y, tol: float = 1e-13, max_iter: int = 120):
    """Solve f(alpha) = y for each entry of y.

    Newton iteration started at ``alpha = y`` with a bisection fallback on
    a bracket grown from the origin; monotonicity of ``f`` on its domain
    (hypothesis 4 certified over the working band) makes the bracket valid
    and the combination convergent.  Residuals are driven below ``tol``.

    Accepts scalars or arrays; the inverse is odd, so only ``|y|`` is
    solved and signs are restored afterwards.
    """
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    ay = np.abs(np.atleast_1d(y_arr).astype(float))

    # Grow a bracket [0, hi] with f(hi) >= max |y|.
    hi_cap = scheme.radius if np.isfinite(scheme.radius) else np.inf
    need = float(ay.max(initial=0.0))
    if need >= math.pi:
        raise ValueError(
            f"target {need:.6g} is outside the open range (-pi, pi) that a "
            f"conservative phase map can reach"
        )
    hi = min(max(need, 1.0), hi_cap * (1 - 1e-12) if np.isfinite(hi_cap) else max(need, 1.0))
    for _ in range(200):
        if float(scheme.phase(hi)) >= need:
            break
        if np.isfinite(hi_cap):
            hi = 0.5 * (hi + hi_cap)
        else:
            hi *= 2.0
    else:
        raise ValueError(
            f"phase map '{scheme.name}' never reaches {need:.6g} inside its domain"
        )

    lo_b = np.zeros_like(ay)
    hi_b = np.full_like(ay, hi)
    x = np.clip(ay, lo_b, hi_b)
    for _ in range(max_iter):
        r = np.asarray(scheme.phase(x), dtype=float) - ay
        if np.all(np.abs(r) <= tol):
            break
        hi_b = np.where(r > 0, np.minimum(hi_b, x), hi_b)
        lo_b = np.where(r < 0, np.maximum(lo_b, x), lo_b)
        d = np.asarray(scheme.dphase(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, r / np.where(d > 0, d, 1.0), np.inf)
        x_new = x - step
        fall_back = ~np.isfinite(x_new) | (x_new <= lo_b) | (x_new >= hi_b)
        x = np.where(fall_back, 0.5 * (lo_b + hi_b), x_new)
    else:
        raise RuntimeError(
            f"phase inversion for '{scheme.name}' did not reach tol={tol:g}"
        )

    out = np.copysign(x, np.atleast_1d(y_arr))
    return float(out[0]) if scalar else out.reshape(y_arr.shape)


def _golden_min(fun, lo: float, hi: float, xtol: float = 1e-10) -> tuple:
    """Golden-section minimum of fun on [lo, hi]; returns (x, fun(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def band_dphase_range(scheme: Scheme, delta: float, n_samples: int = 4096):
    """Extremes (inf, sup) of f' over the band |a| <= delta.

    Dense sampling on [0, delta] (f' is even for odd f) followed by a
    golden-section polish of the best bracket on each side, to an abscissa
    tolerance of 1e-10.  No shape assumption is made: the built-in maps
    are monotone in |a| over their usual bands but the Newmark family
    loses that for small beta on wide bands, and sampling covers both.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if delta >= scheme.radius:
        raise ValueError(
            f"band [-{delta:g}, {delta:g}] leaves the domain of '{scheme.name}' "
            f"(radius {scheme.radius:g})"
        )
    xs = np.linspace(0.0, delta, n_samples)
    vals = np.asarray(scheme.dphase(xs), dtype=float)
    h = delta / (n_samples - 1)

    def polish(sign):
        f = (lambda x: float(scheme.dphase(x))) if sign > 0 else (
            lambda x: -float(scheme.dphase(x))
        )
        i = int(np.argmin(sign * vals))
        lo = max(0.0, xs[i] - h)
        hi = min(delta, xs[i] + h)
        _, fx = _golden_min(f, lo, hi)
        return min(sign * vals[i], fx) * sign

    return polish(+1), polish(-1)


def uniform_threshold(scheme: Scheme, delta: float, t0: float) -> float:
    """Observation time guaranteeing uniform discrete observability.

    A continuous system observable in time ``t0`` stays uniformly
    observable under the scheme on the band ``|mu tau| <= delta`` once the
    horizon exceeds ``t0 / inf f'``: the slowest group velocity the scheme
    assigns to band frequencies stretches the needed window by exactly
    that factor.
    """
    inf_dp, _ = band_dphase_range(scheme, delta)
    if inf_dp <= 0:
        raise ValueError(
            f"'{scheme.name}' is not invertible on [-{delta:g}, {delta:g}]"
        )
    return t0 / inf_dp


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    witness: float

    def __str__(self):
        tag = "pass" if self.passed else "FAIL"
        return f"{self.name}: {tag} (worst {self.worst:.3e} at a = {self.witness:.12g})"


@dataclass(frozen=True)
class HypothesisReport:
    scheme: str
    delta: float
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        head = f"hypothesis report for {self.scheme} on |a| <= {self.delta:g}"
        return "\n".join([head] + ["  " + str(c) for c in self.checks])


def _first_violation(fun, lo: float, hi: float, iters: int = 200) -> float:
    """Bisect the boundary where fun switches from False to True on [lo, hi]."""
    a, b = float(lo), float(hi)
    for _ in range(iters):
        m = 0.5 * (a + b)
        if fun(m):
            b = m
        else:
            a = m
    return b


def certify(
    scheme: Scheme,
    delta: float,
    n_grid: int = 2001,
    n_random: int = 512,
    seed: int = 0,
    tol_consistency: float = 1e-10,
    tol_odd: float = 1e-12,
) -> HypothesisReport:
    """Measure the four phase-map hypotheses on the band |a| <= delta.

    Each check samples a uniform grid plus seeded random points and records
    its worst margin and the argument where it occurred; failures are
    reported, not raised.  The range check scans the whole domain up to the
    radius (capped at ``max(delta, 4)`` plus a logarithmic sweep when the
    radius is infinite) and, if it fails, bisects for the first violating
    ``|a|``, so a map like the identity is pinned to its aliasing onset at
    ``|a| = pi``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if delta >= scheme.radius:
        raise ValueError(
            f"certification band delta={delta:g} must lie inside the domain "
            f"radius {scheme.radius:g} of '{scheme.name}'"
        )
    rng = np.random.default_rng(seed)

    # 1. consistency at the origin: f(0) = 0, f'(0) = 1.
    e0 = abs(float(scheme.phase(0.0)))
    e1 = abs(float(scheme.dphase(0.0)) - 1.0)
    consistency = CheckResult(
        "consistency", max(e0, e1) <= tol_consistency, max(e0, e1), 0.0
    )

    # 2. oddness over the band.
    a_odd = np.concatenate(
        [np.linspace(0.0, delta, n_grid), rng.uniform(0.0, delta, n_random)]
    )
    odd_err = np.abs(
        np.asarray(scheme.phase(a_odd)) + np.asarray(scheme.phase(-a_odd))
    )
    i = int(np.argmax(odd_err))
    oddness = CheckResult("oddness", float(odd_err[i]) <= tol_odd, float(odd_err[i]), float(a_odd[i]))

    # 3. range |f| < pi over the domain (not just the band).
    if np.isfinite(scheme.radius):
        span = scheme.radius * (1.0 - 1e-9)
        a_rng = np.concatenate(
            [np.linspace(0.0, span, n_grid), rng.uniform(0.0, span, n_random)]
        )
    else:
        span = max(delta, 4.0)
        a_rng = np.concatenate(
            [
                np.linspace(0.0, span, n_grid),
                rng.uniform(0.0, span, n_random),
                np.geomspace(max(span, 1.0), 1e3, 64),
            ]
        )
    fvals = np.abs(np.asarray(scheme.phase(a_rng), dtype=float))
    viol = fvals >= np.pi
    if np.any(viol):
        first_bad = float(np.min(a_rng[viol]))
        ok_below = a_rng[(~viol) & (a_rng < first_bad)]
        lo = float(ok_below.max(initial=0.0))
        witness = _first_violation(
            lambda a: abs(float(scheme.phase(a))) >= np.pi, lo, first_bad
        )
        range_check = CheckResult("range", False, float(fvals.max()), witness)
    else:
        i = int(np.argmax(fvals))
        range_check = CheckResult("range", True, float(fvals[i]), float(a_rng[i]))

    # 4. invertibility: inf f' > 0 on the band.
    inf_dp, _ = band_dphase_range(scheme, delta)
    a_inv = rng.uniform(-delta, delta, n_random)
    inf_sampled = float(np.min(np.asarray(scheme.dphase(a_inv), dtype=float)))
    worst = min(inf_dp, inf_sampled)
    invertibility = CheckResult("invertibility", worst > 0.0, worst, delta)

    return HypothesisReport(
        scheme=scheme.name,
        delta=delta,
        checks=(consistency, oddness, range_check, invertibility),
    )
