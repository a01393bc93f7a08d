"""Fourier analysis on the time grid tau * Z.

Transform convention (tau-scaled, frequencies in the Nyquist cell
(-pi/tau, pi/tau]):

    F[u](mu)      = tau * sum_k u(k tau) exp(-i mu k tau)
    Finv[v](k tau) = (1/2pi) * integral_cell v(mu) exp(i mu k tau) dmu

Cell integrals use the composite trapezoid rule on a uniform grid, which
is spectrally accurate for these periodic integrands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GridFunction", "dft", "idft", "parseval_check"]


@dataclass(frozen=True)
class GridFunction:
    """Finitely supported function on tau * Z: values at k = k_min, k_min+1, ..."""

    tau: float
    k_min: int
    values: np.ndarray

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def k_max(self) -> int:
        return self.k_min + self.values.size - 1

    def ks(self):
        return np.arange(self.k_min, self.k_max + 1)

    def times(self):
        return self.tau * self.ks()

    def norm_sq(self) -> float:
        """Squared grid norm tau * sum |u(k tau)|^2."""
        return float(self.tau * np.sum(np.abs(self.values) ** 2))


def _cell_nodes(u: GridFunction, n_nodes=None):
    span = max(abs(u.k_min), abs(u.k_max), u.values.size)
    m = int(n_nodes) if n_nodes else max(256, 8 * span)
    h = 2 * np.pi / (u.tau * m)
    mus = -np.pi / u.tau + h * np.arange(m)
    return mus, h


def dft(u: GridFunction, freqs):
    """F[u] at the given frequencies (scalar or array, inside the cell)."""
    mu = np.asarray(freqs, dtype=float)
    scalar = mu.ndim == 0
    mu1 = np.atleast_1d(mu)
    if np.any(np.abs(mu1) > np.pi / u.tau * (1 + 1e-12)):
        raise ValueError(
            f"frequency outside the Nyquist cell |mu| <= pi/tau = {np.pi / u.tau:.6g}"
        )
    phases = np.exp(-1j * mu1[:, None] * u.times()[None, :])
    out = u.tau * np.sum(phases * u.values[None, :], axis=1)
    return complex(out[0]) if scalar else out.reshape(mu.shape)


def idft(v, tau: float, k_min: int, k_max: int, n_nodes=None) -> GridFunction:
    """Inverse transform of a callable v on the cell, sampled at k_min..k_max.

    n_nodes defaults to 8x the target support length, at least 256.
    """
    if k_max < k_min:
        raise ValueError("k_max < k_min")
    span = max(abs(k_min), abs(k_max), k_max - k_min + 1)
    m = int(n_nodes) if n_nodes else max(256, 8 * span)
    h = 2 * np.pi / (tau * m)
    mus = -np.pi / tau + h * np.arange(m)
    vv = np.asarray(v(mus), dtype=complex)
    ks = np.arange(k_min, k_max + 1)
    phases = np.exp(1j * mus[None, :] * (tau * ks[:, None]))
    vals = (h / (2 * np.pi)) * np.sum(vv[None, :] * phases, axis=1)
    return GridFunction(tau, int(k_min), vals)


def parseval_check(u: GridFunction, n_nodes=None):
    """Both sides of the grid Parseval identity, (lhs, rhs).

    lhs = (1/2pi) integral_cell |F[u]|^2, rhs = tau sum |u|^2.
    """
    mus, h = _cell_nodes(u, n_nodes)
    transform = dft(u, mus)
    lhs = float(h / (2 * np.pi) * np.sum(np.abs(transform) ** 2))
    return lhs, u.norm_sq()
