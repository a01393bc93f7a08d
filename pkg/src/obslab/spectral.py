"""Mode-space representation of conservative evolutions.

A conservative system is carried here by its frequency content alone.  A
:class:`Spectrum` lists the real eigenfrequencies ``mu_j`` of the generator
(truncated to finitely many modes, strictly increasing), and a
:class:`State` holds one complex coefficient per mode with respect to the
orthonormal eigenbasis.  Exact evolution rotates coefficient ``j`` by
``exp(i mu_j t)``; a conservative one-step integrator rotates it by
``exp(i f(mu_j tau) k)`` after ``k`` steps of size ``tau``, where ``f`` is
the integrator's phase map (see :mod:`obslab.schemes`).

Squared norms of states are plain coefficient sums, so norm preservation
under both evolutions is exact by construction and everything downstream
(kernels, Gramians) can be checked against these two rotations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FrequencyOutOfSchemeDomain",
    "Spectrum",
    "State",
    "FilterBand",
    "make_transport_spectrum",
    "make_wave_spectrum",
    "bandpass",
    "evolve_continuous",
    "evolve_discrete",
    "sobolev_norm",
]


class FrequencyOutOfSchemeDomain(ValueError):
    """A nonzero mode has |mu| * tau at or beyond the scheme's phase-map radius."""


@dataclass(frozen=True)
class Spectrum:
    """Strictly increasing eigenfrequencies with per-mode labels.

    Parameters
    ----------
    frequencies : array_like
        Real frequencies ``mu_j``, strictly increasing.
    labels : tuple
        One hashable label per mode (mode index, branch sign, ...).
    """

    frequencies: np.ndarray
    labels: tuple

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        if freqs.ndim != 1 or freqs.size == 0:
            raise ValueError("frequencies must be a nonempty 1-D array")
        if not np.all(np.isfinite(freqs)):
            raise ValueError("frequencies must be finite")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        labels = tuple(self.labels)
        if len(labels) != freqs.size:
            raise ValueError(
                f"got {len(labels)} labels for {freqs.size} frequencies"
            )
        freqs.flags.writeable = False
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.frequencies.size

    def index_of(self, label):
        """Position of a label in the mode ordering."""
        return self.labels.index(label)


@dataclass(frozen=True)
class State:
    """Complex coefficients of a state in the eigenbasis of its spectrum."""

    spectrum: Spectrum
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.shape != (len(self.spectrum),):
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match "
                f"{len(self.spectrum)} modes"
            )
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    def norm(self):
        """Energy norm sqrt(sum |a_j|^2); conserved by both evolutions."""
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))


@dataclass(frozen=True)
class FilterBand:
    """Frequency band in |mu|, lower edge exclusive, upper edge inclusive.

    ``lo == 0`` means no lower cut at all: the band is the whole filtered
    class at radius ``hi``, so the zero frequency is kept.  For ``lo > 0``
    the mode with |mu| exactly ``lo`` is dropped, which makes bands
    ``(0, a]`` and ``(a, b]`` an exact partition of ``(0, b]``.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise ValueError(f"band needs 0 <= lo < hi, got ({self.lo}, {self.hi})")

    def keeps(self, frequencies):
        absmu = np.abs(np.asarray(frequencies, dtype=float))
        mask = absmu <= self.hi
        if self.lo > 0:
            mask &= absmu > self.lo
        return mask


def make_transport_spectrum(n: int) -> Spectrum:
    """Periodic transport generator on the unit circle, modes exp(2 pi i j x).

    Frequencies ``2 pi j`` for ``j = -n .. n``; labels are the integers ``j``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    js = np.arange(-n, n + 1)
    return Spectrum(2 * np.pi * js, tuple(int(j) for j in js))


def make_wave_spectrum(n: int) -> Spectrum:
    """String of unit length with fixed ends, both spectral branches.

    Frequencies ``sign * j * pi`` for ``j = 1 .. n``; labels ``(j, sign)``
    with ``sign`` in ``{-1, +1}``, so the two branches of each physical
    mode stay distinguishable after sorting.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    js = np.arange(1, n + 1)
    freqs = np.concatenate([-js[::-1] * np.pi, js * np.pi])
    labels = [(int(j), -1) for j in js[::-1]] + [(int(j), +1) for j in js]
    return Spectrum(freqs, tuple(labels))


def bandpass(state: State, band: FilterBand) -> State:
    """Zero every coefficient whose |mu_j| falls outside the band."""
    mask = band.keeps(state.spectrum.frequencies)
    return State(state.spectrum, np.where(mask, state.coefficients, 0.0))


def evolve_continuous(state: State, t: float) -> State:
    """Exact flow: coefficient ``j`` becomes ``a_j exp(i mu_j t)``."""
    phases = state.spectrum.frequencies * float(t)
    return State(state.spectrum, state.coefficients * np.exp(1j * phases))


def evolve_discrete(state: State, scheme, tau: float, k: int) -> State:
    """Conservative one-step integrator, ``k`` steps of size ``tau``.

    Coefficient ``j`` becomes ``a_j exp(i f(mu_j tau) k)`` where ``f`` is
    the scheme's phase map.  The per-mode angle is computed as one real
    product ``f(mu_j tau) * k``, never by accumulating ``k`` single-step
    rotations, so long trajectories stay exactly on the unit circle.

    Raises
    ------
    FrequencyOutOfSchemeDomain
        If some mode with a nonzero coefficient has ``|mu_j| tau`` at or
        beyond the scheme's radius, where the phase map is undefined.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    alpha = state.spectrum.frequencies * tau
    active = state.coefficients != 0
    bad = active & (np.abs(alpha) >= scheme.radius)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise FrequencyOutOfSchemeDomain(
            f"mode {state.spectrum.labels[j]} has |mu*tau| = "
            f"{abs(alpha[j]):.6g} >= radius {scheme.radius:.6g} of scheme "
            f"'{scheme.name}'"
        )
    # Zero out inadmissible (necessarily inactive) entries before calling the
    # phase map so schemes with poles outside their radius never see them.
    safe_alpha = np.where(np.abs(alpha) < scheme.radius, alpha, 0.0)
    angles = np.where(active, scheme.phase(safe_alpha), 0.0) * int(k)
    return State(state.spectrum, state.coefficients * np.exp(1j * angles))


def sobolev_norm(state: State, r: float) -> float:
    """Scale-r norm sqrt(sum |a_j|^2 (1 + mu_j^2)^r) on the mode expansion."""
    w = (1.0 + state.spectrum.frequencies**2) ** float(r)
    return float(np.sqrt(np.sum(np.abs(state.coefficients) ** 2 * w)))
