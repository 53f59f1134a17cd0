"""Energy-diagonal states, Gibbs states and thermodynamic functionals.

Units: hbar = k_B = 1, natural logarithms throughout. Every state handled by
the package is diagonal in the energy eigenbasis, so a state is simply a
probability vector attached to a spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "BETA_INF",
    "Beta",
    "DiagonalState",
    "DomainError",
    "ErgoflowError",
    "Spectrum",
    "energy",
    "entropy",
    "free_energy",
    "gibbs_state",
    "log_partition",
    "relative_entropy",
]

NORM_ATOL = 1e-12
RENORM_ATOL = 1e-9
# tiny negatives produced by differencing cumulative sums are clipped to zero
NEG_ATOL = 1e-12


class ErgoflowError(Exception):
    """Base class for package errors."""


class DomainError(ErgoflowError, ValueError):
    """A numerical-domain violation (quantity undefined for the given inputs)."""


class _InfiniteBeta:
    """Zero-temperature marker. Use the module-level ``BETA_INF`` instance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BETA_INF"

    def __reduce__(self):
        return (_InfiniteBeta, ())


BETA_INF = _InfiniteBeta()

Beta = Union[float, _InfiniteBeta]


def as_beta(beta) -> Beta:
    """Validate an inverse temperature; ``math.inf`` maps to ``BETA_INF``."""
    if beta is BETA_INF:
        return BETA_INF
    beta = float(beta)
    if math.isinf(beta) and beta > 0:
        return BETA_INF
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError(f"inverse temperature must be > 0, got {beta!r}")
    return beta


def finite_beta(beta) -> float:
    beta = as_beta(beta)
    if beta is BETA_INF:
        raise DomainError("a finite inverse temperature is required")
    return beta


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Diagonal Hamiltonian: ascending energy levels, ground level at zero."""

    energies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise ValueError("a spectrum needs at least two levels")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        if np.any(np.diff(e) < 0):
            raise ValueError("energies must be sorted non-decreasing")
        if e[0] != 0.0:
            raise ValueError("the ground level must sit at energy 0")
        object.__setattr__(self, "energies", _frozen(e))

    @classmethod
    def ladder(cls, omega: float, dim: int) -> "Spectrum":
        """Equally spaced levels ``0, omega, ..., (dim-1) omega``."""
        return cls(omega * np.arange(dim, dtype=float))

    @property
    def dim(self) -> int:
        return self.energies.size

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return np.array_equal(self.energies, other.energies)

    def __hash__(self) -> int:
        return hash(self.energies.tobytes())

    def __repr__(self) -> str:
        return f"Spectrum({self.energies.tolist()})"


@dataclass(frozen=True, eq=False)
class DiagonalState:
    """Population vector over the levels of a spectrum.

    Probabilities that sum to one within ``1e-9`` are renormalized on
    construction; anything further off is rejected.
    """

    probs: np.ndarray
    spectrum: Spectrum

    def __post_init__(self):
        if not isinstance(self.spectrum, Spectrum):
            object.__setattr__(self, "spectrum", Spectrum(self.spectrum))
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size != self.spectrum.dim:
            raise ValueError(
                f"expected {self.spectrum.dim} probabilities, got shape {p.shape}"
            )
        lowest = p.min()
        if not (np.isfinite(lowest) and np.isfinite(p.max())):
            raise ValueError("probabilities must be finite")
        if lowest < -NEG_ATOL:
            raise ValueError(f"negative probability {lowest!r}")
        if lowest < 0:
            p = np.maximum(p, 0.0)
        total = p.sum()
        if abs(total - 1.0) > RENORM_ATOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if abs(total - 1.0) > NORM_ATOL:
            p = p / total
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def dim(self) -> int:
        return self.spectrum.dim

    @property
    def energies(self) -> np.ndarray:
        return self.spectrum.energies

    def allclose(self, other: "DiagonalState", atol: float = 1e-10) -> bool:
        return self.spectrum == other.spectrum and bool(
            np.max(np.abs(self.probs - other.probs)) <= atol
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiagonalState):
            return NotImplemented
        return self.spectrum == other.spectrum and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.spectrum, self.probs.tobytes()))

    def __repr__(self) -> str:
        return f"DiagonalState({self.probs.tolist()}, energies={self.energies.tolist()})"


def _spectrum(spectrum) -> Spectrum:
    return spectrum if isinstance(spectrum, Spectrum) else Spectrum(spectrum)


def log_partition(spectrum, beta) -> float:
    """``log Z`` with ``Z = sum_i exp(-beta E_i)``, evaluated by log-sum-exp."""
    beta = finite_beta(beta)
    return float(logsumexp(-beta * _spectrum(spectrum).energies))


def gibbs_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    """Unnormalized Boltzmann factors relative to the ground level."""
    return np.exp(-beta * (energies - energies[0]))


def gibbs_state(spectrum, beta) -> DiagonalState:
    """Thermal state ``exp(-beta H)/Z``.

    ``BETA_INF`` returns the ground-level point mass, spread uniformly over a
    degenerate ground level.
    """
    spectrum = _spectrum(spectrum)
    beta = as_beta(beta)
    e = spectrum.energies
    if beta is BETA_INF:
        ground = (e == e[0]).astype(float)
        return DiagonalState(ground / ground.sum(), spectrum)
    # ground energy is the minimum, so the largest weight is exactly 1
    w = np.exp(-beta * (e - e[0]))
    return DiagonalState(w / w.sum(), spectrum)


def energy(state: DiagonalState) -> float:
    return float(state.probs @ state.energies)


def entropy(state: DiagonalState) -> float:
    """Shannon entropy of the populations (von Neumann entropy of a diagonal state)."""
    p = state.probs[state.probs > 0]
    return float(-np.sum(p * np.log(p)))


def free_energy(state: DiagonalState, beta) -> float:
    """Non-equilibrium free energy ``E - S/beta``; requires finite beta."""
    beta = finite_beta(beta)
    return energy(state) - entropy(state) / beta


def relative_entropy(p: DiagonalState, q: DiagonalState) -> float:
    """``sum_i p_i (log p_i - log q_i)``; ``math.inf`` when supp(p) is not in supp(q)."""
    if p.spectrum != q.spectrum:
        raise ValueError("states live on different spectra")
    a, b = p.probs, q.probs
    support = a > 0
    if np.any(b[support] == 0):
        return math.inf
    a, b = a[support], b[support]
    return float(max(np.sum(a * (np.log(a) - np.log(b))), 0.0))


def state_from(probs: Sequence[float], energies: Sequence[float]) -> DiagonalState:
    """Shorthand constructor used by the CLI and tests."""
    return DiagonalState(probs, Spectrum(energies))
