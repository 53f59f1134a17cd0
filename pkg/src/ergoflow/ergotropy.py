"""Passive states, ergotropy and free-energy bounds on ergotropy extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BETA_INF,
    DiagonalState,
    DomainError,
    entropy,
    energy,
    finite_beta,
    gibbs_state,
    relative_entropy,
)

__all__ = [
    "ErgotropyDecomposition",
    "beta_star",
    "bound_single_system",
    "bound_with_bath",
    "decompose",
    "ergotropy",
    "extraction_bound",
    "passive_state",
]

BISECT_MAX_ITER = 200
BISECT_BRACKET = (1e-9, 1e4)
ENTROPY_ATOL = 1e-10


def passive_order(probs: np.ndarray) -> np.ndarray:
    """Level indices sorted by non-increasing population (stable on ties)."""
    return np.argsort(-np.asarray(probs), kind="stable")


def passive_state(state: DiagonalState) -> DiagonalState:
    """Minimal-energy rearrangement of the populations.

    Largest population goes to the lowest level; ties keep their original
    level order.
    """
    return DiagonalState(state.probs[passive_order(state.probs)], state.spectrum)


def ergotropy(state: DiagonalState) -> float:
    """Energy extractable by a unitary, ``E(rho) - E(rho_P)`` (never negative)."""
    # differencing before the dot product keeps tiny ergotropies accurate
    passive = np.sort(state.probs)[::-1]
    return max(float((state.probs - passive) @ state.energies), 0.0)


def ergotropy_rows(probs: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Vectorized ergotropy for a stack of population vectors (one per row)."""
    probs = np.atleast_2d(probs)
    passive = -np.sort(-probs, axis=1)
    return np.maximum((probs - passive) @ energies, 0.0)


def _gibbs_entropy(spectrum, beta: float) -> float:
    return entropy(gibbs_state(spectrum, beta))


def beta_star(state: DiagonalState):
    """Inverse temperature of the Gibbs state with the same entropy as ``state``.

    Returns ``BETA_INF`` for a point mass (more generally, whenever the
    entropy does not exceed that of the zero-temperature state) and ``0.0``
    for the maximally mixed state. Otherwise solved by bisection in
    ``log beta``; the Gibbs entropy is strictly decreasing in beta.
    """
    p = state.probs
    if np.max(p) >= 1.0:
        return BETA_INF
    d = state.dim
    if np.max(np.abs(p - 1.0 / d)) <= 1e-12:
        return 0.0
    target = entropy(state)
    spectrum = state.spectrum
    e = state.energies
    # Gibbs entropies span (log g, log d) with g the ground degeneracy
    ground_entropy = math.log(int(np.count_nonzero(e == e[0])))
    if target <= ground_entropy + ENTROPY_ATOL:
        return BETA_INF
    lo, hi = BISECT_BRACKET
    while _gibbs_entropy(spectrum, lo) < target:
        lo /= 10.0
        if lo < 1e-300:
            # indistinguishable from the maximally mixed state in double precision
            return 0.0
    while _gibbs_entropy(spectrum, hi) > target:
        hi *= 10.0
        if hi > 1e300:
            raise DomainError("could not bracket beta* from above")
    log_lo, log_hi = math.log(lo), math.log(hi)
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (log_lo + log_hi)
        if mid in (log_lo, log_hi):
            break
        if _gibbs_entropy(spectrum, math.exp(mid)) > target:
            log_lo = mid
        else:
            log_hi = mid
    beta = math.exp(0.5 * (log_lo + log_hi))
    if abs(_gibbs_entropy(spectrum, beta) - target) > ENTROPY_ATOL:
        raise DomainError("beta* bisection did not converge")
    return beta


def bound_single_system(state: DiagonalState) -> float:
    """Isolated-system bound ``F(rho) - F(gamma_{beta*}) = S(rho||gamma_{beta*})/beta*``.

    This is also the asymptotic ergotropy per copy of ``rho``. For a pure
    state (``beta* = inf``) it reduces to the energy above the ground level;
    for the maximally mixed state it is zero.
    """
    b = beta_star(state)
    if b is BETA_INF:
        return energy(state) - float(state.energies[0])
    if b == 0.0:
        return 0.0
    return relative_entropy(state, gibbs_state(state.spectrum, b)) / b


def bound_with_bath(state: DiagonalState, beta) -> float:
    """``S(rho||gamma_beta)/beta``: cap on the ergotropy after any Gibbs-preserving map."""
    beta = finite_beta(beta)
    return relative_entropy(state, gibbs_state(state.spectrum, beta)) / beta


def extraction_bound(state: DiagonalState, beta) -> float:
    """``S(rho_P||gamma_beta)/beta``: cap on ``R(Phi(rho)) - R(rho)`` for Gibbs-preserving ``Phi``."""
    beta = finite_beta(beta)
    return relative_entropy(passive_state(state), gibbs_state(state.spectrum, beta)) / beta


@dataclass(frozen=True)
class ErgotropyDecomposition:
    """Three-term split of the final-state ergotropy.

    ``free_energy_resource - passivity_gap - entropy_production`` equals the
    ergotropy of the final state. The last two are stored as magnitudes:
    ``passivity_gap = S(final_P||gamma)/beta`` and
    ``entropy_production = (S(initial||gamma) - S(final||gamma))/beta``, the
    latter non-negative whenever the map is Gibbs-preserving.
    """

    free_energy_resource: float
    passivity_gap: float
    entropy_production: float

    @property
    def ergotropy(self) -> float:
        return self.free_energy_resource - self.passivity_gap - self.entropy_production


def decompose(initial: DiagonalState, final: DiagonalState, beta) -> ErgotropyDecomposition:
    beta = finite_beta(beta)
    if initial.spectrum != final.spectrum:
        raise ValueError("initial and final states live on different spectra")
    gamma = gibbs_state(initial.spectrum, beta)
    resource = relative_entropy(initial, gamma) / beta
    gap = relative_entropy(passive_state(final), gamma) / beta
    production = resource - relative_entropy(final, gamma) / beta
    return ErgotropyDecomposition(resource, gap, production)
