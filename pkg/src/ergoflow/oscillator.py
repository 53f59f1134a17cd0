"""Maximal-energy thermal processes on a truncated harmonic oscillator.

A ground-state oscillator in contact with a bath at ``beta`` can be lifted to
a Gibbs state shifted up by ``L - 1`` levels, where
``L = 1 + log(Z) / (beta omega)``. When ``L`` is an integer the shift is exact
and the extracted ergotropy reaches ``log(Z) / beta``. Otherwise a detuning
``delta`` (distance of ``L`` to the nearest integer) keeps the finite-d
optimum strictly below that value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import DiagonalState, DomainError, Spectrum, finite_beta, log_partition
from .ergotropy import ergotropy
from .thermomaj import ThermalProcessMatrix, max_energy_state

__all__ = [
    "OscillatorConfig",
    "SweepRow",
    "frequency_for_shift",
    "log_partition_infinite",
    "max_energy_final",
    "saturating_map_truncated",
    "saturation_sweep",
    "shift_parameter",
]

DELTA_ATOL = 1e-9
TRUNCATION_TAIL = 1e-12


@dataclass(frozen=True)
class OscillatorConfig:
    omega: float
    beta: float
    dim: int

    def __post_init__(self):
        omega = float(self.omega)
        if not (omega > 0 and math.isfinite(omega)):
            raise ValueError(f"omega must be positive and finite, got {self.omega!r}")
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "beta", finite_beta(self.beta))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def spectrum(self) -> Spectrum:
        return Spectrum.ladder(self.omega, self.dim)

    def ground_state(self) -> DiagonalState:
        p = np.zeros(self.dim)
        p[0] = 1.0
        return DiagonalState(p, self.spectrum)

    @property
    def tail(self) -> float:
        """Gibbs weight beyond the truncation, ``exp(-beta omega dim)``."""
        return math.exp(-self.beta * self.omega * self.dim)


def log_partition_infinite(omega: float, beta: float) -> float:
    """``log Z`` of the untruncated oscillator, ``-log(1 - exp(-beta omega))``."""
    x = finite_beta(beta) * float(omega)
    return -math.log(-math.expm1(-x))


def _shift_term(x: float) -> float:
    return -math.log(-math.expm1(-x)) / x


def shift_parameter(omega: float, beta: float):
    """Return ``(L, delta)`` for the untruncated oscillator.

    ``L = 1 + log(Z)/(beta omega)`` is real valued; ``delta`` is the distance
    of ``log(Z)/(beta omega)`` to the nearest integer, in ``[0, 0.5]``.
    """
    t = log_partition_infinite(omega, beta) / (finite_beta(beta) * float(omega))
    frac = t - math.floor(t)
    return 1.0 + t, min(frac, 1.0 - frac)


def frequency_for_shift(beta: float, t: float) -> float:
    """Level spacing ``omega`` at which ``log(Z)/(beta omega)`` equals ``t``.

    The left side decreases monotonically from infinity to zero in
    ``beta omega``, so any ``t > 0`` has exactly one root. Integer ``t`` gives
    a detuning-free oscillator with ``L = t + 1``.
    """
    beta = finite_beta(beta)
    if not t > 0:
        raise ValueError(f"shift must be positive, got {t!r}")
    lo, hi = 1e-12, 1.0
    while _shift_term(hi) > t:
        hi *= 2.0
    while _shift_term(lo) < t:
        lo /= 2.0
    x = brentq(lambda v: _shift_term(v) - t, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return x / beta


def saturating_map_truncated(config: OscillatorConfig) -> ThermalProcessMatrix:
    """Gibbs-preserving map sending the ground level to the ``L - 1``-shifted Gibbs state.

    Column 0 places weight ``exp(-beta omega m)`` on each level ``m >= L - 1``
    with the truncated remainder added to the top level. Levels ``1 .. L-2``
    are left alone and levels ``>= L - 1`` drop to the ground. Only exists
    for zero detuning and ``L <= dim``.
    """
    L_real, delta = shift_parameter(config.omega, config.beta)
    if delta > DELTA_ATOL:
        raise DomainError(
            f"detuning {delta:.3g} is non-zero; use max_energy_final for this frequency"
        )
    L = int(round(L_real))
    d = config.dim
    if L > d:
        raise DomainError(f"shift L={L} does not fit in dim={d}")
    if L <= 1:
        # shift vanishes in the zero-temperature limit: the identity is optimal
        return ThermalProcessMatrix(np.eye(d), config.beta, config.spectrum, gibbs_atol=1e-9)
    x = config.beta * config.omega
    a = np.zeros((d, d))
    m = np.arange(L - 1, d)
    a[m, 0] = np.exp(-x * m)
    a[d - 1, 0] += 1.0 - a[:, 0].sum()
    for j in range(1, L - 1):
        a[j, j] = 1.0
    a[0, L - 1:] = 1.0
    return ThermalProcessMatrix(a, config.beta, config.spectrum, gibbs_atol=1e-9)


def max_energy_final(config: OscillatorConfig):
    """Final state, its ergotropy and the bound for the maximal-energy process on the ground state.

    Returns ``(state, ergotropy, bound)`` with ``bound = log(Z_d) / beta``
    for the ``dim``-level truncation.
    """
    final = max_energy_state(config.ground_state(), config.beta)
    bound = log_partition(config.spectrum, config.beta) / config.beta
    return final, ergotropy(final), bound


class SweepRow(NamedTuple):
    omega: float
    dim: int
    delta: float
    ergotropy: float
    bound: float
    bound_infinite: float
    truncation_ok: bool


def _sweep_row(omega: float, beta: float, dim: int) -> SweepRow:
    config = OscillatorConfig(omega, beta, dim)
    _, r, bound = max_energy_final(config)
    _, delta = shift_parameter(omega, beta)
    return SweepRow(
        omega=config.omega,
        dim=config.dim,
        delta=delta,
        ergotropy=r,
        bound=bound,
        bound_infinite=log_partition_infinite(omega, beta) / config.beta,
        truncation_ok=config.tail < TRUNCATION_TAIL,
    )


def saturation_sweep(
    omega_list: Sequence[float],
    beta: float,
    dim_list: Sequence[int],
    workers: int = 1,
) -> list:
    """One :class:`SweepRow` per ``(omega, dim)`` pair, sorted by ``(omega, dim)``."""
    beta = finite_beta(beta)
    jobs = sorted({(float(w), int(d)) for w in omega_list for d in dim_list})
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda j: _sweep_row(j[0], beta, j[1]), jobs))
    return [_sweep_row(w, beta, d) for w, d in jobs]
