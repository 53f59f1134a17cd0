"""Thermomajorization: beta-orders, curves, and the thermal polytope.

Conventions
-----------
Curves use the unnormalized Gibbs weights ``s_i = exp(-beta E_i)`` (ground
weight 1) on the x axis and cumulative populations on the y axis. A
beta-order is stored 0-indexed (``perm[k]`` is the level occupying the k-th
segment); its printed label is 1-indexed, e.g. ``(213)``.

Extremal points of the thermal polytope are the states whose curve is
tightly thermomajorized by the initial curve. They are built for every
target order by placing the elbows on the initial curve, then deduplicated.
"""

from __future__ import annotations

import bisect
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .core import (
    DiagonalState,
    DomainError,
    ErgoflowError,
    Spectrum,
    finite_beta,
    gibbs_state,
    gibbs_weights,
)

__all__ = [
    "BetaOrder",
    "DimensionCapError",
    "ThermalProcessMatrix",
    "ThermoCurve",
    "apply_process",
    "beta_order",
    "curve",
    "default_max_dim",
    "enumerate_extremal_states",
    "extremal_points",
    "max_energy_state",
    "qutrit_beta_zero",
    "qutrit_process_matrix",
    "thermomajorizes",
    "tight_extremal_state",
]

DEFAULT_MAX_DIM = 9
MAX_DIM_ENV = "ERGOFLOW_MAX_DIM"
DEDUPE_ATOL = 1e-10
CURVE_ATOL = 1e-10
# log-domain tolerance for treating two population/weight ratios as equal
TIE_ATOL = 1e-10


class DimensionCapError(ErgoflowError, ValueError):
    """Extremal enumeration refused because ``d!`` orders exceed the configured cap."""


def default_max_dim() -> int:
    raw = os.environ.get(MAX_DIM_ENV)
    if raw is None or raw == "":
        return DEFAULT_MAX_DIM
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{MAX_DIM_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class BetaOrder:
    perm: tuple

    def __post_init__(self):
        perm = tuple(int(i) for i in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"{perm!r} is not a permutation of 0..{len(perm) - 1}")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def from_label(cls, label: str) -> "BetaOrder":
        """Parse ``"(213)"`` or ``"(2,1,3)"`` (1-indexed)."""
        body = label.strip().strip("()")
        parts = body.split(",") if "," in body else list(body)
        return cls(tuple(int(c) - 1 for c in parts))

    @classmethod
    def descending(cls, dim: int) -> "BetaOrder":
        return cls(tuple(range(dim - 1, -1, -1)))

    @property
    def label(self) -> str:
        sep = "," if len(self.perm) > 9 else ""
        return "(" + sep.join(str(i + 1) for i in self.perm) + ")"

    def __len__(self) -> int:
        return len(self.perm)

    def __str__(self) -> str:
        return self.label


def _ordering_keys(probs: np.ndarray, energies: np.ndarray, beta: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(probs) + beta * (energies - energies[0])


def _order_from_keys(keys: np.ndarray) -> tuple:
    # descending keys; runs of near-equal keys fall back to ascending level index
    idx = np.argsort(-keys, kind="stable")
    out = []
    group = [int(idx[0])]
    head = keys[idx[0]]
    for i in idx[1:]:
        k = keys[i]
        same = (k == head) or (math.isfinite(head) and abs(k - head) <= TIE_ATOL)
        if same:
            group.append(int(i))
        else:
            out.extend(sorted(group))
            group, head = [int(i)], k
    out.extend(sorted(group))
    return tuple(out)


def beta_order(state: DiagonalState, beta) -> BetaOrder:
    """Levels sorted by ``p_i exp(beta E_i)``, non-increasing; ties ascending by index."""
    beta = finite_beta(beta)
    return BetaOrder(_order_from_keys(_ordering_keys(state.probs, state.energies, beta)))


@dataclass(frozen=True, eq=False)
class ThermoCurve:
    """Concave piecewise-linear curve through ``d+1`` elbows starting at the origin."""

    x: np.ndarray
    y: np.ndarray
    order: BetaOrder

    @property
    def elbows(self) -> list:
        return list(zip(self.x.tolist(), self.y.tolist()))

    @property
    def slopes(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.diff(self.y) / np.diff(self.x)

    def __call__(self, x):
        """Evaluate by interpolation; ``x`` is clamped to the curve's domain."""
        return np.interp(x, self.x, self.y)


def _curve_arrays(probs: np.ndarray, weights: np.ndarray, perm: Sequence[int]):
    perm = np.asarray(perm)
    x = np.concatenate(([0.0], np.cumsum(weights[perm])))
    y = np.concatenate(([0.0], np.cumsum(probs[perm])))
    y[-1] = 1.0
    return x, y


def curve(state: DiagonalState, beta) -> ThermoCurve:
    beta = finite_beta(beta)
    order = beta_order(state, beta)
    w = gibbs_weights(state.energies, beta)
    x, y = _curve_arrays(state.probs, w, order.perm)
    return ThermoCurve(x, y, order)


def thermomajorizes(p: DiagonalState, q: DiagonalState, beta, atol: float = CURVE_ATOL) -> bool:
    """True iff every elbow of the curve of ``q`` lies on or below the curve of ``p``."""
    if p.spectrum != q.spectrum:
        raise ValueError("states live on different spectra")
    cp, cq = curve(p, beta), curve(q, beta)
    return bool(np.all(cq.y <= cp(cq.x) + atol))


def _tight_rows(probs: np.ndarray, weights: np.ndarray, base: tuple, perms: np.ndarray) -> np.ndarray:
    """Tight construction for a stack of target orders (one per row of ``perms``)."""
    xp, yp = _curve_arrays(probs, weights, base)
    x = np.cumsum(weights[perms], axis=1)
    y = np.interp(x, xp, yp)
    y[:, -1] = 1.0
    seg = y.copy()
    seg[:, 1:] -= y[:, :-1]
    np.maximum(seg, 0.0, out=seg)
    out = np.empty_like(seg)
    out[np.arange(seg.shape[0])[:, None], perms] = seg
    return out


def tight_extremal_state(initial: DiagonalState, beta, target: BetaOrder) -> DiagonalState:
    """State whose elbows, laid out in ``target`` order, all sit on the initial curve.

    The x coordinates are cumulative Gibbs weights in target order, each y is
    the initial curve evaluated there, and populations are the y increments.
    Because the sampled points lie on a concave curve, ``target`` is always a
    valid beta-order of the result (up to ties).
    """
    beta = finite_beta(beta)
    if not isinstance(target, BetaOrder):
        target = BetaOrder(target)
    if len(target) != initial.dim:
        raise ValueError("target order has the wrong length")
    w = gibbs_weights(initial.energies, beta)
    base = beta_order(initial, beta).perm
    row = _tight_rows(initial.probs, w, base, np.asarray([target.perm]))[0]
    return DiagonalState(row, initial.spectrum)


@lru_cache(maxsize=None)
def _all_perms(dim: int) -> np.ndarray:
    arr = np.array(list(itertools.permutations(range(dim))), dtype=np.intp)
    arr.flags.writeable = False
    return arr


def dedupe_rows(rows: np.ndarray, atol: float = DEDUPE_ATOL) -> np.ndarray:
    """Collapse rows equal within ``atol`` in L-infinity; output sorted lexicographically.

    Clusters are formed greedily in lexicographic order, so the result is
    deterministic for a given input set.
    """
    if rows.shape[0] == 0:
        return rows
    rows = rows[np.lexsort(rows.T[::-1])]
    kept: list = []
    kept_first: list = []
    firsts = rows[:, 0].tolist()
    for i, first in enumerate(firsts):
        lo = bisect.bisect_left(kept_first, first - atol)
        if lo < len(kept):
            window = rows[kept[lo:]]
            if np.abs(window - rows[i]).max(axis=1).min() <= atol:
                continue
        kept.append(i)
        kept_first.append(first)
    return rows[kept]


def extremal_points(
    initial: DiagonalState,
    beta,
    max_dim: Optional[int] = None,
    workers: int = 1,
) -> np.ndarray:
    """Extremal points of the thermal polytope as an ``(n, d)`` array.

    Rows are sorted lexicographically. See :func:`enumerate_extremal_states`.
    """
    beta = finite_beta(beta)
    d = initial.dim
    cap = default_max_dim() if max_dim is None else int(max_dim)
    if d > cap:
        raise DimensionCapError(
            f"dimension {d} exceeds the enumeration cap {cap}; "
            f"raise it with --max-dim or {MAX_DIM_ENV} ({math.factorial(d)} orders)"
        )
    w = gibbs_weights(initial.energies, beta)
    base = beta_order(initial, beta).perm
    perms = _all_perms(d)
    if workers > 1 and perms.shape[0] >= 5040:
        chunks = np.array_split(perms, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _tight_rows(initial.probs, w, base, c), chunks))
        rows = np.vstack(parts)
    else:
        rows = _tight_rows(initial.probs, w, base, perms)
    rows = np.vstack([initial.probs[None, :], rows])
    return dedupe_rows(rows)


def enumerate_extremal_states(
    initial: DiagonalState,
    beta,
    max_dim: Optional[int] = None,
    workers: int = 1,
) -> list:
    """All extremal states reachable from ``initial`` by thermal operations at ``beta``.

    Every one of the ``d!`` target orders is fed to the tight construction;
    duplicates (within ``1e-10``) collapse. ``d`` above the cap (default 9,
    ``ERGOFLOW_MAX_DIM`` overrides) raises :class:`DimensionCapError`.
    """
    rows = extremal_points(initial, beta, max_dim=max_dim, workers=workers)
    return [DiagonalState(r, initial.spectrum) for r in rows]


def max_energy_state(initial: DiagonalState, beta) -> DiagonalState:
    """Highest-energy state reachable by thermal operations: tight, descending order."""
    return tight_extremal_state(initial, beta, BetaOrder.descending(initial.dim))


@dataclass(frozen=True, eq=False)
class ThermalProcessMatrix:
    """Column-stochastic matrix that fixes the Gibbs vector at ``beta``."""

    entries: np.ndarray
    beta: float
    spectrum: Spectrum
    gibbs_atol: float = 1e-10

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        d = self.spectrum.dim
        if a.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {a.shape}")
        if np.any(a < -1e-12):
            raise DomainError(f"negative matrix entry {a.min()!r}")
        if np.max(np.abs(a.sum(axis=0) - 1.0)) > 1e-12:
            raise DomainError("matrix is not column-stochastic")
        gamma = gibbs_state(self.spectrum, self.beta).probs
        if np.max(np.abs(a @ gamma - gamma)) > self.gibbs_atol:
            raise DomainError("matrix does not preserve the Gibbs state")
        a = np.clip(a, 0.0, None)
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "beta", finite_beta(self.beta))


def apply_process(A: ThermalProcessMatrix, state: DiagonalState) -> DiagonalState:
    if A.spectrum != state.spectrum:
        raise ValueError("process and state live on different spectra")
    return DiagonalState(A.entries @ state.probs, state.spectrum)


def qutrit_beta_zero(spectrum) -> float:
    """Root of ``exp(-b w1) + exp(-b w2) = 1`` by bisection on ``[1e-9, 1e4]``."""
    if not isinstance(spectrum, Spectrum):
        spectrum = Spectrum(spectrum)
    if spectrum.dim != 3:
        raise ValueError("beta_0 is defined for three-level spectra")
    w1, w2 = spectrum.energies[1], spectrum.energies[2]
    if w1 <= 0:
        raise DomainError("beta_0 needs a non-degenerate ground level")

    def f(b):
        return math.exp(-b * w1) + math.exp(-b * w2) - 1.0

    lo, hi = 1e-9, 1e4
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12:
            break
    return 0.5 * (lo + hi)


QUTRIT_PROCESSES = ("A1", "A2", "A5", "A9", "A12", "A13")


def qutrit_process_matrix(name: str, spectrum, beta) -> ThermalProcessMatrix:
    """Extremal qutrit thermal processes acting on a state of beta-order ``(123)``.

    ``A12`` and ``A13`` exist only for ``beta < beta_0``; ``A9`` only for
    ``beta >= beta_0`` (its ground entry ``1 - q10 - q20`` turns negative
    otherwise). Requests outside those ranges raise :class:`DomainError`.
    """
    if not isinstance(spectrum, Spectrum):
        spectrum = Spectrum(spectrum)
    if spectrum.dim != 3:
        raise ValueError("qutrit processes need a three-level spectrum")
    beta = finite_beta(beta)
    name = name.upper()
    if name not in QUTRIT_PROCESSES:
        raise ValueError(f"unknown process {name!r}; choose from {QUTRIT_PROCESSES}")
    e = spectrum.energies

    def q(i, j):
        return math.exp(-beta * (e[i] - e[j]))

    b0 = qutrit_beta_zero(spectrum)
    if name in ("A12", "A13") and beta >= b0:
        raise DomainError(f"{name} requires beta < beta_0 = {b0:.12g}")
    if name == "A9" and beta < b0:
        raise DomainError(f"A9 requires beta >= beta_0 = {b0:.12g}")
    q10, q20, q21, q01 = q(1, 0), q(2, 0), q(2, 1), q(0, 1)
    mats = {
        "A1": [[1 - q10, 1, 0], [q10, 0, 0], [0, 0, 1]],
        "A2": [[1, 0, 0], [0, 1 - q21, 1], [0, q21, 0]],
        "A5": [[1 - q20, q21, 0], [0, 1 - q21, 1], [q20, 0, 0]],
        "A9": [[1 - q10 - q20, 1, 1], [q10, 0, 0], [q20, 0, 0]],
        "A12": [[0, q01 - q21, 1], [q10, 0, 0], [1 - q10, 1 - q01 + q21, 0]],
        "A13": [[0, q01 - q21, 1], [1 - q20, 1 - q01 + q21, 0], [q20, 0, 0]],
    }
    return ThermalProcessMatrix(np.array(mats[name]), beta, spectrum)
