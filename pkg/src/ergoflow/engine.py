"""Open-cycle heat engine: work, heat and efficiency optimized over the thermal polytope.

The working body starts in the Gibbs state of the cold bath, touches the hot
bath through a thermal operation (stroke 1), hands its ergotropy to an ideal
weight as work (stroke 2) and is reset by the cold bath (stroke 3). Work is
convex and heat linear on the polytope of reachable states, so both optima
sit on extremal points and a finite enumeration is exhaustive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .core import (
    DiagonalState,
    DomainError,
    Spectrum,
    energy,
    finite_beta,
    gibbs_state,
)
from .ergotropy import ergotropy, ergotropy_rows
from .thermomaj import (
    apply_process,
    beta_order,
    extremal_points,
    qutrit_beta_zero,
    qutrit_process_matrix,
)

__all__ = [
    "EngineConfig",
    "EngineReport",
    "ExtremalEntry",
    "QutritExtremal",
    "efficiency",
    "evaluate_engine",
    "heat",
    "minimal_coupling_reference",
    "near_beta_zero",
    "optimize",
    "protocol_label",
    "qubit_closed_form",
    "qutrit_analytics",
    "qutrit_process_states",
    "work",
]

HEAT_ATOL = 1e-12
WORK_ATOL = 1e-12
BETA0_PROXIMITY = 1e-9


@dataclass(frozen=True)
class EngineConfig:
    spectrum: Spectrum
    beta_cold: float
    beta_hot: float

    def __post_init__(self):
        if not isinstance(self.spectrum, Spectrum):
            object.__setattr__(self, "spectrum", Spectrum(self.spectrum))
        bc, bh = finite_beta(self.beta_cold), finite_beta(self.beta_hot)
        if not bh < bc:
            raise ValueError(f"need beta_hot < beta_cold, got {bh!r} >= {bc!r}")
        object.__setattr__(self, "beta_cold", bc)
        object.__setattr__(self, "beta_hot", bh)

    @property
    def dim(self) -> int:
        return self.spectrum.dim

    @property
    def carnot(self) -> float:
        return 1.0 - self.beta_hot / self.beta_cold

    def initial_state(self) -> DiagonalState:
        return gibbs_state(self.spectrum, self.beta_cold)


def heat(initial: DiagonalState, final: DiagonalState) -> float:
    """Energy drawn from the hot bath, ``E(final) - E(initial)``."""
    if initial.spectrum != final.spectrum:
        raise ValueError("states live on different spectra")
    return float((final.probs - initial.probs) @ initial.energies)


def work(initial: DiagonalState, final: DiagonalState) -> float:
    """Work deposited in the battery: the ergotropy of the post-bath state.

    Only meaningful for a passive starting state, which the engine guarantees.
    """
    if ergotropy(initial) > WORK_ATOL:
        raise DomainError("the engine's initial state must be passive")
    return ergotropy(final)


def efficiency(initial: DiagonalState, final: DiagonalState) -> Optional[float]:
    """``work / heat``, or ``None`` when the heat is not above ``1e-12``."""
    q = heat(initial, final)
    if q <= HEAT_ATOL:
        return None
    return work(initial, final) / q


@dataclass(frozen=True)
class ExtremalEntry:
    state: DiagonalState
    work: float
    heat: float
    efficiency: Optional[float]
    label: str


@dataclass(frozen=True, eq=False)
class EngineReport:
    """Engine performance over every extremal point of the thermal polytope.

    ``points`` holds the extremal populations row-wise (lexicographic order);
    ``works`` and ``heats`` are aligned with it. ``efficiency_max`` is
    ``None`` only when no extremal point draws heat, which cannot happen for
    a valid :class:`EngineConfig`.
    """

    spectrum: Spectrum
    beta_cold: float
    beta_hot: float
    initial: DiagonalState
    points: np.ndarray = field(repr=False)
    works: np.ndarray = field(repr=False)
    heats: np.ndarray = field(repr=False)
    work_max: float
    efficiency_max: Optional[float]
    work_index: int
    efficiency_index: Optional[int]

    @property
    def work_optimal_state(self) -> DiagonalState:
        return DiagonalState(self.points[self.work_index], self.spectrum)

    @property
    def efficiency_optimal_state(self) -> Optional[DiagonalState]:
        if self.efficiency_index is None:
            return None
        return DiagonalState(self.points[self.efficiency_index], self.spectrum)

    @property
    def carnot(self) -> float:
        return 1.0 - self.beta_hot / self.beta_cold

    def efficiencies(self) -> list:
        return [
            (w / q) if q > HEAT_ATOL else None
            for w, q in zip(self.works.tolist(), self.heats.tolist())
        ]

    @cached_property
    def per_extremal(self) -> list:
        out = []
        for row, w, q, eta in zip(self.points, self.works.tolist(), self.heats.tolist(), self.efficiencies()):
            state = DiagonalState(row, self.spectrum)
            out.append(ExtremalEntry(state, w, q, eta, beta_order(state, self.beta_hot).label))
        return out

    @cached_property
    def optimal_protocol_label(self) -> str:
        """``"0"`` without positive work; else the work-optimal protocol label."""
        if self.work_max <= WORK_ATOL:
            return "0"
        return protocol_label(self.work_optimal_state, self.beta_cold, self.beta_hot)


def evaluate_engine(spectrum, beta_cold, beta_hot, max_dim=None, workers: int = 1) -> EngineReport:
    """Engine figures for any pair of finite inverse temperatures.

    Unlike :func:`optimize` this does not insist on ``beta_hot < beta_cold``;
    region maps use it to cover the whole temperature plane, diagonal included.
    """
    spectrum = spectrum if isinstance(spectrum, Spectrum) else Spectrum(spectrum)
    bc, bh = finite_beta(beta_cold), finite_beta(beta_hot)
    initial = gibbs_state(spectrum, bc)
    pts = extremal_points(initial, bh, max_dim=max_dim, workers=workers)
    e = spectrum.energies
    works = ergotropy_rows(pts, e)
    heats = (pts - initial.probs) @ e
    wi = int(np.argmax(works))
    mask = heats > HEAT_ATOL
    if np.any(mask):
        eff = np.full(works.shape, -np.inf)
        eff[mask] = works[mask] / heats[mask]
        ei = int(np.argmax(eff))
        eta_max = float(eff[ei])
    else:
        ei, eta_max = None, None
    return EngineReport(
        spectrum=spectrum,
        beta_cold=bc,
        beta_hot=bh,
        initial=initial,
        points=pts,
        works=works,
        heats=heats,
        work_max=float(works[wi]),
        efficiency_max=eta_max,
        work_index=wi,
        efficiency_index=ei,
    )


def optimize(config: EngineConfig, max_dim=None, workers: int = 1) -> EngineReport:
    """Maximal work and efficiency of the open-cycle engine for ``config``."""
    return evaluate_engine(
        config.spectrum, config.beta_cold, config.beta_hot, max_dim=max_dim, workers=workers
    )


def _require_dim(config: EngineConfig, d: int):
    if config.dim != d:
        raise ValueError(f"this closed form needs a {d}-level spectrum, got {config.dim}")


def qubit_closed_form(config: EngineConfig):
    """Optimal ``(work, efficiency)`` of a qubit engine in closed form.

    Outside the operating region ``2 exp(-bH w) - 1 > exp(-bC w)`` the work
    is 0 and the efficiency ``None``.
    """
    _require_dim(config, 2)
    w = float(config.spectrum.energies[1])
    xh, xc = math.exp(-config.beta_hot * w), math.exp(-config.beta_cold * w)
    if not 2.0 * xh - 1.0 > xc:
        return 0.0, None
    work_ = w * (2.0 * xh / (1.0 + xc) - 1.0)
    eta = 1.0 - (1.0 - xh) / (xh - xc)
    return work_, eta


def minimal_coupling_reference(config: EngineConfig):
    """Qubit minimal-coupling engine ``(work, efficiency)``, clamped like :func:`qubit_closed_form`."""
    _require_dim(config, 2)
    w = float(config.spectrum.energies[1])
    xh = math.exp(-config.beta_hot * w)
    xch = math.exp(-(config.beta_cold + config.beta_hot) * w)
    work_ = w * (2.0 * xh / (1.0 + xch) - 1.0)
    if not work_ > 0.0:
        return 0.0, None
    return work_, 1.0 - (1.0 - xh) / (xh - xch)


@dataclass(frozen=True)
class QutritExtremal:
    index: int
    state: DiagonalState
    work: float
    heat: float
    beta_order: str
    process: str


def _qutrit_terms(config: EngineConfig):
    e = config.spectrum.energies
    bh, bc = config.beta_hot, config.beta_cold

    def qh(i, j):
        return math.exp(-bh * (e[i] - e[j]))

    def qc(i, j):
        return math.exp(-bc * (e[i] - e[j]))

    return e[1], e[2], qh, qc


def qutrit_analytics(config: EngineConfig) -> list:
    """Closed-form extremal states of the qutrit engine with tabulated work and heat.

    States 1-3 always exist; state 4 exists for ``beta_hot >= beta_0`` and
    states 5, 6 for ``beta_hot < beta_0``, with ``exp(-b0 w1) + exp(-b0 w2) = 1``.
    The initial state itself is not listed. Work values are the tabulated
    maxima over admissible population orderings; in the second candidate for
    state 5 the coefficient of ``q_C10`` is ``1 - qH01 + qH21``, matching the
    state's third population.
    """
    _require_dim(config, 3)
    w1, w2 = _qutrit_terms(config)[:2]
    _, _, H, C = _qutrit_terms(config)
    Z = 1.0 + C(1, 0) + C(2, 0)
    b0 = qutrit_beta_zero(config.spectrum)
    low = config.beta_hot < b0

    states = {
        1: [1 - H(1, 0) + C(1, 0), H(1, 0), C(2, 0)],
        2: [1, (1 - H(2, 1)) * C(1, 0) + C(2, 0), H(2, 1) * C(1, 0)],
        3: [1 - H(2, 0) + H(2, 1) * C(1, 0), (1 - H(2, 1)) * C(1, 0) + C(2, 0), H(2, 0)],
        4: [1 + C(1, 0) + C(2, 0) - H(1, 0) - H(2, 0), H(1, 0), H(2, 0)],
        5: [
            (H(0, 1) - H(2, 1)) * C(1, 0) + C(2, 0),
            H(1, 0),
            1 - H(1, 0) + (1 - H(0, 1) + H(2, 1)) * C(1, 0),
        ],
        6: [
            C(1, 0) * (H(0, 1) - H(2, 1)) + C(2, 0),
            1 - H(2, 0) + C(1, 0) * (1 - H(0, 1) + H(2, 1)),
            H(2, 0),
        ],
    }

    k6 = 1 + H(2, 1) - H(0, 1)
    works = {
        1: [w1 / Z * (2 * H(1, 0) - 1 - C(1, 0))],
        2: [(w2 - w1) / Z * (2 * H(2, 1) * C(1, 0) - (C(1, 0) + C(2, 0)))],
        3: [
            (w2 - w1) / Z * (H(2, 0) - C(2, 0) - (1 - H(2, 1)) * C(1, 0)),
            w2 / Z * H(2, 0)
            - w1 / Z * ((1 - H(2, 0)) + H(2, 1) * C(1, 0))
            - (w2 - w1) / Z * ((1 - H(2, 1)) * C(1, 0) + C(2, 0)),
        ],
        4: [
            w1 / Z * (2 * H(1, 0) + H(2, 0) - (1 + C(1, 0) + C(2, 0))),
            w1 / Z * (H(1, 0) - H(2, 0)) + w2 / Z * (2 * H(2, 0) + H(1, 0) - (1 + C(1, 0) + C(2, 0))),
        ],
        5: [
            w1 / Z * (H(1, 0) - (H(0, 1) - H(2, 1)) * C(1, 0) - C(2, 0)),
            w1 / Z * (H(1, 0) - (1 - H(1, 0)) - (1 - H(0, 1) + H(2, 1)) * C(1, 0))
            + w2 / Z * ((1 - H(1, 0)) + (1 - H(0, 1) + H(2, 1)) * C(1, 0) - (H(0, 1) - H(2, 1)) * C(1, 0) - C(2, 0)),
        ],
        6: [
            (w2 - w1) / Z * (2 * H(2, 0) - 1 - C(1, 0) * k6),
            w1 / Z * (1 - C(2, 0) - H(2, 0) + C(1, 0) * (1 + 2 * H(2, 1) - 2 * H(0, 1))),
            w1 / Z * (C(1, 0) * k6 + 1 - 2 * H(2, 0))
            + w2 / Z * (H(2, 0) - C(2, 0) + C(1, 0) * H(2, 1) - C(1, 0) * H(0, 1)),
            w1 / Z * (1 - C(2, 0) - H(2, 0) + C(1, 0) * (1 + 2 * H(2, 1) - 2 * H(0, 1)))
            - w2 / Z * (1 - 2 * H(2, 0) + C(1, 0) * k6),
            w2 / Z * (H(2, 0) - C(2, 0) + C(1, 0) * (H(2, 1) - H(0, 1))),
        ],
    }

    heats = {
        1: w1 * (H(1, 0) - C(1, 0)) / Z,
        2: (w2 - w1) * C(1, 0) * (H(2, 1) - C(2, 1)) / Z,
        3: (H(2, 0) * w2 - C(2, 0) * (w2 - w1) - C(1, 0) * H(2, 1) * w1) / Z,
        4: ((H(1, 0) - C(1, 0)) * w1 + (H(2, 0) - C(2, 0)) * w2) / Z,
        5: (
            H(1, 0) * (1 - C(1, 0) * H(0, 1)) * w1
            + (C(1, 0) * H(2, 0) * H(0, 1) - C(2, 0) + (1 - C(1, 0) * H(0, 1)) * (1 - H(1, 0))) * w2
        ) / Z,
        6: ((1 - C(1, 0) * H(0, 1)) * (1 - H(2, 0)) * w1 + (H(2, 0) - C(2, 0)) * w2) / Z,
    }

    orders = {1: "(213)", 2: "(132)", 3: "(312)", 4: "(231)", 5: "(231)", 6: "(321)"}
    processes = {1: "A1", 2: "A2", 3: "A5", 4: "A9", 5: "A12", 6: "A13"}
    present = (1, 2, 3, 5, 6) if low else (1, 2, 3, 4)
    out = []
    for k in present:
        probs = np.array(states[k]) / Z
        out.append(
            QutritExtremal(
                index=k,
                state=DiagonalState(probs, config.spectrum),
                work=max([0.0] + works[k]),
                heat=heats[k],
                beta_order=orders[k],
                process=processes[k],
            )
        )
    return out


def near_beta_zero(config: EngineConfig) -> bool:
    """True when ``beta_hot`` is within ``1e-9`` of the qutrit branch point."""
    _require_dim(config, 3)
    return abs(config.beta_hot - qutrit_beta_zero(config.spectrum)) <= BETA0_PROXIMITY


def qutrit_process_states(config: EngineConfig) -> dict:
    """Extremal states obtained by applying the branch's process matrices to the cold Gibbs state."""
    _require_dim(config, 3)
    b0 = qutrit_beta_zero(config.spectrum)
    names = ("A1", "A2", "A5", "A12", "A13") if config.beta_hot < b0 else ("A1", "A2", "A5", "A9")
    p = config.initial_state()
    return {n: apply_process(qutrit_process_matrix(n, config.spectrum, config.beta_hot), p) for n in names}


def protocol_label(state: DiagonalState, beta_cold: float, beta_hot: float) -> str:
    """Protocol label of an extremal state.

    For three levels this is the protocol number with the beta-order as
    subscript, e.g. ``"6_(321)"``; otherwise the beta-order alone.
    """
    order = beta_order(state, beta_hot).label
    if state.dim != 3 or not beta_hot < beta_cold:
        return order
    config = EngineConfig(state.spectrum, beta_cold, beta_hot)
    for item in qutrit_analytics(config):
        if item.state.allclose(state, atol=1e-9):
            return f"{item.index}_{order}"
    return order
