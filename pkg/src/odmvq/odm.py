"""Objective dialectical method: a population-based derivative-free optimizer.

A population of *poles* lives in a box. During a historical phase every pole
is pulled towards the current best pole and the best pole seen so far, with a
strength that shrinks as the pole's objective value approaches the
hegemonic value. Each phase ends in a crisis that fuses near-identical poles,
adds syntheses of strongly opposed pairs, perturbs everything with Gaussian
noise and, unless the run is about to stop, appends the box-reflected
antithesis of every pole.

The hegemony logic is written for maximization. Minimization negates the
objective internally; everything reported back is in the caller's units.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import ContractError, Pole, PoleSet, SearchBox

__all__ = [
    "Direction",
    "MembershipKind",
    "OdmConfig",
    "Hegemony",
    "Membership",
    "TraceRow",
    "CrisisRecord",
    "OdmResult",
    "ObjectiveError",
    "init_poles",
    "memberships_canonical",
    "memberships_max_entropy",
    "compute_memberships",
    "evolution_step",
    "decay_steps",
    "contradiction",
    "revolutionary_crisis",
    "optimize",
]

log = logging.getLogger(__name__)


class Direction(str, enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class MembershipKind(str, enum.Enum):
    CANONICAL = "canonical"
    MAX_ENTROPY = "max_entropy"


class ObjectiveError(RuntimeError):
    """The objective returned NaN."""


@dataclass(frozen=True)
class OdmConfig:
    initial_poles: int = 8
    historical_phases: int = 5
    phase_length: int = 50
    initial_step: float = 0.1
    step_decay: float = 0.9999
    min_contradiction: float = 0.05
    max_contradiction: float = 0.9
    max_crisis: float = 0.3
    objective_threshold: Optional[float] = None
    direction: Direction = Direction.MINIMIZE
    membership: MembershipKind = MembershipKind.CANONICAL
    max_poles: Optional[int] = None
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "membership", MembershipKind(self.membership))
        if self.initial_poles < 2 or self.initial_poles % 2:
            raise ContractError("initial_poles must be an even integer >= 2")
        if self.historical_phases < 0 or self.phase_length < 1:
            raise ContractError("historical_phases must be >= 0 and phase_length >= 1")
        if not 0.0 < self.initial_step < 1.0:
            raise ContractError("initial_step must lie in (0, 1)")
        if not 0.0 < self.step_decay < 1.0:
            raise ContractError("step_decay must lie in (0, 1)")
        if not 0.0 <= self.min_contradiction < self.max_contradiction <= 1.0:
            raise ContractError("need 0 <= min_contradiction < max_contradiction <= 1")
        if self.max_crisis < 0.0:
            raise ContractError("max_crisis must be non-negative")
        if self.max_poles is not None and self.max_poles < 1:
            raise ContractError("max_poles must be positive")


@dataclass(frozen=True)
class Hegemony:
    """Current (best this iteration) and historical (best ever) poles.

    Values are stored in internal "score" units, i.e. larger is better.
    """

    current_pole: np.ndarray
    current_value: float
    historical_pole: np.ndarray
    historical_value: float

    @classmethod
    def from_poles(cls, poles: PoleSet, previous: Optional["Hegemony"] = None) -> "Hegemony":
        best = int(np.argmax(poles.objectives))
        w_c = poles.weights[best].copy()
        f_c = float(poles.objectives[best])
        if previous is None or f_c > previous.historical_value:
            return cls(w_c, f_c, w_c.copy(), f_c)
        return cls(w_c, f_c, previous.historical_pole, previous.historical_value)


@dataclass(frozen=True)
class Membership:
    current: np.ndarray
    historical: np.ndarray


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    phase: int
    poles: int
    f_current: float
    f_historical: float
    evaluations: int


@dataclass(frozen=True)
class CrisisRecord:
    phase: int
    before: int
    after_fusion: int
    after_synthesis: int
    after_doubling: int
    final_phase: bool


@dataclass
class OdmResult:
    best_point: np.ndarray
    best_value: float
    trace: list = field(default_factory=list)
    crises: list = field(default_factory=list)
    evaluations: int = 0
    iterations: int = 0


class _Evaluator:
    """Wraps the user objective: counts calls, rejects NaN, maps to score units."""

    def __init__(self, objective: Callable[[np.ndarray], float], direction: Direction):
        self.objective = objective
        self.sign = 1.0 if direction is Direction.MAXIMIZE else -1.0
        self.count = 0

    def __call__(self, weights: np.ndarray) -> np.ndarray:
        out = np.empty(weights.shape[0])
        for i, w in enumerate(weights):
            value = float(self.objective(w))
            self.count += 1
            if math.isnan(value):
                raise ObjectiveError(f"objective returned NaN at point {np.array2string(w, precision=6)}")
            out[i] = self.sign * value
        return out

    def to_user(self, score: float) -> float:
        return self.sign * score


def init_poles(box: SearchBox, config: OdmConfig, rng: np.random.Generator,
               evaluate: Callable[[np.ndarray], np.ndarray], seeds: Optional[np.ndarray] = None) -> PoleSet:
    """Draw half of the initial poles uniformly in ``box``; the rest are their antitheses.

    ``seeds`` optionally replaces the random half (it is clamped to the box).
    """
    half = config.initial_poles // 2
    if seeds is None:
        first = rng.uniform(box.lower, box.upper, size=(half, box.dim))
    else:
        first = box.clamp(np.array(seeds, dtype=np.float64, ndmin=2))
        if first.shape != (half, box.dim):
            raise ContractError(f"expected {half} seed poles of dimension {box.dim}, got {first.shape}")
    weights = np.vstack([first, box.antithesis(first)])
    return PoleSet(weights, evaluate(weights))


def _degenerate_share(distances: np.ndarray) -> Optional[np.ndarray]:
    zero = distances == 0.0
    if not zero.any():
        return None
    return zero / zero.sum()


def _canonical(distances: np.ndarray) -> np.ndarray:
    shared = _degenerate_share(distances)
    if shared is not None:
        return shared
    # (sum_j d_i / d_j)^-1 == (1/d_i) / sum_j (1/d_j); scaled by min(d) to stay finite
    ratio = distances.min() / distances
    return ratio / ratio.sum()


def _gibbs(distances: np.ndarray, lam: float) -> np.ndarray:
    z = np.exp(-lam * (distances - distances.min()))
    return z / z.sum()


def _distances(poles: PoleSet, hegemony: Hegemony) -> tuple:
    return (np.abs(poles.objectives - hegemony.current_value),
            np.abs(poles.objectives - hegemony.historical_value))


def memberships_canonical(poles: PoleSet, hegemony: Hegemony) -> Membership:
    """Inverse-distance memberships in objective space.

    Poles sitting exactly on the hegemonic value share the whole membership.
    """
    d_c, d_h = _distances(poles, hegemony)
    return Membership(_canonical(d_c), _canonical(d_h))


def memberships_max_entropy(poles: PoleSet, hegemony: Hegemony) -> Membership:
    """Gibbs memberships ``exp(-|f_i - f*| / m) / Z`` with ``m`` the pole count."""
    d_c, d_h = _distances(poles, hegemony)
    lam = 1.0 / len(poles)
    return Membership(_gibbs(d_c, lam), _gibbs(d_h, lam))


def compute_memberships(poles: PoleSet, hegemony: Hegemony, kind: MembershipKind) -> Membership:
    if MembershipKind(kind) is MembershipKind.MAX_ENTROPY:
        return memberships_max_entropy(poles, hegemony)
    return memberships_canonical(poles, hegemony)


def evolution_step(poles: PoleSet, hegemony: Hegemony, memberships: Membership,
                   eta_current: float, eta_historical: float, box: Optional[SearchBox] = None) -> np.ndarray:
    """Return the updated weight matrix (objectives are left to the caller)."""
    w = poles.weights
    pull_c = (eta_current * (1.0 - memberships.current) ** 2)[:, None]
    pull_h = (eta_historical * (1.0 - memberships.historical) ** 2)[:, None]
    updated = w + pull_c * (hegemony.current_pole - w) + pull_h * (hegemony.historical_pole - w)
    return box.clamp(updated) if box is not None else updated


def decay_steps(eta: float, alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ContractError("decay factor must lie in (0, 1)")
    return alpha * eta


def contradiction(p, q, box: SearchBox) -> float:
    """Euclidean distance between two poles divided by the box diagonal."""
    wp = p.weights if isinstance(p, Pole) else np.asarray(p, dtype=np.float64)
    wq = q.weights if isinstance(q, Pole) else np.asarray(q, dtype=np.float64)
    if wp.shape != wq.shape:
        raise ContractError("poles must have the same dimension")
    return float(np.linalg.norm(wp - wq) / box.diameter)


def _contradiction_matrix(weights: np.ndarray, box: SearchBox) -> np.ndarray:
    diff = weights[:, None, :] - weights[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)) / box.diameter


def _fuse(weights: np.ndarray, scores: np.ndarray, delta: np.ndarray, threshold: float) -> np.ndarray:
    """Indices of the poles surviving fusion, in original order."""
    alive = np.ones(len(scores), dtype=bool)
    for i in range(len(scores)):
        if not alive[i]:
            continue
        for j in range(i + 1, len(scores)):
            if alive[j] and delta[i, j] <= threshold:
                if scores[j] > scores[i]:
                    alive[i] = False
                    break
                alive[j] = False
    return np.flatnonzero(alive)


def _cap(weights: np.ndarray, scores: np.ndarray, max_poles: Optional[int]):
    if max_poles is None or len(scores) <= max_poles:
        return weights, scores
    # stable sort keeps the earlier pole on equal scores
    keep = np.sort(np.argsort(-scores, kind="stable")[:max_poles])
    return weights[keep], scores[keep]


def revolutionary_crisis(poles: PoleSet, config: OdmConfig, rng: np.random.Generator, final_phase: bool,
                         box: SearchBox, evaluate: Callable[[np.ndarray], np.ndarray]):
    """Fuse, synthesize, perturb and (unless final) double the pole set.

    Returns the new ``PoleSet`` and a ``CrisisRecord`` of pole counts.
    """
    before = len(poles)
    delta = _contradiction_matrix(poles.weights, box)
    keep = _fuse(poles.weights, poles.objectives, delta, config.min_contradiction)
    weights = poles.weights[keep]
    after_fusion = len(keep)

    sub = delta[np.ix_(keep, keep)]
    i_idx, j_idx = np.nonzero(np.triu(sub > config.max_contradiction, k=1))
    if len(i_idx):
        weights = np.vstack([weights, 0.5 * (weights[i_idx] + weights[j_idx])])
    after_synthesis = weights.shape[0]

    if config.max_crisis > 0.0:
        weights = box.clamp(weights + config.max_crisis * rng.standard_normal(weights.shape))
    scores = evaluate(weights)

    if not final_phase:
        anti = box.antithesis(weights)
        weights = np.vstack([weights, anti])
        scores = np.concatenate([scores, evaluate(anti)])
    after_doubling = weights.shape[0]
    weights, scores = _cap(weights, scores, config.max_poles)

    record = CrisisRecord(poles.phase_index, before, after_fusion, after_synthesis, after_doubling, final_phase)
    out = PoleSet(weights, scores, phase_index=poles.phase_index + 1, iteration_index=poles.iteration_index)
    return out, record


def _crossed(score: float, threshold_score: Optional[float]) -> bool:
    return threshold_score is not None and score >= threshold_score


def optimize(objective: Callable[[np.ndarray], float], box: SearchBox, config: OdmConfig = OdmConfig(),
             initial: Optional[np.ndarray] = None) -> OdmResult:
    """Run the dialectical optimizer and return the best point ever evaluated.

    Parameters
    ----------
    objective : callable
        Maps a weight vector to a real value.
    box : SearchBox
        Search domain; all poles are clamped to it.
    config : OdmConfig
    initial : ndarray, optional
        ``(initial_poles // 2, dim)`` seed poles replacing the uniform draw.
        Their antitheses form the other half as usual.
    """
    rng = np.random.default_rng(config.rng_seed)
    evaluate = _Evaluator(objective, config.direction)
    threshold = None
    if config.objective_threshold is not None:
        threshold = evaluate.sign * config.objective_threshold

    poles = init_poles(box, config, rng, evaluate, seeds=initial)
    hegemony = Hegemony.from_poles(poles)
    result = OdmResult(hegemony.historical_pole, evaluate.to_user(hegemony.historical_value))

    def record(t, phase):
        result.trace.append(TraceRow(t, phase, len(poles), evaluate.to_user(hegemony.current_value),
                                     evaluate.to_user(hegemony.historical_value), evaluate.count))

    record(0, 0)
    eta_c = eta_h = config.initial_step
    t = 0
    stop = _crossed(hegemony.historical_value, threshold)
    for phase in range(config.historical_phases):
        if stop:
            break
        for _ in range(config.phase_length):
            if _crossed(hegemony.historical_value, threshold):
                stop = True
                break
            mu = compute_memberships(poles, hegemony, config.membership)
            updated = evolution_step(poles, hegemony, mu, eta_c, eta_h, box)
            moved = np.any(updated != poles.weights, axis=1)
            objectives = poles.objectives.copy()
            if moved.any():
                objectives[moved] = evaluate(updated[moved])
            poles = PoleSet(updated, objectives, phase, t + 1)
            hegemony = Hegemony.from_poles(poles, hegemony)
            eta_c = decay_steps(eta_c, config.step_decay)
            t += 1
            record(t, phase)
        if stop:
            break
        final = phase == config.historical_phases - 1
        poles, crisis = revolutionary_crisis(poles, config, rng, final, box, evaluate)
        result.crises.append(crisis)
        hegemony = Hegemony.from_poles(poles, hegemony)
        eta_h = decay_steps(eta_h, config.step_decay)
        stop = _crossed(hegemony.historical_value, threshold)
        log.debug("phase %d: %d poles, f_H=%g", phase, len(poles), evaluate.to_user(hegemony.historical_value))
        record(t, phase)

    result.best_point = hegemony.historical_pole.copy()
    result.best_value = evaluate.to_user(hegemony.historical_value)
    result.evaluations = evaluate.count
    result.iterations = t
    return result
