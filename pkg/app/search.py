"""Search runs: oracle and controlled steps on states, delta policy, evolution and overlaps."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.errors import PreconditionError
from app.graph import RegularGraph, require_complement_connected, validate_targets
from app.models import CheckResult, DeltaPolicy, SearchSummary, VerificationReport
from app.operators import circuit_step_array, oracle_array, step_array, target_probability
from app.spectral import (
    SpectralData,
    eig_adjacency,
    normalization_factor,
    smallest_eigenphase,
    start_overlap,
    target_coefficients,
    target_overlap,
    target_overlap_bounds,
)
from app.walk import WalkState, uniform_state

logger = logging.getLogger(__name__)

CHAIN_TOL = 1e-9


def _require_ancilla(g: RegularGraph, s: WalkState) -> None:
    if not s.has_ancilla or s.amplitudes.shape != (2 * g.dimension,):
        raise PreconditionError(f"expected a state with ancilla of length {2 * g.dimension}")


def apply_oracle(g: RegularGraph, s: WalkState, targets: Sequence[int]) -> WalkState:
    """O = I - 2 sum_{i in T} |psi_i><psi_i| on an ancilla-free state."""
    if s.has_ancilla or s.amplitudes.shape != (g.dimension,):
        raise PreconditionError(f"expected an ancilla-free state of length {g.dimension}")
    return WalkState(oracle_array(s.amplitudes, g, validate_targets(g, targets)))


def apply_controlled_step(g: RegularGraph, s: WalkState, targets: Sequence[int], delta: float) -> WalkState:
    """U_delta = W~ O_delta on a state carrying the ancilla."""
    _require_ancilla(g, s)
    return WalkState(step_array(s.amplitudes, g, validate_targets(g, targets), delta), has_ancilla=True)


def apply_circuit_step(g: RegularGraph, s: WalkState, targets: Sequence[int], delta: float) -> WalkState:
    """U_delta assembled from ancilla rotations and |0>-controlled O and W."""
    _require_ancilla(g, s)
    return WalkState(circuit_step_array(s.amplitudes, g, validate_targets(g, targets), delta), has_ancilla=True)


def delta_policy(
    gap: float,
    m: int,
    policy: DeltaPolicy = DeltaPolicy.GENERIC,
    n_vertices: Optional[int] = None,
    dim: Optional[int] = None,
) -> float:
    """Control angle delta = arctan(value) for the chosen tan(delta) scaling, constant 1."""
    if not 0.0 < gap <= 2.0:
        raise PreconditionError(f"spectral gap must lie in (0, 2], got {gap}")
    match policy:
        case DeltaPolicy.ZERO:
            return 0.0
        case DeltaPolicy.GENERIC:
            return float(np.arctan(1.0 / np.sqrt(gap)))
        case DeltaPolicy.LATTICE:
            if dim is None or n_vertices is None:
                raise PreconditionError("lattice delta policy needs the lattice dimension and N")
            if dim == 2:
                return float(np.arctan(np.sqrt(m * np.log(n_vertices))))
            if 2 < dim <= 4:
                return float(np.arctan(np.sqrt(m)))
            if dim > 4:
                return float(np.arctan(1.0))
            logger.info("one-dimensional lattice; using the generic tan(delta) = 1/sqrt(g) policy")
            return float(np.arctan(1.0 / np.sqrt(gap)))
        case _:
            raise PreconditionError(f"policy {policy.value} does not determine delta")


def choose_delta(text: str, g: RegularGraph, gap: float, m: int) -> Tuple[float, DeltaPolicy]:
    """Resolve a delta flag: a number, 'zero', or 'auto' (lattice table for lattices, else generic)."""
    match text:
        case "zero":
            return 0.0, DeltaPolicy.ZERO
        case "auto" if g.lattice is not None:
            return delta_policy(gap, m, DeltaPolicy.LATTICE, g.n_vertices, g.lattice[1]), DeltaPolicy.LATTICE
        case "auto":
            return delta_policy(gap, m, DeltaPolicy.GENERIC), DeltaPolicy.GENERIC
        case _:
            value = float(text)
            if not 0.0 <= value < np.pi / 2:
                raise PreconditionError(f"delta must lie in [0, pi/2), got {value}")
            return value, DeltaPolicy.EXPLICIT


@dataclass(frozen=True)
class SearchConfig:
    """Targets, control angle and iteration count of one run; steps None means Q = floor(pi / (2 alpha))."""

    targets: Tuple[int, ...]
    delta: float = 0.0
    steps: Optional[int] = None
    policy: DeltaPolicy = DeltaPolicy.EXPLICIT
    ancilla: Optional[bool] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta < np.pi / 2:
            raise PreconditionError(f"delta must lie in [0, pi/2), got {self.delta}")
        if self.ancilla is False and self.delta != 0.0:
            raise PreconditionError("a nonzero delta needs the ancilla")
        if self.steps is not None and self.steps < 0:
            raise PreconditionError(f"steps must be non-negative, got {self.steps}")

    @property
    def uses_ancilla(self) -> bool:
        return self.delta != 0.0 if self.ancilla is None else self.ancilla

    @property
    def operator_delta(self) -> Optional[float]:
        return self.delta if self.uses_ancilla else None


@dataclass(frozen=True)
class StartOverlap:
    """D_s with the bound 1/D_s < 1 + alpha^2/g, asserted only when alpha < phi_1/2."""

    value: float
    bound: float
    applicable: bool
    normalization: float

    @property
    def holds(self) -> bool:
        return 1.0 / self.value < self.bound


@dataclass(frozen=True)
class TargetOverlap:
    """||P_delta w_t||^2 with its chain of upper bounds on the reciprocal."""

    value: float
    bounds: List[float]
    applicable: bool

    @property
    def chain_ordered(self) -> bool:
        exact, relaxed, substituted, closed = self.bounds
        scale = max(abs(b) for b in self.bounds)
        return bool(
            exact <= relaxed + CHAIN_TOL * scale
            and abs(relaxed - substituted) <= CHAIN_TOL * scale
            and substituted < closed
        )


@dataclass(frozen=True, eq=False)
class SearchRun:
    """Outcome of one evolution: success trace, eigenphase, overlaps and final marginals."""

    config: SearchConfig
    trace: np.ndarray
    alpha: float
    q_used: int
    gap: float
    d_s: float
    pwt2: float
    marginals: np.ndarray = field(repr=False)
    n_vertices: int = 0
    degree: int = 0

    @property
    def p_s_at_q(self) -> float:
        return float(self.trace[self.q_used])

    def summary(self) -> SearchSummary:
        return SearchSummary(
            n_vertices=self.n_vertices,
            degree=self.degree,
            n_targets=len(self.config.targets),
            gap=self.gap,
            delta=self.config.delta,
            alpha=self.alpha,
            steps=self.q_used,
            p_success=self.p_s_at_q,
            d_s=self.d_s,
            pwt2=self.pwt2,
        )


def initial_state(g: RegularGraph, ancilla: bool) -> WalkState:
    start = uniform_state(g)
    return start.with_ancilla() if ancilla else start


def iterate_search(
    g: RegularGraph, targets: Sequence[int], delta: Optional[float], steps: int
) -> Tuple[np.ndarray, WalkState]:
    """Matrix-free evolution from the uniform start; returns p_s(t) for t = 0..steps and the final state."""
    chosen = validate_targets(g, targets)
    amplitudes = initial_state(g, delta is not None).amplitudes
    trace = np.empty(steps + 1)
    trace[0] = target_probability(amplitudes, g, chosen, delta)
    for t in range(1, steps + 1):
        amplitudes = step_array(amplitudes, g, chosen, delta)
        trace[t] = target_probability(amplitudes, g, chosen, delta)
    return trace, WalkState(amplitudes, has_ancilla=delta is not None)


def steps_for(alpha: float) -> int:
    """Q = floor(pi / (2 alpha))."""
    return int(np.floor(np.pi / (2.0 * alpha)))


def run_search(
    g: RegularGraph, cfg: SearchConfig, spec: Optional[SpectralData] = None, cap: Optional[int] = None
) -> SearchRun:
    """Evolve |Phi~_0> for Q steps and attach alpha_delta and the w_s / w_t overlaps."""
    chosen = validate_targets(g, cfg.targets)
    require_complement_connected(g, chosen)
    spec = spec or eig_adjacency(g, cap)
    logger.info(f"Search on {g.label}: M={len(chosen)} delta={cfg.delta:.6g} ancilla={cfg.uses_ancilla}")

    alpha = smallest_eigenphase(g, chosen, cfg.delta, spec=spec, cap=cap)
    q_used = steps_for(alpha) if cfg.steps is None else cfg.steps
    coefficients = target_coefficients(spec, chosen, alpha, cfg.delta)

    trace, final = iterate_search(g, chosen, cfg.operator_delta, q_used)
    logger.info(f"alpha={alpha:.8g} Q={q_used} p_s(Q)={trace[q_used]:.6g}")
    return SearchRun(
        config=cfg,
        trace=trace,
        alpha=alpha,
        q_used=q_used,
        gap=spec.gap,
        d_s=start_overlap(spec, chosen, alpha, cfg.delta, coefficients),
        pwt2=target_overlap(spec, chosen, alpha, cfg.delta, coefficients),
        marginals=final.vertex_probabilities(g.n_vertices),
        n_vertices=g.n_vertices,
        degree=g.degree,
    )


def _eigen_data(
    g: RegularGraph, targets: Sequence[int], delta: float, spec: Optional[SpectralData], cap: Optional[int]
) -> Tuple[SpectralData, Tuple[int, ...], float, np.ndarray]:
    chosen = validate_targets(g, targets)
    spec = spec or eig_adjacency(g, cap)
    alpha = smallest_eigenphase(g, chosen, delta, spec=spec, cap=cap)
    return spec, chosen, alpha, target_coefficients(spec, chosen, alpha, delta)


def overlap_ws(
    g: RegularGraph,
    targets: Sequence[int],
    delta: float = 0.0,
    spec: Optional[SpectralData] = None,
    cap: Optional[int] = None,
) -> StartOverlap:
    """|<Phi~_0|w_s>|^2 with w_s = (|alpha_delta> + |-alpha_delta>)/sqrt 2."""
    spec, chosen, alpha, x = _eigen_data(g, targets, delta, spec, cap)
    applicable = alpha < spec.first_phase / 2.0
    if not applicable:
        logger.info(f"alpha={alpha:.6g} not below phi_1/2; start-overlap bound is informational")
    return StartOverlap(
        value=start_overlap(spec, chosen, alpha, delta, x),
        bound=1.0 + alpha**2 / spec.gap,
        applicable=applicable,
        normalization=normalization_factor(spec, chosen, alpha, delta, x),
    )


def overlap_wt(
    g: RegularGraph,
    targets: Sequence[int],
    delta: float = 0.0,
    spec: Optional[SpectralData] = None,
    cap: Optional[int] = None,
) -> TargetOverlap:
    """||P_delta|w_t>||^2 = 2 sum |x_i|^2 / N^2 together with its bound chain."""
    spec, chosen, alpha, x = _eigen_data(g, targets, delta, spec, cap)
    return TargetOverlap(
        value=target_overlap(spec, chosen, alpha, delta, x),
        bounds=target_overlap_bounds(spec, chosen, alpha, delta, x),
        applicable=alpha < spec.first_phase / 2.0,
    )


def verify_delta0_bounds(
    g: RegularGraph, targets: Sequence[int], spec: Optional[SpectralData] = None, cap: Optional[int] = None
) -> VerificationReport:
    """Bracket the delta = 0 eigenphase between sqrt(gM/N) and (pi/sqrt 2) sqrt(M/(N-M))."""
    chosen = validate_targets(g, targets)
    spec = spec or eig_adjacency(g, cap)
    report = VerificationReport(suite="unassisted-bounds", instance=f"{g.label} T={list(chosen)}")
    alpha = smallest_eigenphase(g, chosen, 0.0, method="leaking", cap=cap)
    n, m, gap = g.n_vertices, len(chosen), spec.gap

    lower = float(np.sqrt(gap * m / n))
    upper = float(np.pi / np.sqrt(2.0) * np.sqrt(m / (n - m)))
    report.add(CheckResult.bound("alpha_lower", holds=lower < alpha, expected=lower, measured=alpha))
    report.add(CheckResult.bound("alpha_upper", holds=alpha < upper, expected=upper, measured=alpha))

    lazy = float(np.sqrt(1.0 - gap * m / (2.0 * n)))
    half_cos2 = float(np.cos(alpha / 2.0) ** 2)
    report.add(CheckResult.bound("lazy_walk_lower", holds=half_cos2 < lazy, expected=lazy, measured=half_cos2))

    sin2 = float(np.sin(alpha) ** 2)
    report.add(
        CheckResult.bound(
            "sin2_alpha_lower",
            holds=sin2 > gap * m / n,
            expected=gap * m / n,
            measured=sin2,
            applicable=not g.is_bipartite and gap <= 1.0,
        )
    )
    return report
