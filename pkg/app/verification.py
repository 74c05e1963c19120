"""Named verification suites over the built-in instance sets."""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import PreconditionError
from app.graph import RegularGraph, build_complete, build_hypercubic, choose_targets
from app.hitting import exact_hitting_time, mc_hitting_time, verify_hitting_bounds, verify_principal_norms
from app.instances import (
    complete_minus_matching,
    complete_sizes,
    connected_random,
    master_equation_instances,
    multiplicity_graphs,
    standard_graphs,
    standard_instances,
    subspace_instances,
)
from app.models import CheckResult, VerificationReport
from app.search import (
    SearchConfig,
    choose_delta,
    delta_policy,
    overlap_ws,
    overlap_wt,
    run_search,
    steps_for,
    verify_delta0_bounds,
)
from app.spectral import (
    SpectralData,
    eig_adjacency,
    eigenphase_report,
    lattice_gap,
    lattice_spectrum,
    lattice_sums,
    leaking_matrix,
    lift_eigenvector_U,
    multiplicity_report,
    normalization_factor,
    smallest_eigenphase,
    start_overlap,
    target_coefficients,
    target_overlap,
    verify_invariant_subspace,
    verify_master_equation,
    verify_search_correspondence,
    verify_walk_correspondence,
)

logger = logging.getLogger(__name__)

EXACT_TOL = 1e-9
COEFFICIENT_TOL = 1e-8
SLOPE_TOL = 0.15
COMPLETE_DENSE_MAX_N = 16
MC_TRIALS = 1_000_000
SCALING_SIZES = (64, 128, 256, 512, 1024)
SCALING_SLOPE_TOL = 0.1
RATIO_BAND = (0.25, 4.0)
OVERLAP_FLOOR = 0.1
SUCCESS_FLOOR = 0.2
STEPS_FACTOR = 4.0

Suite = Callable[[Optional[int]], List[VerificationReport]]


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    slope, _ = np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)
    return float(slope)


def _walk_spectrum(cap: Optional[int]) -> List[VerificationReport]:
    return [verify_walk_correspondence(g, cap) for g in standard_graphs()]


def _search_spectrum(cap: Optional[int]) -> List[VerificationReport]:
    reports = [verify_search_correspondence(g, targets, cap) for g, targets in standard_instances()]
    reports.extend(eigenphase_report(g, targets, 0.0, cap) for g, targets in standard_instances((1,)))
    return reports


def _multiplicities(cap: Optional[int]) -> List[VerificationReport]:
    return [multiplicity_report(g, cap) for g in multiplicity_graphs()]


def _invariant_subspace(cap: Optional[int]) -> List[VerificationReport]:
    return [verify_invariant_subspace(g, targets, delta, cap) for g, targets, delta in subspace_instances()]


def _unassisted_bounds(cap: Optional[int]) -> List[VerificationReport]:
    return [verify_delta0_bounds(g, targets, cap=cap) for g, targets in standard_instances()]


def _principal_norms(cap: Optional[int]) -> List[VerificationReport]:
    return [verify_principal_norms(g, targets, cap) for g, targets in standard_instances()]


def _master_equation(cap: Optional[int]) -> List[VerificationReport]:
    return [verify_master_equation(g, targets, delta, cap) for g, targets, delta in master_equation_instances()]


def _lattice_sums(cap: Optional[int]) -> List[VerificationReport]:
    report = VerificationReport(suite="lattice-sums", instance="hypercubic lattices")
    lattice = build_hypercubic(5, 3)
    closed = np.sort([value for _, value in lattice_spectrum(5, 3)])
    dense = eig_adjacency(lattice, cap)
    report.add(
        CheckResult.within("closed_form_spectrum", float(np.max(np.abs(closed - np.sort(dense.eigenvalues)))), EXACT_TOL)
    )
    report.add(CheckResult.within("closed_form_gap", lattice_gap(5, 3) - dense.gap, EXACT_TOL))
    report.add(CheckResult.within("first_power_cycle", lattice_sums(4, 1, 1) - 2.5, EXACT_TOL, 2.5))

    for dim, sides, expected in ((3, range(5, 10), 4.0 / 3.0), (5, range(3, 6), 1.0)):
        sizes = np.array([side**dim for side in sides], dtype=float)
        sums = np.array([lattice_sums(side, dim, 2) for side in sides])
        slope = loglog_slope(sizes, sums)
        report.add(CheckResult.within(f"squared_sum_slope_D{dim}", slope - expected, SLOPE_TOL, expected, slope))

    # first-power sums grow as N log N at D = 2 and N above; ratios reported for the trend
    for side, dim in ((16, 2), (32, 2), (8, 3), (12, 3)):
        n = side**dim
        scale = n * np.log(n) if dim == 2 else n
        report.add(
            CheckResult(
                check_name=f"first_power_ratio_L{side}_D{dim}",
                passed=True,
                measured=lattice_sums(side, dim, 1) / scale,
                informational=True,
            )
        )
    # D = 4 is the marginal case: squared sums grow as N log N
    for side in (4, 6):
        n = side**4
        report.add(
            CheckResult(
                check_name=f"squared_ratio_L{side}_D4",
                passed=True,
                measured=lattice_sums(side, 4, 2) / (n * np.log(n)),
                informational=True,
            )
        )
    return [report]


def _complete_graph(cap: Optional[int]) -> List[VerificationReport]:
    reports = []
    for n, m in complete_sizes():
        g = build_complete(n)
        targets = tuple(range(m))
        report = VerificationReport(suite="complete-graph", instance=f"{g.label} M={m}")
        spec = eig_adjacency(g, cap)
        expected_alpha = float(np.arccos(1.0 - m / (n - 1)))

        leaking = leaking_matrix(g, targets, cap)
        report.add(CheckResult.within("alpha_leaking", leaking.alpha - expected_alpha, EXACT_TOL, expected_alpha, leaking.alpha))
        alpha = smallest_eigenphase(g, targets, 0.0, method="bisection", spec=spec, cap=cap)
        report.add(CheckResult.within("alpha_bisection", alpha - expected_alpha, EXACT_TOL, expected_alpha, alpha))
        if n <= COMPLETE_DENSE_MAX_N:
            dense = smallest_eigenphase(g, targets, 0.0, method="dense", cap=cap)
            report.add(CheckResult.within("alpha_dense", dense - expected_alpha, EXACT_TOL, expected_alpha, dense))

        x = target_coefficients(spec, targets, alpha)
        expected_x = -1j * np.sqrt(n - m) / np.sqrt(m * (2 * n - m - 2))
        report.add(CheckResult.within("coefficients", float(np.max(np.abs(x - expected_x))), COEFFICIENT_TOL))

        lifted = lift_eigenvector_U(g, targets, leaking.principal_vector, leaking.alpha, leaking)
        norm = normalization_factor(spec, targets, alpha, 0.0, lifted.coefficients)
        report.add(CheckResult.within("normalization", norm - np.sqrt(2.0), COEFFICIENT_TOL, np.sqrt(2.0), norm))

        d_s = start_overlap(spec, targets, alpha, 0.0, x)
        report.add(CheckResult.within("start_overlap", d_s - (1.0 - m / n), EXACT_TOL, 1.0 - m / n, d_s))
        pwt2 = target_overlap(spec, targets, alpha, 0.0, x)
        expected_pwt2 = 1.0 / (1.0 + (n - 2) / (n - m))
        report.add(CheckResult.within("target_overlap", pwt2 - expected_pwt2, EXACT_TOL, expected_pwt2, pwt2))
        reports.append(report)
    return reports


def _hitting(cap: Optional[int]) -> List[VerificationReport]:
    reports = []
    closed = VerificationReport(suite="hitting", instance="complete graphs")
    for n, m in [(4, 1)] + complete_sizes():
        g = build_complete(n)
        expected = (n - m) * (n - 1) / (m * n)
        measured = exact_hitting_time(g, range(m), cap)
        closed.add(CheckResult.within(f"exact_K{n}_M{m}", measured - expected, EXACT_TOL, expected, measured))
    estimate, stderr = mc_hitting_time(build_complete(4), [0], MC_TRIALS, seed=0)
    closed.add(CheckResult.within("monte_carlo_K4_M1", (estimate - 2.25) / stderr, 5.0, 2.25, estimate))
    sparse, full = complete_minus_matching(16), build_complete(16)
    fewer_edges, more_edges = exact_hitting_time(sparse, [0], cap), exact_hitting_time(full, [0], cap)
    closed.add(CheckResult.bound("added_edges_lower_h_N16", more_edges < fewer_edges, fewer_edges, more_edges))
    reports.append(closed)

    for n in (64, 128, 256, 512, 1024):
        for g in (build_complete(n), connected_random(n, 3, 1)):
            reports.append(verify_hitting_bounds(g, [0], cap=cap, cross_check=n <= 128))
    reports.append(verify_hitting_bounds(build_hypercubic(8, 3), [0], cap=cap, cross_check=False))
    return reports


def _target_overlap_floor(cap: Optional[int]) -> List[VerificationReport]:
    """||P_delta w_t||^2 >= 0.1 with the generic delta policy on random regular graphs."""
    report = VerificationReport(suite="target-overlap", instance="random 3-regular graphs")
    for n in (32, 64, 128):
        g = connected_random(n, 3, 1)
        spec = eig_adjacency(g, cap)
        delta = delta_policy(spec.gap, 1)
        overlap = overlap_wt(g, [0], delta, spec=spec, cap=cap)
        report.add(
            CheckResult.bound(f"floor_N{n}", overlap.value >= 0.1, 0.1, overlap.value, applicable=overlap.applicable)
        )
        report.add(CheckResult.bound(f"chain_N{n}", overlap.chain_ordered, 0.0, overlap.bounds[0], overlap.applicable))
    return [report]


def policy_eigenphase(
    g: RegularGraph, targets: Sequence[int], spec: SpectralData, cap: Optional[int] = None
) -> Tuple[float, float]:
    """(delta, alpha_delta) with delta chosen by the 'auto' policy for g."""
    delta, _ = choose_delta("auto", g, spec.gap, len(targets))
    return delta, smallest_eigenphase(g, targets, delta, spec=spec, cap=cap)


def _random_cubic(n: int) -> RegularGraph:
    return connected_random(n, 3, 1)


def _eigenphase_scaling(cap: Optional[int]) -> List[VerificationReport]:
    """alpha_delta against sqrt(gM/N) under the generic delta policy, M = 1."""
    reports = []
    families = (("complete", build_complete, True), ("random 3-regular", _random_cubic, False))
    for family, build, fixed_gap in families:
        sizes, reduced, phases = [], [], []
        report = VerificationReport(suite="eigenphase-scaling", instance=f"{family} graphs M=1")
        for n in SCALING_SIZES:
            g = build(n)
            spec = eig_adjacency(g, cap)
            _, alpha = policy_eigenphase(g, choose_targets(g, 1, 0), spec, cap)
            ratio = alpha / np.sqrt(spec.gap / n)
            low, high = RATIO_BAND
            report.add(CheckResult.bound(f"ratio_N{n}", low <= ratio <= high, high, ratio))
            sizes.append(n)
            reduced.append(n / spec.gap)
            phases.append(alpha)

        slope = loglog_slope(np.array(sizes), np.array(phases))
        if fixed_gap:
            report.add(CheckResult.within("slope_vs_N", slope + 0.5, SCALING_SLOPE_TOL, -0.5, slope))
        else:
            # g drifts with N on small random graphs; the bare slope is reported only
            report.add(CheckResult(check_name="slope_vs_N", passed=True, measured=slope, informational=True))
        corrected = loglog_slope(np.array(reduced), np.array(phases))
        report.add(CheckResult.within("slope_vs_N_over_g", corrected + 0.5, SCALING_SLOPE_TOL, -0.5, corrected))
        reports.append(report)
    return reports


def _overlap_bounds(cap: Optional[int]) -> List[VerificationReport]:
    """1/D_s < 1 + alpha^2/g and ||P_delta w_t||^2 >= 0.1 under the delta policy, where alpha < phi_1/2."""
    reports = []
    for g, targets in standard_instances():
        spec = eig_adjacency(g, cap)
        delta, _ = choose_delta("auto", g, spec.gap, len(targets))
        report = VerificationReport(suite="overlap-bounds", instance=f"{g.label} T={list(targets)} delta={delta:.6g}")
        start = overlap_ws(g, targets, delta, spec=spec, cap=cap)
        report.add(
            CheckResult.bound("start_overlap_bound", start.holds, start.bound, 1.0 / start.value, start.applicable)
        )
        target = overlap_wt(g, targets, delta, spec=spec, cap=cap)
        report.add(
            CheckResult.bound(
                "target_overlap_floor", target.value >= OVERLAP_FLOOR, OVERLAP_FLOOR, target.value, target.applicable
            )
        )
        reports.append(report)
    return reports


def _policy_steps(g: RegularGraph, targets: Sequence[int], spec: SpectralData, cap: Optional[int]) -> int:
    _, alpha = policy_eigenphase(g, targets, spec, cap)
    return steps_for(alpha)


def _search_success(cap: Optional[int]) -> List[VerificationReport]:
    """p_s(Q) on the 8^3 lattice, and how Q scales with N (D = 3) and with M (D = 5)."""
    lattice = build_hypercubic(8, 3)
    spec = eig_adjacency(lattice, cap)
    delta, policy = choose_delta("auto", lattice, spec.gap, 1)
    run = run_search(lattice, SearchConfig(targets=(0,), delta=delta, policy=policy), spec=spec, cap=cap)
    success = VerificationReport(suite="search-success", instance=f"{lattice.label} M=1 delta={delta:.6g}")
    success.add(CheckResult.bound("success_at_q", run.p_s_at_q >= SUCCESS_FLOOR, SUCCESS_FLOOR, run.p_s_at_q))
    ratio = run.q_used / np.sqrt(lattice.n_vertices)
    success.add(
        CheckResult.bound("steps_over_sqrt_n", 1.0 / STEPS_FACTOR <= ratio <= STEPS_FACTOR, STEPS_FACTOR, ratio)
    )

    scaling = VerificationReport(suite="search-success", instance="lattice step counts")
    sides = (5, 6, 7, 8)
    sizes, steps = [], []
    for side in sides:
        g = build_hypercubic(side, 3)
        sizes.append(g.n_vertices)
        steps.append(_policy_steps(g, (0,), eig_adjacency(g, cap), cap))
    slope = loglog_slope(np.array(sizes), np.array(steps))
    scaling.add(CheckResult.within("steps_slope_vs_N_D3", slope - 0.5, SCALING_SLOPE_TOL, 0.5, slope))

    wide = build_hypercubic(4, 5)
    wide_spec = eig_adjacency(wide, cap)
    counts = (1, 2, 4)
    by_count = [_policy_steps(wide, choose_targets(wide, m, 0), wide_spec, cap) for m in counts]
    slope = loglog_slope(np.array(counts), np.array(by_count))
    scaling.add(CheckResult.within("steps_slope_vs_M_D5", slope + 0.5, SLOPE_TOL, -0.5, slope))
    return [success, scaling]


SUITES: Dict[str, Suite] = {
    "walk-spectrum": _walk_spectrum,
    "search-spectrum": _search_spectrum,
    "multiplicities": _multiplicities,
    "invariant-subspace": _invariant_subspace,
    "unassisted-bounds": _unassisted_bounds,
    "lattice-sums": _lattice_sums,
    "principal-norms": _principal_norms,
    "complete-graph": _complete_graph,
    "master-equation": _master_equation,
    "hitting": _hitting,
    "target-overlap": _target_overlap_floor,
    "eigenphase-scaling": _eigenphase_scaling,
    "overlap-bounds": _overlap_bounds,
    "search-success": _search_success,
}

ALIASES: Dict[str, str] = {
    "theorem1": "walk-spectrum",
    "theorem2": "search-spectrum",
    "appendixA": "multiplicities",
    "appendixC": "invariant-subspace",
    "appendixD": "unassisted-bounds",
    "appendixE": "lattice-sums",
    "appendixF": "principal-norms",
}


def resolve_suite(name: str) -> str:
    canonical = ALIASES.get(name, name)
    if canonical not in SUITES:
        known = ", ".join(sorted(SUITES) + sorted(ALIASES))
        raise PreconditionError(f"unknown suite '{name}'; known suites: {known}")
    return canonical


def run_suite(name: str, cap: Optional[int] = None) -> List[VerificationReport]:
    canonical = resolve_suite(name)
    logger.info(f"Running suite {canonical}")
    reports = SUITES[canonical](cap)
    failed = [report.instance for report in reports if not report.passed]
    if failed:
        logger.error(f"suite {canonical} failed on {failed}")
    return reports
