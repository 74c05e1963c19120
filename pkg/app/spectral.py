"""Spectra of the walk and search operators.

Adjacency and leaking-walk eigendecompositions, the edge-basis lifts that turn them into
eigenvectors of W and U, the B(alpha) matrix whose singularity fixes the search
eigenphases, and the dense cross-checks used by the verification suites.

Sums over adjacency modes k > 0 are assembled in the paired convention: a conjugate pair
+-phi_k enters once with walk overlaps a_ki = v_ki / sqrt(2) and weight 1, the bipartite
mode at phi = pi enters with overlaps v_ki and weight 1/2, and every sum carries an overall
factor 2.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import optimize

from app.errors import (
    BracketError,
    PoleError,
    PreconditionError,
    SignError,
    SingularDenominatorError,
    UnsupportedSideError,
    VerificationError,
)
from app.graph import (
    RegularGraph,
    adjacency_matrix,
    complement,
    require_complement_connected,
    require_connected,
    validate_targets,
)
from app.models import CheckResult, VerificationReport
from app.operators import search_dimension, search_matrix, step_array, target_columns, target_probability
from app.walk import (
    WalkState,
    bipartite_state,
    dense_cap,
    from_edge_components,
    require_dense,
    uniform_state,
    vertex_columns,
    walk_matrix,
)

logger = logging.getLogger(__name__)

EIGEN_TOL = 1e-9
MATCH_TOL = 1e-8
MASTER_TOL = 1e-7
LIFT_MARGIN = 1e-6
POLE_MARGIN = 1e-9
BRACKET_MARGIN = 1e-9
BISECTION_ITERATIONS = 200
REAL_PHASE_TOL = 1e-7
CLUSTER_TOL = 1e-7
TARGET_WEIGHT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Normalized adjacency spectrum with eigenvalues cos(phi_k) in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    label: str = ""

    @property
    def n_vertices(self) -> int:
        return self.eigenvalues.size

    @property
    def gap(self) -> float:
        """g = 1 - cos(phi_1)."""
        return float(1.0 - self.eigenvalues[1])

    @cached_property
    def phases(self) -> np.ndarray:
        return np.arccos(np.clip(self.eigenvalues, -1.0, 1.0))

    @property
    def first_phase(self) -> float:
        return float(self.phases[1])

    @property
    def bipartite(self) -> bool:
        return bool(self.eigenvalues[-1] <= -1.0 + EIGEN_TOL)

    @cached_property
    def paired_modes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(cos phi_k, overlaps a_ki with shape (K, N), weight_k) for the modes k > 0."""
        cosines = self.eigenvalues[1:]
        vectors = self.eigenvectors[:, 1:].T
        at_pi = cosines <= -1.0 + EIGEN_TOL
        overlaps = np.where(at_pi[:, None], vectors, vectors / np.sqrt(2.0))
        weights = np.where(at_pi, 0.5, 1.0)
        return cosines, overlaps, weights


@dataclass(frozen=True, eq=False)
class LeakingSpectrum:
    """Spectrum of the leaking walk matrix, A with the target rows and columns removed."""

    targets: Tuple[int, ...]
    kept: np.ndarray
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def principal_value(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def principal_vector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def alpha(self) -> float:
        """Smallest eigenphase of U at delta = 0."""
        return float(np.arccos(self.principal_value))


@dataclass(frozen=True, eq=False)
class SearchEigenpair:
    """Eigenpair U|v> = e^{i phase}|v> of U (delta None) or U_delta.

    `vector` is unit-normalized. `coefficients` are x_i = sqrt(2) <psi_i,delta|v>, which are the
    target overlaps of the edge-basis lift of a unit principal vector, so the normalization
    factor of the eigenvector construction equals sqrt(2).
    """

    phase: float
    vector: WalkState
    targets: Tuple[int, ...]
    coefficients: np.ndarray
    delta: Optional[float] = None

    def residual(self, g: RegularGraph) -> float:
        image = step_array(self.vector.amplitudes, g, self.targets, self.delta)
        return float(np.linalg.norm(image - np.exp(1j * self.phase) * self.vector.amplitudes))


@dataclass(frozen=True, eq=False)
class LiftedBasis:
    """Eigenvectors of W spanning the subspace that contains every |psi_i>."""

    graph: RegularGraph
    vectors: np.ndarray
    phases: np.ndarray
    overlaps: np.ndarray


@dataclass(frozen=True)
class MasterTerms:
    """Both sides of the per-target equation and of its two summed identities."""

    per_target: List[Tuple[complex, complex]]
    summed: Tuple[complex, complex]
    weighted: Tuple[float, float]
    weighted_terms: np.ndarray


def relative_residual(left: complex, right: complex) -> float:
    scale = max(abs(left), abs(right), 1e-300)
    return float(abs(left - right) / scale)


def eig_adjacency(g: RegularGraph, cap: Optional[int] = None) -> SpectralData:
    """Full symmetric eigendecomposition of A."""
    require_dense(g.n_vertices, "eig_adjacency", cap)
    values, vectors = scipy.linalg.eigh(adjacency_matrix(g))
    values = np.clip(values[::-1], -1.0, 1.0)
    vectors = np.ascontiguousarray(vectors[:, ::-1])
    if vectors[:, 0].sum() < 0:
        vectors[:, 0] *= -1.0
    logger.debug(f"adjacency spectrum of {g.label}: gap {1.0 - values[1]:.6g}")
    return SpectralData(eigenvalues=values, eigenvectors=vectors, label=g.label)


def _lattice_cosines(side: int, dim: int) -> np.ndarray:
    momenta = np.indices((side,) * dim).reshape(dim, -1)
    return np.cos(2.0 * np.pi * momenta / side).mean(axis=0)


def lattice_spectrum(side: int, dim: int) -> List[Tuple[Tuple[int, ...], float]]:
    """Momentum labels k with cos(phi_k) = (1/D) sum_i cos(2 pi k_i / L)."""
    if side < 3:
        raise UnsupportedSideError(f"lattice side must be >= 3, got {side}")
    table = np.cos(2.0 * np.pi * np.arange(side) / side)
    return [(k, float(np.mean(table[list(k)]))) for k in itertools.product(range(side), repeat=dim)]


def lattice_gap(side: int, dim: int) -> float:
    return float(2.0 / dim * np.sin(np.pi / side) ** 2)


def lattice_sums(side: int, dim: int, power: int) -> float:
    """sum over nonzero momenta of 1 / (1 - cos phi_k)^power."""
    if side < 3:
        raise UnsupportedSideError(f"lattice side must be >= 3, got {side}")
    if power < 1:
        raise PreconditionError(f"power must be a positive integer, got {power}")
    cosines = _lattice_cosines(side, dim)[1:]
    return float(np.sum((1.0 - cosines) ** (-power)))


def leaking_matrix(g: RegularGraph, targets: Sequence[int], cap: Optional[int] = None) -> LeakingSpectrum:
    """Leaking walk matrix on V - T with its Perron eigenpair sign-fixed positive."""
    chosen = validate_targets(g, targets)
    require_complement_connected(g, chosen)
    kept = complement(g, chosen)
    require_dense(kept.size, "leaking_matrix", cap)

    matrix = adjacency_matrix(g)[np.ix_(kept, kept)]
    values, vectors = scipy.linalg.eigh(matrix)
    values = values[::-1].copy()
    vectors = np.ascontiguousarray(vectors[:, ::-1])
    if vectors[:, 0].sum() < 0:
        vectors[:, 0] *= -1.0
    if np.any(vectors[:, 0] <= 0.0):
        logger.error(f"leaking principal vector on {g.label} has non-positive entries")
        raise SignError("principal vector of the leaking matrix is not strictly positive")
    return LeakingSpectrum(targets=chosen, kept=kept, matrix=matrix, eigenvalues=values, eigenvectors=vectors)


def _edge_lift(g: RegularGraph, values: np.ndarray, phase: float) -> Tuple[np.ndarray, np.ndarray]:
    # <e+-|Phi> = sqrt(2/d) (a_u +- a_v) / (1 +- e^{i phase}) with the stored u < v orientation
    u, v = np.array(g.edges, dtype=np.int64).T
    rotation = np.exp(1j * phase)
    scale = np.sqrt(2.0 / g.degree)
    return scale * (values[u] + values[v]) / (1.0 + rotation), scale * (values[u] - values[v]) / (1.0 - rotation)


def _apply_adjacency(g: RegularGraph, values: np.ndarray) -> np.ndarray:
    return values[g.neighbor_table].mean(axis=1)


def lift_eigenvector_W(g: RegularGraph, a: np.ndarray, phase: float) -> WalkState:
    """Unit eigenvector of W with eigenvalue e^{i phase} built from A a = cos(phase) a.

    The result satisfies <psi_u|Phi> = a_u / sqrt(2) for unit a; lifting with -phase gives the
    complex conjugate.
    """
    if not LIFT_MARGIN < abs(phase) < np.pi - LIFT_MARGIN:
        raise SingularDenominatorError(f"phase {phase} too close to 0 or pi for the edge-basis lift")
    vector = np.asarray(a, dtype=float)
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        raise PreconditionError("cannot lift the zero vector")
    vector = vector / norm
    residual = np.linalg.norm(_apply_adjacency(g, vector) - np.cos(phase) * vector)
    if residual > EIGEN_TOL:
        raise PreconditionError(f"a is not an adjacency eigenvector for cos(phase): residual {residual:.3g}")

    state = from_edge_components(g, *_edge_lift(g, vector, phase))
    return WalkState(state.amplitudes / state.norm())


def lift_eigenvector_U(
    g: RegularGraph,
    targets: Sequence[int],
    values: np.ndarray,
    phase: float,
    leaking: Optional[LeakingSpectrum] = None,
) -> SearchEigenpair:
    """Eigenvector of U = WO from an eigenvector of the leaking matrix.

    The vector is extended by zero on T and lifted edge by edge, which leaves every edge
    inside T empty. Target coefficients come from the neighbor sums
    x_i = -i / (d sin(phase)) * sum_{j in N(i), j not in T} Lambda_j.
    """
    chosen = validate_targets(g, targets)
    leaking = leaking if leaking is not None else leaking_matrix(g, chosen)
    if not 0.0 < phase < np.pi:
        raise PreconditionError(f"phase must lie in (0, pi), got {phase}")

    vector = np.asarray(values, dtype=float)
    if vector.shape != (leaking.kept.size,):
        raise PreconditionError(f"expected a vector of length {leaking.kept.size}, got shape {vector.shape}")
    vector = vector / np.linalg.norm(vector)
    residual = np.linalg.norm(leaking.matrix @ vector - np.cos(phase) * vector)
    if residual > EIGEN_TOL:
        raise PreconditionError(f"not a leaking-matrix eigenvector for cos(phase): residual {residual:.3g}")
    if abs(np.cos(phase) - leaking.principal_value) < EIGEN_TOL and np.any(vector <= 0.0):
        logger.error(f"principal vector for {g.label} supplied with non-positive entries")
        raise SignError("the principal vector must be strictly positive")

    extended = np.zeros(g.n_vertices)
    extended[leaking.kept] = vector
    raw = from_edge_components(g, *_edge_lift(g, extended, phase))
    neighbor_sums = extended[g.neighbor_table[list(chosen)]].sum(axis=1)
    coefficients = -1j * neighbor_sums / (g.degree * np.sin(phase))
    return SearchEigenpair(
        phase=float(phase),
        vector=WalkState(raw.amplitudes / np.sqrt(2.0)),
        targets=chosen,
        coefficients=coefficients,
    )


def walk_eigensystem(g: RegularGraph, cap: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and orthonormal eigenvectors of W from its complex Schur form."""
    triangular, vectors = scipy.linalg.schur(walk_matrix(g, cap), output="complex")
    return np.diag(triangular).copy(), vectors


def search_eigensystem(
    g: RegularGraph, targets: Sequence[int], delta: Optional[float] = None, cap: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and orthonormal eigenvectors of U or U_delta."""
    triangular, vectors = scipy.linalg.schur(search_matrix(g, targets, delta, cap), output="complex")
    return np.diag(triangular).copy(), vectors


def _complex_mask(phases: np.ndarray) -> np.ndarray:
    magnitude = np.abs(phases)
    return (magnitude > REAL_PHASE_TOL) & (magnitude < np.pi - REAL_PHASE_TOL)


def _paired_phases(cosines: np.ndarray) -> np.ndarray:
    phases = np.arccos(np.clip(cosines, -1.0, 1.0))
    inner = phases[_complex_mask(phases)]
    return np.sort(np.concatenate([inner, -inner]))


def _multiset_distance(expected: np.ndarray, measured: np.ndarray) -> float:
    if expected.size != measured.size:
        return float("inf")
    if expected.size == 0:
        return 0.0
    return float(np.max(np.abs(np.sort(expected) - np.sort(measured))))


def _clusters(values: np.ndarray, offset: int = 0) -> List[Tuple[float, List[int]]]:
    groups: List[Tuple[float, List[int]]] = []
    for index, value in enumerate(values):
        if groups and abs(groups[-1][0] - value) < CLUSTER_TOL:
            groups[-1][1].append(index + offset)
        else:
            groups.append((float(value), [index + offset]))
    return groups


def _projector_residual(
    g: RegularGraph, spec: SpectralData, phases: np.ndarray, vectors: np.ndarray, mask: np.ndarray
) -> float:
    # compare eigenspace projectors, never individual eigenvectors
    psi = vertex_columns(g, list(range(g.n_vertices)))
    worst = 0.0
    for value, members in _clusters(spec.eigenvalues[1:], offset=1):
        phase = float(np.arccos(np.clip(value, -1.0, 1.0)))
        if not REAL_PHASE_TOL < phase < np.pi - REAL_PHASE_TOL:
            continue
        block = spec.eigenvectors[:, members]
        selected = np.flatnonzero(mask & (np.abs(phases - phase) < CLUSTER_TOL))
        if selected.size != len(members):
            return float("inf")
        overlaps = psi.T @ vectors[:, selected]
        worst = max(worst, float(np.max(np.abs(2.0 * overlaps @ overlaps.conj().T - block @ block.T))))
    return worst


def verify_walk_correspondence(
    g: RegularGraph,
    cap: Optional[int] = None,
    spec: Optional[SpectralData] = None,
    eigensystem: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> VerificationReport:
    """Non-real W eigenphases against +-arccos of the adjacency spectrum, counts and overlaps."""
    require_connected(g)
    logger.info(f"Checking walk spectrum correspondence on {g.label}")
    report = VerificationReport(suite="walk-spectrum", instance=g.label)
    spec = spec or eig_adjacency(g, cap)
    eigenvalues, vectors = eigensystem or walk_eigensystem(g, cap)
    phases = np.angle(eigenvalues)
    mask = _complex_mask(phases)

    expected = _paired_phases(spec.eigenvalues[1:])
    measured = np.sort(phases[mask])
    report.add(CheckResult.within("phase_correspondence", _multiset_distance(expected, measured), MATCH_TOL))

    expected_count = 2 * g.n_vertices - (4 if g.is_bipartite else 2)
    report.add(CheckResult.counts("complex_eigenvalue_count", expected_count, int(mask.sum())))
    report.add(
        CheckResult.within("overlap_projectors", _projector_residual(g, spec, phases, vectors, mask), MATCH_TOL)
    )
    return report


def expected_real_multiplicities(g: RegularGraph) -> Tuple[int, int]:
    """Multiplicities of the W eigenvalues +1 and -1 on a connected graph."""
    base = g.n_vertices * g.degree // 2 - g.n_vertices
    return (base + 2, base + 2) if g.is_bipartite else (base + 2, base)


def _measure_real_multiplicities(eigenvalues: np.ndarray) -> Tuple[int, int]:
    plus = int(np.sum(np.abs(eigenvalues - 1.0) < MATCH_TOL))
    minus = int(np.sum(np.abs(eigenvalues + 1.0) < MATCH_TOL))
    return plus, minus


def count_real_multiplicities(g: RegularGraph, cap: Optional[int] = None) -> Tuple[int, int]:
    """Measured multiplicities of +1 and -1 in the W spectrum, checked against the counting formulas."""
    require_connected(g)
    eigenvalues, _ = walk_eigensystem(g, cap)
    measured = _measure_real_multiplicities(eigenvalues)
    expected = expected_real_multiplicities(g)
    if measured != expected:
        logger.error(f"{g.label}: real multiplicities {measured} differ from expected {expected}")
        raise VerificationError(f"{g.label}: real multiplicities {measured} differ from expected {expected}")
    return measured


def multiplicity_report(
    g: RegularGraph, cap: Optional[int] = None, eigenvalues: Optional[np.ndarray] = None
) -> VerificationReport:
    require_connected(g)
    report = VerificationReport(suite="multiplicities", instance=g.label)
    if eigenvalues is None:
        eigenvalues, _ = walk_eigensystem(g, cap)
    plus, minus = _measure_real_multiplicities(eigenvalues)
    expected_plus, expected_minus = expected_real_multiplicities(g)
    report.add(CheckResult.counts("multiplicity_plus_one", expected_plus, plus))
    report.add(CheckResult.counts("multiplicity_minus_one", expected_minus, minus))
    return report


def invariant_subspace_basis(
    g: RegularGraph, targets: Sequence[int], delta: Optional[float] = None, cap: Optional[int] = None
) -> np.ndarray:
    """Orthonormal basis of the search subspace.

    Complex-eigenvalue eigenvectors of W plus |Phi_0> and, for bipartite graphs, |Phi_b>; with
    the ancilla these sit in the |0> branch and |psi_t>|1> is added for every target.
    """
    eigenvalues, vectors = walk_eigensystem(g, cap)
    columns = [vectors[:, _complex_mask(np.angle(eigenvalues))], uniform_state(g).amplitudes[:, None]]
    if g.is_bipartite:
        columns.append(bipartite_state(g).amplitudes[:, None])
    block = np.hstack(columns)
    if delta is not None:
        traps = np.vstack([np.zeros((g.dimension, len(targets))), vertex_columns(g, list(targets))])
        block = np.hstack([np.vstack([block, np.zeros_like(block)]), traps])
    return scipy.linalg.orth(block)


def verify_invariant_subspace(
    g: RegularGraph, targets: Sequence[int], delta: Optional[float] = None, cap: Optional[int] = None
) -> VerificationReport:
    """Dimension of the search subspace and the size of U_delta's leak out of it."""
    chosen = validate_targets(g, targets)
    require_connected(g)
    report = VerificationReport(suite="invariant-subspace", instance=f"{g.label} T={list(chosen)} delta={delta}")
    basis = invariant_subspace_basis(g, chosen, delta, cap)

    expected = 2 * g.n_vertices - (2 if g.is_bipartite else 1) + (len(chosen) if delta is not None else 0)
    report.add(CheckResult.counts("dimension", expected, basis.shape[1]))

    image = step_array(basis, g, chosen, delta)
    leak = image - basis @ (basis.conj().T @ image)
    report.add(CheckResult.within("invariance_residual", float(np.max(np.linalg.norm(leak, axis=0))), EIGEN_TOL))
    return report


def _check_poles(spec: SpectralData, alpha: float, delta: float) -> None:
    distance = float(np.min(np.abs(alpha - spec.phases)))
    if delta != 0.0:
        distance = min(distance, abs(alpha - np.pi))
    if distance < POLE_MARGIN:
        logger.error(f"alpha={alpha} within {distance:.3g} of a walk eigenphase")
        raise PoleError(f"alpha={alpha} sits on a cotangent pole (distance {distance:.3g})")


def _b_matrix(spec: SpectralData, targets: Sequence[int], alpha: float, delta: float) -> np.ndarray:
    cosines, overlaps, weights = spec.paired_modes
    block = overlaps[:, list(targets)]
    factor = 2.0 * weights * np.sin(alpha) / (cosines - np.cos(alpha))
    size = len(targets)
    core = np.full((size, size), 1.0 / (spec.n_vertices * np.tan(alpha / 2.0))) + (block * factor[:, None]).T @ block
    matrix = np.cos(delta) ** 2 * core - np.sin(delta) ** 2 * np.tan(alpha / 2.0) * np.eye(size)
    return 0.5 * (matrix + matrix.T)


def b_matrix(spec: SpectralData, targets: Sequence[int], alpha: float, delta: float = 0.0) -> np.ndarray:
    """B_delta(alpha)_ij = <w_j,delta|psi_i,delta>; singular exactly at the search eigenphases."""
    _check_poles(spec, alpha, delta)
    return _b_matrix(spec, targets, alpha, delta)


def null_vector(matrix: np.ndarray) -> np.ndarray:
    """Unit eigenvector of the smallest-magnitude eigenvalue, oriented to a positive sum."""
    values, vectors = scipy.linalg.eigh(matrix)
    vector = vectors[:, int(np.argmin(np.abs(values)))]
    return -vector if vector.sum() < 0 else vector


def _bisect_smallest_phase(spec: SpectralData, targets: Sequence[int], delta: float) -> float:
    # the top eigenvalue of B_delta decreases strictly in alpha, from +inf near 0
    lower, upper = BRACKET_MARGIN, spec.first_phase - BRACKET_MARGIN

    def top(alpha: float) -> float:
        return float(scipy.linalg.eigvalsh(_b_matrix(spec, targets, alpha, delta))[-1])

    at_lower, at_upper = top(lower), top(upper)
    logger.debug(f"bisection bracket ({lower:.3g}, {upper:.6g}) values ({at_lower:.3g}, {at_upper:.3g})")
    if not at_lower > 0.0 > at_upper:
        raise BracketError(f"B_delta top eigenvalue does not change sign on ({lower}, {upper})")
    return float(optimize.bisect(top, lower, upper, xtol=1e-15, maxiter=BISECTION_ITERATIONS))


def _operator_delta(delta: float) -> Optional[float]:
    return None if delta == 0.0 else delta


def _dense_smallest_phase(g: RegularGraph, targets: Sequence[int], delta: float, cap: Optional[int]) -> float:
    return dense_search_eigenpair(g, targets, _operator_delta(delta), cap).phase


def smallest_eigenphase(
    g: RegularGraph,
    targets: Sequence[int],
    delta: float = 0.0,
    method: str = "auto",
    spec: Optional[SpectralData] = None,
    cap: Optional[int] = None,
) -> float:
    """alpha_delta, the phase of the eigenvalue of U_delta closest to 1.

    Methods: "dense" (Schur form of U_delta), "bisection" (root of B_delta on (0, phi_1)),
    "leaking" (arccos of the leaking principal value, delta = 0 only) and "auto", which
    bisects and falls back to the dense spectrum when the bracket fails.
    """
    chosen = validate_targets(g, targets)
    require_complement_connected(g, chosen)
    match method:
        case "dense":
            return _dense_smallest_phase(g, chosen, delta, cap)
        case "bisection":
            return _bisect_smallest_phase(spec or eig_adjacency(g, cap), chosen, delta)
        case "leaking":
            if delta != 0.0:
                raise PreconditionError("the leaking-matrix shortcut only applies at delta = 0")
            return leaking_matrix(g, chosen, cap).alpha
        case "auto":
            try:
                return _bisect_smallest_phase(spec or eig_adjacency(g, cap), chosen, delta)
            except BracketError as e:
                logger.warning(f"{e}; falling back to the dense search spectrum")
                return _dense_smallest_phase(g, chosen, delta, cap)
        case _:
            raise PreconditionError(f"unknown eigenphase method '{method}'")


def eigenphase_report(
    g: RegularGraph, targets: Sequence[int], delta: float = 0.0, cap: Optional[int] = None
) -> VerificationReport:
    """Agreement of the bisection, dense and (at delta = 0) leaking-matrix eigenphases."""
    chosen = validate_targets(g, targets)
    report = VerificationReport(suite="eigenphase", instance=f"{g.label} T={list(chosen)} delta={delta}")
    bisected = smallest_eigenphase(g, chosen, delta, method="bisection", cap=cap)
    dense = smallest_eigenphase(g, chosen, delta, method="dense", cap=cap)
    report.add(CheckResult.within("dense_vs_bisection", dense - bisected, MATCH_TOL, expected=dense, measured=bisected))
    if delta == 0.0:
        leaking = smallest_eigenphase(g, chosen, 0.0, method="leaking", cap=cap)
        report.add(CheckResult.within("leaking_vs_dense", leaking - dense, MATCH_TOL, expected=leaking, measured=dense))
    return report


def normalization_factor(
    spec: SpectralData, targets: Sequence[int], alpha: float, delta: float, coefficients: np.ndarray
) -> float:
    """Norm of sum_i x_i (|psi_i,delta> + i|w_i,delta>), evaluated through |w_s>."""
    cosines, overlaps, weights = spec.paired_modes
    projections = overlaps[:, list(targets)] @ coefficients
    half = alpha / 2.0
    first = 2.0 * np.cos(delta) ** 2 / spec.n_vertices / np.tan(half) ** 2 * abs(coefficients.sum()) ** 2
    second = (
        4.0
        * np.cos(delta) ** 2
        * np.sum(weights * np.abs(projections) ** 2 * np.sin(alpha) ** 2 / (np.cos(alpha) - cosines) ** 2)
    )
    third = 2.0 * np.sin(delta) ** 2 * np.tan(half) ** 2 * np.sum(np.abs(coefficients) ** 2)
    return float(np.sqrt(first + second + third))


def target_coefficients(spec: SpectralData, targets: Sequence[int], alpha: float, delta: float = 0.0) -> np.ndarray:
    """x_i from the null vector of B_delta(alpha), scaled so the normalization factor is sqrt(2)."""
    trial = -1j * null_vector(_b_matrix(spec, targets, alpha, delta))
    return trial * np.sqrt(2.0) / normalization_factor(spec, targets, alpha, delta, trial)


def start_overlap(spec: SpectralData, targets: Sequence[int], alpha: float, delta: float, coefficients: np.ndarray) -> float:
    """D_s = |<Phi_0|w_s>|^2."""
    norm_sq = normalization_factor(spec, targets, alpha, delta, coefficients) ** 2
    return float(
        2.0
        * np.cos(delta) ** 2
        / (norm_sq * spec.n_vertices)
        / np.tan(alpha / 2.0) ** 2
        * abs(coefficients.sum()) ** 2
    )


def target_overlap(spec: SpectralData, targets: Sequence[int], alpha: float, delta: float, coefficients: np.ndarray) -> float:
    """||P_delta|w_t>||^2 = 2 sum |x_i|^2 / N^2."""
    norm_sq = normalization_factor(spec, targets, alpha, delta, coefficients) ** 2
    return float(2.0 * np.sum(np.abs(coefficients) ** 2) / norm_sq)


def target_overlap_bounds(
    spec: SpectralData, targets: Sequence[int], alpha: float, delta: float, coefficients: np.ndarray
) -> List[float]:
    """Chain of upper bounds on 1/||P_delta w_t||^2, from the exact value to the closed form.

    The first entry equals the reciprocal, the second relaxes every mode to the gap, the third
    rewrites it with the summed identity and equals the second, and the fourth needs only
    g, M and N. The chain is ordered when alpha < phi_1 / 2.
    """
    cosines, overlaps, weights = spec.paired_modes
    projections = overlaps[:, list(targets)] @ coefficients
    c2, s2 = np.cos(delta) ** 2, np.sin(delta) ** 2
    t2 = np.tan(alpha / 2.0) ** 2
    norm_x = float(np.sum(np.abs(coefficients) ** 2))
    ratio = abs(coefficients.sum()) ** 2 / (spec.n_vertices * norm_x)
    cos_alpha, cos_first = np.cos(alpha), spec.eigenvalues[1]
    mode_mass = 2.0 * weights * np.abs(projections) ** 2 / norm_x
    gap = spec.gap

    exact = c2 / t2 * ratio + c2 * np.sum(mode_mass * np.sin(alpha) ** 2 / (cos_alpha - cosines) ** 2) + s2 * t2
    relaxed = (
        c2 / t2 * ratio
        + c2 * np.sin(alpha) ** 2 / (cos_alpha - cos_first) * np.sum(mode_mass / (cos_alpha - cosines))
        + s2 * t2
    )
    substituted = c2 / t2 * ratio * (1.0 - cos_first) / (cos_alpha - cos_first) - s2 * t2 * (1.0 + cos_first) / (
        cos_alpha - cos_first
    )
    closed = c2 / t2 * 2.0 * len(targets) / spec.n_vertices - s2 * t2 * (2.0 - gap) / gap
    return [float(exact), float(relaxed), float(substituted), float(closed)]


def master_equation_terms(
    spec: SpectralData, targets: Sequence[int], alpha: float, delta: float, coefficients: np.ndarray
) -> MasterTerms:
    """Left and right sides of the per-target equation and its two summed forms."""
    cosines, overlaps, weights = spec.paired_modes
    block = overlaps[:, list(targets)]
    projections = block @ coefficients
    n = spec.n_vertices
    half = alpha / 2.0
    tan2_delta = np.tan(delta) ** 2
    gaps = np.cos(alpha) - cosines
    total = coefficients.sum()

    per_target = []
    for j in range(len(targets)):
        left = total / (n * np.tan(half)) - tan2_delta * np.tan(half) * coefficients[j]
        right = np.sum(2.0 * weights * block[:, j] * projections * np.sin(alpha) / gaps)
        per_target.append((complex(left), complex(right)))

    summed_left = (len(targets) / n / np.sin(half) ** 2 - tan2_delta / np.cos(half) ** 2) * total
    summed_right = np.sum(4.0 * weights * block.sum(axis=1) * projections / gaps)

    weighted_terms = 4.0 * weights * np.abs(projections) ** 2 / gaps
    weighted_left = abs(total) ** 2 / n / np.sin(half) ** 2 - tan2_delta / np.cos(half) ** 2 * np.sum(
        np.abs(coefficients) ** 2
    )
    return MasterTerms(
        per_target=per_target,
        summed=(complex(summed_left), complex(summed_right)),
        weighted=(float(weighted_left), float(np.sum(weighted_terms))),
        weighted_terms=weighted_terms,
    )


def dense_search_eigenpair(
    g: RegularGraph,
    targets: Sequence[int],
    delta: Optional[float] = None,
    cap: Optional[int] = None,
) -> SearchEigenpair:
    """Smallest positive eigenphase eigenpair from the dense Schur form, phase-fixed so sum x is -i|sum x|."""
    chosen = validate_targets(g, targets)
    eigenvalues, vectors = search_eigensystem(g, chosen, delta, cap)
    phases = np.angle(eigenvalues)
    overlaps = np.sqrt(2.0) * (target_columns(g, chosen, delta).T @ vectors)
    # walk eigenvectors orthogonal to every target survive in U unchanged; skip them
    candidates = np.flatnonzero((phases > REAL_PHASE_TOL) & (np.linalg.norm(overlaps, axis=0) > TARGET_WEIGHT_TOL))
    index = candidates[np.argmin(phases[candidates])]
    vector = vectors[:, index]
    coefficients = overlaps[:, index]
    rotation = np.exp(1j * (-np.pi / 2.0 - np.angle(coefficients.sum())))
    return SearchEigenpair(
        phase=float(phases[index]),
        vector=WalkState(vector * rotation, has_ancilla=delta is not None),
        targets=chosen,
        coefficients=coefficients * rotation,
        delta=delta,
    )


def eigenvector_overlaps(g: RegularGraph, pair: SearchEigenpair) -> Tuple[float, float]:
    """(D_s, ||P_delta w_t||^2) from an explicit unit eigenvector and its conjugate."""
    amplitudes = pair.vector.amplitudes
    symmetric = np.sqrt(2.0) * amplitudes.real
    antisymmetric = np.sqrt(2.0) * 1j * amplitudes.imag
    start = uniform_state(g)
    if pair.delta is not None:
        start = start.with_ancilla()
    d_s = abs(start.inner(WalkState(symmetric, has_ancilla=start.has_ancilla))) ** 2
    return float(d_s), target_probability(antisymmetric, g, pair.targets, pair.delta)


def cosine_similarity(first: np.ndarray, second: np.ndarray) -> float:
    """|<a|b>| / (|a||b|), insensitive to global phase and scale."""
    return float(abs(np.vdot(first, second)) / (np.linalg.norm(first) * np.linalg.norm(second)))


def verify_search_correspondence(
    g: RegularGraph, targets: Sequence[int], cap: Optional[int] = None
) -> VerificationReport:
    """Non-real U eigenphases against the leaking spectrum, plus the lifted principal eigenpair."""
    chosen = validate_targets(g, targets)
    logger.info(f"Checking search spectrum correspondence on {g.label} with T={list(chosen)}")
    report = VerificationReport(suite="search-spectrum", instance=f"{g.label} T={list(chosen)}")
    leaking = leaking_matrix(g, chosen, cap)
    eigenvalues, _ = search_eigensystem(g, chosen, None, cap)
    phases = np.angle(eigenvalues)
    mask = _complex_mask(phases)

    expected = _paired_phases(leaking.eigenvalues)
    report.add(
        CheckResult.within("phase_correspondence", _multiset_distance(expected, np.sort(phases[mask])), MATCH_TOL)
    )
    report.add(CheckResult.counts("complex_eigenvalue_count", expected.size, int(mask.sum())))

    pair = lift_eigenvector_U(g, chosen, leaking.principal_vector, leaking.alpha, leaking)
    report.add(CheckResult.within("lift_residual", pair.residual(g), MATCH_TOL))

    x = pair.coefficients
    off_axis = float(np.max(np.abs(x.real)))
    report.add(
        CheckResult(
            check_name="negative_imaginary",
            passed=bool(off_axis < MATCH_TOL and np.all(x.imag < 0.0)),
            residual=off_axis,
            measured=float(np.max(x.imag)),
        )
    )
    dense = dense_search_eigenpair(g, chosen, None, cap)
    report.add(
        CheckResult.within("coefficient_alignment", 1.0 - cosine_similarity(dense.coefficients, x), 1e-6)
    )
    return report


def build_lifted_basis(g: RegularGraph, spec: Optional[SpectralData] = None, cap: Optional[int] = None) -> LiftedBasis:
    """Lift every adjacency mode into W eigenvectors: Phi_0, the pairs Phi_k and Phi_k*, and Phi_b."""
    require_connected(g)
    require_dense(g.dimension, "build_lifted_basis", cap)
    spec = spec or eig_adjacency(g, cap)
    n = g.n_vertices

    vectors = [uniform_state(g).amplitudes]
    phases = [0.0]
    overlaps = [np.full(n, 1.0 / np.sqrt(n))]
    for k in range(1, n):
        phase = float(spec.phases[k])
        if phase >= np.pi - LIFT_MARGIN:
            bipartite = bipartite_state(g)
            vectors.append(bipartite.amplitudes)
            phases.append(np.pi)
            overlaps.append(vertex_columns(g, list(range(n))).T @ bipartite.amplitudes.real)
            continue
        lifted = lift_eigenvector_W(g, spec.eigenvectors[:, k], phase)
        for sign in (1.0, -1.0):
            vectors.append(lifted.amplitudes if sign > 0 else lifted.amplitudes.conj())
            phases.append(sign * phase)
            overlaps.append(spec.eigenvectors[:, k] / np.sqrt(2.0))
    return LiftedBasis(graph=g, vectors=np.column_stack(vectors), phases=np.array(phases), overlaps=np.array(overlaps))


def w_vector(basis: LiftedBasis, j: int, alpha: float, delta: Optional[float] = None) -> WalkState:
    """|w_j,delta> = cos(delta)|w_j>|0> - sin(delta) tan(alpha/2)|psi_j>|1>, |w_j> = sum_k a_kj cot((alpha-phi_k)/2)|Phi_k>."""
    distance = float(np.min(np.abs(alpha - basis.phases)))
    if distance < POLE_MARGIN or (delta is not None and abs(alpha - np.pi) < POLE_MARGIN):
        raise PoleError(f"alpha={alpha} sits on a cotangent pole (distance {distance:.3g})")
    weights = basis.overlaps[:, j] / np.tan((alpha - basis.phases) / 2.0)
    walk_part = basis.vectors @ weights
    if delta is None:
        return WalkState(walk_part)
    g = basis.graph
    trap = -np.sin(delta) * np.tan(alpha / 2.0) * vertex_columns(g, [j])[:, 0]
    return WalkState(np.concatenate([np.cos(delta) * walk_part, trap]), has_ancilla=True)


def construct_search_eigenvector(
    basis: LiftedBasis, targets: Sequence[int], alpha: float, delta: Optional[float], coefficients: np.ndarray
) -> WalkState:
    """(1/sqrt 2) sum_i x_i (|psi_i,delta> + i|w_i,delta>), a unit eigenvector of U_delta."""
    columns = target_columns(basis.graph, list(targets), delta)
    total = np.zeros(columns.shape[0], dtype=complex)
    for column, (t, x) in enumerate(zip(targets, coefficients)):
        total += x * (columns[:, column] + 1j * w_vector(basis, t, alpha, delta).amplitudes)
    return WalkState(total / np.sqrt(2.0), has_ancilla=delta is not None)


def verify_master_equation(
    g: RegularGraph, targets: Sequence[int], delta: float = 0.0, cap: Optional[int] = None
) -> VerificationReport:
    """Per-target equation and its summed identities, evaluated on the computed alpha_delta and x."""
    chosen = validate_targets(g, targets)
    require_complement_connected(g, chosen)
    report = VerificationReport(suite="master-equation", instance=f"{g.label} T={list(chosen)} delta={delta:.6g}")
    spec = eig_adjacency(g, cap)
    operator_delta = _operator_delta(delta)
    if search_dimension(g, operator_delta) <= (cap if cap is not None else dense_cap()):
        pair = dense_search_eigenpair(g, chosen, operator_delta, cap)
        alpha, coefficients = pair.phase, pair.coefficients
    else:
        alpha = _bisect_smallest_phase(spec, chosen, delta)
        coefficients = target_coefficients(spec, chosen, alpha, delta)
    logger.info(f"master equation on {report.instance}: alpha={alpha:.10g}")

    terms = master_equation_terms(spec, chosen, alpha, delta, coefficients)
    for t, (left, right) in zip(chosen, terms.per_target):
        report.add(CheckResult.within(f"per_target[j={t}]", relative_residual(left, right), MASTER_TOL))
    report.add(CheckResult.within("summed_identity", relative_residual(*terms.summed), MASTER_TOL))
    report.add(
        CheckResult.within(
            "weighted_identity",
            relative_residual(*terms.weighted),
            MASTER_TOL,
            expected=terms.weighted[0],
            measured=terms.weighted[1],
        )
    )
    below_gap = alpha < spec.first_phase
    report.add(
        CheckResult.bound(
            "weighted_terms_positive",
            holds=bool(np.all(terms.weighted_terms >= 0.0) and terms.weighted[1] > 0.0),
            expected=0.0,
            measured=float(terms.weighted[1]),
            applicable=below_gap,
        )
    )
    return report