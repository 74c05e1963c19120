"""Matrix-free kernels for the search operators U = WO and U_delta.

Kernels act on axis 0 of (dim,) or (dim, k) arrays so the same code evolves a state,
builds dense matrices column-wise and projects whole subspace bases.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator

from app.graph import RegularGraph
from app.walk import coin_array, require_dense, walk_array

logger = logging.getLogger(__name__)


def _coin_blocks(values: np.ndarray, g: RegularGraph) -> np.ndarray:
    return values.reshape((g.degree, g.n_vertices) + values.shape[1:])


def target_overlaps(values: np.ndarray, g: RegularGraph, targets: Sequence[int]) -> np.ndarray:
    """<psi_i|values> for i in T, shape (M, ...)."""
    return _coin_blocks(values, g)[:, list(targets)].sum(axis=0) / np.sqrt(g.degree)


def _reflect_targets(values: np.ndarray, g: RegularGraph, targets: Sequence[int], weights: np.ndarray) -> None:
    # in place: values -= 2 sum_i |psi_i> weights_i
    blocks = _coin_blocks(values, g)
    blocks[:, list(targets)] -= 2.0 * weights[None] / np.sqrt(g.degree)


def oracle_array(values: np.ndarray, g: RegularGraph, targets: Sequence[int]) -> np.ndarray:
    """O = I - 2 sum_{i in T} |psi_i><psi_i|."""
    out = np.array(values, dtype=np.result_type(values, float), copy=True)
    _reflect_targets(out, g, targets, target_overlaps(out, g, targets))
    return out


def ancilla_split(values: np.ndarray) -> np.ndarray:
    return values.reshape((2, -1) + values.shape[1:])


def controlled_oracle_array(values: np.ndarray, g: RegularGraph, targets: Sequence[int], delta: float) -> np.ndarray:
    """O_delta = I - 2 sum_i |psi_i, delta><psi_i, delta| with |delta> = cos|0> + sin|1>."""
    out = np.array(values, dtype=np.result_type(values, float), copy=True)
    branches = ancilla_split(out)
    c, s = np.cos(delta), np.sin(delta)
    projections = c * target_overlaps(branches[0], g, targets) + s * target_overlaps(branches[1], g, targets)
    _reflect_targets(branches[0], g, targets, c * projections)
    _reflect_targets(branches[1], g, targets, s * projections)
    return out


def controlled_walk_array(values: np.ndarray, g: RegularGraph) -> np.ndarray:
    """W on the |0> branch and -I on the |1> branch."""
    branches = ancilla_split(values)
    return np.concatenate([walk_array(branches[0], g), -branches[1]], axis=0)


def controlled_step_array(values: np.ndarray, g: RegularGraph, targets: Sequence[int], delta: float) -> np.ndarray:
    return controlled_walk_array(controlled_oracle_array(values, g, targets, delta), g)


def step_array(values: np.ndarray, g: RegularGraph, targets: Sequence[int], delta: Optional[float]) -> np.ndarray:
    """One search step: WO without ancilla (delta None), otherwise the controlled step."""
    if delta is None:
        return walk_array(oracle_array(values, g, targets), g)
    return controlled_step_array(values, g, targets, delta)


def ancilla_gate(values: np.ndarray, gate: np.ndarray) -> np.ndarray:
    """Apply a 2x2 gate to the ancilla bit."""
    return np.tensordot(gate, ancilla_split(values), axes=1).reshape(values.shape)


def circuit_step_array(values: np.ndarray, g: RegularGraph, targets: Sequence[int], delta: float) -> np.ndarray:
    """Gate sequence X_delta, controlled-O, X_delta^T, controlled-W, Z; controls fire on |0>."""
    c, s = np.cos(delta), np.sin(delta)
    rotation = np.array([[c, s], [-s, c]])

    state = ancilla_gate(values, rotation)
    branches = ancilla_split(state)
    state = np.concatenate([oracle_array(branches[0], g, targets), branches[1]], axis=0)
    state = ancilla_gate(state, rotation.T)
    branches = ancilla_split(state)
    state = np.concatenate([walk_array(branches[0], g), branches[1]], axis=0)
    return ancilla_gate(state, np.diag([1.0, -1.0]))


def search_dimension(g: RegularGraph, delta: Optional[float]) -> int:
    return g.dimension if delta is None else 2 * g.dimension


def search_matrix(
    g: RegularGraph, targets: Sequence[int], delta: Optional[float] = None, cap: Optional[int] = None
) -> np.ndarray:
    """Dense real orthogonal U (delta None) or U_delta."""
    dimension = search_dimension(g, delta)
    require_dense(dimension, "search_matrix", cap)
    return step_array(np.eye(dimension), g, targets, delta)


def search_operator(g: RegularGraph, targets: Sequence[int], delta: Optional[float] = None) -> LinearOperator:
    """U or U_delta as a scipy LinearOperator."""
    dimension = search_dimension(g, delta)
    targets = list(targets)

    def matvec(vector: np.ndarray) -> np.ndarray:
        return step_array(np.asarray(vector).reshape(dimension), g, targets, delta)

    def rmatvec(vector: np.ndarray) -> np.ndarray:
        # U^T = O W^T and W^T = C S; both factors are symmetric involutions
        vector = np.asarray(vector).reshape(dimension)
        if delta is None:
            return oracle_array(coin_array(vector[g.shift_permutation], g.n_vertices, g.degree), g, targets)
        branches = ancilla_split(vector)
        back = np.concatenate(
            [coin_array(branches[0][g.shift_permutation], g.n_vertices, g.degree), -branches[1]], axis=0
        )
        return controlled_oracle_array(back, g, targets, delta)

    return LinearOperator((dimension, dimension), matvec=matvec, rmatvec=rmatvec, dtype=complex)


def target_probability(values: np.ndarray, g: RegularGraph, targets: Sequence[int], delta: Optional[float]) -> float:
    """p_s = ||P_delta values||^2 with P_delta projecting onto span{|psi_i, delta>}."""
    if delta is None:
        return float(np.sum(np.abs(target_overlaps(values, g, targets)) ** 2))
    branches = ancilla_split(values)
    projections = np.cos(delta) * target_overlaps(branches[0], g, targets) + np.sin(delta) * target_overlaps(
        branches[1], g, targets
    )
    return float(np.sum(np.abs(projections) ** 2))


def target_columns(g: RegularGraph, targets: Sequence[int], delta: Optional[float]) -> np.ndarray:
    """Columns |psi_i> (delta None) or |psi_i, delta> for i in T."""
    dimension = search_dimension(g, delta)
    columns = np.zeros((dimension, len(targets)))
    coins = np.arange(g.degree) * g.n_vertices
    for column, t in enumerate(targets):
        if delta is None:
            columns[coins + t, column] = 1.0 / np.sqrt(g.degree)
        else:
            columns[coins + t, column] = np.cos(delta) / np.sqrt(g.degree)
            columns[g.dimension + coins + t, column] = np.sin(delta) / np.sqrt(g.degree)
    return columns
