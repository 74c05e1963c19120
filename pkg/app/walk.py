"""Matrix-free flip-flop walk W = SC and its distinguished states.

Amplitudes live on the coin-vertex space with index h*N + u. States carrying the
control ancilla append a second block, so the ancilla bit is the highest stride:
index a*dN + h*N + u.
"""

import csv
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from app.errors import PreconditionError, TooLargeError
from app.graph import RegularGraph

logger = logging.getLogger(__name__)

DEFAULT_DENSE_CAP = 6000


def dense_cap() -> int:
    """Largest dense matrix dimension allowed; QGS_DENSE_CAP overrides the default."""
    return int(os.environ.get("QGS_DENSE_CAP", DEFAULT_DENSE_CAP))


def require_dense(dimension: int, what: str, cap: Optional[int] = None) -> None:
    """Raise TooLargeError when a dense dimension x dimension matrix is above the cap."""
    limit = dense_cap() if cap is None else cap
    if dimension > limit:
        logger.error(f"{what}: dense dimension {dimension} above cap {limit}")
        raise TooLargeError(
            f"{what} needs a dense {dimension}x{dimension} matrix, above the cap {limit}; "
            "use the matrix-free path (apply_walk, run_search) or raise QGS_DENSE_CAP"
        )


@dataclass(frozen=True, eq=False)
class WalkState:
    """Complex amplitude vector on the coin-vertex space, optionally with the ancilla."""

    amplitudes: np.ndarray
    has_ancilla: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "WalkState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def block(self, bit: int) -> np.ndarray:
        """Ancilla branch |bit> of the amplitudes."""
        if not self.has_ancilla:
            raise PreconditionError("state carries no ancilla")
        return self.amplitudes.reshape(2, -1)[bit]

    def with_ancilla(self) -> "WalkState":
        """Embed into the |0> ancilla branch."""
        if self.has_ancilla:
            return self
        return WalkState(np.concatenate([self.amplitudes, np.zeros_like(self.amplitudes)]), has_ancilla=True)

    def vertex_probabilities(self, n_vertices: int) -> np.ndarray:
        """Probability of each vertex after tracing out coin and ancilla."""
        return (np.abs(self.amplitudes) ** 2).reshape(-1, n_vertices).sum(axis=0)

    def dump_csv(self, path: Path) -> None:
        """Flat debugging dump with columns index, re, im."""
        with Path(path).open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["index", "re", "im"])
            for index, value in enumerate(self.amplitudes):
                writer.writerow([index, repr(float(value.real)), repr(float(value.imag))])


def coin_array(values: np.ndarray, n_vertices: int, degree: int) -> np.ndarray:
    """Grover coin on axis 0 of a (dN, ...) array: c <- (2/d) sum(c) - c per vertex."""
    blocks = values.reshape((degree, n_vertices) + values.shape[1:])
    mixed = (2.0 / degree) * blocks.sum(axis=0, keepdims=True) - blocks
    return mixed.reshape(values.shape)


def shift_array(values: np.ndarray, g: RegularGraph) -> np.ndarray:
    """Flip-flop shift on axis 0; the permutation is an involution."""
    return values[g.shift_permutation]


def walk_array(values: np.ndarray, g: RegularGraph) -> np.ndarray:
    return shift_array(coin_array(values, g.n_vertices, g.degree), g)


def _require_plain(g: RegularGraph, s: WalkState) -> None:
    if s.has_ancilla or s.amplitudes.shape != (g.dimension,):
        raise PreconditionError(f"expected an ancilla-free state of length {g.dimension}")


def apply_coin(g: RegularGraph, s: WalkState) -> WalkState:
    _require_plain(g, s)
    return WalkState(coin_array(s.amplitudes, g.n_vertices, g.degree))


def apply_shift(g: RegularGraph, s: WalkState) -> WalkState:
    _require_plain(g, s)
    return WalkState(shift_array(s.amplitudes, g))


def apply_walk(g: RegularGraph, s: WalkState) -> WalkState:
    """One step of W = SC."""
    _require_plain(g, s)
    return WalkState(walk_array(s.amplitudes, g))


def walk_matrix(g: RegularGraph, cap: Optional[int] = None) -> np.ndarray:
    """Dense real orthogonal W, built column by column from the matrix-free action."""
    require_dense(g.dimension, "walk_matrix", cap)
    return walk_array(np.eye(g.dimension), g)


def uniform_state(g: RegularGraph) -> WalkState:
    """|Phi_0> = (1/sqrt N) sum_v |H, v>."""
    return WalkState(np.full(g.dimension, 1.0 / np.sqrt(g.dimension)))


def bipartite_state(g: RegularGraph) -> WalkState:
    """|Phi_b>: the uniform state with its sign flipped on F-bar."""
    if g.bipartition is None:
        raise PreconditionError(f"{g.label or 'graph'} is not bipartite")
    signs = np.tile(g.bipartition.signs(g.n_vertices), g.degree)
    return WalkState(signs / np.sqrt(g.dimension))


def vertex_superposition(g: RegularGraph, u: int) -> WalkState:
    """|psi_u> = |H>|u>."""
    amplitudes = np.zeros(g.dimension)
    amplitudes[np.arange(g.degree) * g.n_vertices + u] = 1.0 / np.sqrt(g.degree)
    return WalkState(amplitudes)


def vertex_columns(g: RegularGraph, vertices: List[int]) -> np.ndarray:
    """Matrix whose columns are |psi_u> for the given vertices."""
    columns = np.zeros((g.dimension, len(vertices)))
    for column, u in enumerate(vertices):
        columns[np.arange(g.degree) * g.n_vertices + u, column] = 1.0 / np.sqrt(g.degree)
    return columns


@dataclass(frozen=True)
class EdgeStatePair:
    """|e+-> = (|h,u> +- |g,v>)/sqrt 2 for the edge e = (u, v), u < v, with (h, g) = f((u, v))."""

    edge: Tuple[int, int]
    coins: Tuple[int, int]
    n_vertices: int
    degree: int

    @property
    def indices(self) -> Tuple[int, int]:
        (u, v), (h, c) = self.edge, self.coins
        return h * self.n_vertices + u, c * self.n_vertices + v

    def plus(self) -> WalkState:
        return self._combine(1.0)

    def minus(self) -> WalkState:
        return self._combine(-1.0)

    def _combine(self, sign: float) -> WalkState:
        amplitudes = np.zeros(self.degree * self.n_vertices)
        first, second = self.indices
        amplitudes[first] = 1.0 / np.sqrt(2.0)
        amplitudes[second] = sign / np.sqrt(2.0)
        return WalkState(amplitudes)


def edge_states(g: RegularGraph) -> List[EdgeStatePair]:
    return [EdgeStatePair(edge, g.coin_map[edge], g.n_vertices, g.degree) for edge in g.edges]


def edge_indices(g: RegularGraph) -> Tuple[np.ndarray, np.ndarray]:
    """Flat indices of (h, u) and (g, v) for every stored edge, in edge order."""
    pairs = np.array(g.edges, dtype=np.int64)
    coins = np.array([g.coin_map[edge] for edge in g.edges], dtype=np.int64)
    n = g.n_vertices
    return coins[:, 0] * n + pairs[:, 0], coins[:, 1] * n + pairs[:, 1]


def edge_components(g: RegularGraph, s: WalkState) -> Tuple[np.ndarray, np.ndarray]:
    """Components <e+|s> and <e-|s> for every edge."""
    _require_plain(g, s)
    first, second = edge_indices(g)
    a, b = s.amplitudes[first], s.amplitudes[second]
    return (a + b) / np.sqrt(2.0), (a - b) / np.sqrt(2.0)


def from_edge_components(g: RegularGraph, plus: np.ndarray, minus: np.ndarray) -> WalkState:
    """Inverse of edge_components."""
    first, second = edge_indices(g)
    amplitudes = np.zeros(g.dimension, dtype=complex)
    amplitudes[first] = (plus + minus) / np.sqrt(2.0)
    amplitudes[second] = (plus - minus) / np.sqrt(2.0)
    return WalkState(amplitudes)
