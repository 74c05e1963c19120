"""Regular graph construction, validation and the edge-to-coin map."""

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from app.errors import (
    ConnectivityError,
    GenerationError,
    InvalidSizeError,
    ParityError,
    PreconditionError,
    RegularityError,
    UnsupportedSideError,
)

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
CoinMap = Dict[Edge, Tuple[int, int]]

MAX_RESTARTS = 10_000
MAX_TARGET_DRAWS = 1_000


@dataclass(frozen=True)
class Bipartition:
    """Vertex 2-coloring (F, F-bar); F holds the smallest vertex of every component."""

    side: Tuple[int, ...]
    other: Tuple[int, ...]
    components: int = 1

    @property
    def per_component(self) -> bool:
        """True when the coloring was assembled over several connected components."""
        return self.components > 1

    def signs(self, n_vertices: int) -> np.ndarray:
        """+1 on F and -1 on F-bar."""
        signs = -np.ones(n_vertices)
        signs[list(self.side)] = 1.0
        return signs


@dataclass(frozen=True, eq=False)
class RegularGraph:
    """Simple undirected d-regular graph with a fixed coin map f."""

    n_vertices: int
    degree: int
    edges: Tuple[Edge, ...]
    coin_map: CoinMap = field(repr=False)
    bipartition: Optional[Bipartition] = None
    label: str = ""
    lattice: Optional[Tuple[int, int]] = None
    neighbor_table: np.ndarray = field(init=False, repr=False)
    return_coin: np.ndarray = field(init=False, repr=False)
    shift_permutation: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n, d = self.n_vertices, self.degree
        neighbors = np.full((n, d), -1, dtype=np.int64)
        back = np.full((n, d), -1, dtype=np.int64)
        for (u, v), (h, g) in self.coin_map.items():
            neighbors[u, h] = v
            back[u, h] = g
        if np.any(neighbors < 0):
            raise RegularityError(f"coin map of {self.label or 'graph'} leaves coin slots unassigned")

        # index layout h*N + u; S sends (h, u) to (g, v)
        coins = np.arange(d)[None, :]
        vertices = np.arange(n)[:, None]
        permutation = np.empty(d * n, dtype=np.int64)
        permutation[(coins * n + vertices).ravel()] = (back * n + neighbors).ravel()

        object.__setattr__(self, "neighbor_table", neighbors)
        object.__setattr__(self, "return_coin", back)
        object.__setattr__(self, "shift_permutation", permutation)

    @property
    def dimension(self) -> int:
        """Dimension dN of the coin-vertex space."""
        return self.degree * self.n_vertices

    @property
    def is_bipartite(self) -> bool:
        return self.bipartition is not None

    @property
    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def to_networkx(self) -> nx.Graph:
        """Plain networkx view used for connectivity queries."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_vertices))
        graph.add_edges_from(self.edges)
        return graph

    def neighbors(self, u: int) -> List[int]:
        """Neighbors of u ordered by the coin index at u."""
        return self.neighbor_table[u].tolist()


def _normalize_edges(n_vertices: int, edges: Iterable[Sequence[int]]) -> Tuple[Edge, ...]:
    normalized = []
    for raw in edges:
        u, v = int(raw[0]), int(raw[1])
        if u == v:
            raise RegularityError(f"self-loop at vertex {u}")
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise RegularityError(f"edge ({u}, {v}) outside vertex range 0..{n_vertices - 1}")
        normalized.append((min(u, v), max(u, v)))
    ordered = tuple(sorted(normalized))
    if len(set(ordered)) != len(ordered):
        raise RegularityError("edge list contains a repeated edge")
    return ordered


def build_coin_map(edges: Sequence[Edge]) -> CoinMap:
    """Assign coins by walking the lexicographically sorted edges with a per-vertex counter."""
    counters: Counter = Counter()
    coin_map: CoinMap = {}
    for u, v in sorted((min(a, b), max(a, b)) for a, b in edges):
        h, g = counters[u], counters[v]
        counters[u] += 1
        counters[v] += 1
        coin_map[(u, v)] = (h, g)
        coin_map[(v, u)] = (g, h)
    return coin_map


def is_bipartite(g: RegularGraph) -> Optional[Bipartition]:
    """2-color the graph component by component, or return None when an odd cycle exists."""
    return _bipartition(g.n_vertices, g.edges)


def _bipartition(n_vertices: int, edges: Sequence[Edge]) -> Optional[Bipartition]:
    graph = nx.Graph()
    graph.add_nodes_from(range(n_vertices))
    graph.add_edges_from(edges)
    try:
        coloring = nx.bipartite.color(graph)
    except nx.NetworkXError:
        return None

    components = nx.number_connected_components(graph)
    side: List[int] = []
    for component in nx.connected_components(graph):
        anchor = coloring[min(component)]
        side.extend(v for v in component if coloring[v] == anchor)
    side_set = set(side)
    if components > 1:
        logger.warning(f"Graph has {components} components; bipartition assembled per component")
    return Bipartition(
        side=tuple(sorted(side_set)),
        other=tuple(v for v in range(n_vertices) if v not in side_set),
        components=components,
    )


def from_edges(
    n_vertices: int,
    edges: Iterable[Sequence[int]],
    label: str = "",
    coin_map: Optional[CoinMap] = None,
    lattice: Optional[Tuple[int, int]] = None,
) -> RegularGraph:
    """Validate an edge list as a simple regular graph and attach coins and bipartition."""
    if n_vertices < 2:
        raise InvalidSizeError(f"need at least 2 vertices, got {n_vertices}")
    normalized = _normalize_edges(n_vertices, edges)

    degrees = Counter(itertools.chain.from_iterable(normalized))
    degree_values = {degrees.get(u, 0) for u in range(n_vertices)}
    if len(degree_values) != 1 or 0 in degree_values:
        raise RegularityError(f"graph is not regular: degrees {sorted(degree_values)}")
    degree = degree_values.pop()

    graph = RegularGraph(
        n_vertices=n_vertices,
        degree=degree,
        edges=normalized,
        coin_map=coin_map if coin_map is not None else build_coin_map(normalized),
        bipartition=_bipartition(n_vertices, normalized),
        label=label,
        lattice=lattice,
    )
    if not graph.is_connected:
        logger.warning(f"{label or 'graph'} is disconnected; spectral and search operations will reject it")
    return graph


def build_complete(n: int) -> RegularGraph:
    """Complete graph K_n."""
    if n < 2:
        raise InvalidSizeError(f"complete graph needs n >= 2, got {n}")
    return from_edges(n, itertools.combinations(range(n), 2), label=f"complete({n})")


def build_hypercubic(side: int, dim: int) -> RegularGraph:
    """Periodic D-dimensional hypercubic lattice with L^D vertices and degree 2D."""
    if side < 3:
        raise UnsupportedSideError(f"lattice side must be >= 3 to keep degree 2D, got {side}")
    if dim < 1:
        raise InvalidSizeError(f"lattice dimension must be >= 1, got {dim}")

    shape = (side,) * dim
    n_vertices = side**dim
    coords = np.indices(shape).reshape(dim, n_vertices)
    edges = set()
    for axis in range(dim):
        forward = coords.copy()
        forward[axis] = (forward[axis] + 1) % side
        targets = np.ravel_multi_index(tuple(forward), shape)
        edges.update((min(u, v), max(u, v)) for u, v in zip(range(n_vertices), targets.tolist()))
    return from_edges(n_vertices, edges, label=f"lattice({side},{dim})", lattice=(side, dim))


def lattice_coordinates(u: int, side: int, dim: int) -> Tuple[int, ...]:
    """Coordinates of vertex u on the (L,)*D grid."""
    return tuple(int(c) for c in np.unravel_index(u, (side,) * dim))


def build_random_regular(n: int, d: int, seed: int) -> RegularGraph:
    """Configuration-model sample with full restarts on self-loops or multi-edges."""
    if (n * d) % 2:
        raise ParityError(f"n*d must be even, got n={n}, d={d}")
    if d < 1 or d >= n:
        raise InvalidSizeError(f"need 1 <= d < n, got n={n}, d={d}")

    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    stubs = np.repeat(np.arange(n), d)
    for attempt in range(MAX_RESTARTS):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        low, high = pairs.min(axis=1), pairs.max(axis=1)
        if np.any(low == high):
            continue
        keys = low * n + high
        if np.unique(keys).size != keys.size:
            continue
        logger.debug(f"random regular ({n},{d}) seed={seed} accepted after {attempt + 1} draws")
        return from_edges(n, zip(low.tolist(), high.tolist()), label=f"random({n},{d},{seed})")

    logger.error(f"configuration model exhausted {MAX_RESTARTS} restarts for n={n}, d={d}")
    raise GenerationError(f"no simple {d}-regular graph on {n} vertices after {MAX_RESTARTS} restarts")


def relabel_coins(g: RegularGraph, seed: int) -> RegularGraph:
    """Same graph with the coin indices at every vertex permuted at random."""
    rng = np.random.default_rng(seed)
    permutations = [rng.permutation(g.degree) for _ in range(g.n_vertices)]
    coin_map = {(u, v): (int(permutations[u][h]), int(permutations[v][c])) for (u, v), (h, c) in g.coin_map.items()}
    return RegularGraph(
        n_vertices=g.n_vertices,
        degree=g.degree,
        edges=g.edges,
        coin_map=coin_map,
        bipartition=g.bipartition,
        label=f"{g.label}~{seed}",
        lattice=g.lattice,
    )


def adjacency_matrix(g: RegularGraph) -> np.ndarray:
    """Normalized adjacency matrix A with A_uv = 1/d on edges."""
    matrix = np.zeros((g.n_vertices, g.n_vertices))
    if g.edges:
        rows, cols = np.array(g.edges).T
        matrix[rows, cols] = 1.0 / g.degree
        matrix[cols, rows] = 1.0 / g.degree
    return matrix


def validate_targets(g: RegularGraph, targets: Iterable[int]) -> Tuple[int, ...]:
    """Sorted, de-duplicated target tuple with 1 <= M < N."""
    chosen = tuple(sorted({int(t) for t in targets}))
    if not chosen:
        raise PreconditionError("target set is empty")
    if chosen[0] < 0 or chosen[-1] >= g.n_vertices:
        raise PreconditionError(f"targets {list(chosen)} not inside vertex range 0..{g.n_vertices - 1}")
    if len(chosen) >= g.n_vertices:
        raise PreconditionError(f"need M < N, got M={len(chosen)}, N={g.n_vertices}")
    return chosen


def complement(g: RegularGraph, targets: Sequence[int]) -> np.ndarray:
    """Vertices of V - T in increasing order."""
    mask = np.ones(g.n_vertices, dtype=bool)
    mask[list(targets)] = False
    return np.flatnonzero(mask)


def require_connected(g: RegularGraph) -> None:
    if not g.is_connected:
        logger.error(f"{g.label or 'graph'} is disconnected")
        raise ConnectivityError(f"{g.label or 'graph'} is disconnected")


def require_complement_connected(g: RegularGraph, targets: Sequence[int]) -> None:
    """Raise unless the subgraph induced on V - T is connected."""
    require_connected(g)
    rest = complement(g, targets).tolist()
    if not nx.is_connected(g.to_networkx().subgraph(rest)):
        logger.error(f"V - T disconnected on {g.label or 'graph'} with targets {list(targets)}")
        raise ConnectivityError(f"removing targets {list(targets)} disconnects {g.label or 'graph'}")


def choose_targets(g: RegularGraph, m: int, seed: int) -> Tuple[int, ...]:
    """Deterministic random target set of size m whose complement stays connected."""
    if not 1 <= m < g.n_vertices:
        raise PreconditionError(f"need 1 <= M < N, got M={m}, N={g.n_vertices}")
    require_connected(g)
    rng = np.random.default_rng(seed)
    view = g.to_networkx()
    for _ in range(MAX_TARGET_DRAWS):
        draw = tuple(sorted(rng.choice(g.n_vertices, size=m, replace=False).tolist()))
        rest = complement(g, draw).tolist()
        if nx.is_connected(view.subgraph(rest)):
            return draw
    raise ConnectivityError(f"no {m}-target set with connected complement found on {g.label}")


def load_graph(path: Path) -> RegularGraph:
    """Read the `N d` header plus one `u v` edge per line."""
    lines = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines or len(lines[0]) != 2:
        raise RegularityError(f"{path}: first line must be `N d`")
    try:
        n_vertices, degree = int(lines[0][0]), int(lines[0][1])
        edges = [(int(row[0]), int(row[1])) for row in lines[1:] if len(row) == 2]
    except ValueError as e:
        logger.error(f"{path}: non-integer token in graph file")
        raise RegularityError(f"{path}: non-integer token in graph file") from e
    if len(edges) != len(lines) - 1:
        raise RegularityError(f"{path}: every edge line must hold exactly two vertices")

    graph = from_edges(n_vertices, edges, label=f"file:{Path(path).name}")
    if graph.degree != degree:
        raise RegularityError(f"{path}: header says d={degree} but edges give d={graph.degree}")
    return graph


def write_graph(g: RegularGraph, path: Path) -> None:
    """Write g in the text edge-list format with sorted edges."""
    body = [f"{g.n_vertices} {g.degree}"] + [f"{u} {v}" for u, v in g.edges]
    Path(path).write_text("\n".join(body) + "\n")
