"""Built-in graph and target sets used by the verification suites."""

import itertools
import logging
from typing import List, Optional, Tuple

from app.errors import GenerationError, InvalidSizeError
from app.graph import RegularGraph, build_complete, build_hypercubic, build_random_regular, choose_targets, from_edges

logger = logging.getLogger(__name__)

MAX_SEED_ATTEMPTS = 100

Instance = Tuple[RegularGraph, Tuple[int, ...]]


def connected_random(n: int, d: int, seed: int) -> RegularGraph:
    """First connected configuration-model sample at seed, seed + 1, ..."""
    for offset in range(MAX_SEED_ATTEMPTS):
        graph = build_random_regular(n, d, seed + offset)
        if graph.is_connected:
            return graph
        logger.debug(f"random({n},{d},{seed + offset}) disconnected; trying the next seed")
    raise GenerationError(f"no connected {d}-regular sample on {n} vertices from seed {seed}")


def standard_graphs() -> List[RegularGraph]:
    """K3, K4, C4, the 5^3 lattice and two random 3-regular graphs."""
    return [
        build_complete(3),
        build_complete(4),
        build_hypercubic(4, 1),
        build_hypercubic(5, 3),
        connected_random(16, 3, 1),
        connected_random(64, 3, 1),
    ]


def multiplicity_graphs() -> List[RegularGraph]:
    return [build_complete(3), build_complete(4), build_hypercubic(4, 1), connected_random(16, 3, 1), build_hypercubic(5, 3)]


def standard_instances(sizes: Tuple[int, ...] = (1, 2), seed: int = 0) -> List[Instance]:
    """Every standard graph paired with deterministic target sets of the given sizes."""
    return [(g, choose_targets(g, m, seed)) for g in standard_graphs() for m in sizes]


def subspace_instances() -> List[Tuple[RegularGraph, Tuple[int, ...], Optional[float]]]:
    k3, k4, c4 = build_complete(3), build_complete(4), build_hypercubic(4, 1)
    random16 = connected_random(16, 3, 1)
    return [
        (k3, (0,), None),
        (k4, (0,), 0.3),
        (c4, (0,), None),
        (c4, (0,), 0.4),
        (build_hypercubic(4, 2), (0,), 0.6),
        (random16, choose_targets(random16, 2, 0), 0.5),
    ]


def master_equation_instances() -> List[Tuple[RegularGraph, Tuple[int, ...], float]]:
    """Twenty (graph, targets, delta) triples covering delta = 0 and bipartite graphs."""
    graphs = [
        build_complete(4),
        build_complete(6),
        build_hypercubic(6, 1),
        build_hypercubic(4, 2),
        build_hypercubic(3, 2),
        connected_random(16, 3, 2),
        connected_random(32, 3, 3),
        build_hypercubic(3, 3),
        connected_random(24, 4, 5),
        build_hypercubic(5, 2),
    ]
    instances = []
    for index, g in enumerate(graphs):
        m = 1 if g.n_vertices < 16 else 1 + index % 3
        targets = choose_targets(g, m, index)
        instances.append((g, targets, 0.0))
        instances.append((g, targets, 0.2 + 0.1 * (index % 5)))
    return instances


def complete_sizes() -> List[Tuple[int, int]]:
    return [(n, m) for n in (16, 64, 256) for m in (1, 4)]


def complete_minus_matching(n: int) -> RegularGraph:
    """K_n with the perfect matching {2i, 2i+1} removed; (n-2)-regular."""
    if n < 4 or n % 2:
        raise InvalidSizeError(f"need an even n >= 4, got {n}")
    matching = {(2 * i, 2 * i + 1) for i in range(n // 2)}
    edges = [edge for edge in itertools.combinations(range(n), 2) if edge not in matching]
    return from_edges(n, edges, label=f"complete({n})-matching")
