"""Generation errors and whole-network statistics.

Statistics treat every link as undirected, per type or with all types
collapsed onto one uniplex graph.  Average path length is computed on the
largest connected component only: exactly up to a size cap, above it from a
fixed number of seeded random-source traversals (flagged as estimated).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .bn import BayesianNetwork
from .matching import RuleReport
from .population import PopulationStore, learn_marginals
from .sampling import substream

EXACT_PATH_LIMIT = 20_000
PATH_SAMPLE_SOURCES = 1_000


@dataclass
class NetworkStats:
    scope: str
    nodes: int
    links: int
    density: float
    average_degree: float
    clustering: float
    average_path_length: float | None
    path_length_estimated: bool
    components: int
    largest_component: int


@dataclass
class ErrorReport:
    """Distribution error, per-type matching error, unobserved-row count."""

    distribution_error: float
    unobserved_rows: int
    matching_errors: dict[str, float]


def distribution_error(store: PopulationStore, attribute_bn: BayesianNetwork) -> float:
    """Mean absolute difference between theoretical and re-learned CPT
    probabilities, over rows whose parent combination was observed."""
    error, _, _ = distribution_error_details(store, attribute_bn)
    return error


def distribution_error_details(
    store: PopulationStore, attribute_bn: BayesianNetwork
) -> tuple[float, int, int]:
    """(mean absolute error, observed row count, unobserved row count)."""
    learned = learn_marginals(store, attribute_bn)
    unobserved = set(learned.unobserved)
    total = 0.0
    entries = 0
    observed_rows = 0
    for variable in attribute_bn.variables:
        theory = attribute_bn.cpts[variable.name]
        estimate = learned.bn.cpts[variable.name]
        for combo, probs in theory.rows.items():
            if (variable.name, combo) in unobserved:
                continue
            observed_rows += 1
            for p, q in zip(probs, estimate.rows[combo]):
                total += abs(p - q)
                entries += 1
    return (total / entries if entries else 0.0), observed_rows, len(unobserved)


def matching_error(reports: Iterable[RuleReport]) -> dict[str, float]:
    """Unfulfilled demand over total demand, aggregated per homophily type."""
    demand: dict[str, int] = {}
    unfulfilled: dict[str, int] = {}
    for report in reports:
        if report.kind != "homophily":
            continue
        demand[report.link_type] = demand.get(report.link_type, 0) + report.demand_total
        unfulfilled[report.link_type] = (
            unfulfilled.get(report.link_type, 0) + report.unfulfilled
        )
    return {
        t: (unfulfilled[t] / demand[t] if demand[t] else 0.0) for t in sorted(demand)
    }


def build_error_report(
    store: PopulationStore,
    attribute_bn: BayesianNetwork,
    reports: Iterable[RuleReport],
) -> ErrorReport:
    error, _, unobserved = distribution_error_details(store, attribute_bn)
    return ErrorReport(error, unobserved, matching_error(reports))


# ---------------------------------------------------------------------------
# Graph statistics


def graph_statistics(
    store: PopulationStore,
    scope: str = "collapsed",
    *,
    exact_path_limit: int = EXACT_PATH_LIMIT,
    path_sample_sources: int = PATH_SAMPLE_SOURCES,
    seed: int = 0,
) -> NetworkStats:
    """Density, degree, clustering and path length for one link layer or for
    the collapsed uniplex graph."""
    if scope == "collapsed":
        links = store.links()
    else:
        links = store.links(scope)
    pairs = [(link.source, link.target) for link in links]
    return stats_for_edges(
        len(store), pairs, scope,
        exact_path_limit=exact_path_limit,
        path_sample_sources=path_sample_sources,
        seed=seed,
    )


def stats_for_edges(
    node_count: int,
    pairs: Sequence[tuple[int, int]],
    scope: str = "collapsed",
    *,
    exact_path_limit: int = EXACT_PATH_LIMIT,
    path_sample_sources: int = PATH_SAMPLE_SOURCES,
    seed: int = 0,
) -> NetworkStats:
    adjacency: dict[int, set[int]] = {}
    edges = set()
    for a, b in pairs:
        if a == b:
            continue
        edges.add((min(a, b), max(a, b)))
    for a, b in edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)

    n = node_count
    m = len(edges)
    density = (2.0 * m / (n * (n - 1))) if n > 1 else 0.0
    average_degree = (2.0 * m / n) if n else 0.0

    triangles = 0
    for a, b in edges:
        triangles += len(adjacency[a] & adjacency[b])
    triangles //= 3
    triples = sum(d * (d - 1) // 2 for d in (len(v) for v in adjacency.values()))
    clustering = (3.0 * triangles / triples) if triples else 0.0

    components = _components(adjacency)
    isolated = n - len(adjacency)
    component_count = len(components) + isolated
    largest = max(components, key=lambda c: (len(c), -min(c)), default=[])
    largest_size = max(len(largest), 1 if n else 0)

    apl = None
    estimated = False
    if len(largest) >= 2:
        if len(largest) <= exact_path_limit:
            apl = _average_path_exact(largest, adjacency)
        else:
            rng = substream(seed, f"stats/{scope}/path-sample")
            apl = _average_path_sampled(largest, adjacency, rng, path_sample_sources)
            estimated = True

    return NetworkStats(
        scope=scope,
        nodes=n,
        links=m,
        density=density,
        average_degree=average_degree,
        clustering=clustering,
        average_path_length=apl,
        path_length_estimated=estimated,
        components=component_count,
        largest_component=largest_size,
    )


def _components(adjacency: dict[int, set[int]]) -> list[list[int]]:
    seen: set[int] = set()
    out: list[list[int]] = []
    for start in sorted(adjacency):
        if start in seen:
            continue
        queue = [start]
        seen.add(start)
        component = []
        while queue:
            node = queue.pop()
            component.append(node)
            for neighbor in adjacency[node]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    queue.append(neighbor)
        out.append(sorted(component))
    return out


def _distance_sums(
    nodes: list[int], adjacency: dict[int, set[int]], sources: Sequence[int]
) -> float:
    """Sum of geodesic distances from each source to all nodes in the
    component, via batched sparse BFS."""
    position = {node: i for i, node in enumerate(nodes)}
    rows, cols = [], []
    for node in nodes:
        i = position[node]
        for neighbor in adjacency[node]:
            rows.append(i)
            cols.append(position[neighbor])
    data = np.ones(len(rows), dtype=np.int8)
    graph = csr_matrix((data, (rows, cols)), shape=(len(nodes), len(nodes)))
    total = 0.0
    batch = 512
    source_idx = [position[s] for s in sources]
    for start in range(0, len(source_idx), batch):
        chunk = source_idx[start:start + batch]
        dist = shortest_path(graph, method="D", unweighted=True, indices=chunk)
        total += float(dist.sum())
    return total


def _average_path_exact(nodes: list[int], adjacency: dict[int, set[int]]) -> float:
    s = len(nodes)
    total = _distance_sums(nodes, adjacency, nodes)
    return total / (s * (s - 1))


def _average_path_sampled(
    nodes: list[int],
    adjacency: dict[int, set[int]],
    rng: np.random.Generator,
    source_count: int,
) -> float:
    s = len(nodes)
    picks = rng.choice(len(nodes), size=min(source_count, s), replace=False)
    sources = [nodes[int(i)] for i in picks]
    total = _distance_sums(nodes, adjacency, sources)
    return total / (len(sources) * (s - 1))


def stats_report_entries(stats: NetworkStats) -> list[tuple[str, object]]:
    """Flat key-value pairs for the text report, path length omitted when
    undefined."""
    prefix = f"stats.{stats.scope}"
    entries: list[tuple[str, object]] = [
        (f"{prefix}.nodes", stats.nodes),
        (f"{prefix}.links", stats.links),
        (f"{prefix}.density", stats.density),
        (f"{prefix}.average_degree", stats.average_degree),
        (f"{prefix}.clustering", stats.clustering),
        (f"{prefix}.components", stats.components),
        (f"{prefix}.largest_component", stats.largest_component),
    ]
    if stats.average_path_length is not None:
        entries.append((f"{prefix}.average_path_length", stats.average_path_length))
        entries.append((f"{prefix}.path_length_estimated", stats.path_length_estimated))
    return entries
