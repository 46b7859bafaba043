from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from itertools import islice

import networkx as nx


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    n_nodes: int
    links: tuple[tuple[int, int], ...]  # link id -> (a, b), a < b
    wavelengths: int
    paths: dict  # (s, d) with s < d -> tuple of link-id tuples, fewest hops first

    @property
    def pairs(self):
        return sorted(self.paths)

    def candidate_paths(self, s: int, d: int):
        return self.paths[(s, d) if s < d else (d, s)]


def parse_topology(text: str, k_paths: int = 2) -> Topology:
    """Parse ``nodes=N wavelengths=W`` followed by ``a b`` edge lines."""
    header = None
    edges = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            try:
                fields = dict(tok.split("=", 1) for tok in line.split())
                header = (int(fields["nodes"]), int(fields["wavelengths"]))
            except (KeyError, ValueError) as exc:
                raise TopologyError(f"bad header line {raw!r}") from exc
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"bad edge line {raw!r}")
        a, b = sorted(int(p) for p in parts)
        edges.append((a, b))
    if header is None:
        raise TopologyError("missing header line")
    n, w = header
    if w <= 0:
        raise TopologyError("wavelengths must be > 0")
    for a, b in edges:
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise TopologyError(f"invalid edge {a} {b}")
    if len(set(edges)) != len(edges):
        raise TopologyError("duplicate edge")
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    if not nx.is_connected(g):
        raise TopologyError("topology is not connected")
    link_id = {e: i for i, e in enumerate(edges)}
    paths = {}
    for s in range(n):
        for d in range(s + 1, n):
            found = []
            for nodes in islice(nx.shortest_simple_paths(g, s, d), k_paths):
                found.append(tuple(link_id[tuple(sorted(e))] for e in zip(nodes, nodes[1:])))
            paths[(s, d)] = tuple(found)
    return Topology(n, tuple(edges), w, paths)


def load_topology(path, k_paths: int = 2) -> Topology:
    with open(path) as fh:
        return parse_topology(fh.read(), k_paths)


def load_nsfnet(k_paths: int = 2) -> Topology:
    text = resources.files("jamguard.prevention").joinpath("data/nsfnet.txt").read_text()
    return parse_topology(text, k_paths)
