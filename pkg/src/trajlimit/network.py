"""Directed road-network graph: storage, ingestion, validation, adjacency.

A network is immutable once loaded.  Edge and vertex ids are dense integers;
external ids from an edge-list file are remapped and the mapping retained so
reports can refer back to the source data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    """Directed graph with array-backed out-adjacency.

    Attributes
    ----------
    vertex_count : int
        Number of vertices; vertex ids are 0..vertex_count-1.
    tails, heads : ndarray of int32
        Endpoint vertices per dense edge id.
    out_adjacency : tuple of ndarray
        Per vertex, the ascending dense edge ids leaving it.
    edge_external_ids, vertex_external_ids : ndarray
        Dense id -> id used in the source file (identity when the file
        already used dense ids).
    """

    vertex_count: int
    tails: np.ndarray
    heads: np.ndarray
    out_adjacency: tuple = field(repr=False)
    edge_external_ids: np.ndarray = field(repr=False, default=None)
    vertex_external_ids: np.ndarray = field(repr=False, default=None)

    @property
    def edge_count(self) -> int:
        return len(self.tails)

    @property
    def max_out_degree(self) -> int:
        return max((len(a) for a in self.out_adjacency), default=0)

    def out_edges(self, v: int) -> np.ndarray:
        """Edges leaving ``v`` in ascending edge-id order."""
        if not 0 <= v < self.vertex_count:
            raise IndexError(f"vertex {v} out of range [0, {self.vertex_count})")
        return self.out_adjacency[v]

    def adjacency_slot_of_edge(self) -> np.ndarray:
        """For each edge, its index within ``out_edges(tail(edge))``.

        Adjacency lists are ascending edge ids, so within a vertex the slot
        is the rank of the edge id.
        """
        slots = np.empty(self.edge_count, dtype=np.int8)
        for adj in self.out_adjacency:
            slots[adj] = np.arange(len(adj), dtype=np.int8)
        return slots


def _build_adjacency(vertex_count: int, tails: np.ndarray) -> tuple:
    order = np.lexsort((np.arange(len(tails)), tails))
    sorted_tails = tails[order]
    boundaries = np.searchsorted(sorted_tails, np.arange(vertex_count + 1))
    return tuple(
        np.ascontiguousarray(order[boundaries[v] : boundaries[v + 1]], dtype=np.int32)
        for v in range(vertex_count)
    )


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def load_network(source) -> RoadNetwork:
    """Load a network from edge-list text.

    Format: one edge per line as ``edge_id tail head`` (whitespace or comma
    separated), ``#`` starts a comment.  An optional first record
    ``vertices N`` declares the vertex universe [0, N); with the header,
    endpoint ids are taken literally and an out-of-range endpoint is a
    dangling reference.  Without it the vertex set is inferred from the
    endpoints and remapped to dense ids in sorted order.

    ``source`` may be a path or an iterable of lines.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_network(fh.readlines())

    declared_vertices = None
    records = []  # (line_no, edge_id, tail, head)
    for line_no, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if declared_vertices is None and not records and line.startswith("vertices"):
            try:
                declared_vertices = int(line.split()[1])
            except (IndexError, ValueError):
                raise ParseError("malformed vertices header", line_no) from None
            if declared_vertices <= 0:
                raise ParseError("vertex count must be positive", line_no)
            continue
        try:
            fields = _parse_ints(line)
        except ValueError:
            raise ParseError(f"expected integers, got {line!r}", line_no) from None
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", line_no)
        edge_id, tail, head = fields
        if edge_id < 0 or tail < 0 or head < 0:
            raise ParseError("negative id", line_no)
        records.append((line_no, edge_id, tail, head))

    if not records:
        raise ValidationError("empty network: no edge records found")

    seen_edge_ids = {}
    for line_no, edge_id, _, _ in records:
        if edge_id in seen_edge_ids:
            raise ValidationError(
                f"duplicate edge id {edge_id} on lines {seen_edge_ids[edge_id]} and {line_no}"
            )
        seen_edge_ids[edge_id] = line_no

    for line_no, _, tail, head in records:
        if tail == head:
            raise ValidationError(f"line {line_no}: self-loop at vertex {tail}")

    if declared_vertices is not None:
        for line_no, _, tail, head in records:
            if tail >= declared_vertices or head >= declared_vertices:
                raise ValidationError(
                    f"line {line_no}: dangling vertex reference "
                    f"{max(tail, head)} >= declared count {declared_vertices}"
                )
        vertex_count = declared_vertices
        vertex_external = np.arange(vertex_count, dtype=np.int64)
        vmap = None
    else:
        vertex_external = np.unique(
            np.array([(t, h) for _, _, t, h in records], dtype=np.int64).ravel()
        )
        vertex_count = len(vertex_external)
        vmap = {int(ext): i for i, ext in enumerate(vertex_external)}

    edge_external = np.array(sorted(seen_edge_ids), dtype=np.int64)
    emap = {int(ext): i for i, ext in enumerate(edge_external)}

    tails = np.zeros(len(records), dtype=np.int32)
    heads = np.zeros(len(records), dtype=np.int32)
    for _, edge_id, tail, head in records:
        dense = emap[edge_id]
        tails[dense] = tail if vmap is None else vmap[tail]
        heads[dense] = head if vmap is None else vmap[head]

    return RoadNetwork(
        vertex_count=vertex_count,
        tails=tails,
        heads=heads,
        out_adjacency=_build_adjacency(vertex_count, tails),
        edge_external_ids=edge_external,
        vertex_external_ids=vertex_external,
    )


def network_from_edges(edges, vertex_count=None) -> RoadNetwork:
    """Build a network from an iterable of (tail, head) pairs.

    Edge ids are assigned in iteration order.  Intended for tests and
    programmatic construction; the same validation as the loader applies.
    """
    edges = list(edges)
    if not edges:
        raise ValidationError("empty network: no edges given")
    tails = np.array([t for t, _ in edges], dtype=np.int32)
    heads = np.array([h for _, h in edges], dtype=np.int32)
    if (tails == heads).any():
        raise ValidationError("self-loops are not allowed")
    inferred = int(max(tails.max(), heads.max())) + 1
    if vertex_count is None:
        vertex_count = inferred
    elif vertex_count < inferred:
        raise ValidationError(f"vertex_count {vertex_count} < referenced {inferred}")
    if tails.min() < 0 or heads.min() < 0:
        raise ValidationError("negative vertex id")
    n_edges = len(edges)
    return RoadNetwork(
        vertex_count=vertex_count,
        tails=tails,
        heads=heads,
        out_adjacency=_build_adjacency(vertex_count, tails),
        edge_external_ids=np.arange(n_edges, dtype=np.int64),
        vertex_external_ids=np.arange(vertex_count, dtype=np.int64),
    )


def grid_network(width: int, height: int) -> RoadNetwork:
    """Four-neighbour directed grid, one edge per direction per adjacent pair.

    Vertices are row-major; edges are emitted vertex by vertex in the fixed
    neighbour order right, down, left, up, so the construction is
    deterministic.
    """
    if width < 2 or height < 2:
        raise ValidationError("grid must be at least 2x2")
    edges = []
    for r in range(height):
        for c in range(width):
            v = r * width + c
            for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < height and 0 <= cc < width:
                    edges.append((v, rr * width + cc))
    return network_from_edges(edges, vertex_count=width * height)


def validate_trajectory(net: RoadNetwork, edges) -> int | None:
    """Check a candidate edge sequence against the network.

    Returns None when valid, otherwise the index of the first offending
    entry (an out-of-range id, or the second edge of a disconnected pair).
    """
    edges = np.asarray(edges)
    if edges.ndim != 1 or len(edges) == 0:
        return 0
    bad = (edges < 0) | (edges >= net.edge_count)
    if bad.any():
        return int(np.argmax(bad))
    if len(edges) > 1:
        mismatch = net.heads[edges[:-1]] != net.tails[edges[1:]]
        if mismatch.any():
            return int(np.argmax(mismatch)) + 1
    return None


def save_network_text(net: RoadNetwork, path) -> None:
    """Write a network back out in the edge-list text format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"vertices {net.vertex_count}\n")
        for e in range(net.edge_count):
            fh.write(f"{e} {int(net.tails[e])} {int(net.heads[e])}\n")
