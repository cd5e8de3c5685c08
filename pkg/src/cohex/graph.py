"""Attributed-graph data model, ingestion and k-hop neighborhoods.

A graph is a set of vertices carrying nonnegative integer attribute counts,
plus undirected unweighted edges. Neighborhoods N_d(v) (all vertices within
hop distance d of v) are the description vocabulary used everywhere else.
"""

from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import bits


class GraphFormatError(ValueError):
    """Raised when an input graph file violates the expected format."""


@dataclass(frozen=True)
class Neighborhood:
    """Ball of hop radius `radius` around vertex `center`.

    `members` is a bitset over vertex indices; the center is always a member
    and members never shrink as the radius grows.
    """

    center: int
    radius: int
    members: int

    def member_indices(self) -> list[int]:
        return bits.to_indices(self.members)


class AttributedGraph:
    """Immutable vertex-attributed graph.

    Vertex order is input order; edges are deduplicated unordered index
    pairs. `values[v, a]` is the observed count of attribute `a` on vertex
    `v` (all counts >= 0).
    """

    def __init__(self, vertex_ids, attributes, values, edges, geometry=None):
        self.vertex_ids: tuple[str, ...] = tuple(vertex_ids)
        self.attributes: tuple[str, ...] = tuple(attributes)
        self.values: np.ndarray = np.asarray(values, dtype=np.int64)
        self.geometry: tuple | None = tuple(geometry) if geometry is not None else None

        n = len(self.vertex_ids)
        if len(set(self.vertex_ids)) != n:
            seen = set()
            for vid in self.vertex_ids:
                if vid in seen:
                    raise GraphFormatError(f"duplicate vertex id {vid!r}")
                seen.add(vid)
        if self.values.shape != (n, len(self.attributes)):
            raise GraphFormatError(
                f"attribute matrix shape {self.values.shape} does not match "
                f"{n} vertices x {len(self.attributes)} attributes"
            )
        if n and self.values.min() < 0:
            raise GraphFormatError("negative attribute value")
        if self.geometry is not None and len(self.geometry) != n:
            raise GraphFormatError("geometry list length does not match vertex count")

        canon = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge endpoint out of range: ({u}, {v})")
            if u == v:
                raise GraphFormatError(f"self-loop on vertex {self.vertex_ids[u]!r}")
            canon.add((u, v) if u < v else (v, u))
        self.edges: frozenset[tuple[int, int]] = frozenset(canon)

        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        self._adjacency = tuple(tuple(sorted(a)) for a in adj)
        self._index = {vid: i for i, vid in enumerate(self.vertex_ids)}

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    def index_of(self, vertex_id: str) -> int:
        try:
            return self._index[vertex_id]
        except KeyError:
            raise GraphFormatError(f"unknown vertex id {vertex_id!r}") from None

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adjacency[v]


def neighborhood(g: AttributedGraph, v: int, d: int) -> Neighborhood:
    """Vertices within hop distance d of v, via breadth-first search."""
    if not 0 <= v < g.n_vertices:
        raise ValueError(f"vertex index {v} out of range")
    if d < 0:
        raise ValueError("radius must be >= 0")
    members = 1 << v
    frontier = deque([v])
    dist = {v: 0}
    while frontier:
        u = frontier.popleft()
        if dist[u] == d:
            continue
        for w in g.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                members |= 1 << w
                frontier.append(w)
    return Neighborhood(center=v, radius=d, members=members)


def all_neighborhoods(g: AttributedGraph, max_radius: int) -> list[Neighborhood]:
    """All N_d(v) for v in V and d in [0, max_radius].

    Per center, radii whose member set equals a smaller radius are collapsed
    to that smaller radius (the ball stopped growing), so the returned list
    holds distinct member sets per center, ordered by (center, radius).
    The declared vocabulary size used in description costs is nevertheless
    |V| * (max_radius + 1); see `vocabulary_size`.
    """
    if max_radius < 0:
        raise ValueError("max radius must be >= 0")
    out: list[Neighborhood] = []
    for v in range(g.n_vertices):
        # one BFS per center; cumulative member sets per distance
        dist = {v: 0}
        frontier = deque([v])
        members_at = [1 << v]
        while frontier:
            u = frontier.popleft()
            du = dist[u]
            if du == max_radius:
                continue
            for w in g.neighbors(u):
                if w not in dist:
                    dist[w] = du + 1
                    while len(members_at) <= du + 1:
                        members_at.append(members_at[-1])
                    members_at[du + 1] |= 1 << w
                    frontier.append(w)
        prev = None
        for d in range(max_radius + 1):
            m = members_at[d] if d < len(members_at) else members_at[-1]
            if m != prev:
                out.append(Neighborhood(center=v, radius=d, members=m))
                prev = m
    return out


def vocabulary_size(g: AttributedGraph, max_radius: int) -> int:
    """Size of the declared neighborhood vocabulary, |V| * (max_radius + 1)."""
    return g.n_vertices * (max_radius + 1)


def _detect_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def _parse_count(cell: str, row_no: int, column: str) -> int:
    text = cell.strip()
    try:
        value = int(text, 10)
    except ValueError:
        raise GraphFormatError(
            f"row {row_no}: attribute {column!r} value {cell!r} is not a base-10 integer"
        ) from None
    if value < 0:
        raise GraphFormatError(f"row {row_no}: attribute {column!r} value {value} is negative")
    return value


def load_graph(vertices_path, edges_path) -> AttributedGraph:
    """Load a graph from a vertices CSV/TSV and an edges CSV/TSV.

    Vertices header: ``id,<attr1>,...,<attrp>[,wkt]`` with integer attribute
    cells and an optional trailing WKT geometry column. Edges header:
    ``src,dst``, one undirected edge per row, endpoints by vertex id.
    """
    with open(vertices_path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise GraphFormatError(f"{vertices_path}: empty vertices file")
        delim = _detect_delimiter(first)
        header = next(csv.reader([first], delimiter=delim))
        if not header or header[0].strip() != "id":
            raise GraphFormatError(f"{vertices_path}: first column must be 'id'")
        has_wkt = len(header) > 1 and header[-1].strip() == "wkt"
        attr_names = [h.strip() for h in (header[1:-1] if has_wkt else header[1:])]

        ids: list[str] = []
        rows: list[list[int]] = []
        geoms: list[str | None] = []
        seen: set[str] = set()
        for row_no, row in enumerate(csv.reader(fh, delimiter=delim), start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise GraphFormatError(
                    f"{vertices_path}: row {row_no} has {len(row)} cells, expected {len(header)}"
                )
            vid = row[0].strip()
            if vid in seen:
                raise GraphFormatError(f"{vertices_path}: duplicate vertex id {vid!r}")
            seen.add(vid)
            ids.append(vid)
            attr_cells = row[1:-1] if has_wkt else row[1:]
            rows.append(
                [_parse_count(c, row_no, attr_names[j]) for j, c in enumerate(attr_cells)]
            )
            geoms.append(row[-1].strip() or None if has_wkt else None)
    if not ids:
        raise GraphFormatError(f"{vertices_path}: no vertex rows")

    index = {vid: i for i, vid in enumerate(ids)}
    edges: list[tuple[int, int]] = []
    with open(edges_path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        delim = _detect_delimiter(first) if first.strip() else ","
        header = next(csv.reader([first], delimiter=delim)) if first.strip() else []
        if [h.strip() for h in header[:2]] != ["src", "dst"]:
            raise GraphFormatError(f"{edges_path}: header must be 'src,dst'")
        for row_no, row in enumerate(csv.reader(fh, delimiter=delim), start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise GraphFormatError(f"{edges_path}: row {row_no} must have 2 cells")
            src, dst = row[0].strip(), row[1].strip()
            for endpoint in (src, dst):
                if endpoint not in index:
                    raise GraphFormatError(
                        f"{edges_path}: row {row_no} references unknown vertex {endpoint!r}"
                    )
            edges.append((index[src], index[dst]))

    matrix = np.array(rows, dtype=np.int64).reshape(len(ids), len(attr_names))
    geometry = geoms if any(gm is not None for gm in geoms) else None
    return AttributedGraph(ids, attr_names, matrix, edges, geometry)


def load_graph_json(path) -> AttributedGraph:
    """Load a graph from the single-file JSON format.

    ``{"vertices": [{"id": ..., "attrs": {...}, "geometry": ...}],
    "edges": [[src, dst], ...]}`` where edge endpoints are vertex ids or
    zero-based indices.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"{path}: invalid JSON ({exc})") from None
    try:
        vertex_docs = doc["vertices"]
        edge_docs = doc["edges"]
    except (TypeError, KeyError):
        raise GraphFormatError(f"{path}: expected object with 'vertices' and 'edges'") from None
    if not vertex_docs:
        raise GraphFormatError(f"{path}: no vertices")

    attr_names = list(vertex_docs[0].get("attrs", {}).keys())
    ids, rows, geoms = [], [], []
    seen: set[str] = set()
    for row_no, vd in enumerate(vertex_docs):
        vid = str(vd["id"])
        if vid in seen:
            raise GraphFormatError(f"{path}: duplicate vertex id {vid!r}")
        seen.add(vid)
        ids.append(vid)
        attrs = vd.get("attrs", {})
        if set(attrs) != set(attr_names):
            raise GraphFormatError(f"{path}: vertex {vid!r} attribute keys differ")
        row = []
        for name in attr_names:
            value = attrs[name]
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise GraphFormatError(
                    f"{path}: vertex {vid!r} attribute {name!r} must be a nonnegative integer"
                )
            row.append(value)
        rows.append(row)
        geoms.append(vd.get("geometry"))

    index = {vid: i for i, vid in enumerate(ids)}
    edges = []
    for pair in edge_docs:
        if len(pair) != 2:
            raise GraphFormatError(f"{path}: edge {pair!r} must have 2 endpoints")
        resolved = []
        for endpoint in pair:
            if isinstance(endpoint, str):
                if endpoint not in index:
                    raise GraphFormatError(f"{path}: unknown edge endpoint {endpoint!r}")
                resolved.append(index[endpoint])
            elif isinstance(endpoint, int) and not isinstance(endpoint, bool):
                resolved.append(endpoint)
            else:
                raise GraphFormatError(f"{path}: edge endpoint {endpoint!r} is not an id or index")
        edges.append(tuple(resolved))

    matrix = np.array(rows, dtype=np.int64).reshape(len(ids), len(attr_names))
    geometry = geoms if any(gm is not None for gm in geoms) else None
    return AttributedGraph(ids, attr_names, matrix, edges, geometry)
