"""Entity-relation view of the graph and closed pattern enumeration.

The mining universe has three entity kinds: vertices, one-sided tail-value
intervals (two chains per attribute, grown from the quantile cut points),
and deduplicated neighborhoods. A pattern couples a vertex set U with the
tightest intervals covering it; U must be exactly an intersection of
neighborhoods, so enumeration reduces to walking the closure system of
neighborhood intersections. Interval chains never constrain that walk
because the tightest covering intervals are a function of U.

Enumeration is depth-first over the deduplicated neighborhood entities:
a state is a closed entity set X (every entity containing U = the common
intersection); children extend X with one more entity and re-close; a
prefix check against the extension index keeps exactly one generation
path per closed set, so no duplicates are emitted.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import bits
from .background import BinBoundaries, TailMatrix
from .graph import AttributedGraph, Neighborhood, all_neighborhoods, vocabulary_size


@dataclass(frozen=True)
class Interval:
    """One-sided restriction on an attribute's tail values.

    side "lower" means [0, bound] (tails at most bound: significantly large
    counts); side "upper" means [bound, 1] (significantly small counts).
    """

    attribute: int
    side: str
    bound: float

    def endpoints(self) -> tuple[float, float]:
        if self.side == "lower":
            return 0.0, self.bound
        return self.bound, 1.0

    def contains(self, value: float) -> bool:
        k, l = self.endpoints()
        return k <= value <= l


@dataclass(frozen=True)
class IntervalEntity:
    interval: Interval
    members: int  # bitset of vertices whose tail value falls in the interval


@dataclass(frozen=True)
class ClosedPattern:
    """A closed vertex set with its tightened intervals and covering."""

    vertices: int  # bitset
    intervals: tuple[Interval, ...]
    covering: tuple[int, ...]  # ascending indices into PatternSpace.entities

    def vertex_indices(self) -> list[int]:
        return bits.to_indices(self.vertices)

    @property
    def size(self) -> int:
        return self.vertices.bit_count()


class PatternSpace:
    """Entity-relation form of one mining problem instance."""

    def __init__(self, graph: AttributedGraph, tails: TailMatrix, bins: BinBoundaries,
                 max_radius: int):
        if tails.c.shape != (graph.n_attributes, graph.n_vertices):
            raise ValueError("tail matrix shape does not match graph")
        if len(bins.cuts) != graph.n_attributes:
            raise ValueError("bin boundaries do not match attribute count")
        self.graph = graph
        self.tails = tails.c
        self.bins = bins
        self.max_radius = max_radius
        self.n_vertices = graph.n_vertices
        self.vocab_size = vocabulary_size(graph, max_radius)

        # neighborhoods, deduplicated across centers (first (center, radius) wins)
        entities: list[Neighborhood] = []
        seen: dict[int, int] = {}
        for nb in all_neighborhoods(graph, max_radius):
            if nb.members not in seen:
                seen[nb.members] = len(entities)
                entities.append(nb)
        self.entities: tuple[Neighborhood, ...] = tuple(entities)
        self.entity_members: tuple[int, ...] = tuple(nb.members for nb in entities)

        # transpose incidence: per vertex, the set of entities containing it
        vmasks = [0] * graph.n_vertices
        for idx, members in enumerate(self.entity_members):
            bit = 1 << idx
            for v in bits.iter_indices(members):
                vmasks[v] |= bit
        self.vertex_entity_masks: tuple[int, ...] = tuple(vmasks)

        # interval chains, narrowest first; parent (next element) is wider
        lower_chains: list[tuple[IntervalEntity, ...]] = []
        upper_chains: list[tuple[IntervalEntity, ...]] = []
        for a in range(graph.n_attributes):
            row = self.tails[a]
            lowers = []
            for bound in (*bins.cuts[a], 1.0):
                members = _pack(row <= bound)
                lowers.append(IntervalEntity(Interval(a, "lower", float(bound)), members))
            uppers = []
            for bound in reversed(bins.cuts[a]):
                members = _pack(row >= bound)
                uppers.append(IntervalEntity(Interval(a, "upper", float(bound)), members))
            lower_chains.append(tuple(lowers))
            upper_chains.append(tuple(uppers))
        self.lower_chains = tuple(lower_chains)
        self.upper_chains = tuple(upper_chains)

    def covering_mask(self, vertex_mask: int) -> int:
        """Bitset of all neighborhood entities containing the given vertices."""
        acc = bits.full_mask(len(self.entities))
        for v in bits.iter_indices(vertex_mask):
            acc &= self.vertex_entity_masks[v]
        return acc

    def covering_labels(self, entity_indices) -> list[tuple[str, int]]:
        """(center id, radius) labels for entity indices."""
        out = []
        for i in entity_indices:
            nb = self.entities[i]
            out.append((self.graph.vertex_ids[nb.center], nb.radius))
        return out


def _pack(flags: np.ndarray) -> int:
    mask = 0
    for v in np.nonzero(flags)[0]:
        mask |= 1 << int(v)
    return mask


def build_pattern_space(g: AttributedGraph, tails: TailMatrix, bins: BinBoundaries,
                        max_radius: int) -> PatternSpace:
    """Transform graph + fitted tails + bin boundaries into the mining space."""
    return PatternSpace(g, tails, bins, max_radius)


def tighten_intervals(space: PatternSpace, vertex_mask: int) -> tuple[Interval, ...]:
    """Tightest one-sided intervals covering the tail values of the vertex set.

    Per attribute and chain the unique minimal interval is selected;
    intervals equivalent to [0, 1] carry no information and are omitted.
    Ordered by (attribute, lower-before-upper).
    """
    if vertex_mask == 0:
        raise ValueError("vertex set must be non-empty")
    idx = bits.to_indices(vertex_mask)
    sub = space.tails[:, idx]
    lo = sub.min(axis=1)
    hi = sub.max(axis=1)
    out: list[Interval] = []
    for a in range(space.tails.shape[0]):
        cuts = space.bins.cuts[a]
        pos = bisect_left(cuts, hi[a])
        if pos < len(cuts):
            out.append(Interval(a, "lower", cuts[pos]))
        pos = bisect_right(cuts, lo[a]) - 1
        if pos >= 0:
            out.append(Interval(a, "upper", cuts[pos]))
    return tuple(out)


def _closed_entity_sets(space: PatternSpace, min_vertices: int) -> Iterator[tuple[int, int]]:
    """Yield (vertex bitset, entity bitset) for every closed entity set.

    The entity bitset is the full covering of the vertex set; it is empty
    only for the root (whole vertex set) when no neighborhood spans V, in
    which case the root is not a pattern and is not yielded.
    """
    n = space.n_vertices
    if n == 0:
        return
    members = space.entity_members
    vmasks = space.vertex_entity_masks
    n_entities = len(members)
    full_v = bits.full_mask(n)
    full_e = bits.full_mask(n_entities)

    def closure_of(vertex_mask: int) -> int:
        acc = full_e
        m = vertex_mask
        while m:
            low = m & -m
            acc &= vmasks[low.bit_length() - 1]
            m ^= low
        return acc

    def visit(u_mask: int, x_mask: int, core: int) -> Iterator[tuple[int, int]]:
        if x_mask and u_mask.bit_count() >= min_vertices:
            yield u_mask, x_mask
        cand = full_e & ~x_mask
        if core >= 0:
            cand &= full_e << (core + 1)
        while cand:
            low = cand & -cand
            cand ^= low
            j = low.bit_length() - 1
            u_new = u_mask & members[j]
            if u_new.bit_count() < min_vertices:
                continue
            x_new = closure_of(u_new)
            below = low - 1
            if (x_new & below) != (x_mask & below):
                continue  # closure reaches below the extension index: not canonical
            yield from visit(u_new, x_new, j)

    if min_vertices > n:
        return
    yield from visit(full_v, closure_of(full_v), -1)


def enumerate_closed(space: PatternSpace, min_vertices: int = 1) -> Iterator[ClosedPattern]:
    """All closed patterns with at least `min_vertices` vertices.

    Each pattern appears exactly once; emission order is lexicographic on
    the ascending vertex index tuple, so output is deterministic.
    """
    if min_vertices < 1:
        raise ValueError("min_vertices must be >= 1")
    found = [
        (tuple(bits.to_indices(u)), u, x)
        for u, x in _closed_entity_sets(space, min_vertices)
    ]
    found.sort(key=lambda t: t[0])
    for _, u, x in found:
        yield ClosedPattern(
            vertices=u,
            intervals=tighten_intervals(space, u),
            covering=tuple(bits.to_indices(x)),
        )
