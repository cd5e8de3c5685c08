"""Minimum description length of a vertex set, exactly.

A description of U is a subset X of the neighborhoods containing U, read as
"the intersection of these balls, minus the listed exceptions", where the
exceptions are exactly (intersection of X) \\ U. Its cost in bits is

    f(X, U) = (|X| + 1) * log2(vocabulary size)
            + (|exceptions| + 1) * log2(|V|)

and DL(U) is the minimum of f over all subsets of the covering, found by
branch-and-bound: branch on the candidate whose inclusion reduces f the
most, bound with a gain-based lower bound, and prune candidates that are
useless (zero gain) or dominated (some other candidate leaves a subset of
their exceptions). The empty X is always feasible (its intersection is all
of V by convention), so the incumbent starts finite and the bound test is
active from the first node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import bits


@dataclass(frozen=True)
class Description:
    """Chosen covering indices, exception vertex bitset, and cost in bits."""

    chosen: tuple[int, ...]
    exceptions: int
    cost: float

    def exception_indices(self) -> list[int]:
        return bits.to_indices(self.exceptions)


@dataclass
class SearchStats:
    """Branch-and-bound effort counters."""

    nodes: int = 0


def _intersection(members: Iterable[int], full: int) -> int:
    acc = full
    for m in members:
        acc &= m
    return acc


def _check_covers(members, vertex_mask) -> None:
    for m in members:
        if vertex_mask & ~m:
            raise ValueError("description contains a neighborhood not covering the vertex set")


def description_cost(chosen_members: Sequence[int], vertex_mask: int,
                     n_vocab: int, n_vertices: int) -> float:
    """f(X, U) for an explicit subset X given as member bitsets."""
    chosen_members = list(chosen_members)
    _check_covers(chosen_members, vertex_mask)
    full = bits.full_mask(n_vertices)
    exc = _intersection(chosen_members, full) & ~vertex_mask
    return (len(chosen_members) + 1) * math.log2(n_vocab) \
        + (exc.bit_count() + 1) * math.log2(n_vertices)


def exceptions_of(chosen_members: Sequence[int], vertex_mask: int, n_vertices: int) -> int:
    """Exception bitset (intersection of X) \\ U, with the empty X covering V."""
    full = bits.full_mask(n_vertices)
    return _intersection(chosen_members, full) & ~vertex_mask


def gain(added_members: Sequence[int], chosen_members: Sequence[int],
         vertex_mask: int, n_vertices: int) -> int:
    """Drop in exception count when X is extended by the given members."""
    full = bits.full_mask(n_vertices)
    inter = _intersection(chosen_members, full)
    exc = inter & ~vertex_mask
    exc_after = _intersection(added_members, inter) & ~vertex_mask
    return exc.bit_count() - exc_after.bit_count()


def lower_bound(chosen_members: Sequence[int], vertex_mask: int,
                candidate_members: Sequence[int], n_vocab: int, n_vertices: int) -> float:
    """Cost no extension of X by candidates can beat.

    Adding i candidates costs i * log2(vocab) and removes at most the sum of
    the i largest singleton gains' worth of exceptions; minimizing over i
    gives the bound.
    """
    chosen_members = list(chosen_members)
    full = bits.full_mask(n_vertices)
    exc = _intersection(chosen_members, full) & ~vertex_mask
    ne = exc.bit_count()
    gains = sorted((ne - (exc & c).bit_count() for c in candidate_members), reverse=True)
    return _bound_from_gains(len(chosen_members), ne, gains,
                             math.log2(n_vocab), math.log2(n_vertices))


def _bound_from_gains(n_chosen: int, n_exc: int, gains_desc: Sequence[int],
                      log_vocab: float, log_vert: float) -> float:
    best = (n_chosen + 1) * log_vocab + (1 + n_exc) * log_vert
    covered = 0
    for i, g in enumerate(gains_desc, start=1):
        covered += g
        remaining = n_exc - covered
        if remaining < 0:
            remaining = 0
        value = (n_chosen + i + 1) * log_vocab + (1 + remaining) * log_vert
        if value < best:
            best = value
        if covered >= n_exc:
            break  # exceptions exhausted; larger i only adds vocabulary cost
    return best


def _keep_useful(exception_sets: Sequence[int], n_exc_before: int) -> list[int]:
    """Positions of candidates whose singleton gain is positive."""
    return [i for i, e in enumerate(exception_sets) if e.bit_count() < n_exc_before]


def _keep_undominated(exception_sets: Sequence[int]) -> list[int]:
    """Positions surviving dominance pruning.

    A candidate is dropped when another one leaves a strict subset of its
    exceptions, or an equal set at a lower position (ties keep the first).
    """
    keep = [True] * len(exception_sets)
    first: dict[int, int] = {}
    for i, e in enumerate(exception_sets):
        if e in first:
            keep[i] = False
        else:
            first[e] = i
    uniq = sorted(((e.bit_count(), e, i) for e, i in first.items()))
    for ai in range(len(uniq)):
        size_a, e_a, i_a = uniq[ai]
        if not keep[i_a]:
            continue
        for bi in range(ai + 1, len(uniq)):
            size_b, e_b, i_b = uniq[bi]
            if keep[i_b] and size_a < size_b and e_a & ~e_b == 0:
                keep[i_b] = False
    return [i for i, k in enumerate(keep) if k]


def prune_useless(chosen_members: Sequence[int], vertex_mask: int,
                  candidate_members: Sequence[int], n_vertices: int) -> list[int]:
    """Candidates (as member bitsets) that can still remove an exception."""
    exc = exceptions_of(chosen_members, vertex_mask, n_vertices)
    excs = [exc & c for c in candidate_members]
    kept = _keep_useful(excs, exc.bit_count())
    return [candidate_members[i] for i in kept]


def prune_dominated(chosen_members: Sequence[int], vertex_mask: int,
                    candidate_members: Sequence[int], n_vertices: int) -> list[int]:
    """Candidates not dominated by another candidate's exception set."""
    exc = exceptions_of(chosen_members, vertex_mask, n_vertices)
    excs = [exc & c for c in candidate_members]
    kept = _keep_undominated(excs)
    return [candidate_members[i] for i in kept]


def branch_choice(chosen_members: Sequence[int], vertex_mask: int,
                  candidate_members: Sequence[int], n_vertices: int) -> int:
    """Position of the candidate minimizing f after inclusion (max gain, first wins)."""
    if not candidate_members:
        raise ValueError("no candidates to branch on")
    exc = exceptions_of(chosen_members, vertex_mask, n_vertices)
    best_pos = 0
    best_size = (exc & candidate_members[0]).bit_count()
    for i in range(1, len(candidate_members)):
        size = (exc & candidate_members[i]).bit_count()
        if size < best_size:
            best_pos, best_size = i, size
    return best_pos


def optimise_description(vertex_mask: int, covering_members: Sequence[int],
                         n_vocab: int, n_vertices: int, *,
                         use_gain_prune: bool = True,
                         use_dominance_prune: bool = True,
                         stats: SearchStats | None = None,
                         trace: Callable[[dict], None] | None = None) -> Description:
    """Globally minimal description of the vertex set over its covering.

    `covering_members` are the member bitsets of all neighborhoods that
    contain the vertex set; indices in the returned Description refer into
    that sequence. The two pruning rules only cut search effort, never the
    achievable minimum, and can be disabled for ablation.
    """
    members = tuple(covering_members)
    _check_covers(members, vertex_mask)
    full = bits.full_mask(n_vertices)
    log_vocab = math.log2(n_vocab)
    log_vert = math.log2(n_vertices)
    if stats is None:
        stats = SearchStats()

    def cost_of(n_chosen: int, n_exc: int) -> float:
        return (n_chosen + 1) * log_vocab + (n_exc + 1) * log_vert

    root_exc = full & ~vertex_mask
    best = Description((), root_exc, cost_of(0, root_exc.bit_count()))

    def rec(chosen: tuple[int, ...], inter: int, cand: list[int]) -> None:
        nonlocal best
        stats.nodes += 1
        exc = inter & ~vertex_mask
        ne = exc.bit_count()
        excs = [exc & members[c] for c in cand]
        gains_desc = sorted((ne - e.bit_count() for e in excs), reverse=True)
        lb = _bound_from_gains(len(chosen), ne, gains_desc, log_vocab, log_vert)
        if not lb < best.cost:
            return
        if trace is not None:
            trace({"depth": len(chosen), "n_exceptions": ne, "n_candidates": len(cand),
                   "lower_bound": lb, "incumbent": best.cost})
        if use_gain_prune:
            kept = _keep_useful(excs, ne)
            cand = [cand[i] for i in kept]
            excs = [excs[i] for i in kept]
        if use_dominance_prune and cand:
            kept = _keep_undominated(excs)
            cand = [cand[i] for i in kept]
            excs = [excs[i] for i in kept]
        if not cand:
            c = cost_of(len(chosen), ne)
            if c < best.cost:
                best = Description(chosen, exc, c)
            return
        # branch on the candidate reaching the cheapest one-step cost
        pick = 0
        smallest = excs[0].bit_count()
        for i in range(1, len(excs)):
            size = excs[i].bit_count()
            if size < smallest:
                pick, smallest = i, size
        e = cand[pick]
        rest = cand[:pick] + cand[pick + 1:]
        rec(chosen + (e,), inter & members[e], rest)
        rec(chosen, inter, rest)

    rec((), full, list(range(len(members))))
    return best


def describe_pattern(space, pattern, **kwargs) -> Description:
    """Optimal description of a closed pattern within its covering.

    Description.chosen indices are positions in pattern.covering.
    """
    covering_members = [space.entity_members[i] for i in pattern.covering]
    return optimise_description(pattern.vertices, covering_members,
                                space.vocab_size, space.n_vertices, **kwargs)
