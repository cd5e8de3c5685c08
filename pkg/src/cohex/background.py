"""Maximum-entropy background model over attribute counts.

The model encodes the prior belief that only the per-vertex totals and
per-attribute totals of the count matrix are known. Under those margin
constraints the MaxEnt distribution factorizes into independent geometric
distributions, one per (attribute, vertex) cell:

    Pr(a(v) = z) = p_av * (1 - p_av)^z,   p_av = 1 - exp(lr_a + lc_v),

with one log-multiplier lr_a per attribute and lc_v per vertex. Fitting
means choosing the multipliers so that expected margins match observed
margins; the expectation of a cell is (1 - p_av) / p_av.

Downstream mining does not run on raw counts but on upper-tail
probabilities c_av = Pr(a(v) >= observed) = (1 - p_av)^observed, which
normalize counts across vertices of very different size. Those tails get
discretized into per-attribute quantile bins whose cut points later serve
as interval endpoints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

P_FLOOR = 1e-12


class FitConvergenceError(RuntimeError):
    """Margin fit did not reach tolerance within the sweep budget."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"background fit did not converge after {iterations} sweeps "
            f"(max relative residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class FitReport:
    iterations: int
    max_residual: float
    converged: bool


@dataclass(frozen=True)
class TailMatrix:
    """Upper-tail probabilities c_av in (0, 1], shaped (attributes, vertices)."""

    c: np.ndarray


@dataclass(frozen=True)
class BinBoundaries:
    """Per-attribute ascending quantile cut points, each strictly inside (0, 1)."""

    cuts: tuple[tuple[float, ...], ...]


def _means(log_theta: np.ndarray) -> np.ndarray:
    # geometric mean (1-p)/p with log(1-p) = log_theta < 0
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(-log_theta)


def _solve_margin_block(offsets: np.ndarray, targets: np.ndarray, t0: np.ndarray,
                        tol: float) -> np.ndarray:
    """Solve, per component i, sum_j mean(t_i + offsets_j) = targets_i.

    Each scalar problem is strictly increasing and convex in t_i on the
    feasible half-line t_i < -max(offsets); a bracketed Newton iteration
    (bisection fallback when the step leaves the bracket) is therefore
    globally convergent.
    """
    t_hi_bound = -offsets.max()
    delta = min(1e-9, 0.1 / max(float(targets.max()), 1.0))
    hi = np.full(targets.shape, t_hi_bound - delta)
    lo = np.minimum(t0, hi - 1.0)

    def h_of(t):
        means = _means(t[:, None] + offsets[None, :])
        return means.sum(axis=1) - targets, means

    # push lo left until every component starts below its root
    step = 1.0
    for _ in range(200):
        h_lo, _ = h_of(lo)
        low_enough = h_lo < 0
        if low_enough.all():
            break
        lo = np.where(low_enough, lo, lo - step)
        step *= 2.0
    else:
        raise FitConvergenceError(0, float("inf"))

    inner_tol = 0.05 * tol * np.maximum(1.0, targets)
    t = np.clip(t0, lo, hi)
    for _ in range(200):
        h, means = h_of(t)
        if (np.abs(h) <= inner_tol).all():
            break
        lo = np.where(h < 0, t, lo)
        hi = np.where(h > 0, t, hi)
        slope = (means * (1.0 + means)).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            t_new = t - h / slope
        bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
        t = np.where(bad, 0.5 * (lo + hi), t_new)
    return t


class BackgroundModel:
    """Fitted cell-wise geometric background distribution.

    `p` has shape (attributes, vertices). Degenerate rows or columns of the
    count matrix (observed sum zero) get multiplier -inf, hence p = 1 and a
    point mass at zero; they are excluded from residual accounting.
    """

    def __init__(self, p: np.ndarray, lambda_row: np.ndarray, lambda_col: np.ndarray,
                 fit_report: FitReport):
        self.p = p
        self.lambda_row = lambda_row
        self.lambda_col = lambda_col
        self.fit_report = fit_report

    @property
    def shape(self) -> tuple[int, int]:
        return self.p.shape

    def mean(self) -> np.ndarray:
        """Expected counts (1-p)/p per cell."""
        return (1.0 - self.p) / self.p

    def tail_probability(self, a: int, v: int, value: int) -> float:
        """Pr(a(v) >= value) = (1-p_av)^value; 1.0 at value 0 by convention."""
        if value < 0:
            raise ValueError("value must be >= 0")
        return float((1.0 - self.p[a, v]) ** value)

    def tail_matrix(self, counts: np.ndarray) -> TailMatrix:
        """Upper-tail probability of every observed cell."""
        counts = np.asarray(counts)
        if counts.shape != self.p.shape:
            raise ValueError(f"counts shape {counts.shape} != model shape {self.p.shape}")
        return TailMatrix(c=(1.0 - self.p) ** counts)

    def interval_probability(self, a: int, v: int, k: float, l: float) -> float:
        """Pr(tail value in [k, l]) = l - k + p_av * k, clamped to [0, 1].

        Valid for interval endpoints on the tail-probability scale.
        """
        if k > l:
            raise ValueError(f"interval lower bound {k} exceeds upper bound {l}")
        if k < 0.0 or l > 1.0:
            raise ValueError("interval endpoints must lie in [0, 1]")
        return min(1.0, max(0.0, l - k + self.p[a, v] * k))


def fit_counts(counts: np.ndarray, tol: float = 1e-8, max_iter: int = 10_000) -> BackgroundModel:
    """Fit the geometric MaxEnt model to a (attributes, vertices) count matrix.

    Block-coordinate ascent on the dual: alternately re-solve all attribute
    multipliers given the vertex multipliers and vice versa, each block via
    the bracketed Newton solver, until expected row and column sums match
    the observed ones within relative `tol`.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2:
        raise ValueError("counts must be 2-dimensional")
    if counts.size and counts.min() < 0:
        raise ValueError("counts must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_attrs, n_verts = counts.shape

    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    active_r = row_sums > 0
    active_c = col_sums > 0

    lambda_row = np.full(n_attrs, -np.inf)
    lambda_col = np.full(n_verts, -np.inf)
    p = np.ones((n_attrs, n_verts))

    sub_targets_r = row_sums[active_r]
    sub_targets_c = col_sums[active_c]
    if sub_targets_r.size == 0 or sub_targets_c.size == 0:
        # all-zero data: point mass at zero everywhere
        return BackgroundModel(p, lambda_row, lambda_col, FitReport(0, 0.0, True))

    mean0 = counts[np.ix_(active_r, active_c)].mean()
    lam0 = math.log(mean0 / (1.0 + mean0)) / 2.0
    lr = np.full(int(active_r.sum()), lam0)
    lc = np.full(int(active_c.sum()), lam0)

    residual = math.inf
    iterations = 0
    for sweep in range(1, max_iter + 1):
        iterations = sweep
        lr = _solve_margin_block(lc, sub_targets_r, lr, tol)
        lc = _solve_margin_block(lr, sub_targets_c, lc, tol)
        means = _means(lr[:, None] + lc[None, :])
        res_r = np.abs(means.sum(axis=1) - sub_targets_r) / np.maximum(1.0, sub_targets_r)
        res_c = np.abs(means.sum(axis=0) - sub_targets_c) / np.maximum(1.0, sub_targets_c)
        residual = float(max(res_r.max(), res_c.max()))
        if residual <= tol:
            break
    else:
        raise FitConvergenceError(iterations, residual)

    lambda_row[active_r] = lr
    lambda_col[active_c] = lc
    with np.errstate(over="ignore"):
        p_sub = -np.expm1(lr[:, None] + lc[None, :])
    p[np.ix_(active_r, active_c)] = np.clip(p_sub, P_FLOOR, 1.0)
    return BackgroundModel(p, lambda_row, lambda_col, FitReport(iterations, residual, True))


def fit_background(g, tol: float = 1e-8, max_iter: int = 10_000) -> BackgroundModel:
    """Fit the background model to an AttributedGraph's count matrix."""
    return fit_counts(g.values.T, tol=tol, max_iter=max_iter)


def bin_tails(tails: TailMatrix, n_bins: int = 5) -> BinBoundaries:
    """Per-attribute nearest-rank quantile cut points over the tail values.

    Ranks i/n_bins for i = 1..n_bins-1; duplicate cut points are merged and
    cuts falling on 0 or 1 are dropped, so heavily tied attributes may end
    up with fewer than n_bins bins.
    """
    if n_bins < 2:
        raise ValueError("need at least 2 bins")
    per_attr = []
    n = tails.c.shape[1]
    for row in tails.c:
        ordered = np.sort(row)
        cuts: list[float] = []
        for i in range(1, n_bins):
            rank = -(-i * n // n_bins)  # ceil(i*n/n_bins), nearest-rank rule
            cut = float(ordered[rank - 1])
            if 0.0 < cut < 1.0 and (not cuts or cut > cuts[-1]):
                cuts.append(cut)
        per_attr.append(tuple(cuts))
    return BinBoundaries(cuts=tuple(per_attr))


def _fmt(x: float) -> str:
    if x == -math.inf:
        return "null"
    return format(x, ".17g")


def model_to_json(model: BackgroundModel) -> str:
    """Serialize with 17 significant digits so floats round-trip bit-exactly.

    -inf multipliers (degenerate rows/columns) are stored as JSON null.
    """
    rows = ",".join(_fmt(x) for x in model.lambda_row)
    cols = ",".join(_fmt(x) for x in model.lambda_col)
    p_rows = ",".join("[" + ",".join(_fmt(x) for x in row) + "]" for row in model.p)
    rep = model.fit_report
    report = (
        f'{{"iterations":{rep.iterations},"max_residual":{format(rep.max_residual, ".17g")},'
        f'"converged":{"true" if rep.converged else "false"}}}'
    )
    return (
        f'{{"lambda_row":[{rows}],"lambda_col":[{cols}],"p":[{p_rows}],'
        f'"fit_report":{report}}}'
    )


def model_from_json(text: str) -> BackgroundModel:
    doc = json.loads(text)
    lambda_row = np.array(
        [-math.inf if x is None else float(x) for x in doc["lambda_row"]]
    )
    lambda_col = np.array(
        [-math.inf if x is None else float(x) for x in doc["lambda_col"]]
    )
    p = np.array(doc["p"], dtype=np.float64)
    rep = doc["fit_report"]
    report = FitReport(int(rep["iterations"]), float(rep["max_residual"]), bool(rep["converged"]))
    if p.shape != (lambda_row.size, lambda_col.size):
        raise ValueError("model dimensions are inconsistent")
    return BackgroundModel(p, lambda_row, lambda_col, report)
