"""Optimal L2 assignment between a sample and a ball grid.

The minimizing bijection sample -> grid defines the empirical center-outward
distribution function; its ranks are (n_R+1) times the norms of the assigned
grid points and its signs are their directions.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .grid import BallGrid, InvalidInputError

__all__ = [
    "Sample",
    "Assignment",
    "SolverFailureError",
    "cost_matrix",
    "solve_hungarian",
    "solve_auction",
    "brute_force_assignment",
    "empirical_F",
]


class SolverFailureError(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class Sample:
    points: np.ndarray  # (n, d)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("sample contains non-finite values")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def has_duplicates(self) -> bool:
        return len(np.unique(self.points, axis=0)) < self.n

    @classmethod
    def from_csv(cls, path) -> "Sample":
        with open(path) as fh:
            first = fh.readline()
        has_header = False
        for tok in first.strip().split(","):
            try:
                float(tok)
            except ValueError:
                has_header = True
                break
        data = np.loadtxt(path, delimiter=",", skiprows=1 if has_header else 0, ndmin=2)
        return cls(points=data)


@dataclass
class Assignment:
    perm: np.ndarray        # sample i -> grid perm[i]
    total_cost: float
    solver: str
    certified_unique: bool | None = None
    row_duals: np.ndarray | None = None     # u_i, for min-cost LP
    col_duals: np.ndarray | None = None     # v_j

    def to_json(self) -> str:
        return json.dumps(
            {"perm": self.perm.tolist(), "total_cost": self.total_cost, "solver": self.solver}
        )

    @classmethod
    def from_json(cls, text: str) -> "Assignment":
        doc = json.loads(text)
        return cls(
            perm=np.asarray(doc["perm"], dtype=np.int64),
            total_cost=float(doc["total_cost"]),
            solver=doc["solver"],
        )


def cost_matrix(sample: Sample, grid: BallGrid) -> np.ndarray:
    """Entry (i, j) is the squared Euclidean distance between sample point i
    and grid point j."""
    if sample.d != grid.d:
        raise InvalidInputError("dimension mismatch between sample and grid")
    if sample.n != grid.n:
        raise InvalidInputError("sample size must match grid size")
    z, y = sample.points, grid.points
    sq = (z * z).sum(axis=1)[:, None] + (y * y).sum(axis=1)[None, :] - 2.0 * z @ y.T
    return np.maximum(sq, 0.0)


def _validate_cost(cost: np.ndarray) -> np.ndarray:
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise InvalidInputError("cost matrix must be square")
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("cost matrix must be finite")
    return cost


def solve_hungarian(cost: np.ndarray) -> Assignment:
    """Exact minimum-cost permutation (Kuhn-Munkres, via scipy)."""
    cost = _validate_cost(cost)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    total = float(cost[rows, cols].sum())
    return Assignment(perm=perm, total_cost=total, solver="hungarian")


def brute_force_assignment(cost: np.ndarray) -> Assignment:
    """Enumerate all n! permutations; test oracle, n <= 10 only."""
    cost = _validate_cost(cost)
    n = cost.shape[0]
    if n > 10:
        raise InvalidInputError("brute force assignment refused for n > 10")
    idx = np.arange(n)
    best, best_perm, n_best = np.inf, None, 0
    for p in itertools.permutations(range(n)):
        c = cost[idx, list(p)].sum()
        if best_perm is None or c < best - 1e-12 * max(1.0, abs(best)):
            best, best_perm, n_best = c, p, 1
        elif abs(c - best) <= 1e-12 * max(1.0, abs(best), abs(c)):
            n_best += 1
    return Assignment(
        perm=np.asarray(best_perm, dtype=np.int64),
        total_cost=float(best),
        solver="brute",
        certified_unique=(n_best == 1),
    )


def _auction_phase(B, prices, eps, max_rounds, chunk=2048):
    n = B.shape[0]
    assigned_to = np.full(n, -1, dtype=np.int64)   # sample -> object
    owner = np.full(n, -1, dtype=np.int64)         # object -> sample
    rounds = 0
    while True:
        free = np.flatnonzero(assigned_to == -1)
        if free.size == 0:
            return assigned_to
        rounds += 1
        if rounds > max_rounds:
            raise SolverFailureError(
                "auction did not converge",
                {"eps": eps, "unassigned": int(free.size), "rounds": rounds},
            )
        bidders = free[:chunk]
        V = B[bidders].astype(float) - prices[None, :]
        if n == 1:
            j_star = np.zeros(len(bidders), dtype=np.int64)
            incr = np.full(len(bidders), eps)
        else:
            part = np.argpartition(-V, 1, axis=1)[:, :2]
            rows = np.arange(len(bidders))
            v_a = V[rows, part[:, 0]]
            v_b = V[rows, part[:, 1]]
            first = v_a >= v_b
            j_star = np.where(first, part[:, 0], part[:, 1])
            incr = np.abs(v_a - v_b) + eps
        bid_price = prices[j_star] + incr
        # one winner per object: highest bid, then lowest bidder index
        order = np.lexsort((bidders, -bid_price, j_star))
        j_sorted = j_star[order]
        keep = np.ones(len(order), dtype=bool)
        keep[1:] = j_sorted[1:] != j_sorted[:-1]
        winners = order[keep]
        w_obj = j_star[winners]
        w_bidder = bidders[winners]
        prices[w_obj] = bid_price[winners]
        prev = owner[w_obj]
        assigned_to[prev[prev >= 0]] = -1
        owner[w_obj] = w_bidder
        assigned_to[w_bidder] = w_obj


def solve_auction(
    cost: np.ndarray,
    epsilon_schedule=None,
    scale: float = 1e9,
    shrink: float = 4.0,
    max_rounds_per_phase: int = 2_000_000,
) -> Assignment:
    """Forward auction with epsilon scaling on integerized costs.

    Costs are scaled by `scale` and rounded, so that a final epsilon below
    1/(n+1) in integer units certifies optimality of the integerized problem
    (precision bound: the returned cost is within n/scale of the true optimum).
    The column duals of the assignment LP are recovered from the final prices.
    """
    cost = _validate_cost(cost)
    n = cost.shape[0]
    Ci = np.rint(cost * scale).astype(np.int64)
    B = Ci.max() - Ci
    if epsilon_schedule is None:
        eps = max(float(B.max()) / shrink, 1.0)
        final = 1.0 / (n + 1)
        schedule = []
        while eps > final:
            schedule.append(eps)
            eps /= shrink
        schedule.append(final / 2.0)
    else:
        schedule = [float(e) * scale for e in epsilon_schedule]
        if len(schedule) == 0:
            raise InvalidInputError("epsilon schedule must be non-empty")
        if any(e <= 0 for e in schedule) or any(
            later >= earlier for earlier, later in zip(schedule[:-1], schedule[1:])
        ):
            raise InvalidInputError("epsilon schedule must be positive and decreasing")
    prices = np.zeros(n)
    assigned_to = None
    for eps in schedule:
        assigned_to = _auction_phase(B, prices, eps, max_rounds_per_phase)
    perm = assigned_to
    total = float(cost[np.arange(n), perm].sum())
    v = -prices / scale
    u = cost[np.arange(n), perm] - v[perm]
    return Assignment(
        perm=perm, total_cost=total, solver="auction", row_duals=u, col_duals=v
    )


def empirical_F(sample: Sample, grid: BallGrid, solver: str = "auto"):
    """Assign the sample to the grid and read off the rank/sign table.

    Returns (Assignment, RankSignTable). F(Z_i) is the grid point matched to
    observation i; rank_i = (n_R+1)*||F(Z_i)||, sign_i its direction (zero
    vector at the origin).
    """
    from .contours import table  # deferred: contours depends only on grid

    if grid.spec.n_0 > 1 and not grid.ties_broken:
        raise InvalidInputError("grid has n_0 > 1 tied origins; break ties first")
    cost = cost_matrix(sample, grid)
    if solver == "auto":
        solver = "hungarian" if sample.n <= 2000 else "auction"
    if solver == "hungarian":
        assignment = solve_hungarian(cost)
    elif solver == "auction":
        assignment = solve_auction(cost)
    elif solver == "brute":
        assignment = brute_force_assignment(cost)
    else:
        raise InvalidInputError(f"unknown solver {solver!r}")
    if sample.has_duplicates:
        assignment.certified_unique = False
    return assignment, table(sample, grid, assignment)
