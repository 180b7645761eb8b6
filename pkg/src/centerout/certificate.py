"""Cyclical monotonicity certification for a pairing (x_i, y_i).

A pairing is cyclically monotone iff the complete digraph with arc costs
c(i,j) = <x_i, y_i - y_j> has no negative-mean cycle; it is the unique
monotone bijection iff the minimum cycle mean eps* is strictly positive.
The optimal potential weights come from shortest paths under the reduced
costs c - eps*, and eps0 (the largest admissible smoothing constant) is
half the minimal slack of the resulting max-affine potential.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import InvalidInputError

__all__ = [
    "Potential",
    "pairing_costs",
    "karp_min_mean_cycle",
    "min_mean_cycle_witness",
    "optimal_weights",
    "epsilon0",
    "admissible_epsilon",
    "check_cyclical_monotonicity",
    "weights_with_repetitions",
    "enumerate_cycle_means",
]

ZERO_MEAN_TOL = 1e-10


@dataclass
class Potential:
    """Max-affine potential phi(x) = max_j (<x, y_j> - psi_j)."""

    targets: np.ndarray      # (n, d)
    weights: np.ndarray      # (n,)
    epsilon_star: float
    epsilon0: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "targets": self.targets.tolist(),
                "weights": self.weights.tolist(),
                "epsilon_star": self.epsilon_star,
                "epsilon0": self.epsilon0,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Potential":
        doc = json.loads(text)
        return cls(
            targets=np.asarray(doc["targets"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            epsilon_star=float(doc["epsilon_star"]),
            epsilon0=float(doc["epsilon0"]),
        )


def _as_pairs(xs, ys):
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.shape != ys.shape:
        raise InvalidInputError("xs and ys must have the same shape")
    return xs, ys


def pairing_costs(xs, ys) -> np.ndarray:
    """c(i,j) = <x_i, y_i - y_j> for i != j; +inf on the diagonal."""
    xs, ys = _as_pairs(xs, ys)
    diag = np.einsum("id,id->i", xs, ys)
    c = diag[:, None] - xs @ ys.T
    np.fill_diagonal(c, np.inf)
    return c


def karp_min_mean_cycle(costs: np.ndarray, return_paths: bool = False):
    """Minimum over directed cycles of (cycle cost)/(cycle length).

    Dynamic program on shortest k-step path lengths from a fixed source:
    d[k+1, i] = min_j (d[k, j] + c(j, i)), then
    eps* = min_i max_k (d[n, i] - d[k, i]) / (n - k).
    """
    c = np.asarray(costs, dtype=float)
    n = c.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two nodes")
    d = np.full((n + 1, n), np.inf)
    parent = np.zeros((n + 1, n), dtype=np.int64)
    d[0, 0] = 0.0
    for k in range(n):
        t = d[k][:, None] + c
        parent[k + 1] = np.argmin(t, axis=0)
        d[k + 1] = t[parent[k + 1], np.arange(n)]
    ks = np.arange(n)
    with np.errstate(invalid="ignore"):
        ratios = (d[n][None, :] - d[:n]) / (n - ks)[:, None]
    ratios = np.where(np.isfinite(d[:n]), ratios, -np.inf)
    per_node = ratios.max(axis=0)
    i_star = int(np.argmin(per_node))
    eps_star = float(per_node[i_star])
    if return_paths:
        return eps_star, i_star, parent
    return eps_star


def min_mean_cycle_witness(costs: np.ndarray):
    """(eps*, cycle): an explicit cycle attaining the minimum mean, as a list
    of node indices."""
    c = np.asarray(costs, dtype=float)
    n = c.shape[0]
    eps_star, i_star, parent = karp_min_mean_cycle(c, return_paths=True)
    walk = [i_star]
    node = i_star
    for k in range(n, 0, -1):
        node = int(parent[k, node])
        walk.append(node)
    walk.reverse()  # length n+1, from source to i_star
    seen = {}
    cycle = None
    for pos, v in enumerate(walk):
        if v in seen:
            cycle = walk[seen[v]:pos]
            break
        seen[v] = pos
    return eps_star, cycle


def _cycle_mean(costs, cycle):
    total = 0.0
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        total += costs[a, b]
    return total / len(cycle)


def enumerate_cycle_means(costs: np.ndarray):
    """Brute-force minimum over all simple cycles; oracle for small n."""
    c = np.asarray(costs, dtype=float)
    n = c.shape[0]
    if n > 8:
        raise InvalidInputError("cycle enumeration refused for n > 8")
    best = np.inf
    nodes = range(n)
    for length in range(2, n + 1):
        for subset in itertools.combinations(nodes, length):
            first = subset[0]
            for rest in itertools.permutations(subset[1:]):
                cyc = (first,) + rest
                mean = _cycle_mean(c, list(cyc))
                best = min(best, mean)
    return best


def optimal_weights(costs: np.ndarray, eps_star: float) -> np.ndarray:
    """Weights psi from shortest paths under the reduced costs c - eps*.

    Feasible for the slack LP: c(i,j) >= psi_i - psi_j + eps* for all i != j,
    with eps* the optimum.
    """
    c = np.asarray(costs, dtype=float)
    n = c.shape[0]
    ct = c - eps_star
    np.fill_diagonal(ct, np.inf)
    d = np.full(n, np.inf)
    d[0] = 0.0
    best = d.copy()
    for _ in range(n - 1):
        d = np.min(d[:, None] + ct, axis=0)
        best = np.minimum(best, d)
    psi = -best
    slack = (c - eps_star) - (psi[:, None] - psi[None, :])
    np.fill_diagonal(slack, np.inf)
    worst = slack.min()
    if worst < -1e-9 * max(1.0, np.abs(c[np.isfinite(c)]).max()):
        warnings.warn(
            f"weight feasibility violated by {-worst:.3e}; clamping", RuntimeWarning
        )
    return psi


def epsilon0(xs, ys, psi, chunk: int = 1024) -> float:
    """Half the minimal gap between the active affine piece at each x_i and
    the runner-up. Positive iff the pairing is the unique monotone one."""
    xs, ys = _as_pairs(xs, ys)
    psi = np.asarray(psi, dtype=float)
    n = xs.shape[0]
    if n == 1:
        return np.inf
    worst = np.inf
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        g = xs[lo:hi] @ ys.T - psi[None, :]        # (m, n)
        rows = np.arange(hi - lo)
        own = g[rows, np.arange(lo, hi)].copy()
        g[rows, np.arange(lo, hi)] = -np.inf
        worst = min(worst, float((own - g.max(axis=1)).min()))
    return 0.5 * worst


def admissible_epsilon(xs, ys, psi, chunk: int = 1024) -> float:
    """Largest eps for which the prox point x_i - eps*y_i keeps piece i
    active, so that T_eps interpolates every pair exactly.

    The pairwise condition is margin(i,j) >= eps * <y_i, y_i - y_j>; pairs
    with nonpositive inner product never bind. Coincides with 2*epsilon0
    when the targets lie in the unit ball only up to the norm factor, and
    is the sharp bound when they do not (the quantile side).
    """
    xs, ys = _as_pairs(xs, ys)
    psi = np.asarray(psi, dtype=float)
    n = xs.shape[0]
    if n == 1:
        return np.inf
    best = np.inf
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        rows = np.arange(hi - lo)
        vals = xs[lo:hi] @ ys.T - psi[None, :]
        own = vals[rows, np.arange(lo, hi)]
        margin = own[:, None] - vals
        g = np.einsum("id,id->i", ys[lo:hi], ys[lo:hi])[:, None] - ys[lo:hi] @ ys.T
        margin[rows, np.arange(lo, hi)] = np.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(g > 0, margin / g, np.inf)
        best = min(best, float(ratio.min()))
    return best


def check_cyclical_monotonicity(
    xs, ys, mode: str = "exact", max_len: int = 4, trials: int = 200, seed: int = 0
):
    """Classify a pairing as monotone-unique, monotone-nonunique, or violated.

    Exact mode decides via the minimum cycle mean; a violated verdict carries
    an explicit negative-mean cycle. Sampled mode spot-checks random cycles.
    Returns (verdict, eps_star_or_None, cycle_or_None).
    """
    xs, ys = _as_pairs(xs, ys)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        n = xs.shape[0]
        for _ in range(trials):
            k = int(rng.integers(2, max_len + 1))
            cyc = rng.choice(n, size=min(k, n), replace=False).tolist()
            c = pairing_costs(xs, ys)
            if _cycle_mean(c, cyc) < -ZERO_MEAN_TOL:
                return "violated", None, cyc
        return "monotone-unique", None, None
    c = pairing_costs(xs, ys)
    scale = max(1.0, np.abs(c[np.isfinite(c)]).max())
    eps_star, cycle = min_mean_cycle_witness(c)
    if eps_star > ZERO_MEAN_TOL * scale:
        return "monotone-unique", eps_star, None
    if eps_star >= -ZERO_MEAN_TOL * scale:
        return "monotone-nonunique", eps_star, None
    return "violated", eps_star, cycle


def weights_with_repetitions(xs, ys, n_0: int) -> np.ndarray:
    """Weights for pairings whose first n_0 targets coincide (tied origins):
    the tied targets share a single weight."""
    xs, ys = _as_pairs(xs, ys)
    n = xs.shape[0]
    if not (1 <= n_0 <= n):
        raise InvalidInputError("n_0 must be in 1..n")
    if n_0 > 1 and not np.allclose(ys[:n_0], ys[0], atol=0.0):
        raise InvalidInputError("first n_0 targets must coincide")
    if n_0 == n:
        return np.zeros(n)
    if n_0 == 1:
        c = pairing_costs(xs, ys)
        return optimal_weights(c, karp_min_mean_cycle(c))
    # group constraint graph: tightest arc between target groups
    m = n - n_0 + 1
    group_of = np.concatenate([np.zeros(n_0, dtype=int), np.arange(1, m)])
    yg = np.vstack([ys[0], ys[n_0:]])
    cg = np.full((m, m), np.inf)
    for i in range(n):
        g = group_of[i]
        # constraints from x_i: <x_i, y_g - y_h> >= psi_g - psi_h + eps
        row = float(xs[i] @ yg[g]) - yg @ xs[i]
        row[g] = np.inf
        cg[g] = np.minimum(cg[g], row)
    eps_star = karp_min_mean_cycle(cg)
    psi_g = optimal_weights(cg, eps_star)
    return psi_g[group_of]
