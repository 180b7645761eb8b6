"""Moreau envelope of the max-affine potential and its gradient map.

phi(x) = max_j (<x, y_j> - psi_j) is piecewise affine; its envelope
phi_eps(x) = inf_y [phi(y) + ||y - x||^2 / (2 eps)] is C^1 and its gradient
T_eps = grad phi_eps is the 1/eps-Lipschitz, cyclically monotone map that
interpolates the data pairs for every eps in (0, eps0].

The prox is solved through its dual: maximize
    <x, Y lam> - psi.lam - (eps/2) ||Y lam||^2
over the probability simplex. The active set at the optimum is tiny, so we
run accelerated projected gradient on the top-k affine pieces and certify
with the duality gap against the full max; unconverged points double k.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .assignment import Assignment, Sample, SolverFailureError
from .certificate import (
    Potential,
    admissible_epsilon,
    epsilon0,
    karp_min_mean_cycle,
    optimal_weights,
    pairing_costs,
)
from .grid import BallGrid, InvalidInputError

__all__ = [
    "SmoothMap",
    "NotInterpolableError",
    "phi",
    "prox",
    "T_eps",
    "phi_eps",
    "fit_smooth_F",
    "fit_smooth_Q",
    "step_F",
]

KARP_THRESHOLD = 1500


class NotInterpolableError(RuntimeError):
    """The pairing admits no positive smoothing constant (eps0 <= 0)."""


@dataclass(frozen=True)
class SmoothMap:
    potential: Potential
    epsilon: float
    direction: str                     # "sample-to-ball" or "ball-to-sample"
    prox_tolerance: float = 1e-8
    grid_spec: dict | None = None
    sample_hash: str | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidInputError("epsilon must be positive")
        if self.potential.epsilon0 > 0 and self.epsilon > self.potential.epsilon0 * (1 + 1e-12):
            raise InvalidInputError("epsilon must not exceed epsilon0")
        if self.direction not in ("sample-to-ball", "ball-to-sample"):
            raise InvalidInputError("bad direction")

    @property
    def y_norm_bound(self) -> float:
        return float(np.linalg.norm(self.potential.targets, axis=1).max())

    def __call__(self, x, tol=None):
        return T_eps(x, self, tol=tol)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "epsilon": self.epsilon,
            "epsilon0": self.potential.epsilon0,
            "epsilon_star": self.potential.epsilon_star,
            "targets": self.potential.targets.tolist(),
            "weights": self.potential.weights.tolist(),
            "prox_tolerance": self.prox_tolerance,
            "grid_spec": self.grid_spec,
            "sample_hash": self.sample_hash,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SmoothMap":
        pot = Potential(
            targets=np.asarray(doc["targets"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            epsilon_star=float(doc.get("epsilon_star", np.nan)),
            epsilon0=float(doc["epsilon0"]),
        )
        return cls(
            potential=pot,
            epsilon=float(doc["epsilon"]),
            direction=doc["direction"],
            prox_tolerance=float(doc["prox_tolerance"]),
            grid_spec=doc.get("grid_spec"),
            sample_hash=doc.get("sample_hash"),
        )

    @classmethod
    def from_json(cls, text: str) -> "SmoothMap":
        return cls.from_dict(json.loads(text))


def phi(x, potential: Potential):
    """Pointwise max of the affine pieces; batch over rows of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    vals = x @ potential.targets.T - potential.weights[None, :]
    out = vals.max(axis=1)
    return out if out.size > 1 else float(out[0])


def _project_simplex(V: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean projection onto the probability simplex."""
    m, k = V.shape
    U = np.sort(V, axis=1)[:, ::-1]
    css = np.cumsum(U, axis=1) - 1.0
    ind = np.arange(1, k + 1)
    cond = U - css / ind > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(m), rho] / (rho + 1)
    return np.maximum(V - theta[:, None], 0.0)


def _prox_active_set(X, Y, psi, eps, tol, k, max_iter=3000, check_every=25):
    """Dual ascent on the top-k affine pieces for each row of X.

    Returns (T_values, y0, value, gap, converged).
    """
    m, d = X.shape
    n = Y.shape[0]
    k = min(k, n)
    Bf = X @ Y.T - psi[None, :]
    if k < n:
        act = np.argpartition(-Bf, k - 1, axis=1)[:, :k]
    else:
        act = np.broadcast_to(np.arange(n), (m, n)).copy()
    Ys = Y[act]                                     # (m, k, d)
    bs = np.take_along_axis(Bf, act, axis=1)        # (m, k)
    G = np.einsum("mkd,mld->mkl", Ys, Ys)
    L = eps * np.abs(G).sum(axis=2).max(axis=1)
    step = 1.0 / np.maximum(L, 1e-300)
    lam = np.zeros((m, k))
    lam[np.arange(m), np.argmax(bs, axis=1)] = 1.0
    z = lam.copy()
    t = 1.0
    gap = np.full(m, np.inf)
    Tv = np.einsum("mk,mkd->md", lam, Ys)
    for it in range(1, max_iter + 1):
        grad = bs - eps * np.einsum("mkl,ml->mk", G, z)
        lam_new = _project_simplex(z + step[:, None] * grad)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = lam_new + ((t - 1.0) / t_new) * (lam_new - lam)
        lam, t = lam_new, t_new
        if it % check_every == 0 or it == max_iter:
            Tv = np.einsum("mk,mkd->md", lam, Ys)
            y0 = X - eps * Tv
            phi_y0 = (y0 @ Y.T - psi[None, :]).max(axis=1)
            primal = phi_y0 + ((y0 - X) ** 2).sum(axis=1) / (2.0 * eps)
            dual = (lam * bs).sum(axis=1) - 0.5 * eps * (Tv * Tv).sum(axis=1)
            gap = primal - dual
            if np.all(gap <= tol):
                break
    y0 = X - eps * Tv
    value = (lam * bs).sum(axis=1) - 0.5 * eps * (Tv * Tv).sum(axis=1)
    return Tv, y0, value, gap, gap <= tol


def _prox_batch(X, Y, psi, eps, tol, k0=32, chunk=512):
    m = X.shape[0]
    n = Y.shape[0]
    T_out = np.empty((m, Y.shape[1]))
    y0_out = np.empty_like(X)
    val_out = np.empty(m)
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        idx = np.arange(lo, hi)
        k = min(k0, n)
        while True:
            Tv, y0, val, gap, ok = _prox_active_set(X[idx], Y, psi, eps, tol, k)
            done = idx[ok]
            T_out[done], y0_out[done], val_out[done] = Tv[ok], y0[ok], val[ok]
            idx = idx[~ok]
            if idx.size == 0:
                break
            if k >= n:
                raise SolverFailureError(
                    "prox solver did not reach the duality gap",
                    {"worst_gap": float(gap[~ok].max()), "points": int(idx.size)},
                )
            k = min(2 * k, n)
    return T_out, y0_out, val_out


def prox(x, potential: Potential, eps: float, tol: float = 1e-8):
    """Proximal point of the potential at x: the minimizer y0 of
    phi(y) + ||y - x||^2/(2 eps), its simplex weights, and the duality gap."""
    if eps <= 0 or tol <= 0:
        raise InvalidInputError("eps and tol must be positive")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    Y, psi = potential.targets, potential.weights
    n = Y.shape[0]
    Tv, y0, _, gap, ok = _prox_active_set(x, Y, psi, eps, tol, k=n)
    if not ok[0]:
        raise SolverFailureError("prox did not converge", {"gap": float(gap[0])})
    # recover dense simplex weights from the active pieces at y0
    vals = (y0 @ Y.T - psi[None, :])[0]
    lam = np.zeros(n)
    active = vals >= vals.max() - 1e-10 * max(1.0, abs(vals.max()))
    if active.sum() == 1:
        lam[active] = 1.0
    else:
        # least-squares on the face spanned by the active targets
        A = np.vstack([Y[active].T, np.ones(active.sum())])
        b = np.concatenate([Tv[0], [1.0]])
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        lam[active] = np.clip(sol, 0.0, None)
        s = lam.sum()
        if s > 0:
            lam /= s
    return y0[0], lam, float(gap[0])


def T_eps(x, smooth_map: SmoothMap, tol: float | None = None):
    """Evaluate the Yosida-regularized gradient at a batch of points."""
    pot = smooth_map.potential
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    T, _, _ = _prox_batch(
        X, pot.targets, pot.weights, smooth_map.epsilon,
        tol if tol is not None else smooth_map.prox_tolerance,
    )
    return T[0] if single else T


def phi_eps(x, smooth_map: SmoothMap, tol: float | None = None):
    """Value of the Moreau envelope at a batch of points."""
    pot = smooth_map.potential
    X = np.atleast_2d(np.asarray(x, dtype=float))
    _, _, val = _prox_batch(
        X, pot.targets, pot.weights, smooth_map.epsilon,
        tol if tol is not None else smooth_map.prox_tolerance,
    )
    return val if val.size > 1 else float(val[0])


def _refine_weights(c, psi, eps_target, max_iter=100):
    """Monotone min-plus relaxation of the shortest-path fixed point under
    the reduced costs c - eps_target, warm-started at d = -psi.

    At a fixed point the potentials satisfy c(i,j) - eps_target >= psi_i -
    psi_j for all arcs, i.e. the pairing margin is at least eps_target.
    Fails (returns converged=False) when eps_target exceeds the minimum
    cycle mean, since d then decreases without bound.
    """
    d = -np.asarray(psi, dtype=float)
    ct = c - eps_target
    scale = max(1.0, np.abs(d).max())
    for _ in range(max_iter):
        new = np.minimum(d, (d[:, None] + ct).min(axis=0))
        if np.all(d - new <= 1e-15 * scale):
            return -new, True
        d = new
    return -d, False


def _weights_for_pairs(xs, ys, assignment: Assignment | None, source: str, swap: bool):
    """psi for the pairing (xs_i -> ys_i), plus the minimum cycle mean when
    it was computed (None when weights come from assignment duals)."""
    n = xs.shape[0]
    if source == "auto":
        have_duals = assignment is not None and assignment.col_duals is not None
        source = "duals" if (have_duals and n > KARP_THRESHOLD) else "karp"
        if source == "karp" and n > KARP_THRESHOLD and not have_duals:
            source = "karp"  # no cheaper route; accept the cubic run
    if source == "duals":
        if assignment is None or assignment.col_duals is None:
            raise InvalidInputError("dual weights need an auction assignment")
        if swap:
            u = assignment.row_duals
            psi = 0.5 * ((ys * ys).sum(axis=1) - u)
        else:
            v = assignment.col_duals[assignment.perm]
            psi = 0.5 * ((ys * ys).sum(axis=1) - v)
        # the integerized auction leaves ~1/scale noise in the duals, so the
        # raw margin can be nonpositive; push it up to a guaranteed fraction
        # of the minimum 2-cycle mean (an upper bound on eps*)
        c = pairing_costs(xs, ys)
        min2 = float((0.5 * (c + c.T)).min())
        if min2 > 0:
            eps_target = 0.45 * min2
            for _ in range(8):
                refined, ok = _refine_weights(c, psi, eps_target)
                if ok:
                    return refined, None
                eps_target /= 10.0
        return psi, None
    if source == "karp":
        c = pairing_costs(xs, ys)
        eps_star = karp_min_mean_cycle(c)
        return optimal_weights(c, eps_star), eps_star
    raise InvalidInputError(f"unknown weights source {source!r}")


def _fit(xs, ys, assignment, direction, weights_source, prox_tolerance, grid_spec, sample_hash):
    psi, eps_star = _weights_for_pairs(
        xs, ys, assignment, weights_source, swap=(direction == "ball-to-sample")
    )
    eps0 = epsilon0(xs, ys, psi)
    if not eps0 > 0:
        raise NotInterpolableError(
            f"epsilon0 = {eps0:.3e} <= 0: pairing is not uniquely monotone "
            "(duplicate points or non-optimal assignment); tie-break and retry"
        )
    # eps0 (half the minimal margin) is admissible only for targets in the
    # unit ball; the sharp pairwise bound also covers the quantile side,
    # where targets are sample points of arbitrary norm
    eps = min(eps0, admissible_epsilon(xs, ys, psi))
    pot = Potential(
        targets=ys,
        weights=psi,
        epsilon_star=eps_star if eps_star is not None else np.nan,
        epsilon0=eps0,
    )
    return SmoothMap(
        potential=pot,
        epsilon=eps,
        direction=direction,
        prox_tolerance=prox_tolerance,
        grid_spec=grid_spec,
        sample_hash=sample_hash,
    )


def _hash_points(points: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(points).tobytes()).hexdigest()[:16]


def fit_smooth_F(
    sample: Sample,
    grid: BallGrid,
    assignment: Assignment,
    weights_source: str = "auto",
    prox_tolerance: float = 1e-8,
) -> SmoothMap:
    """Smooth sample-to-ball map interpolating Z_i -> assigned grid point."""
    xs = sample.points
    ys = grid.points[assignment.perm]
    return _fit(
        xs, ys, assignment, "sample-to-ball", weights_source, prox_tolerance,
        grid.spec.to_dict(), _hash_points(sample.points),
    )


def fit_smooth_Q(
    sample: Sample,
    grid: BallGrid,
    assignment: Assignment,
    weights_source: str = "auto",
    prox_tolerance: float = 1e-8,
) -> SmoothMap:
    """Smooth ball-to-sample map interpolating grid point -> matched Z_i."""
    xs = grid.points[assignment.perm]
    ys = sample.points
    return _fit(
        xs, ys, assignment, "ball-to-sample", weights_source, prox_tolerance,
        grid.spec.to_dict(), _hash_points(sample.points),
    )


def step_F(smooth_map: SmoothMap, x, n_R: int | None = None):
    """Outward-continuous step version: snap the radius of the smooth image
    down to the nearest grid ring, keeping the direction."""
    if smooth_map.direction != "sample-to-ball":
        raise InvalidInputError("step version applies to sample-to-ball maps")
    if n_R is None:
        if smooth_map.grid_spec is None:
            raise InvalidInputError("n_R unknown; pass it explicitly")
        n_R = smooth_map.grid_spec["n_R"]
    F = np.atleast_2d(T_eps(x, smooth_map))
    r = np.linalg.norm(F, axis=1)
    # absorb prox-level error so radii sitting on a ring snap to it, not below
    snapped = np.floor((n_R + 1) * r + 1e-9) / (n_R + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r[:, None] > 0, F * (snapped / np.where(r > 0, r, 1.0))[:, None], 0.0)
    return out[0] if np.asarray(x).ndim == 1 else out
