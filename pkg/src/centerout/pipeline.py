"""End-to-end fit: grid construction, optimal assignment with the
certification retry loop, and both smooth maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import Assignment, Sample, empirical_F
from .contours import RankSignTable
from .grid import BallGrid, GridSpec, break_ties, build_grid, factorize
from .smoothing import NotInterpolableError, SmoothMap, fit_smooth_F, fit_smooth_Q

__all__ = ["Fit", "fit_sample", "grid_for_sample"]

MAX_RETRIES = 5


@dataclass
class Fit:
    sample: Sample
    grid: BallGrid
    assignment: Assignment
    rank_table: RankSignTable
    forward: SmoothMap    # sample -> ball
    inverse: SmoothMap    # ball -> sample


def grid_for_sample(
    n: int,
    d: int,
    ratio: float = 2.0,
    n_R: int | None = None,
    n_S: int | None = None,
    direction_method: str | None = None,
    seed: int = 0,
) -> BallGrid:
    if n_R is not None and n_S is not None:
        n_0 = n - n_R * n_S
    else:
        n_R, n_S, n_0 = factorize(n, d, ratio)
    if direction_method is None:
        direction_method = {1: "equal-angle", 2: "equal-angle"}.get(d, "random-sphere")
        if d == 1:
            direction_method = "equal-angle"  # {+1,-1}
    if d == 1:
        direction_method = "equal-angle"
    spec = GridSpec(
        n=n, d=d, n_R=n_R, n_S=n_S, n_0=n_0,
        direction_method=direction_method if d > 1 else "equal-angle",
        seed=seed,
    )
    grid = build_grid(spec)
    if n_0 > 1:
        grid = break_ties(grid, seed=seed)
    return grid


def fit_sample(
    sample: Sample,
    grid: BallGrid | None = None,
    solver: str = "auto",
    ratio: float = 2.0,
    seed: int = 0,
    tie_break: bool = False,
    weights_source: str = "auto",
    prox_tolerance: float = 1e-8,
) -> Fit:
    """Full pipeline. Retries the approximate solver with a tighter epsilon
    when certification (epsilon0 > 0) fails; raises NotInterpolableError when
    the failure persists."""
    if tie_break and sample.has_duplicates:
        rng = np.random.default_rng(seed ^ 0x5EED)
        scale = max(np.abs(sample.points).max(), 1.0)
        jitter = rng.uniform(-1e-9, 1e-9, size=sample.points.shape) * scale
        sample = Sample(points=sample.points + jitter)
    if grid is None:
        grid = grid_for_sample(sample.n, sample.d, ratio=ratio, seed=seed)
    if grid.spec.n_0 > 1 and not grid.ties_broken:
        grid = break_ties(grid, seed=seed)
    from .assignment import cost_matrix, solve_auction
    from .contours import table as build_table

    last_err = None
    for attempt in range(MAX_RETRIES):
        if attempt == 0:
            assignment, table = empirical_F(sample, grid, solver=solver)
        else:
            # shrink the final auction epsilon by 10 per retry
            scale = 1e9 * 10.0 ** attempt
            assignment = solve_auction(cost_matrix(sample, grid), scale=scale)
            table = build_table(sample, grid, assignment)
        try:
            forward = fit_smooth_F(
                sample, grid, assignment,
                weights_source=weights_source, prox_tolerance=prox_tolerance,
            )
            inverse = fit_smooth_Q(
                sample, grid, assignment,
                weights_source=weights_source, prox_tolerance=prox_tolerance,
            )
            return Fit(
                sample=sample, grid=grid, assignment=assignment,
                rank_table=table, forward=forward, inverse=inverse,
            )
        except NotInterpolableError as err:
            last_err = err
            exact = solver == "hungarian" or solver == "brute" or (
                solver == "auto" and sample.n <= 2000
            )
            if exact:
                break  # exact solver: retrying cannot help
    raise last_err
