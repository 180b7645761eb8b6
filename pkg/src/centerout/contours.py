"""Rank/sign tables, quantile contours and regions, and sign curves."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grid import BallGrid, InvalidInputError, unit_directions

__all__ = [
    "RankSignTable",
    "ContourSet",
    "SignCurve",
    "table",
    "contour",
    "sign_curves",
    "region_probability",
]


@dataclass
class RankSignTable:
    F_value: np.ndarray   # (n, d) grid image of each observation
    rank: np.ndarray      # (n,) real; (n_R+1) * ||F_value||
    sign: np.ndarray      # (n, d) unit vectors, zero rows at the origin
    ring: np.ndarray      # (n,) int, 0 for origin copies

    @property
    def n(self) -> int:
        return self.F_value.shape[0]

    def to_csv(self, path) -> None:
        d = self.F_value.shape[1]
        header = (
            [f"F_{k}" for k in range(d)] + ["rank"] + [f"sign_{k}" for k in range(d)] + ["ring"]
        )
        body = np.column_stack([self.F_value, self.rank, self.sign, self.ring])
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in body:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


@dataclass
class ContourSet:
    level: float
    polyline: np.ndarray          # (m, d); closed when d = 2 (first == last)
    member_points: np.ndarray     # sample indices on the contour
    region_members: np.ndarray    # sample indices inside or on it
    interpolated: bool = False    # level not on the grid ladder


@dataclass
class SignCurve:
    direction: np.ndarray
    polyline: np.ndarray


def table(sample, grid: BallGrid, assignment) -> RankSignTable:
    """Read ranks and signs off the assignment."""
    F = grid.points[assignment.perm]
    n_R = grid.spec.n_R
    norms = np.linalg.norm(F, axis=1)
    rank = (n_R + 1) * norms
    with np.errstate(invalid="ignore", divide="ignore"):
        sign = np.where(norms[:, None] > 0, F / np.where(norms > 0, norms, 1.0)[:, None], 0.0)
    ring = grid.ring_of[assignment.perm]
    return RankSignTable(F_value=F, rank=rank, sign=sign, ring=ring)


def _sphere_mesh(d: int, mesh_size: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        ang = 2.0 * np.pi * np.arange(mesh_size) / mesh_size
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if d == 3:
        return unit_directions(mesh_size, 3, method="fibonacci-sphere")
    rng = np.random.default_rng(mesh_size)  # mesh reproducible from its size
    v = rng.standard_normal((mesh_size, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def contour(
    smooth_Q,
    q: float,
    mesh_size: int = 256,
    rank_table: RankSignTable | None = None,
) -> ContourSet:
    """Image under the smooth quantile map of the radius-q sphere.

    For d=2 the polyline is closed. Membership sets are attached from the
    rank table when the level sits on the grid ladder j/(n_R+1)."""
    if not (0.0 < q < 1.0):
        raise InvalidInputError("q must lie in (0, 1)")
    if mesh_size < 8:
        raise InvalidInputError("mesh_size must be >= 8")
    d = smooth_Q.potential.targets.shape[1]
    mesh = q * _sphere_mesh(d, mesh_size)
    poly = np.atleast_2d(smooth_Q(mesh))
    if d == 2:
        poly = np.vstack([poly, poly[:1]])
    members = np.array([], dtype=np.int64)
    region = np.array([], dtype=np.int64)
    interpolated = True
    if rank_table is not None:
        n_R = (
            smooth_Q.grid_spec["n_R"]
            if smooth_Q.grid_spec is not None
            else int(round(rank_table.rank.max()))
        )
        j = q * (n_R + 1)
        if abs(j - round(j)) < 1e-9:
            j = int(round(j))
            interpolated = False
            ranks = np.rint(rank_table.rank).astype(int)
            on_ladder = np.abs(rank_table.rank - ranks) < 1e-9
            members = np.flatnonzero(on_ladder & (ranks == j))
            region = np.flatnonzero(rank_table.rank <= j + 1e-9)
    return ContourSet(
        level=q,
        polyline=poly,
        member_points=members,
        region_members=region,
        interpolated=interpolated,
    )


def sign_curves(smooth_Q, directions, mesh_size: int = 32) -> list[SignCurve]:
    """Images under the quantile map of the rays {r u}, r on a mesh of (0,1)
    scaled to stay inside the outermost grid ring."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if smooth_Q.grid_spec is not None:
        n_R = smooth_Q.grid_spec["n_R"]
        outer = n_R / (n_R + 1)
    else:
        outer = 1.0
    r = (np.arange(1, mesh_size) / mesh_size) * outer
    curves = []
    for u in directions:
        u = u / np.linalg.norm(u)
        pts = np.atleast_2d(smooth_Q(r[:, None] * u[None, :]))
        curves.append(SignCurve(direction=u, polyline=pts))
    return curves


def region_probability(contour_set: ContourSet, sample=None, mode: str = "rank") -> float:
    """Probability content of the quantile region.

    Rank mode counts region members exactly; polygon mode (d=2 only) counts
    sample points inside the closed polyline."""
    if mode == "rank":
        if sample is None:
            raise InvalidInputError("rank mode needs the sample (for n)")
        return contour_set.region_members.size / sample.n
    if mode == "polygon":
        poly = contour_set.polyline
        if poly.shape[1] != 2:
            raise InvalidInputError("polygon mode requires d = 2")
        if not np.allclose(poly[0], poly[-1]):
            raise InvalidInputError("polyline is not closed")
        from matplotlib.path import Path

        inside = Path(poly).contains_points(sample.points, radius=1e-9)
        return float(inside.mean())
    raise InvalidInputError(f"unknown mode {mode!r}")


def contours_to_csv(contour_sets: list[ContourSet], path) -> None:
    """Long-format CSV: level, vertex index, then coordinates."""
    with open(path, "w", newline="\n") as fh:
        if contour_sets:
            d = contour_sets[0].polyline.shape[1]
        else:
            d = 0
        fh.write("level,vertex," + ",".join(f"x_{k}" for k in range(d)) + "\n")
        for cs in contour_sets:
            for i, p in enumerate(cs.polyline):
                fh.write(
                    f"{cs.level:.17g},{i}," + ",".join(format(v, ".17g") for v in p) + "\n"
                )


def sign_curves_to_csv(curves: list[SignCurve], path) -> None:
    with open(path, "w", newline="\n") as fh:
        if curves:
            d = curves[0].polyline.shape[1]
        else:
            d = 0
        fh.write(
            "curve,vertex,"
            + ",".join(f"u_{k}" for k in range(d))
            + ","
            + ",".join(f"x_{k}" for k in range(d))
            + "\n"
        )
        for c_idx, c in enumerate(curves):
            u_txt = ",".join(format(v, ".17g") for v in c.direction)
            for i, p in enumerate(c.polyline):
                fh.write(
                    f"{c_idx},{i},{u_txt}," + ",".join(format(v, ".17g") for v in p) + "\n"
                )


def to_json_document(contour_sets: list[ContourSet], curves: list[SignCurve]) -> str:
    return json.dumps(
        {
            "contours": [
                {
                    "level": cs.level,
                    "polyline": cs.polyline.tolist(),
                    "member_points": cs.member_points.tolist(),
                    "region_members": cs.region_members.tolist(),
                    "interpolated": cs.interpolated,
                }
                for cs in contour_sets
            ],
            "sign_curves": [
                {"direction": c.direction.tolist(), "polyline": c.polyline.tolist()}
                for c in curves
            ],
        }
    )
