"""Regular augmented grids over the unit ball.

The grid is the target of the optimal assignment: n_R concentric rings of
n_S directions each, with radii j/(n_R+1), plus n_0 copies of the origin.
For d=1 the two "directions" are +1 and -1, which reproduces the usual
symmetric one-dimensional grids.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "BallGrid",
    "factorize",
    "unit_directions",
    "build_grid",
    "break_ties",
]

_METHODS = ("equal-angle", "random-sphere", "fibonacci-sphere")


class InvalidInputError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n: int
    d: int
    n_R: int
    n_S: int
    n_0: int
    direction_method: str = "equal-angle"
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n_R < 1 or self.n_S < 1 or self.n_0 < 0:
            raise InvalidInputError("n_R, n_S must be >= 1 and d >= 1")
        if self.n != self.n_R * self.n_S + self.n_0:
            raise InvalidInputError("n must equal n_R*n_S + n_0")
        # a single origin copy is always fine (d=1, n=3 gives n_R=1, n_0=1)
        if self.n_0 >= min(self.n_R, self.n_S) and self.n_0 > 1:
            raise InvalidInputError("n_0 must satisfy 0 <= n_0 < min(n_R, n_S)")
        if self.direction_method not in _METHODS:
            raise InvalidInputError(f"unknown direction method {self.direction_method!r}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "n_R": self.n_R,
            "n_S": self.n_S,
            "n_0": self.n_0,
            "direction_method": self.direction_method,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(**d)


@dataclass(frozen=True)
class BallGrid:
    spec: GridSpec
    points: np.ndarray          # (n, d), norms <= 1
    ring_of: np.ndarray         # (n,) int, 0 = origin
    direction_of: np.ndarray    # (n,) int, -1 for origin copies
    ties_broken: bool = False

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def d(self) -> int:
        return self.spec.d

    def to_json(self) -> str:
        return json.dumps(
            {
                "spec": self.spec.to_dict(),
                "points": self.points.ravel().tolist(),
                "ring_of": self.ring_of.tolist(),
                "direction_of": self.direction_of.tolist(),
                "ties_broken": self.ties_broken,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BallGrid":
        doc = json.loads(text)
        spec = GridSpec.from_dict(doc["spec"])
        pts = np.asarray(doc["points"], dtype=float).reshape(spec.n, spec.d)
        return cls(
            spec=spec,
            points=pts,
            ring_of=np.asarray(doc["ring_of"], dtype=np.int64),
            direction_of=np.asarray(doc["direction_of"], dtype=np.int64),
            ties_broken=bool(doc["ties_broken"]),
        )


def factorize(n: int, d: int, ratio: float = 2.0) -> tuple[int, int, int]:
    """Split n into n_R*n_S + n_0 with n_S/n_R close to `ratio`.

    For d=1 the direction set is {+1,-1}, so n_S=2 always: n_R = n//2 and
    n_0 = n mod 2. For d >= 2 we search all ring counts, take n_S = n//n_R
    (which minimizes n_0 for that n_R), keep the feasible ones
    (n_0 < min(n_R, n_S)) and pick the aspect ratio closest to the target.
    Deterministic.
    """
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    if d == 1:
        return n // 2, 2, n % 2
    if ratio <= 0:
        raise InvalidInputError("ratio must be positive")
    best = None
    for n_R in range(1, n + 1):
        n_S = n // n_R
        if n_S < 1:
            break
        n_0 = n - n_R * n_S
        if n_0 >= min(n_R, n_S) and n_0 > 0:
            continue
        score = abs(np.log(n_S / (ratio * n_R)))
        key = (score, n_0, -n_R * n_S, n_R)
        if best is None or key < best[0]:
            best = (key, (n_R, n_S, n_0))
    if best is None:
        return 1, n, 0
    return best[1]


def unit_directions(n_S: int, d: int, method: str = "equal-angle", seed: int = 0) -> np.ndarray:
    """n_S unit vectors in R^d; equal-angle is deterministic, the others seeded."""
    if n_S < 1:
        raise InvalidInputError("n_S must be >= 1")
    if d == 1:
        if n_S > 2:
            raise InvalidInputError("d=1 admits at most 2 directions")
        return np.array([[1.0], [-1.0]])[:n_S]
    if method == "equal-angle":
        if d != 2:
            raise InvalidInputError("equal-angle directions require d=2")
        ang = 2.0 * np.pi * np.arange(n_S) / n_S
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if method == "fibonacci-sphere":
        if d != 3:
            raise InvalidInputError("fibonacci-sphere directions require d=3")
        k = np.arange(n_S)
        z = 1.0 - (2.0 * k + 1.0) / n_S
        phi = np.pi * (3.0 - np.sqrt(5.0)) * k
        r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if method == "random-sphere":
        rng = np.random.default_rng(seed)
        v = rng.standard_normal((n_S, d))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    raise InvalidInputError(f"unknown direction method {method!r}")


def build_grid(spec: GridSpec) -> BallGrid:
    """Points at radii j/(n_R+1) along each direction, plus n_0 origin copies."""
    u = unit_directions(spec.n_S, spec.d, spec.direction_method, spec.seed)
    radii = np.arange(1, spec.n_R + 1) / (spec.n_R + 1)
    shells = radii[:, None, None] * u[None, :, :]          # (n_R, n_S, d)
    points = shells.reshape(spec.n_R * spec.n_S, spec.d)
    ring = np.repeat(np.arange(1, spec.n_R + 1), spec.n_S)
    direc = np.tile(np.arange(spec.n_S), spec.n_R)
    if spec.n_0:
        points = np.vstack([points, np.zeros((spec.n_0, spec.d))])
        ring = np.concatenate([ring, np.zeros(spec.n_0, dtype=np.int64)])
        direc = np.concatenate([direc, -np.ones(spec.n_0, dtype=np.int64)])
    return BallGrid(spec=spec, points=points, ring_of=ring, direction_of=direc)


def break_ties(grid: BallGrid, seed: int = 0) -> BallGrid:
    """Replace the n_0 > 1 origin copies with i.i.d. points on the sphere of
    radius 1/(2(n_R+1)), so every grid point is distinct. No-op for n_0 <= 1."""
    n_0 = grid.spec.n_0
    if n_0 <= 1:
        return BallGrid(
            spec=grid.spec,
            points=grid.points,
            ring_of=grid.ring_of,
            direction_of=grid.direction_of,
            ties_broken=True,
        )
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n_0, grid.d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    radius = 1.0 / (2.0 * (grid.spec.n_R + 1))
    points = grid.points.copy()
    points[-n_0:] = radius * v
    return BallGrid(
        spec=grid.spec,
        points=points,
        ring_of=grid.ring_of,
        direction_of=grid.direction_of,
        ties_broken=True,
    )
