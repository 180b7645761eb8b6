"""Closed-form population references and samplers for the experiments.

Spherical/elliptical distributions admit a closed-form center-outward map:
direction preserved, radius mapped through the radial cdf. These serve as
ground truth in the convergence and coincidence experiments. The Gaussian
mixture configurations used in the contour demos are registered by name.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import cholesky

from .assignment import Sample
from .contours import RankSignTable
from .grid import InvalidInputError

__all__ = [
    "EllipticalModel",
    "MixtureModel",
    "spherical_F",
    "elliptical_F_hat",
    "oneD_center_outward",
    "chi_radial_cdf",
    "sample_model",
    "MODEL_REGISTRY",
]


@dataclass(frozen=True)
class EllipticalModel:
    mu: np.ndarray
    sigma: np.ndarray
    radial_cdf: callable

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        cholesky(self.sigma, lower=True)  # raises if not positive definite


@dataclass(frozen=True)
class MixtureModel:
    weights: tuple
    means: tuple
    covs: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInputError("mixture weights must be positive and sum to 1")


def chi_radial_cdf(d: int):
    """Radial cdf of ||Z|| for Z ~ N(0, I_d): chi distribution with d dof."""
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    dist = stats.chi(df=d)
    return dist.cdf


def spherical_F(z, radial_cdf) -> np.ndarray:
    """Population center-outward map of a spherical distribution:
    z -> z * radial_cdf(||z||) / ||z||, with 0 -> 0."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    r = np.linalg.norm(z, axis=1)
    out = np.zeros_like(z)
    nz = r > 0
    out[nz] = z[nz] * (radial_cdf(r[nz]) / r[nz])[:, None]
    return out if out.shape[0] > 1 else out[0]


def _sqrt_inv(sigma: np.ndarray) -> np.ndarray:
    """Inverse symmetric square root via eigendecomposition (reproducible)."""
    w, v = np.linalg.eigh(sigma)
    if np.any(w <= 0):
        raise InvalidInputError("scatter matrix must be positive definite")
    return v @ np.diag(1.0 / np.sqrt(w)) @ v.T


def elliptical_F_hat(sample: Sample, mu_hat, sigma_hat) -> RankSignTable:
    """Mahalanobis rank/sign table: sphericize by (mu_hat, sigma_hat), rank
    the residual moduli, keep the residual directions."""
    mu_hat = np.asarray(mu_hat, dtype=float)
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    Z = (sample.points - mu_hat) @ _sqrt_inv(sigma_hat).T
    r = np.linalg.norm(Z, axis=1)
    ranks = np.empty(sample.n, dtype=np.int64)
    ranks[np.argsort(r, kind="stable")] = np.arange(1, sample.n + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        U = np.where(r[:, None] > 0, Z / np.where(r > 0, r, 1.0)[:, None], 0.0)
    F = (ranks / (sample.n + 1))[:, None] * U
    return RankSignTable(F_value=F, rank=ranks.astype(float), sign=U, ring=ranks)


def oneD_center_outward(sample: Sample) -> RankSignTable:
    """One-dimensional center-outward table on the symmetric grids
    {+-k/(floor(n/2)+1)} (origin included for odd n)."""
    if sample.d != 1:
        raise InvalidInputError("requires a one-dimensional sample")
    z = sample.points[:, 0]
    n = z.size
    if len(np.unique(z)) < n:
        import warnings

        warnings.warn("ties in sample broken by index order", RuntimeWarning)
    pos = np.empty(n, dtype=np.int64)
    pos[np.argsort(z, kind="stable")] = np.arange(n)
    half = n // 2
    if n % 2 == 1:
        signed = pos - half
    else:
        s = pos - half
        signed = np.where(s >= 0, s + 1, s)
    F = (signed / (half + 1)).astype(float)[:, None]
    rank = np.abs(signed).astype(float)
    sign = np.sign(signed).astype(float)[:, None]
    return RankSignTable(F_value=F, rank=rank, sign=sign, ring=np.abs(signed))


# ---------------------------------------------------------------------------
# sampler registry: two- and three-component bivariate Gaussian mixtures used
# in the contour illustrations, plus spherical Gaussians
# ---------------------------------------------------------------------------

_S1 = ((5.0, -4.0), (-4.0, 5.0))
_S2 = ((5.0, 4.0), (4.0, 5.0))
_S3 = ((4.0, 0.0), (0.0, 1.0))
_I2 = ((1.0, 0.0), (0.0, 1.0))


def _two_gauss(a):
    return MixtureModel(
        weights=(0.5, 0.5), means=((-a, 0.0), (a, 0.0)), covs=(_I2, _I2)
    )


MODEL_REGISTRY: dict[str, MixtureModel] = {
    "gaussian": MixtureModel(weights=(1.0,), means=((0.0, 0.0),), covs=(_I2,)),
    "fig2-sep1": _two_gauss(1.0),
    "fig2-sep2": _two_gauss(2.0),
    "fig2-sep4": _two_gauss(4.0),
    "fig3-center": MixtureModel(
        weights=(0.375, 0.375, 0.25),
        means=((0.0, 0.0), (0.0, 0.0), (0.0, 0.0)),
        covs=(_S1, _S2, _S3),
    ),
    "fig3-mid": MixtureModel(
        weights=(0.375, 0.375, 0.25),
        means=((-3.0, 0.0), (3.0, 0.0), (0.0, -2.5)),
        covs=(_S1, _S2, _S3),
    ),
    "fig3-banana": MixtureModel(
        weights=(0.375, 0.375, 0.25),
        means=((-8.0, 0.0), (8.0, 0.0), (0.0, -5.0)),
        covs=(_S1, _S2, _S3),
    ),
}


def sample_model(model, n: int, seed: int, d: int | None = None) -> Sample:
    """Reproducible i.i.d. draws from a registered name, a MixtureModel, or
    an EllipticalModel (Gaussian radial part only for sampling)."""
    rng = np.random.default_rng(seed)
    if isinstance(model, str):
        if model == "gaussian" and d is not None and d != 2:
            pts = rng.standard_normal((n, d))
            return Sample(points=pts)
        if model not in MODEL_REGISTRY:
            raise InvalidInputError(f"unknown model {model!r}")
        model = MODEL_REGISTRY[model]
    if isinstance(model, EllipticalModel):
        dm = model.mu.size
        z = rng.standard_normal((n, dm))
        L = cholesky(model.sigma, lower=True)
        return Sample(points=model.mu + z @ L.T)
    if isinstance(model, MixtureModel):
        w = np.asarray(model.weights)
        comp = rng.choice(len(w), size=n, p=w)
        dm = len(model.means[0])
        pts = np.empty((n, dm))
        for k in range(len(w)):
            mask = comp == k
            m = int(mask.sum())
            if m == 0:
                continue
            L = cholesky(np.asarray(model.covs[k]), lower=True)
            pts[mask] = np.asarray(model.means[k]) + rng.standard_normal((m, dm)) @ L.T
        return Sample(points=pts)
    raise InvalidInputError("unsupported model type")
