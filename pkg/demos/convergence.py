"""Glivenko-Cantelli behaviour of the empirical center-outward map.

For a spherical Gaussian the population map is known in closed form
(F(z) = F_chi(||z||) z/||z||), so we can watch
max_i ||F_n(Z_i) - F(Z_i)|| shrink as n grows, both for the discrete
assignment values and for the smooth extension evaluated on fresh points.
"""
import numpy as np

import centerout as co


def main():
    cdf = co.chi_radial_cdf(2)
    print(f"{'n':>6} {'discrete max err':>18} {'smooth sup err':>16}")
    for n in (100, 300, 1000):
        disc, sup = [], []
        for seed in range(2):
            sample = co.sample_model("gaussian", n, seed)
            grid = co.grid_for_sample(n, 2, ratio=2 * np.pi)
            fit = co.fit_sample(sample, grid=grid)
            F_pop = co.spherical_F(sample.points, cdf)
            disc.append(np.linalg.norm(
                fit.rank_table.F_value - F_pop, axis=1).max())
            rng = np.random.default_rng(seed + 10_000)
            fresh = rng.standard_normal((5_000, 2))
            smooth = co.T_eps(fresh, fit.forward)
            sup.append(np.linalg.norm(
                smooth - co.spherical_F(fresh, cdf), axis=1).max())
        print(f"{n:>6} {np.mean(disc):>18.4f} {np.mean(sup):>16.4f}")


if __name__ == "__main__":
    main()
