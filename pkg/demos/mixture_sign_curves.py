"""Quantile contours and sign curves for a banana-shaped Gaussian mixture.

Unlike halfspace-depth or Mahalanobis contours, center-outward quantile
contours follow the geometry of the distribution: for the banana mixture
the outer contours wrap around the crescent, and the sign curves (images of
rays from the center of the ball) bend toward the local mass instead of
staying straight.
"""
import numpy as np

import centerout as co


def main():
    n = 600
    sample = co.sample_model("fig3-banana", n, seed=11)
    fit = co.fit_sample(sample)
    spec = fit.grid.spec
    print(f"banana mixture, n={n}, grid {spec.n_R}x{spec.n_S}+{spec.n_0}")

    # outer contour: compare its vertical extent above and below the
    # empirical center (the image of 0) -- the crescent opens downward
    center = np.atleast_2d(fit.inverse(np.zeros((1, 2))))[0]
    cs = co.contour(fit.inverse, 0.9, mesh_size=720)
    above = cs.polyline[:, 1].max() - center[1]
    below = center[1] - cs.polyline[:, 1].min()
    print(f"empirical center: ({center[0]:+.3f}, {center[1]:+.3f})")
    print(f"0.9 contour extent above center {above:.2f}, below {below:.2f}")

    # sign curves along 8 equally spaced directions
    dirs = co.unit_directions(8, 2, method="equal-angle")
    curves = co.sign_curves(fit.inverse, dirs, mesh_size=64)
    for c in curves:
        start, end = c.polyline[0], c.polyline[-1]
        chord = np.linalg.norm(end - start)
        length = np.linalg.norm(np.diff(c.polyline, axis=0), axis=1).sum()
        print(f"direction ({c.direction[0]:+.2f}, {c.direction[1]:+.2f}): "
              f"arc length {length:.2f}, chord {chord:.2f}, "
              f"bending ratio {length / chord:.3f}")


if __name__ == "__main__":
    main()
