"""Independent reference computations used only by the tests.

These deliberately avoid the library's solver paths: the 1-D cost uses
the monotone rearrangement of the two empirical CDFs, and the map
helpers below evaluate plain numpy functions.
"""

import numpy as np

from wmt.measures import DiscreteMeasure


def monotone_1d_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> float:
    """W_p^p between 1-D discrete measures via quantile matching."""
    ix = np.argsort(mu.atoms.ravel())
    iy = np.argsort(nu.atoms.ravel())
    xs, ws = mu.atoms.ravel()[ix], mu.weights[ix]
    ys, vs = nu.atoms.ravel()[iy], nu.weights[iy]
    i = j = 0
    ri, rj = ws[0], vs[0]
    cost = 0.0
    while True:
        step = min(ri, rj)
        cost += step * abs(xs[i] - ys[j]) ** p
        ri -= step
        rj -= step
        if ri <= 1e-15:
            i += 1
            if i == len(xs):
                break
            ri = ws[i]
        if rj <= 1e-15:
            j += 1
            if j == len(ys):
                break
            rj = vs[j]
    return cost


def pushforward(mu: DiscreteMeasure, f) -> DiscreteMeasure:
    """Image measure of mu under a map acting on (m, d) point arrays."""
    return DiscreteMeasure(f(mu.atoms), mu.weights)


def random_pw_affine(rng, d: int):
    """Random continuous piecewise-affine map R^d -> R^d.

    Affine part plus two hinge terms c * max(<u, x> - t, 0); globally
    Lipschitz with an easily measured constant over any finite set.
    """
    lin = rng.normal(size=(d, d)) * 0.6
    shift = rng.normal(size=d)
    hinges = []
    for _ in range(2):
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        hinges.append((u, rng.normal() * 0.5, rng.normal(size=d) * 0.6))

    def f(points):
        out = points @ lin.T + shift
        for u, t, c in hinges:
            out = out + np.maximum(points @ u - t, 0.0)[:, None] * c[None, :]
        return out

    return f


def lipschitz_over(f, points: np.ndarray) -> float:
    """Largest ratio ||f(x)-f(y)|| / ||x-y|| over distinct rows of `points`."""
    values = f(points)
    num = np.linalg.norm(values[:, None, :] - values[None, :, :], axis=2)
    den = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    mask = den > 1e-12
    if not mask.any():
        return 0.0
    return float((num[mask] / den[mask]).max())
