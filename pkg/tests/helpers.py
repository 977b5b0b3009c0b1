"""Independent oracles and generators shared across the test modules.

The oracles deliberately avoid the library's computation paths: the
quadrature oracle integrates iterated integrals numerically instead of
composing per-segment exponentials, and the exhaustive LASSO oracle
enumerates (support, sign) stationary systems with dense solves instead of
coordinate descent.
"""
from __future__ import annotations

import math
from itertools import combinations, product

import numpy as np

from sigcast.regression import WeightedDesign


def quadrature_signature(
    points: np.ndarray, N: int, subdivisions: int = 10_000
) -> list[np.ndarray]:
    """Iterated integrals of the piecewise-linear interpolation by cumulative
    quadrature (midpoint-tagged Riemann sums on a fine grid).

    Each of the n-1 segments is split evenly so the full grid has at least
    `subdivisions` steps and every kink is a grid point; level k integrates
    level k-1 against the path increments. Returns flat level arrays 0..N.
    """
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    levels_out = [np.ones(1)]
    if n == 1:
        return levels_out + [np.zeros(d**k) for k in range(1, N + 1)]
    segments = n - 1
    per = max(1, math.ceil(subdivisions / segments))
    steps = []
    for s in range(segments):
        steps.append(np.tile((points[s + 1] - points[s]) / per, (per, 1)))
    dX = np.vstack(steps)  # (M, d)
    M = dX.shape[0]
    prev = np.ones((M + 1, 1))  # S_0 on the grid
    for k in range(1, N + 1):
        mids = 0.5 * (prev[:-1] + prev[1:])  # (M, d^{k-1})
        contrib = (mids[:, :, None] * dX[:, None, :]).reshape(M, -1)
        Sk = np.vstack([np.zeros((1, d**k)), np.cumsum(contrib, axis=0)])
        levels_out.append(Sk[-1].copy())
        prev = Sk
    return levels_out


def exhaustive_lasso(
    design: WeightedDesign, lam: float, unpenalized: tuple[int, ...] = (0,)
) -> tuple[float, tuple[int, ...], np.ndarray]:
    """Global LASSO optimum by enumerating (support, sign) stationary systems.

    For every support of penalized columns and every sign pattern, solve
    X_A' W X_A theta = X_A' W y - lam * signs and keep sign-consistent
    solutions; the smallest objective among them is the global optimum of
    (1/2) sum w r^2 + lam * l1(penalized). Ties break toward smaller support,
    then lexicographic column order.
    """
    X, y, w = design.features, design.targets, design.weights
    p = X.shape[1]
    unpen = sorted(set(unpenalized))
    pen = [j for j in range(p) if j not in unpen]
    candidates: list[tuple[float, int, tuple[int, ...], np.ndarray]] = []
    for size in range(len(pen) + 1):
        for support in combinations(pen, size):
            cols = unpen + list(support)
            A = X[:, cols]
            G = A.T @ (w[:, None] * A)
            base_rhs = A.T @ (w * y)
            for signs in product((-1.0, 1.0), repeat=size):
                rhs = base_rhs.copy()
                rhs[len(unpen) :] -= lam * np.array(signs)
                try:
                    theta_cols = np.linalg.solve(G, rhs)
                except np.linalg.LinAlgError:
                    continue
                picked = theta_cols[len(unpen) :]
                if any(np.sign(v) != s for v, s in zip(picked, signs)):
                    continue
                theta = np.zeros(p)
                theta[cols] = theta_cols
                r = y - X @ theta
                obj = 0.5 * float(np.sum(w * r * r)) + lam * float(np.sum(np.abs(picked)))
                candidates.append((obj, size, support, theta))
    assert candidates, "no sign-consistent stationary point found"
    obj, _, support, theta = min(candidates, key=lambda c: (c[0], c[1], c[2]))
    return obj, support, theta


def random_stream(rng: np.random.Generator, d: int, length: int, scale: float = 1.0) -> np.ndarray:
    return np.cumsum(rng.normal(scale=scale, size=(length, d)), axis=0)


def random_group_like(rng: np.random.Generator, d: int, N: int):
    """Random tensor with level 0 equal to 1 (group-like)."""
    from sigcast.tensor_algebra import GradedTensor

    levels = [np.ones(1)] + [rng.normal(size=d**k) for k in range(1, N + 1)]
    return GradedTensor(d, N, tuple(levels))
