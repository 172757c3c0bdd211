"""Statistical primitives: robust locally weighted regression and the
paired bootstrap significance test.

The smoother is the classic robust locally weighted regression: for every
point, a weighted linear fit over its nearest-neighbor window with tricube
distance weights, then robustness iterations that bisquare-downweight
outliers by residual size. Exactly linear inputs are reproduced exactly.
"""

from __future__ import annotations

import numpy as np


def lowess(
    points: list[tuple[float, float]] | np.ndarray,
    bandwidth_fraction: float = 0.3,
    robustness_iters: int = 2,
) -> list[float]:
    """Smooth y over strictly increasing x; returns fitted y per input point.

    ``bandwidth_fraction`` of all points forms each local window (at least
    2 neighbors, or ValueError).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("need at least 2 (x, y) points")
    x = pts[:, 0]
    y = pts[:, 1]
    if not (0 < bandwidth_fraction <= 1):
        raise ValueError("bandwidth_fraction must be in (0, 1]")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")

    n = len(x)
    k = int(bandwidth_fraction * n)
    if k < 2:
        raise ValueError(
            f"bandwidth_fraction {bandwidth_fraction} yields {k} neighbors on "
            f"{n} points; need at least 2"
        )

    robust_w = np.ones(n)
    fitted = np.empty(n)
    for _ in range(robustness_iters + 1):
        left = 0
        for i in range(n):
            # Slide the k-point window to keep the nearest neighbors of x[i].
            while left + k < n and x[left + k] - x[i] < x[i] - x[left]:
                left += 1
            sl = slice(left, left + k)
            xs, ys = x[sl], y[sl]
            radius = max(x[i] - x[left], x[left + k - 1] - x[i])
            if radius > 0:
                d = np.clip(np.abs(xs - x[i]) / radius, 0.0, 1.0)
                w = (1.0 - d**3) ** 3
            else:
                w = np.ones(k)
            w = w * robust_w[sl]
            sum_w = w.sum()
            if sum_w <= 0:
                fitted[i] = y[i]
                continue
            mean_x = (w * xs).sum() / sum_w
            mean_y = (w * ys).sum() / sum_w
            var_x = (w * (xs - mean_x) ** 2).sum()
            if var_x > 1e-12 * (x[-1] - x[0]) ** 2:
                beta = (w * (xs - mean_x) * (ys - mean_y)).sum() / var_x
                fitted[i] = mean_y + beta * (x[i] - mean_x)
            else:
                fitted[i] = mean_y

        resid = y - fitted
        s = np.median(np.abs(resid))
        if s == 0:
            break  # perfect fit; nothing to downweight
        robust_w = np.clip(resid / (6.0 * s), -1.0, 1.0)
        robust_w = (1.0 - robust_w**2) ** 2

    return fitted.tolist()


def paired_bootstrap(
    scores_a,
    scores_b,
    resamples: int = 10000,
    seed: int = 0,
) -> float:
    """P-value for "the observed winner is not actually better".

    Conversations are resampled with replacement in pairs; p is the
    fraction of resamples where the observed winner fails to win (ties
    count as failures). Equal means have no winner: p = 1.0 by convention.
    Deterministic for a fixed seed.
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("scores must be aligned one-dimensional sequences")
    if len(a) == 0:
        raise ValueError("scores must be non-empty")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")

    delta = a.mean() - b.mean()
    if delta == 0:
        return 1.0

    rng = np.random.default_rng(seed)
    n = len(a)
    idx = rng.integers(0, n, size=(resamples, n))
    mean_a = a[idx].mean(axis=1)
    mean_b = b[idx].mean(axis=1)
    if delta > 0:
        wins = mean_a > mean_b
    else:
        wins = mean_b > mean_a
    return float(1.0 - wins.mean())
