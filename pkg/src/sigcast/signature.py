"""Signature transforms of discrete data streams.

A stream of n points in R^d is read as its piecewise-linear interpolation;
its depth-N signature is the product of per-segment exponentials
exp(x_2 - x_1) (x) ... (x) exp(x_n - x_{n-1}), evaluated incrementally with
the Horner-fused update. Signatures ignore timestamps unless the stream is
explicitly time-augmented.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_algebra import GradedTensor, fused_mul_exp, unit

# Flat signature vectors larger than this cannot be indexed/allocated sanely.
_MAX_SIG_DIM = 2**62


@dataclass(frozen=True)
class DataStream:
    """Ordered sequence of d-dimensional points with optional timestamps.

    points has shape (n, d) with n >= 1; timestamps, when given, must be
    strictly increasing with one entry per point.
    """

    points: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError(f"points must be a non-empty (n, d) array, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("stream points must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=np.float64)
            if ts.shape != (pts.shape[0],):
                raise ValueError(
                    f"timestamps must have shape ({pts.shape[0]},), got {ts.shape}"
                )
            if not np.all(np.isfinite(ts)):
                raise ValueError("timestamps must be finite")
            if ts.size > 1 and not np.all(np.diff(ts) > 0):
                raise ValueError("timestamps must be strictly increasing")
            ts = ts.copy()
            ts.flags.writeable = False
            object.__setattr__(self, "timestamps", ts)

    @property
    def length(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def one_variation(self) -> float:
        """Total variation of the interpolation: sum of increment norms."""
        if self.length < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


class TimeAugmentedStream(DataStream):
    """A DataStream whose first coordinate is (strictly increasing) time."""

    def __post_init__(self) -> None:
        super().__post_init__()
        t = self.points[:, 0]
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("first coordinate of an augmented stream must strictly increase")


def augment_time(s: DataStream) -> TimeAugmentedStream:
    """Prepend time as coordinate 0.

    Uses the stream's timestamps when present; otherwise indices 0..n-1
    rescaled to [0, 1] (a single point gets time 0), keeping kernel
    magnitudes comparable across window lengths.
    """
    n = s.length
    if s.timestamps is not None:
        t = s.timestamps
    elif n == 1:
        t = np.zeros(1)
    else:
        t = np.linspace(0.0, 1.0, n)
    return TimeAugmentedStream(np.column_stack([t, s.points]))


def sig_dim(d: int, N: int) -> int:
    """Number of components of a depth-N signature over R^d.

    sum_{k=0..N} d^k, i.e. (d^{N+1} - 1) / (d - 1) for d >= 2 and N + 1 for
    d = 1. Raises OverflowError once the count exceeds the indexable range.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if N < 0:
        raise ValueError(f"depth must be >= 0, got {N}")
    total = (d ** (N + 1) - 1) // (d - 1) if d >= 2 else N + 1
    if total > _MAX_SIG_DIM:
        raise OverflowError(f"signature dimension for d={d}, N={N} exceeds representable range")
    return int(total)


def signature(s: DataStream, N: int) -> GradedTensor:
    """Depth-N signature of a stream's piecewise-linear interpolation.

    A single-point stream yields the unit tensor (the empty product).
    Timestamps are ignored: the signature is invariant to reparameterization.
    """
    if N < 0:
        raise ValueError(f"depth must be >= 0, got {N}")
    sig_dim(s.dim, N)  # reject unrepresentable sizes up front
    acc = unit(s.dim, N)
    pts = s.points
    for i in range(1, s.length):
        acc = fused_mul_exp(acc, pts[i] - pts[i - 1])
    return acc


def signature_batch(windows: np.ndarray, N: int, augment: bool = False) -> np.ndarray:
    """Flattened depth-N signatures of a batch of equal-length windows.

    windows has shape (B, L, d); the result has shape (B, sig_dim). Performs
    the same Horner-fused updates as `signature`, vectorized across the batch
    so sliding-window feature construction stays cheap. With augment=True an
    index-time coordinate (linspace over [0, 1], as `augment_time` uses for
    timestamp-free streams) is prepended to every window first.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3:
        raise ValueError(f"windows must have shape (B, L, d), got {windows.shape}")
    B, L, d = windows.shape
    if L < 1:
        raise ValueError("windows must contain at least one point")
    if augment:
        t = np.zeros(L) if L == 1 else np.linspace(0.0, 1.0, L)
        windows = np.concatenate(
            [np.broadcast_to(t[None, :, None], (B, L, 1)), windows], axis=2
        )
        d += 1
    total = sig_dim(d, N)
    levels: list[np.ndarray] = [np.ones((B, 1))]
    levels += [np.zeros((B, d**k)) for k in range(1, N + 1)]
    for step in range(1, L):
        z = windows[:, step, :] - windows[:, step - 1, :]
        new_levels = [levels[0]]
        for k in range(1, N + 1):
            # reciprocal-multiply, matching fused_mul_exp bit for bit
            acc = z * (1.0 / k) + levels[1]
            for i in range(2, k + 1):
                zi = z * (1.0 / (k - i + 1))
                acc = (acc[:, :, None] * zi[:, None, :]).reshape(B, -1) + levels[i]
            new_levels.append(acc)
        levels = new_levels
    out = np.empty((B, total))
    offset = 0
    for lv in levels:
        out[:, offset : offset + lv.shape[1]] = lv
        offset += lv.shape[1]
    return out


def signature_update(
    prev: GradedTensor, new_point: np.ndarray, last_point: np.ndarray
) -> GradedTensor:
    """Signature of a stream extended by one point.

    prev must be the signature of the stream ending at last_point; the result
    equals the batch signature of the extended stream.
    """
    new_point = np.atleast_1d(np.asarray(new_point, dtype=np.float64))
    last_point = np.atleast_1d(np.asarray(last_point, dtype=np.float64))
    if new_point.shape != last_point.shape or new_point.size != prev.dim:
        raise ValueError(
            f"point dimensions {new_point.shape}/{last_point.shape} do not match "
            f"signature dimension {prev.dim}"
        )
    return fused_mul_exp(prev, new_point - last_point)


def flatten(t: GradedTensor) -> np.ndarray:
    """Concatenate levels 0..N in level-major, row-major order.

    The layout is fixed so downstream model coefficients are stable: entry 0
    is the scalar level, followed by level 1's d entries, level 2's d^2
    entries in row-major multi-index order, and so on.
    """
    return np.concatenate(t.levels)


def unflatten(vec: np.ndarray, d: int, N: int) -> GradedTensor:
    """Inverse of `flatten` for a vector of length sig_dim(d, N)."""
    vec = np.asarray(vec, dtype=np.float64)
    expected = sig_dim(d, N)
    if vec.shape != (expected,):
        raise ValueError(f"expected shape ({expected},), got {vec.shape}")
    levels = []
    offset = 0
    for k in range(N + 1):
        size = d**k
        levels.append(vec[offset : offset + size])
        offset += size
    return GradedTensor(d, N, tuple(levels))


def multi_indices(d: int, N: int) -> list[tuple[int, ...]]:
    """Multi-index labels aligned with `flatten`'s layout, 1-based coordinates.

    Level 0 gets the empty tuple; level k entries are all k-tuples over
    {1..d} in row-major order.
    """
    out: list[tuple[int, ...]] = [()]
    for k in range(1, N + 1):
        idx = np.indices((d,) * k).reshape(k, -1).T + 1
        out.extend(tuple(int(i) for i in row) for row in idx)
    return out
