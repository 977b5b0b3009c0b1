"""Signature kernel, its induced distance, and adaptive sample weighting.

The kernel of two streams is the finite inner product of their flattened
depth-N signatures (time-augmented by default). The induced squared distance
k(a,a) - 2 k(a,b) + k(b,b) measures pattern similarity between windows; the
adaptive weighter turns distances to the most recent window into softmax
weights, so history resembling the present regime dominates the regression.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .signature import DataStream, augment_time, flatten, signature, signature_batch


@dataclass(frozen=True)
class KernelConfig:
    """Kernel hyper-parameters: depth, window size, temperature, augmentation."""

    depth: int = 2
    window: int = 8
    gamma: float = 1.0
    augment: bool = True

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.window < 0:
            raise ValueError(f"window must be >= 0, got {self.window}")
        if self.gamma < 0:
            raise ValueError(f"temperature must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative sample weights summing to 1 for one forecast horizon."""

    weights: np.ndarray
    horizon: int

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError(f"weights must be a non-empty vector, got shape {w.shape}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size


def _feature_vector(s: DataStream, cfg: KernelConfig) -> np.ndarray:
    stream = augment_time(s) if cfg.augment else s
    return flatten(signature(stream, cfg.depth))


def sig_kernel(a: DataStream, b: DataStream, cfg: KernelConfig) -> float:
    """Inner product of the two streams' depth-N signature features."""
    if a.dim != b.dim:
        raise ValueError(f"stream dimensions differ: {a.dim} vs {b.dim}")
    return float(np.dot(_feature_vector(a, cfg), _feature_vector(b, cfg)))


def sig_distance(a: DataStream, b: DataStream, cfg: KernelConfig) -> float:
    """Squared kernel distance k(a,a) - 2 k(a,b) + k(b,b).

    Nonnegative up to floating-point rounding; exactly 0 when both arguments
    are the same stream.
    """
    if a.dim != b.dim:
        raise ValueError(f"stream dimensions differ: {a.dim} vs {b.dim}")
    fa = _feature_vector(a, cfg)
    fb = _feature_vector(b, cfg)
    return float(np.dot(fa, fa) - 2.0 * np.dot(fa, fb) + np.dot(fb, fb))


def weights_from_distances(deltas: np.ndarray, gamma: float) -> np.ndarray:
    """Softmax of -gamma * delta, stabilized by subtracting min(delta).

    The shift is an exact softmax identity, so weights are invariant to
    adding a constant to every distance and gamma = 0 gives uniform weights.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.size == 0:
        raise ValueError("need at least one distance")
    scores = np.exp(-gamma * (deltas - deltas.min()))
    return scores / scores.sum()


def standardize_windows(z: np.ndarray, window: int, eps: float = 1e-12) -> np.ndarray:
    """Per-window standardization of all sliding windows of a sample matrix.

    Window ending at row i covers rows i-window..i. Each window is centered
    on its own per-coordinate mean and divided by the pooled per-coordinate
    standard deviation of the full matrix (guarded below by eps), so window
    comparisons are scale-free but still see within-window shape.

    Returns an array of shape (m - window, window + 1, dz): the standardized
    window ending at row window + j sits at index j.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"samples must be a 2-d array, got shape {z.shape}")
    m = z.shape[0]
    if m < window + 1:
        raise DataError(
            f"need at least {window + 1} samples for window size {window}, got {m}"
        )
    pooled_std = np.maximum(z.std(axis=0), eps)
    n_windows = m - window
    idx = np.arange(window + 1)[None, :] + np.arange(n_windows)[:, None]
    windows = z[idx]  # (n_windows, window+1, dz)
    means = windows.mean(axis=1, keepdims=True)
    return (windows - means) / pooled_std


def ada_weights(
    z: np.ndarray,
    cfg: KernelConfig,
    horizon: int,
    reference_window: np.ndarray | None = None,
) -> WeightVector:
    """Adaptive weights for the samples z_0..z_{m-1} of one forecast horizon.

    Row tau of z is the joined sample (x_tau, y_{tau+horizon}). For each tau
    with a complete trailing window (tau >= window), the signature-kernel
    distance between that window and the reference becomes a softmax score;
    earlier rows, which have no complete window, get weight 0 and the softmax
    renormalizes over the eligible rows. The reference defaults to the most
    recent window of z itself (its own distance cancels to exactly 0, so its
    weight is maximal); passing `reference_window` (window+1 rows, same
    coordinates as z) compares against an external window instead, centered
    on its own mean and scaled by z's pooled standard deviation. The output
    has one weight per input row and sums to 1.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    m = z.shape[0]
    l = cfg.window
    if m < l + 1:
        raise DataError(
            f"no complete reference window: {m} samples < window size {l} + 1"
        )
    std_windows = standardize_windows(z, l)
    features = signature_batch(std_windows, cfg.depth, augment=cfg.augment)
    if reference_window is None:
        ref = features[-1]
    else:
        reference_window = np.asarray(reference_window, dtype=np.float64)
        if reference_window.ndim == 1:
            reference_window = reference_window[:, None]
        if reference_window.shape != (l + 1, z.shape[1]):
            raise ValueError(
                f"reference window must have shape ({l + 1}, {z.shape[1]}), "
                f"got {reference_window.shape}"
            )
        pooled_std = np.maximum(z.std(axis=0), 1e-12)
        std_ref = (reference_window - reference_window.mean(axis=0)) / pooled_std
        ref = signature_batch(std_ref[None, :, :], cfg.depth, augment=cfg.augment)[0]
    ref_sq = float(np.dot(ref, ref))
    # Same arithmetic as sig_distance; an in-sample reference cancels to 0.
    deltas = np.array(
        [float(np.dot(f, f)) - 2.0 * float(np.dot(f, ref)) + ref_sq for f in features]
    )
    eligible = weights_from_distances(deltas, cfg.gamma)
    weights = np.zeros(m)
    weights[l:] = eligible
    return WeightVector(weights, horizon)


def gram_matrix(streams: list[DataStream], cfg: KernelConfig) -> np.ndarray:
    """Kernel Gram matrix of a list of streams (symmetric PSD)."""
    feats = np.stack([_feature_vector(s, cfg) for s in streams])
    return feats @ feats.T
