"""Truncated free tensor algebra over R^d.

A graded tensor holds levels 0..N, level k being a dense row-major array with
d^k entries. Group-like elements (level 0 equal to 1) form a group under the
graded product, with exp mapping a single increment to its signature. The
Horner-fused product-with-exponential is the workhorse of stream signatures:
it produces the same result as composing `exp_map` and `boxtimes` with
strictly fewer scalar multiplications.

All operations are pure; tensors are immutable after construction.
"""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

import numpy as np


class MultiplicationCounter:
    """Tallies scalar multiplications executed by instrumented kernels.

    Test-only instrument (not thread-safe): activate with
    `count_multiplications()` and compare algorithm variants.
    """

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        self.count += n


_ACTIVE_COUNTER: MultiplicationCounter | None = None


@contextmanager
def count_multiplications() -> Iterator[MultiplicationCounter]:
    """Count scalar multiplications performed by tensor kernels in this block."""
    global _ACTIVE_COUNTER
    counter = MultiplicationCounter()
    previous = _ACTIVE_COUNTER
    _ACTIVE_COUNTER = counter
    try:
        yield counter
    finally:
        _ACTIVE_COUNTER = previous


def _tally(n: int) -> None:
    if _ACTIVE_COUNTER is not None:
        _ACTIVE_COUNTER.add(n)


def _outer_flat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flat row-major outer product of two flat levels."""
    _tally(a.size * b.size)
    return np.multiply.outer(a, b).ravel()


def _scale(a: np.ndarray, c: float) -> np.ndarray:
    _tally(a.size)
    return a * c


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def _make(dim: int, depth: int, levels: list[np.ndarray]) -> "GradedTensor":
    """Construct from freshly computed float64 levels, skipping validation."""
    t = object.__new__(GradedTensor)
    for lv in levels:
        lv.flags.writeable = False
    object.__setattr__(t, "dim", dim)
    object.__setattr__(t, "depth", depth)
    object.__setattr__(t, "levels", tuple(levels))
    return t


@dataclass(frozen=True)
class GradedTensor:
    """Element of the depth-N truncated tensor algebra over R^d.

    levels[k] is the flat row-major level-k component with d^k entries;
    levels[0] is the scalar component stored as a length-1 array.
    """

    dim: int
    depth: int
    levels: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if len(self.levels) != self.depth + 1:
            raise ValueError(
                f"expected {self.depth + 1} levels, got {len(self.levels)}"
            )
        frozen = []
        for k, level in enumerate(self.levels):
            level = np.array(level, dtype=np.float64)  # copy: never freeze caller arrays
            if level.ndim != 1 or level.size != self.dim**k:
                raise ValueError(
                    f"level {k} must be flat with {self.dim**k} entries, "
                    f"got shape {level.shape}"
                )
            frozen.append(_freeze(level))
        object.__setattr__(self, "levels", tuple(frozen))

    @property
    def scalar(self) -> float:
        """The level-0 component."""
        return float(self.levels[0][0])

    def level(self, k: int, reshape: bool = False) -> np.ndarray:
        """Level-k component, flat by default or shaped (d,)*k."""
        arr = self.levels[k]
        if reshape and k > 0:
            return arr.reshape((self.dim,) * k)
        return arr

    def level_norms(self) -> np.ndarray:
        """Frobenius (Euclidean) norm of each level, shape (depth+1,)."""
        return np.array([float(np.linalg.norm(lv)) for lv in self.levels])

    def is_group_like(self, tol: float = 0.0) -> bool:
        return abs(self.scalar - 1.0) <= tol


def zeros(d: int, N: int) -> GradedTensor:
    """The zero tensor of dimension d, depth N (level 0 is 0)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if N < 0:
        raise ValueError(f"depth must be >= 0, got {N}")
    return _make(d, N, [np.zeros(d**k) for k in range(N + 1)])


def unit(d: int, N: int) -> GradedTensor:
    """The group identity (1, 0, ..., 0)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if N < 0:
        raise ValueError(f"depth must be >= 0, got {N}")
    levels = [np.zeros(d**k) for k in range(N + 1)]
    levels[0][0] = 1.0
    return _make(d, N, levels)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product of two single levels.

    Output shape is the concatenation of the input shapes; entries are all
    pairwise products A[i...] * B[j...]. Scalars act as plain multipliers.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _tally(max(a.size, 1) * max(b.size, 1))
    return np.multiply.outer(a, b)


def _check_compatible(A: GradedTensor, B: GradedTensor) -> None:
    if A.dim != B.dim or A.depth != B.depth:
        raise ValueError(
            f"mismatched tensors: ({A.dim}, {A.depth}) vs ({B.dim}, {B.depth})"
        )


def boxtimes(A: GradedTensor, B: GradedTensor) -> GradedTensor:
    """Graded product of two group-like tensors.

    Level k of the output is sum_{j=0..k} A_j (x) B_{k-j}. Both operands must
    have level 0 equal to 1 (the group-like case), which the result inherits.
    """
    _check_compatible(A, B)
    if A.scalar != 1.0 or B.scalar != 1.0:
        raise ValueError("boxtimes requires group-like operands (level 0 == 1)")
    d, N = A.dim, A.depth
    out: list[np.ndarray] = [np.ones(1)]
    for k in range(1, N + 1):
        # j = 0 and j = k terms multiply by the scalar 1 levels.
        acc = _scale(B.levels[k], 1.0) + _scale(A.levels[k], 1.0)
        for j in range(1, k):
            acc += _outer_flat(A.levels[j], B.levels[k - j])
        out.append(acc)
    return _make(d, N, out)


def exp_map(v: np.ndarray, N: int) -> GradedTensor:
    """Exponential of an increment: level k is v^{(x)k} / k!.

    This is the depth-N signature of a single linear segment with total
    increment v.
    """
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if v.ndim != 1:
        raise ValueError(f"increment must be a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("increment must be finite")
    if N < 0:
        raise ValueError(f"depth must be >= 0, got {N}")
    d = v.size
    levels: list[np.ndarray] = [np.ones(1)]
    for k in range(1, N + 1):
        levels.append(_outer_flat(levels[-1], _scale(v, 1.0 / k)))
    return _make(d, N, levels)


def mul_exp_naive(A: GradedTensor, z: np.ndarray) -> GradedTensor:
    """Reference path for A (x) exp(z): compose exp_map then boxtimes."""
    return boxtimes(A, exp_map(z, A.depth))


def fused_mul_exp(A: GradedTensor, z: np.ndarray) -> GradedTensor:
    """A (x) exp(z) via nested Horner chains, one per output level.

    Level k unrolls as (((z/k + A_1) (x) z/(k-1) + A_2) (x) z/(k-2) + ...)
    (x) z + A_k, avoiding the explicit powers of z that the naive composition
    materializes. Exact-arithmetic result identical to `mul_exp_naive`.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if z.size != A.dim:
        raise ValueError(f"increment dimension {z.size} != tensor dimension {A.dim}")
    if not np.all(np.isfinite(z)):
        raise ValueError("increment must be finite")
    if A.scalar != 1.0:
        raise ValueError("fused_mul_exp requires a group-like left factor")
    d, N = A.dim, A.depth
    out: list[np.ndarray] = [np.ones(1)]
    for k in range(1, N + 1):
        acc = _scale(z, 1.0 / k) + A.levels[1]
        for i in range(2, k + 1):
            acc = _outer_flat(acc, _scale(z, 1.0 / (k - i + 1))) + A.levels[i]
        out.append(acc)
    return _make(d, N, out)


def scalar_mul(A: GradedTensor, c: float) -> GradedTensor:
    """Every level scaled by c."""
    return _make(A.dim, A.depth, [_scale(lv, c) for lv in A.levels])


def add(A: GradedTensor, B: GradedTensor) -> GradedTensor:
    """Levelwise sum."""
    _check_compatible(A, B)
    return _make(A.dim, A.depth, [a + b for a, b in zip(A.levels, B.levels)])


def max_abs_difference(A: GradedTensor, B: GradedTensor) -> float:
    """Largest absolute entrywise difference across all levels."""
    _check_compatible(A, B)
    return max(
        float(np.max(np.abs(a - b))) for a, b in zip(A.levels, B.levels)
    )


def group_inverse(A: GradedTensor) -> GradedTensor:
    """Inverse of a group-like tensor under the graded product.

    For A = 1 + a (a strictly graded), the inverse is sum_k (-a)^{(x)k},
    which terminates at the truncation depth.
    """
    if A.scalar != 1.0:
        raise ValueError("group inverse requires level 0 == 1")
    d, N = A.dim, A.depth
    neg = [np.zeros(1)] + [-lv for lv in A.levels[1:]]
    result = unit(d, N)
    power = unit(d, N)
    for _ in range(N):
        # power <- power (x) neg, truncated; both have zero scalar handled below
        new_levels = [np.zeros(d**k) for k in range(N + 1)]
        for k in range(1, N + 1):
            acc = np.zeros(d**k)
            for j in range(0, k):
                if power.levels[j].any() and neg[k - j].any():
                    if j == 0:
                        acc += power.scalar * neg[k - j]
                    else:
                        acc += _outer_flat(power.levels[j], neg[k - j])
            new_levels[k] = acc
        power = _make(d, N, new_levels)
        result = add(result, power)
        if power.scalar == 0.0 and not any(lv.any() for lv in power.levels[1:]):
            break
    return _make(d, N, [np.ones(1)] + [lv.copy() for lv in result.levels[1:]])


def factorial_bound(one_variation: float, N: int) -> np.ndarray:
    """The per-level decay bound C^k / k! for levels 0..N."""
    return np.array([one_variation**k / math.factorial(k) for k in range(N + 1)])
