"""Gaussian and multi-scale Gaussian kernels, and the unbiased MMD estimator.

The multi-scale kernel is a positively weighted sum of Gaussians whose widths
are spread log-uniformly over ``width`` decades around an average scale::

    sigma_i = s * 10 ** (w * i / n - w / 2),   i = 0..n
    k(x, y) = sum_i c_i * exp(-||x - y||^2 / (2 sigma_i^2))

Everything here works in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a multi-scale Gaussian kernel.

    Attributes:
        base_scale: Average scale ``s`` of the ladder.
        width: Number of decades ``w`` covered by the ladder.
        num_scales: ``n``; the ladder has ``n + 1`` rungs.
        coefficients: Positive weights ``c_i``, one per rung. Defaults to ones.
    """

    base_scale: float = 1.0
    width: float = 4.0
    num_scales: int = 10
    coefficients: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.base_scale > 0:
            raise ValueError(f"base_scale must be positive, got {self.base_scale}")
        if self.width < 0:
            raise ValueError(f"width must be nonnegative, got {self.width}")
        if int(self.num_scales) != self.num_scales or self.num_scales < 1:
            raise ValueError(f"num_scales must be a positive integer, got {self.num_scales}")
        coeffs = tuple(float(c) for c in self.coefficients) or (1.0,) * (self.num_scales + 1)
        if len(coeffs) != self.num_scales + 1:
            raise ValueError(
                f"expected {self.num_scales + 1} coefficients, got {len(coeffs)}"
            )
        if any(not c > 0 for c in coeffs):
            raise ValueError("kernel coefficients must be positive")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def single(cls, sigma: float) -> KernelSpec:
        """A plain Gaussian kernel of width ``sigma``.

        Expressed as two coincident rungs (``w = 0``) of weight one half each,
        which sums back to exactly one Gaussian.
        """
        return cls(base_scale=sigma, width=0.0, num_scales=1, coefficients=(0.5, 0.5))

    @property
    def scales(self) -> np.ndarray:
        n, w = self.num_scales, self.width
        i = np.arange(n + 1)
        return self.base_scale * 10.0 ** (w * (i / n) - w / 2)

    @property
    def total_weight(self) -> float:
        return math.fsum(self.coefficients)


def _check_sigma(sigma: float):
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")


def _as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {a.shape}")
    return a


def gaussian_kernel(x, y, sigma: float) -> float:
    """``exp(-||x - y||^2 / (2 sigma^2))`` for two vectors."""
    _check_sigma(sigma)
    x, y = _as_vector(x), _as_vector(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


def multiscale_kernel(x, y, spec: KernelSpec) -> float:
    """Weighted sum of Gaussian kernels over the scale ladder of ``spec``."""
    total = 0.0
    for c, sigma in zip(spec.coefficients, spec.scales):
        total += c * gaussian_kernel(x, y, sigma)
    return total


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    # Centring first keeps the norm expansion accurate for clouds far from the origin.
    centre = (a.sum(axis=0) + b.sum(axis=0)) / (a.shape[0] + b.shape[0])
    a, b = a - centre, b - centre
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _distinct_scales(spec: KernelSpec) -> list[tuple[float, float]]:
    """(weight, sigma) with the weights of coincident rungs merged, in ladder order."""
    merged: dict[float, list[float]] = {}
    for c, sigma in zip(spec.coefficients, spec.scales.tolist()):
        merged.setdefault(sigma, []).append(c)
    return [(math.fsum(cs), sigma) for sigma, cs in merged.items()]


def _weighted_sums(d2: np.ndarray, spec: KernelSpec, with_grad: bool):
    """Kernel matrix and, optionally, sum_i c_i k_i / sigma_i^2 from distances."""
    k = np.zeros_like(d2)
    g = np.zeros_like(d2) if with_grad else None
    arg = np.empty_like(d2)
    for c, sigma in _distinct_scales(spec):
        np.multiply(d2, -0.5 / (sigma * sigma), out=arg)
        # Terms below exp(-500) are dropped early; letting them reach the
        # subnormal range costs an order of magnitude in speed.
        np.maximum(arg, -500.0, out=arg)
        e = np.exp(arg)
        k += c * e
        if with_grad:
            g += (c / (sigma * sigma)) * e
    return k, g


def kernel_matrix(A, B, spec: KernelSpec) -> np.ndarray:
    """Evaluate the multi-scale kernel between every row of ``A`` and of ``B``."""
    A, B = _as_matrix(A, "A"), _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d2 = squared_distances(A, B)
    if A is B or (A.shape == B.shape and np.array_equal(A, B)):
        np.fill_diagonal(d2, 0.0)
    return _weighted_sums(d2, spec, with_grad=False)[0]


def _check_pair(X, Y):
    X, Y = _as_matrix(X, "X"), _as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if X.shape[0] < 2 or Y.shape[0] < 2:
        raise ValueError(
            f"the unbiased estimator needs at least 2 samples per set, "
            f"got {X.shape[0]} and {Y.shape[0]}"
        )
    return X, Y


def _canonical_order(X: np.ndarray, Y: np.ndarray) -> bool:
    """True if (X, Y) should be swapped so both argument orders share one code path."""
    if X.shape != Y.shape:
        return X.shape > Y.shape
    return X.tobytes() > Y.tobytes()


def _self_block_sum(K: np.ndarray) -> float:
    # Off-diagonal sum; the diagonal is excluded by construction.
    np.fill_diagonal(K, 0.0)
    return float(K.sum())


def mmd_u2(X, Y, spec: KernelSpec) -> float:
    """Unbiased estimate of the squared MMD between samples ``X`` and ``Y``.

    Self-pairs are left out of the two within-sample averages; the cross
    average uses every pair. The value can be negative. The result is
    bitwise symmetric in its two arguments.

    Args:
        X: ``(m, d)`` sample, ``m >= 2``.
        Y: ``(p, d)`` sample, ``p >= 2``.
        spec: Kernel to use.

    Returns:
        The estimate as a Python float.
    """
    X, Y = _check_pair(X, Y)
    if _canonical_order(X, Y):
        X, Y = Y, X
    m, p = X.shape[0], Y.shape[0]
    kxx, _ = _weighted_sums(squared_distances(X, X), spec, with_grad=False)
    kyy, _ = _weighted_sums(squared_distances(Y, Y), spec, with_grad=False)
    kxy, _ = _weighted_sums(squared_distances(X, Y), spec, with_grad=False)
    within_x = _self_block_sum(kxx) / (m * (m - 1))
    within_y = _self_block_sum(kyy) / (p * (p - 1))
    cross = 2.0 * float(kxy.sum()) / (m * p)
    return (within_x + within_y) - cross


def mmd_u2_and_grad(X, Y, spec: KernelSpec) -> tuple[float, np.ndarray]:
    """Estimate and its gradient with respect to ``X`` in a single pass.

    The estimate skips the argument canonicalisation of :func:`mmd_u2` and
    may differ from it in the last few bits.
    """
    X, Y = _check_pair(X, Y)
    m, p = X.shape[0], Y.shape[0]
    kxx, gxx = _weighted_sums(squared_distances(X, X), spec, with_grad=True)
    kyy, _ = _weighted_sums(squared_distances(Y, Y), spec, with_grad=False)
    kxy, gxy = _weighted_sums(squared_distances(X, Y), spec, with_grad=True)
    np.fill_diagonal(kxx, 0.0)
    np.fill_diagonal(kyy, 0.0)
    np.fill_diagonal(gxx, 0.0)
    value = kxx.sum() / (m * (m - 1)) + kyy.sum() / (p * (p - 1)) - 2.0 * kxy.sum() / (m * p)

    # d k(x_i, z) / d x_i = -G(x_i, z) (x_i - z); each within-X pair appears twice.
    within = gxx.sum(axis=1)[:, None] * X - gxx @ X
    cross = gxy.sum(axis=1)[:, None] * X - gxy @ Y
    grad = (-2.0 / (m * (m - 1))) * within + (2.0 / (m * p)) * cross
    return value, grad


def mmd_u2_grad(X, Y, spec: KernelSpec) -> np.ndarray:
    """Gradient of :func:`mmd_u2` with respect to every entry of ``X`` (``Y`` fixed)."""
    return mmd_u2_and_grad(X, Y, spec)[1]
