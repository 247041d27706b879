"""Shift-invariant base kernels, Gram matrices, mixtures and alignment.

All built-in families are bounded by 1, attain 1 on the diagonal, and are
translation invariant. The Gaussian family uses the squared Euclidean
distance exp(-||x-y||^2 / (2 rho^2)); gamma = 1/(2 rho^2) is accepted as an
alternative parameterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError

FAMILIES = ("gaussian", "laplacian", "anova")


@dataclass(frozen=True)
class BaseKernel:
    """A kernel family plus its bandwidth rho (> 0)."""

    family: str
    rho: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ConfigError(f"bandwidth rho must be positive, got {self.rho}")

    @classmethod
    def from_gamma(cls, family: str, gamma: float) -> "BaseKernel":
        if not (gamma > 0 and math.isfinite(gamma)):
            raise ConfigError(f"gamma must be positive, got {gamma}")
        return cls(family, math.sqrt(1.0 / (2.0 * gamma)))

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 * self.rho**2)


def eval_kernel(kernel: BaseKernel, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate k(x, y) for a single pair of vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ConfigError(f"dimension mismatch {x.shape} vs {y.shape}")
    diff = x - y
    if kernel.family == "laplacian":
        return float(np.exp(-np.linalg.norm(diff) / kernel.rho))
    if kernel.family == "anova":
        # product of per-coordinate Gaussian factors, one shared rho
        return float(np.prod(np.exp(-(diff**2) / (2.0 * kernel.rho**2))))
    return float(np.exp(-np.dot(diff, diff) / (2.0 * kernel.rho**2)))


def kernel_matrix(kernel: BaseKernel, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """Kernel evaluations between the rows of X and Y (Y defaults to X)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ConfigError(f"dimension mismatch {X.shape[1]} vs {Y.shape[1]}")
    if kernel.family == "laplacian":
        return np.exp(-cdist(X, Y, "euclidean") / kernel.rho)
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * kernel.rho**2))


def gram_matrix(kernel: BaseKernel, X: np.ndarray) -> np.ndarray:
    """Symmetric Gram matrix; the upper triangle is computed once and mirrored."""
    K = kernel_matrix(kernel, X)
    upper = np.triu(K)
    K = upper + np.triu(K, 1).T
    np.fill_diagonal(K, 1.0)
    return K


def mixture_gram(kernels: list[BaseKernel], weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Entrywise mixture sum_l w_l K^l over the base kernels."""
    weights = np.asarray(weights, dtype=float)
    if len(kernels) != weights.shape[0] or len(kernels) == 0:
        raise ConfigError(
            f"{len(kernels)} kernels but {weights.shape[0]} weights"
        )
    out = np.zeros((np.atleast_2d(X).shape[0],) * 2)
    for w, kernel in zip(weights, kernels):
        out += w * gram_matrix(kernel, X)
    return out


def alignment(K1: np.ndarray, K2: np.ndarray) -> float:
    """Normalized Frobenius inner product <K1,K2> / (||K1||_F ||K2||_F)."""
    K1 = np.asarray(K1, dtype=float)
    K2 = np.asarray(K2, dtype=float)
    if K1.shape != K2.shape:
        raise ConfigError(f"shape mismatch {K1.shape} vs {K2.shape}")
    n1 = np.linalg.norm(K1)
    n2 = np.linalg.norm(K2)
    if n1 == 0 or n2 == 0:
        raise ConfigError("alignment undefined for an all-zero matrix")
    return float(np.sum(K1 * K2) / (n1 * n2))


def target_alignment(K: np.ndarray, y: np.ndarray) -> float:
    """Alignment of a Gram matrix with the ideal label kernel y y^T.

    Equals <K, y y^T> / (n ||K||_F) since ||y y^T||_F = n for +/-1 labels.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if K.shape != (n, n):
        raise ConfigError(f"Gram shape {K.shape} does not match {n} labels")
    return float(y @ K @ y / (n * np.linalg.norm(K)))
