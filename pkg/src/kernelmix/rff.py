"""Spectral samplers, random feature maps, and the weighted feature matrix.

The per-draw feature is sqrt(2) * cos(<x, xi> + b); the 1/sqrt(D)
normalization is applied at the classifier (and inside kernel_approx),
never here, so the two factors are not double-counted.

Spectral (Bochner dual) laws per family, for bandwidth rho:

  gaussian, anova  xi_k ~ Normal(0, 1/rho^2) per coordinate
  laplacian        xi_k ~ Cauchy(0, 1/rho)   per coordinate

The ANOVA product of per-coordinate Gaussian factors with one shared rho
equals the Gaussian RBF, so it shares the Gaussian spectral law. The
Cauchy law has no second moment; sigma_p^2 is reported as inf and the
pointwise error bound refuses such samplers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kernels import BaseKernel
from .mmd import MixtureWeights
from .rng import stream


def spectral_second_moment(kernel: BaseKernel, dim: int) -> float:
    """sigma_p^2 = E ||xi||^2 under the kernel's spectral law (inf for Cauchy)."""
    if kernel.family == "laplacian":
        return math.inf
    return dim / kernel.rho**2


def sample_frequencies(
    kernel: BaseKernel,
    draws: int,
    dim: int,
    seed: int,
    kernel_index: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (xi, b): frequencies from the spectral law, phases uniform [0, 2pi).

    The stream is keyed by (seed, kernel_index), so each base kernel's bank
    regenerates identically no matter the order of generation.
    """
    if draws < 1:
        raise ConfigError("need at least one draw")
    rng = stream(seed, kernel_index)
    if kernel.family == "laplacian":
        xi = rng.standard_cauchy(size=(draws, dim)) / kernel.rho
    else:
        xi = rng.normal(0.0, 1.0 / kernel.rho, size=(draws, dim))
    b = rng.uniform(0.0, 2.0 * math.pi, size=draws)
    return xi, b


def feature_map(x: np.ndarray, xi: np.ndarray, b: float) -> float:
    """Single random feature sqrt(2) * cos(<x, xi> + b)."""
    return math.sqrt(2.0) * math.cos(float(np.dot(x, xi)) + b)


def feature_block(X: np.ndarray, xi: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All D features of one kernel for every row of X (n x D)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != xi.shape[1]:
        raise ConfigError(f"dimension mismatch {X.shape[1]} vs {xi.shape[1]}")
    return math.sqrt(2.0) * np.cos(X @ xi.T + b)


def kernel_approx(x: np.ndarray, y: np.ndarray, xi: np.ndarray, b: np.ndarray) -> float:
    """Monte-Carlo kernel estimate (1/D) sum_j phi(x;xi_j) phi(y;xi_j)."""
    fx = feature_block(np.atleast_2d(x), xi, b)[0]
    fy = feature_block(np.atleast_2d(y), xi, b)[0]
    return float(fx @ fy / xi.shape[0])


@dataclass(frozen=True)
class FeatureBank:
    """Sampled frequencies and phases for every base kernel.

    Reconstructible from (kernels, weights, draws, dim, seed) alone; the
    arrays are regenerated deterministically, which is also how banks are
    serialized (parameters only, never the frequencies).
    """

    kernels: tuple[BaseKernel, ...]
    weights: MixtureWeights
    draws: int
    dim: int
    seed: int
    frequencies: tuple[np.ndarray, ...]
    phases: tuple[np.ndarray, ...]

    @classmethod
    def generate(
        cls,
        kernels: list[BaseKernel],
        weights: MixtureWeights,
        draws: int,
        dim: int,
        seed: int,
    ) -> "FeatureBank":
        if len(kernels) != weights.m:
            raise ConfigError(f"{len(kernels)} kernels but {weights.m} weights")
        freqs, phases = [], []
        for idx, kernel in enumerate(kernels):
            xi, b = sample_frequencies(kernel, draws, dim, seed, kernel_index=idx)
            freqs.append(xi)
            phases.append(b)
        return cls(
            kernels=tuple(kernels),
            weights=weights,
            draws=draws,
            dim=dim,
            seed=seed,
            frequencies=tuple(freqs),
            phases=tuple(phases),
        )

    @property
    def total_features(self) -> int:
        return len(self.kernels) * self.draws

    def to_dict(self) -> dict:
        return {
            "kernels": [{"family": k.family, "rho": k.rho} for k in self.kernels],
            "weights": self.weights.weights.tolist(),
            "degenerate": self.weights.degenerate,
            "draws": self.draws,
            "dim": self.dim,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FeatureBank":
        kernels = [BaseKernel(k["family"], k["rho"]) for k in payload["kernels"]]
        weights = MixtureWeights(
            np.asarray(payload["weights"], dtype=float),
            degenerate=bool(payload.get("degenerate", False)),
        )
        return cls.generate(kernels, weights, payload["draws"], payload["dim"], payload["seed"])


def build_feature_matrix(X: np.ndarray, bank: FeatureBank) -> np.ndarray:
    """Concatenated weighted feature matrix Phi (n x mD).

    Block l holds sqrt(w_l) * sqrt(2) * cos(X xi_l^T + b_l); blocks appear
    in kernel order, so entries are bounded by sqrt(2 * max_l w_l).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != bank.dim:
        raise ConfigError(f"data dim {X.shape[1]} does not match bank dim {bank.dim}")
    blocks = []
    for w, xi, b in zip(bank.weights.weights, bank.frequencies, bank.phases):
        blocks.append(math.sqrt(w) * feature_block(X, xi, b))
    return np.hstack(blocks)


def sample_mixture_frequencies(
    kernels: list[BaseKernel],
    weights: MixtureWeights,
    total_draws: int,
    dim: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw from the mixture spectral law: pick component l w.p. w_l, then xi.

    Returns (xi, b, component) with unweighted frequencies; features built
    from such a bank enter without the sqrt(w_l) scaling. Provided as the
    stated alternative to the mixture-kernel model; the analyzed pipeline
    uses :class:`FeatureBank`.
    """
    if len(kernels) != weights.m:
        raise ConfigError(f"{len(kernels)} kernels but {weights.m} weights")
    rng = stream(seed, len(kernels))
    component = rng.choice(len(kernels), size=total_draws, p=weights.weights)
    xi = np.empty((total_draws, dim))
    for idx, kernel in enumerate(kernels):
        mask = component == idx
        count = int(mask.sum())
        if count == 0:
            continue
        if kernel.family == "laplacian":
            xi[mask] = rng.standard_cauchy(size=(count, dim)) / kernel.rho
        else:
            xi[mask] = rng.normal(0.0, 1.0 / kernel.rho, size=(count, dim))
    b = rng.uniform(0.0, 2.0 * math.pi, size=total_draws)
    return xi, b, component
