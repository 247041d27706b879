"""MMD estimators over class-conditional samples and the mixture weights.

Two empirical estimators are provided. The general one sums two
within-class U-statistics (diagonal removed) and subtracts twice the
cross-class sample average:

    squared = 1/(n+(n+-1)) sum_{i!=j} k(x_i,x_j)
            + 1/(n-(n--1)) sum_{i!=j} k(y_i,y_j)
            - 2/(n+ n-)    sum_{i,j}  k(x_i,y_j)

For balanced classes a single U-statistic over paired draws z_i = (x_i, y_i)
is available, with core

    h(z_i,z_j) = k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i).

Both `squared` values are kept signed (they are unbiased for the squared
population MMD and can dip below zero); `value` clamps at zero before the
square root. Mixture weights are the normalized per-kernel `value`s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sp_stats

from .errors import ConfigError, DataError
from .kernels import BaseKernel, kernel_matrix
from .rng import stream

ESTIMATORS = ("biased", "unbiased_balanced")


@dataclass(frozen=True)
class MmdScore:
    squared: float
    estimator: str
    n_plus: int
    n_minus: int

    @property
    def value(self) -> float:
        return math.sqrt(max(self.squared, 0.0))

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "squared": self.squared,
            "value": self.value,
        }


@dataclass(frozen=True)
class MixtureWeights:
    """Simplex weights over the base kernels, plus a degeneracy flag.

    ``degenerate`` is set when every kernel scored exactly zero and the
    uniform fallback was used.
    """

    weights: np.ndarray
    degenerate: bool = False
    scores: tuple[float, ...] = field(default=())

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.shape[0] == 0:
            raise ConfigError("weights must be a nonempty vector")
        if (w < 0).any():
            raise ConfigError("weights must be nonnegative")
        object.__setattr__(self, "weights", w / w.sum())

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def mmd_biased(kernel: BaseKernel, pos: np.ndarray, neg: np.ndarray) -> MmdScore:
    """Two within-class U-statistics minus the cross average (any class sizes)."""
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    neg = np.atleast_2d(np.asarray(neg, dtype=float))
    n_plus, n_minus = pos.shape[0], neg.shape[0]
    if n_plus < 2 or n_minus < 2:
        raise DataError("each class needs at least 2 samples")
    Kpp = kernel_matrix(kernel, pos)
    Knn = kernel_matrix(kernel, neg)
    Kpn = kernel_matrix(kernel, pos, neg)
    within_pos = (Kpp.sum() - np.trace(Kpp)) / (n_plus * (n_plus - 1))
    within_neg = (Knn.sum() - np.trace(Knn)) / (n_minus * (n_minus - 1))
    cross = 2.0 * Kpn.sum() / (n_plus * n_minus)
    return MmdScore(
        squared=float(within_pos + within_neg - cross),
        estimator="biased",
        n_plus=n_plus,
        n_minus=n_minus,
    )


def mmd_unbiased_balanced(
    kernel: BaseKernel,
    pos: np.ndarray,
    neg: np.ndarray,
    pairing_seed: int | None = None,
) -> MmdScore:
    """Single U-statistic over paired draws; requires equal class sizes.

    Row i of ``pos`` pairs with row i of ``neg``; ``pairing_seed`` shuffles
    the negative rows first when a random pairing is wanted.
    """
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    neg = np.atleast_2d(np.asarray(neg, dtype=float))
    if pos.shape[0] != neg.shape[0]:
        raise DataError(
            f"unbalanced classes ({pos.shape[0]} vs {neg.shape[0]}); "
            "use the biased estimator"
        )
    n0 = pos.shape[0]
    if n0 < 2:
        raise DataError("need at least 2 paired samples")
    if pairing_seed is not None:
        neg = neg[stream(pairing_seed).permutation(n0)]
    Kxx = kernel_matrix(kernel, pos)
    Kyy = kernel_matrix(kernel, neg)
    Kxy = kernel_matrix(kernel, pos, neg)
    H = Kxx + Kyy - Kxy - Kxy.T
    squared = (H.sum() - np.trace(H)) / (n0 * (n0 - 1))
    return MmdScore(
        squared=float(squared),
        estimator="unbiased_balanced",
        n_plus=n0,
        n_minus=n0,
    )


def mmd_score(
    kernel: BaseKernel,
    pos: np.ndarray,
    neg: np.ndarray,
    estimator: str = "auto",
) -> MmdScore:
    """Route to the balanced U-statistic when n+ = n-, else the biased form."""
    if estimator == "auto":
        estimator = "unbiased_balanced" if len(pos) == len(neg) else "biased"
    if estimator == "unbiased_balanced":
        return mmd_unbiased_balanced(kernel, pos, neg)
    if estimator == "biased":
        return mmd_biased(kernel, pos, neg)
    raise ConfigError(f"unknown estimator {estimator!r}")


def mixing_weights(
    kernels: list[BaseKernel],
    pos: np.ndarray,
    neg: np.ndarray,
    estimator: str = "auto",
) -> MixtureWeights:
    """Per-kernel MMD values normalized onto the simplex.

    All-zero scores (e.g. identical class samples) fall back to uniform
    weights with the ``degenerate`` flag set.
    """
    if not kernels:
        raise ConfigError("need at least one base kernel")
    scores = [mmd_score(k, pos, neg, estimator=estimator) for k in kernels]
    values = np.array([s.value for s in scores])
    total = values.sum()
    if total == 0.0:
        m = len(kernels)
        return MixtureWeights(
            weights=np.full(m, 1.0 / m),
            degenerate=True,
            scores=tuple(values.tolist()),
        )
    return MixtureWeights(
        weights=values / total,
        degenerate=False,
        scores=tuple(values.tolist()),
    )


# -- population references for Gaussian measures ---------------------------

#: Coefficients of the closed-form squared MMD between N(mu_p, s^2 I) and
#: N(mu_q, s^2 I) under a Gaussian kernel with bandwidth rho:
#:   2 * (rho^2 / base)^(d/2) * (1 - exp(-||mu_p - mu_q||^2 / expo))
#: "convolution" is the frozen default, validated against a Monte-Carlo
#: oracle; "as_published" kept only for comparison (it fails that oracle).
_CLOSED_FORM_VARIANTS = {
    "convolution": lambda rho2, s2: (rho2 + 2.0 * s2, 2.0 * rho2 + 4.0 * s2),
    "as_published": lambda rho2, s2: (rho2 + s2, 2.0 * rho2 + s2),
}


def gaussian_mmd_squared_closed_form(
    mu_p: np.ndarray,
    mu_q: np.ndarray,
    sigma2: float,
    rho: float,
    variant: str = "convolution",
) -> float:
    """Closed-form squared MMD between two isotropic Gaussians."""
    if sigma2 < 0:
        raise ConfigError("sigma2 must be nonnegative")
    if rho <= 0:
        raise ConfigError("rho must be positive")
    try:
        base, expo = _CLOSED_FORM_VARIANTS[variant](rho**2, float(sigma2))
    except KeyError:
        raise ConfigError(f"unknown closed-form variant {variant!r}") from None
    mu_p = np.atleast_1d(np.asarray(mu_p, dtype=float))
    mu_q = np.atleast_1d(np.asarray(mu_q, dtype=float))
    if mu_p.shape != mu_q.shape:
        raise ConfigError("mean vectors must share a dimension")
    d = mu_p.shape[0]
    gap = float(np.dot(mu_p - mu_q, mu_p - mu_q))
    return 2.0 * (rho**2 / base) ** (d / 2.0) * (1.0 - math.exp(-gap / expo))


def gaussian_mmd_closed_form(
    mu_p: np.ndarray,
    mu_q: np.ndarray,
    sigma2: float,
    rho: float,
    variant: str = "convolution",
) -> float:
    """Population MMD (square root of the closed form, clamped at 0)."""
    return math.sqrt(max(gaussian_mmd_squared_closed_form(mu_p, mu_q, sigma2, rho, variant), 0.0))


# -- simulation probes ------------------------------------------------------

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def mmd_convergence_probe(
    sample_p: Sampler,
    sample_q: Sampler,
    kernel: BaseKernel,
    population_mmd: float,
    n_grid: list[int],
    trials: int,
    seed: int,
) -> dict:
    """Mean absolute error of the MMD estimate against its population value.

    Returns one row per sample size plus the fitted log-log slope of the
    error curve (the rate check; theory predicts roughly -1/2).
    """
    rows = []
    for gi, n in enumerate(n_grid):
        errs = []
        for t in range(trials):
            rng = stream(seed, gi, t)
            pos = sample_p(rng, n)
            neg = sample_q(rng, n)
            est = mmd_score(kernel, pos, neg).value
            errs.append(abs(est - population_mmd))
        errs = np.array(errs)
        rows.append(
            {
                "n": n,
                "mean_abs_error": float(errs.mean()),
                "stderr": float(errs.std(ddof=1) / math.sqrt(trials)),
            }
        )
    log_n = np.log([r["n"] for r in rows])
    log_e = np.log([max(r["mean_abs_error"], 1e-300) for r in rows])
    slope = float(np.polyfit(log_n, log_e, 1)[0])
    return {"rows": rows, "slope": slope, "population_mmd": population_mmd}


def mmd_null_distribution_probe(
    sampler: Sampler,
    kernel: BaseKernel,
    n0: int,
    trials: int,
    seed: int,
) -> dict:
    """Summary of sqrt(n0)-scaled squared-MMD draws under P = Q.

    Diagnostic only: reports the mean/std of the raw squared estimates, the
    scaled moments, and a normality statistic of the scaled draws. No
    pass/fail is encoded here.
    """
    if n0 < 2:
        raise ConfigError("n0 must be at least 2")
    draws = np.empty(trials)
    for t in range(trials):
        rng = stream(seed, t)
        pos = sampler(rng, n0)
        neg = sampler(rng, n0)
        draws[t] = mmd_score(kernel, pos, neg).squared
    scaled = math.sqrt(n0) * draws
    if trials >= 20:
        stat, pvalue = sp_stats.normaltest(scaled)
        stat, pvalue = float(stat), float(pvalue)
    else:
        stat, pvalue = float("nan"), float("nan")
    return {
        "trials": trials,
        "n0": n0,
        "mean_squared": float(draws.mean()),
        "std_squared": float(draws.std(ddof=1)),
        "scaled_mean": float(scaled.mean()),
        "scaled_std": float(scaled.std(ddof=1)),
        "normality_stat": stat,
        "normality_pvalue": pvalue,
    }
