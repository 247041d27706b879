"""Model selection: CV and MMD bandwidth search, their comparison harness,
and relaxed kernel feature selection.

The MMD selector scores each candidate Gaussian kernel directly on the
class-conditional samples and never trains a classifier, which is where its
speed advantage over cross-validation comes from.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, kfold_split, split_by_label
from .errors import ConfigError, DataError
from .kernels import BaseKernel
from .mmd import MixtureWeights, mixing_weights, mmd_score
from .rff import FeatureBank, build_feature_matrix
from .rng import stream
from .svm import SvmModel, TrainConfig, evaluate, train


def log_grid(lo: float = 1e-20, hi: float = 1e3, count: int = 24) -> np.ndarray:
    """Strictly increasing log-spaced bandwidth (gamma) grid."""
    if not (0 < lo < hi) or count < 1:
        raise ConfigError("grid bounds must satisfy 0 < lo < hi with count >= 1")
    if count == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, count)


def _check_grid(gammas) -> np.ndarray:
    gammas = np.asarray(gammas, dtype=float)
    if gammas.ndim != 1 or gammas.shape[0] == 0:
        raise ConfigError("bandwidth grid must be a nonempty vector")
    if (gammas <= 0).any() or (np.diff(gammas) <= 0).any():
        raise ConfigError("bandwidth grid must be positive and strictly increasing")
    return gammas


def _child_seed(seed: int, *path: int) -> int:
    return int(stream(seed, *path).integers(2**63))


def _train_single_kernel(
    ds: LabeledDataset,
    gamma: float,
    draws: int,
    cfg: TrainConfig,
    bank_seed: int,
) -> SvmModel:
    kernel = BaseKernel.from_gamma("gaussian", gamma)
    bank = FeatureBank.generate(
        [kernel], MixtureWeights(np.array([1.0])), draws, ds.dim, bank_seed
    )
    Phi = build_feature_matrix(ds.features, bank)
    return train(Phi, ds.labels, cfg, bank=bank)


def cv_bandwidth_select(
    ds: LabeledDataset,
    gammas,
    folds: int,
    cfg: TrainConfig,
    draws: int,
    seed: int,
) -> tuple[float, list[dict]]:
    """Mean validation accuracy per gamma over stratified folds.

    Returns (argmax gamma, per-gamma rows). Ties break toward the smaller
    gamma (the grid is increasing and argmax takes the first maximum).
    """
    gammas = _check_grid(gammas)
    rows = []
    for gi, gamma in enumerate(gammas):
        accs = []
        for fi, (train_idx, val_idx) in enumerate(kfold_split(ds, folds, seed)):
            train_ds = LabeledDataset(ds.features[train_idx], ds.labels[train_idx])
            val_ds = LabeledDataset(ds.features[val_idx], ds.labels[val_idx])
            model = _train_single_kernel(
                train_ds, gamma, draws, cfg, _child_seed(seed, 5, gi, fi)
            )
            accs.append(evaluate(model, val_ds)["accuracy"])
        accs = np.array(accs)
        rows.append(
            {
                "gamma": float(gamma),
                "cv_mean": float(accs.mean()),
                "cv_std": float(accs.std(ddof=0)),
            }
        )
    best = int(np.argmax([r["cv_mean"] for r in rows]))
    return float(gammas[best]), rows


def mmd_bandwidth_select(
    ds: LabeledDataset,
    gammas,
    estimator: str = "auto",
) -> tuple[float, list[dict], bool]:
    """Score each gamma by the class-conditional MMD; no training involved.

    Returns (argmax gamma, per-gamma rows, degenerate flag). All-zero scores
    set the flag and the tie rule returns the smallest gamma.
    """
    gammas = _check_grid(gammas)
    split = split_by_label(ds)
    if split.n_plus < 2 or split.n_minus < 2:
        raise DataError("MMD selection needs at least 2 samples per class")
    rows = []
    for gamma in gammas:
        kernel = BaseKernel.from_gamma("gaussian", gamma)
        score = mmd_score(kernel, split.positives, split.negatives, estimator=estimator)
        rows.append({"gamma": float(gamma), "mmd_score": score.value})
    values = np.array([r["mmd_score"] for r in rows])
    degenerate = bool(values.max() == 0.0)
    best = int(np.argmax(values))  # first maximum = smallest gamma on ties
    return float(gammas[best]), rows, degenerate


@dataclass(frozen=True)
class SelectionReport:
    gammas: np.ndarray
    cv_mean: np.ndarray
    cv_std: np.ndarray
    mmd_scores: np.ndarray
    cv_gamma: float
    mmd_gamma: float
    agreement: bool
    cv_seconds: float
    mmd_seconds: float
    test_accuracy: dict = field(default_factory=dict)
    degenerate: bool = False

    def rows(self) -> list[dict]:
        return [
            {
                "gamma": float(g),
                "cv_mean": float(cm),
                "cv_std": float(cs),
                "mmd_score": float(ms),
            }
            for g, cm, cs, ms in zip(self.gammas, self.cv_mean, self.cv_std, self.mmd_scores)
        ]

    def to_dict(self) -> dict:
        return {
            "rows": self.rows(),
            "cv_gamma": self.cv_gamma,
            "mmd_gamma": self.mmd_gamma,
            "agreement_within_one_step": self.agreement,
            "cv_seconds": self.cv_seconds,
            "mmd_seconds": self.mmd_seconds,
            "test_accuracy": self.test_accuracy,
            "degenerate": self.degenerate,
        }


def _stratified_holdout(
    ds: LabeledDataset, fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    test_idx: list[int] = []
    all_idx = np.arange(ds.n)
    for cls_key, cls in enumerate((1, -1)):
        idx = stream(seed, 19, cls_key).permutation(all_idx[ds.labels == cls])
        take = max(1, int(round(fraction * idx.shape[0])))
        test_idx.extend(idx[:take].tolist())
    test_idx = np.array(sorted(test_idx))
    train_idx = np.setdiff1d(all_idx, test_idx)
    return (
        LabeledDataset(ds.features[train_idx], ds.labels[train_idx]),
        LabeledDataset(ds.features[test_idx], ds.labels[test_idx]),
    )


def compare_selection(
    ds: LabeledDataset,
    gammas,
    folds: int,
    cfg: TrainConfig,
    draws: int,
    seed: int,
    test_fraction: float = 0.25,
) -> SelectionReport:
    """Run both selectors, then train final models (CV pick, MMD pick, and
    the MMD-weighted mixture over the whole grid) and score them on a
    held-out stratified split."""
    gammas = _check_grid(gammas)
    train_ds, test_ds = _stratified_holdout(ds, test_fraction, seed)

    t0 = time.perf_counter()
    cv_gamma, cv_rows = cv_bandwidth_select(train_ds, gammas, folds, cfg, draws, seed)
    cv_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    mmd_gamma, mmd_rows, degenerate = mmd_bandwidth_select(train_ds, gammas)
    mmd_seconds = time.perf_counter() - t0

    cv_model = _train_single_kernel(train_ds, cv_gamma, draws, cfg, _child_seed(seed, 23))
    mmd_model = _train_single_kernel(train_ds, mmd_gamma, draws, cfg, _child_seed(seed, 29))

    kernels = [BaseKernel.from_gamma("gaussian", g) for g in gammas]
    split = split_by_label(train_ds)
    weights = mixing_weights(kernels, split.positives, split.negatives)
    mix_bank = FeatureBank.generate(
        kernels, weights, draws, train_ds.dim, _child_seed(seed, 31)
    )
    mix_Phi = build_feature_matrix(train_ds.features, mix_bank)
    mix_model = train(mix_Phi, train_ds.labels, cfg, bank=mix_bank)

    gamma_index = {float(g): i for i, g in enumerate(gammas)}
    agreement = abs(gamma_index[cv_gamma] - gamma_index[mmd_gamma]) <= 1

    return SelectionReport(
        gammas=gammas,
        cv_mean=np.array([r["cv_mean"] for r in cv_rows]),
        cv_std=np.array([r["cv_std"] for r in cv_rows]),
        mmd_scores=np.array([r["mmd_score"] for r in mmd_rows]),
        cv_gamma=cv_gamma,
        mmd_gamma=mmd_gamma,
        agreement=agreement,
        cv_seconds=cv_seconds,
        mmd_seconds=mmd_seconds,
        test_accuracy={
            "cv": evaluate(cv_model, test_ds)["accuracy"],
            "mmd": evaluate(mmd_model, test_ds)["accuracy"],
            "mixture": evaluate(mix_model, test_ds)["accuracy"],
        },
        degenerate=degenerate,
    )


# -- relaxed kernel feature selection ----------------------------------------


@dataclass(frozen=True)
class FeatureMask:
    """Relaxed scores and the rounded binary mask with sum(mask) = m_sel."""

    omega: np.ndarray
    mask: np.ndarray
    m_sel: int
    objective: float
    initial_objective: float

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def _centering(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def _exact_objective_grad(X, y, kernel: BaseKernel, omega, eps_d):
    n, d = X.shape
    sq = (X[:, None, :] - X[None, :, :]) ** 2  # (n, n, d) coordinatewise gaps
    K = np.exp(-(sq @ (omega**2)) / (2.0 * kernel.rho**2))
    H = _centering(n)
    A = H @ K @ H + d * eps_d * np.eye(n)
    g = np.linalg.solve(A, y)
    objective = float(y @ g)
    h = H @ g
    M = np.outer(h, h) * K
    grad = (omega / kernel.rho**2) * np.einsum("ij,ijk->k", M, sq)
    return objective, grad


def _rff_objective_grad(X, y, bank: FeatureBank, omega, eps_n):
    n = X.shape[0]
    Xm = X * omega
    H = _centering(n)
    thetas, phis = [], []
    for w, xi, b in zip(bank.weights.weights, bank.frequencies, bank.phases):
        theta = Xm @ xi.T + b
        thetas.append(theta)
        phis.append(math.sqrt(2.0 * w) * np.cos(theta))
    Phi = np.hstack(phis)
    V = H @ Phi
    reg = eps_n * n
    A = V.T @ V + reg * np.eye(V.shape[1])
    u = V.T @ y
    alpha = np.linalg.solve(A, u)
    objective = float((y @ y - u @ alpha) / reg)
    g = (y - V @ alpha) / reg
    dJ_dV = -2.0 * np.outer(g, V.T @ g)
    dJ_dPhi = H @ dJ_dV
    grad = np.zeros_like(omega)
    col = 0
    for w, xi, theta in zip(bank.weights.weights, bank.frequencies, thetas):
        block = dJ_dPhi[:, col : col + bank.draws]
        S = block * (-math.sqrt(2.0 * w) * np.sin(theta))
        grad += np.sum(X * (S @ xi), axis=0)
        col += bank.draws
    return objective, grad


def project_capped_box(v: np.ndarray, cap: float, tol: float = 1e-8) -> np.ndarray:
    """Alternate box clamping and rescaling until sum(v) <= cap, v in [0,1]^d."""
    v = np.clip(v, 0.0, 1.0)
    for _ in range(100):
        total = v.sum()
        if total <= cap + tol:
            break
        v = np.clip(v * (cap / total), 0.0, 1.0)
    return v


def relaxed_objective(X, y, kernel_or_bank, omega, eps: float):
    """Objective (and gradient) of the relaxed selection problem at omega."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if isinstance(kernel_or_bank, FeatureBank):
        objective, grad = _rff_objective_grad(X, y, kernel_or_bank, omega, eps)
    elif isinstance(kernel_or_bank, BaseKernel):
        if kernel_or_bank.family == "laplacian":
            raise ConfigError("exact-mode feature selection supports Gaussian-type kernels only")
        objective, grad = _exact_objective_grad(X, y, kernel_or_bank, omega, eps)
    else:
        raise ConfigError("expected a BaseKernel or FeatureBank")
    if not math.isfinite(objective):
        raise ConfigError("selection objective is not finite; increase eps")
    return objective, grad


def kernel_feature_select(
    X: np.ndarray,
    y: np.ndarray,
    kernel_or_bank,
    m_sel: int,
    eps: float | None = None,
    steps: int = 150,
    step_size: float = 1.0,
) -> FeatureMask:
    """Projected gradient descent on the relaxed feature-selection objective.

    Starts at the uniform point (m_sel/d) * ones and keeps omega in
    {v in [0,1]^d : sum v <= m_sel}. Steps use backtracking (halve until the
    projected step decreases the objective), so the returned iterate never
    scores worse than the uniform start. The final mask sets the m_sel
    largest relaxed scores to 1. ``eps`` defaults to 0.001/n.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if not 1 <= m_sel <= d:
        raise ConfigError(f"m_sel must lie in [1, {d}]")
    if eps is None:
        eps = 0.001 / n
    cap = float(m_sel)
    omega = np.full(d, m_sel / d)
    objective, grad = relaxed_objective(X, y, kernel_or_bank, omega, eps)
    initial_obj = objective
    eta = step_size
    for _ in range(steps):
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            break
        moved = False
        for _halving in range(40):
            candidate = project_capped_box(omega - (eta / gnorm) * grad, cap)
            cand_obj, cand_grad = relaxed_objective(X, y, kernel_or_bank, candidate, eps)
            if cand_obj < objective:
                omega, objective, grad = candidate, cand_obj, cand_grad
                eta = min(eta * 1.5, step_size)
                moved = True
                break
            eta /= 2.0
        if not moved:
            break
    order = np.argsort(-omega, kind="stable")
    mask = np.zeros(d, dtype=bool)
    mask[order[:m_sel]] = True
    return FeatureMask(
        omega=omega,
        mask=mask,
        m_sel=m_sel,
        objective=objective,
        initial_objective=initial_obj,
    )
