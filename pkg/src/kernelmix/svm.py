"""Norm-ball-constrained linear SVM on random features.

Training minimizes

    (1/n) sum_i [1 - y_i (beta^T Phi_i / sqrt(D) + b0)]_+  +  (lam/2) ||beta||^2

by projected (stochastic) subgradient descent, projecting beta back onto
the ball ||beta||_2 <= R / sqrt(mD) after every step. The offset b0 is
trained unregularized and unconstrained (can be disabled). The returned
model carries the averaged iterate, which is feasible by convexity of the
ball.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .errors import ConfigError, DataError, ModelIntegrityError
from .rff import FeatureBank, build_feature_matrix
from .rng import stream

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    R: float = 10.0
    lam: float = 1.0
    epochs: int = 100
    batch_size: int | None = None  # None = full batch (deterministic path)
    step_size: float = 0.5
    schedule: str = "inv_sqrt"  # or "constant"
    seed: int = 0
    fit_offset: bool = True
    track_feasibility: bool = False

    def __post_init__(self):
        if self.R <= 0:
            raise ConfigError("R must be positive")
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.schedule not in ("inv_sqrt", "constant"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.step_size <= 0:
            raise ConfigError("step size must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch size must be positive")


@dataclass(frozen=True)
class SvmModel:
    beta: np.ndarray
    offset: float
    R: float
    lam: float
    draws: int  # D, draws per base kernel
    bank: FeatureBank | None = None
    meta: dict = field(default_factory=dict)

    @property
    def radius(self) -> float:
        return self.R / math.sqrt(self.beta.shape[0])


def hinge_objective(
    Phi: np.ndarray,
    y: np.ndarray,
    beta: np.ndarray,
    offset: float,
    lam: float,
    draws: int,
) -> float:
    margins = 1.0 - y * (Phi @ beta / math.sqrt(draws) + offset)
    return float(np.maximum(margins, 0.0).mean() + 0.5 * lam * beta @ beta)


def hinge_subgradient(
    Phi: np.ndarray,
    y: np.ndarray,
    beta: np.ndarray,
    offset: float,
    lam: float,
    draws: int,
) -> tuple[np.ndarray, float]:
    """Subgradient of the full objective at (beta, offset).

    At points where every margin is away from the hinge kink this is the
    gradient proper (checked against finite differences in the tests).
    """
    n = Phi.shape[0]
    margins = 1.0 - y * (Phi @ beta / math.sqrt(draws) + offset)
    active = margins > 0.0
    g_beta = lam * beta
    g_offset = 0.0
    if active.any():
        ya = y[active]
        g_beta = g_beta - (Phi[active].T @ ya) / (n * math.sqrt(draws))
        g_offset = -float(ya.sum()) / n
    return g_beta, g_offset


def _project(beta: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(beta))
    if norm > radius:
        return beta * (radius / norm)
    return beta


def train(
    Phi: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    draws: int | None = None,
    bank: FeatureBank | None = None,
) -> SvmModel:
    """Fit the constrained SVM on a prebuilt feature matrix.

    ``draws`` is D, the number of random features per base kernel; it
    defaults to ``bank.draws`` when a bank is given, else to the full
    feature count (single-kernel convention). The bank, when supplied, is
    kept on the model so it can score raw inputs later.
    """
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] != y.shape[0]:
        raise ConfigError(f"feature matrix {Phi.shape} does not match {y.shape[0]} labels")
    if not np.isfinite(Phi).all():
        raise DataError("feature matrix contains non-finite entries")
    if len(set(np.sign(y).tolist())) < 2:
        raise DataError("training needs both classes present")
    if draws is None:
        draws = bank.draws if bank is not None else Phi.shape[1]

    n, total = Phi.shape
    radius = cfg.R / math.sqrt(total)
    beta = np.zeros(total)
    offset = 0.0
    beta_avg = np.zeros(total)
    offset_avg = 0.0
    steps = 0
    feasibility: list[float] = []
    objective_history: list[float] = []
    rng = stream(cfg.seed, 3)

    for _epoch in range(cfg.epochs):
        if cfg.batch_size is None:
            batches = [np.arange(n)]
        else:
            order = rng.permutation(n)
            batches = [
                order[i : i + cfg.batch_size] for i in range(0, n, cfg.batch_size)
            ]
        for batch in batches:
            g_beta, g_offset = hinge_subgradient(
                Phi[batch], y[batch], beta, offset, cfg.lam, draws
            )
            steps += 1
            eta = cfg.step_size
            if cfg.schedule == "inv_sqrt":
                eta /= math.sqrt(steps)
            beta = _project(beta - eta * g_beta, radius)
            if cfg.fit_offset:
                offset -= eta * g_offset
            if cfg.track_feasibility:
                feasibility.append(float(np.linalg.norm(beta)))
            beta_avg += (beta - beta_avg) / steps
            offset_avg += (offset - offset_avg) / steps
        objective_history.append(
            hinge_objective(Phi, y, beta_avg, offset_avg, cfg.lam, draws)
        )

    meta = {
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "steps": steps,
        "final_objective": objective_history[-1],
        "objective_history": objective_history,
    }
    if cfg.track_feasibility:
        meta["post_step_norms"] = feasibility
    return SvmModel(
        beta=beta_avg,
        offset=offset_avg if cfg.fit_offset else 0.0,
        R=cfg.R,
        lam=cfg.lam,
        draws=draws,
        bank=bank,
        meta=meta,
    )


def _features(model: SvmModel, X: np.ndarray) -> np.ndarray:
    if model.bank is None:
        raise ConfigError("model has no feature bank; score feature rows directly")
    return build_feature_matrix(X, model.bank)


def decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """f(x) = beta^T phi^w(x) / sqrt(D) + b0 for every row of X."""
    Phi = _features(model, np.atleast_2d(X))
    return Phi @ model.beta / math.sqrt(model.draws) + model.offset


def decision_value(model: SvmModel, x: np.ndarray) -> float:
    return float(decision_values(model, np.atleast_2d(x))[0])


def predict(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Labels in {-1, +1}; a decision value of exactly 0 maps to +1."""
    dv = decision_values(model, X)
    return np.where(dv >= 0.0, 1, -1)


def soft_output(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Logistic transform of the decision value, clamped inside (0, 1)."""
    dv = decision_values(model, X)
    with np.errstate(over="ignore"):
        p = 1.0 / (1.0 + np.exp(-dv))
    return np.clip(p, 1e-15, 1.0 - 1e-15)


def evaluate(model: SvmModel, ds: LabeledDataset) -> dict:
    dv = decision_values(model, ds.features)
    pred = np.where(dv >= 0.0, 1, -1)
    correct = pred == ds.labels
    hinge = float(np.maximum(1.0 - ds.labels * dv, 0.0).mean())
    return {
        "accuracy": float(correct.mean()),
        "hinge_loss": hinge,
        "true_positive": int(((pred == 1) & (ds.labels == 1)).sum()),
        "true_negative": int(((pred == -1) & (ds.labels == -1)).sum()),
        "false_positive": int(((pred == 1) & (ds.labels == -1)).sum()),
        "false_negative": int(((pred == -1) & (ds.labels == 1)).sum()),
    }


# -- persistence -------------------------------------------------------------


def _frequency_checksum(bank: FeatureBank) -> str:
    """SHA-256 of the first 8 regenerated frequency values (row order)."""
    flat = np.concatenate([xi.ravel() for xi in bank.frequencies])[:8]
    return hashlib.sha256(np.ascontiguousarray(flat, dtype="<f8").tobytes()).hexdigest()


def model_to_dict(model: SvmModel, standardization: dict | None = None) -> dict:
    if model.bank is None:
        raise ConfigError("only bank-backed models are serializable")
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "bank": model.bank.to_dict(),
        "R": model.R,
        "lambda": model.lam,
        "beta": model.beta.tolist(),
        "offset": model.offset,
        "standardization": standardization,
        "frequency_checksum": _frequency_checksum(model.bank),
    }


def model_from_dict(payload: dict) -> SvmModel:
    try:
        bank = FeatureBank.from_dict(payload["bank"])
        expected = payload["frequency_checksum"]
        beta = np.asarray(payload["beta"], dtype=float)
        model = SvmModel(
            beta=beta,
            offset=float(payload["offset"]),
            R=float(payload["R"]),
            lam=float(payload["lambda"]),
            draws=bank.draws,
            bank=bank,
            meta={"standardization": payload.get("standardization")},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelIntegrityError(f"malformed model document: {exc}") from None
    if beta.shape[0] != bank.total_features:
        raise ModelIntegrityError(
            f"beta length {beta.shape[0]} does not match bank size {bank.total_features}"
        )
    actual = _frequency_checksum(bank)
    if actual != expected:
        raise ModelIntegrityError(
            "frequency checksum mismatch: regenerated bank does not match the saved model"
        )
    return model


def save_model(model: SvmModel, path: str, standardization: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, standardization), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path: str) -> SvmModel:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelIntegrityError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(payload)
