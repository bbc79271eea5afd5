"""Adam / constant-SGD steppers, the two-phase learning-rate schedule and
early stopping."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import DegenerateInputError, StructureError


@dataclass(frozen=True)
class TrainConfig:
    init_epochs: int = 3000
    init_lr_phase1: float = 1e-3
    phase1_epochs: int = 2000
    init_lr_phase2: float = 5e-4
    adapt_lr: float = 5e-4
    adapt_epochs: int = 30
    adapt_optimizer: str = "sgd"
    sp_adapt_epochs: int | None = None
    posterior_lr: float | None = None
    batch_size: int = 1024
    posterior_k: int = 15
    uncertainty_check_interval: int = 500
    uncertainty_samples: int = 30
    uncertainty_threshold: float | None = None
    abort_on_uncertainty: bool = False
    early_stopping: bool = False
    patience: int = 10
    min_delta: float = 1e-6
    seed: int = 0
    weight_F: float = 1.0
    weight_B: float = 1.0
    weight_data: float = 1.0

    def __post_init__(self):
        for name in ("init_epochs", "phase1_epochs", "batch_size", "posterior_k",
                     "uncertainty_check_interval", "uncertainty_samples", "patience"):
            if getattr(self, name) < 1:
                raise StructureError(f"{name} must be positive")
        if self.adapt_epochs < 0 or (self.sp_adapt_epochs is not None and self.sp_adapt_epochs < 0):
            raise StructureError("adaptation epochs must be >= 0")
        if self.seed < 0:
            raise StructureError("seed must be >= 0")
        if self.posterior_lr is not None and not self.posterior_lr > 0:
            raise StructureError("posterior_lr must be positive")
        for name in ("weight_F", "weight_B", "weight_data"):
            if not getattr(self, name) >= 0:
                raise StructureError(f"{name} must be >= 0")
        if self.uncertainty_threshold is not None and not self.uncertainty_threshold >= 0:
            raise StructureError("uncertainty_threshold must be >= 0")
        for name in ("init_lr_phase1", "init_lr_phase2", "adapt_lr"):
            if not getattr(self, name) > 0:
                raise StructureError(f"{name} must be positive")
        if self.adapt_optimizer not in ("sgd", "adam"):
            raise StructureError(f"adapt_optimizer must be 'sgd' or 'adam', got {self.adapt_optimizer!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **kw)


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray, lr: float):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``;
    inputs are not modified."""
    if params.shape != grad.shape or state.m.shape != params.shape:
        raise StructureError(f"shape mismatch: params {params.shape}, grad {grad.shape}, "
                             f"state {state.m.shape}")
    b1, b2 = state.beta1, state.beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * grad
    v = b2 * state.v + (1.0 - b2) * grad * grad
    m_hat = m / (1.0 - b1 ** t)
    v_hat = v / (1.0 - b2 ** t)
    new = params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new, AdamState(m, v, t, b1, b2, state.eps)


def sgd_step(params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    if params.shape != grad.shape:
        raise StructureError(f"shape mismatch: params {params.shape}, grad {grad.shape}")
    return params - lr * grad


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Phase-1 rate for the first ``phase1_epochs`` epochs, phase-2 after
    that, including every adaptation epoch beyond the init stage."""
    return cfg.init_lr_phase1 if epoch < cfg.phase1_epochs else cfg.init_lr_phase2


def early_stop(loss_history, patience: int, min_delta: float) -> bool:
    """True iff none of the last ``patience`` losses improved on the best loss
    seen before them by more than ``min_delta``."""
    hist = list(loss_history)
    if not hist:
        raise DegenerateInputError("empty loss history")
    if len(hist) <= patience:
        return False
    best_before = min(hist[:-patience])
    return min(hist[-patience:]) > best_before - min_delta


def minibatches(n: int, batch_size: int, seed, epoch: int) -> list[np.ndarray]:
    """Shuffled index batches; a pure function of (seed, epoch). ``seed`` may
    be an int or a sequence of ints. A set no larger than ``batch_size`` is
    one full batch."""
    if batch_size < 1:
        raise StructureError("batch_size must be positive")
    if n <= batch_size:
        return [np.arange(n)]
    rng = np.random.default_rng([*np.atleast_1d(seed).tolist(), epoch])
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]
