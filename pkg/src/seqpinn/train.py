"""Training schedulers: steady-state initialization, sequential adaptation
(SeqPINN), posterior-averaged parallel adaptation (SP-PINN) and the
train-every-frame-from-scratch baseline."""

from __future__ import annotations

import logging
import multiprocessing as mp
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import evaluate_with_input_derivatives, loss_gradient
from .data import FlowCase, save_checkpoint
from .errors import DegenerateInputError, StructureError
from .metrics import FrameScore, velocity_scores
from .network import Architecture, NetworkParams, forward, init_network
from .optimize import (AdamState, TrainConfig, adam_step, early_stop, lr_schedule,
                       minibatches, sgd_step)
from .physics import LossBreakdown, LossSpec, ResidualBatch, total_loss
from .uncertainty import (PosteriorStats, swag_fit, uncertainty_index,
                          uncertainty_map)

log = logging.getLogger(__name__)


class UncertaintyGateError(RuntimeError):
    """The posterior is too uncertain to seed parallel adaptation."""


@dataclass
class FrameRecord:
    frame: int
    epochs: int
    loss: LossBreakdown
    wall_time: float
    parent: int | None = None
    checkpoint: str | None = None

    def to_dict(self) -> dict:
        return {"frame": self.frame, "epochs": self.epochs, "loss": self.loss.to_dict(),
                "wall_time": self.wall_time, "parent": self.parent,
                "checkpoint": self.checkpoint}


@dataclass
class RunRecord:
    mode: str
    seed: int
    config: dict
    arch: dict
    frames: list
    total_wall_time: float
    extra: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def total_epochs(self) -> int:
        return sum(f.epochs for f in self.frames)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "seed": self.seed, "config": self.config, "arch": self.arch,
                "frames": [f.to_dict() for f in self.frames],
                "total_wall_time": self.total_wall_time, "total_epochs": self.total_epochs,
                "extra": self.extra}


@dataclass
class InitResult:
    params: NetworkParams
    frame: int
    history: list
    wall_time: float
    epochs: int
    uncertainty_log: list = field(default_factory=list)


def loss_spec(case: FlowCase, cfg: TrainConfig) -> LossSpec:
    return LossSpec(Re=case.Re, weight_F=cfg.weight_F, weight_B=cfg.weight_B,
                    weight_data=cfg.weight_data)


def frame_seed(seed: int, frame: int) -> list:
    """Entropy for a frame's shuffling stream, independent of schedule."""
    return [int(seed), int(frame)]


def frame_loss(params: NetworkParams, batch: ResidualBatch, spec: LossSpec) -> LossBreakdown:
    """Full-batch loss of the current parameters (no gradient)."""
    ev = evaluate_with_input_derivatives(params, batch.all_points())
    return total_loss(ev, batch, spec)


def fit(params: NetworkParams, batch: ResidualBatch, spec: LossSpec, epochs: int, *,
        cfg: TrainConfig, optimizer: str, seed, lr=None, state: AdamState | None = None,
        monitor=None, early_stopping: bool = False):
    """Mini-batch training over the collocation set; boundary and data samples
    join every step. ``lr`` is a constant or ``None`` for the init schedule.
    Returns ``(params, adam_state, epoch_loss_history)``."""
    arch = params.arch
    flat = params.flat.copy()
    if optimizer == "adam" and state is None:
        state = AdamState.zeros(flat.size)
    history = []
    n = len(batch.collocation)
    for e in range(epochs):
        step_lr = lr_schedule(e, cfg) if lr is None else lr
        totals = []
        for idx in minibatches(n, cfg.batch_size, seed, e):
            sub = ResidualBatch(batch.collocation[idx], batch.boundary, batch.data) if n else batch
            lb, g = loss_gradient(NetworkParams(arch, flat), sub, spec)
            if optimizer == "adam":
                flat, state = adam_step(state, flat, g, step_lr)
            else:
                flat = sgd_step(flat, g, step_lr)
            totals.append(lb.total)
        history.append(float(np.mean(totals)))
        if monitor is not None and (e + 1) % cfg.uncertainty_check_interval == 0:
            monitor(e + 1, NetworkParams(arch, flat))
        if early_stopping and early_stop(history, cfg.patience, cfg.min_delta):
            break
    return NetworkParams(arch, flat), state, history


def select_init_frame(case: FlowCase) -> int:
    """Frame with the lowest mean supervised speed (inlet values and data
    samples); ties go to the earliest frame."""
    speeds = []
    for fr in case.frames:
        parts = [np.hypot(fr.inlet[:, 0], fr.inlet[:, 1])] if len(fr.inlet) else []
        if len(fr.data):
            uv = np.where(fr.data.mask[:, :2], fr.data.values[:, :2], 0.0)
            parts.append(np.hypot(uv[:, 0], uv[:, 1]))
        allv = np.concatenate(parts) if parts else np.zeros(1)
        speeds.append(allv.mean())
    return int(np.argmin(speeds))


def adaptation_order(n_frames: int, start: int) -> list[int]:
    """Frames after ``start`` in time order, wrapping around the cycle."""
    return [(start + i) % n_frames for i in range(1, n_frames)]


def init_stage(case: FlowCase, frame_index: int | None = None, cfg: TrainConfig = TrainConfig(),
               arch: Architecture = Architecture(), monitor=None) -> InitResult:
    """Train a fresh network on one frame for ``cfg.init_epochs`` Adam epochs
    under the two-phase learning-rate schedule."""
    if case.n_frames == 0:
        raise DegenerateInputError("case has no frames")
    t = select_init_frame(case) if frame_index is None else int(frame_index)
    if not 0 <= t < case.n_frames:
        raise StructureError(f"frame index {t} out of range")
    spec = loss_spec(case, cfg)
    params = init_network(arch, cfg.seed)
    t0 = time.perf_counter()
    ulog = []
    mon = None
    if monitor is not None:
        def mon(epoch, p):
            ulog.append({"epoch": epoch, "uncertainty_index": monitor(p)})
    params, _, hist = fit(params, case.residual_batch(t), spec, cfg.init_epochs, cfg=cfg,
                          optimizer="adam", seed=frame_seed(cfg.seed, t), monitor=mon)
    return InitResult(params, t, hist, time.perf_counter() - t0, cfg.init_epochs, ulog)


def _as_init(case, theta0, cfg) -> InitResult:
    if isinstance(theta0, InitResult):
        return theta0
    return InitResult(theta0, select_init_frame(case), [], 0.0, cfg.init_epochs)


def _save(params, out_dir, t):
    if out_dir is None:
        return None
    p = save_checkpoint(params, Path(out_dir) / "checkpoints" / f"frame_{t:04d}.sqpn")
    return str(p.relative_to(Path(out_dir)))


def _record(mode, cfg, arch, recs, params, wall, extra):
    recs = sorted(recs, key=lambda r: r.frame)
    return RunRecord(mode, cfg.seed, cfg.to_dict(), arch.to_dict(), recs, wall, extra,
                     {r.frame: params[r.frame] for r in recs})


def seqpinn_run(case: FlowCase, theta0, cfg: TrainConfig = TrainConfig(), out_dir=None) -> RunRecord:
    """Online adaptation: each frame starts from the previous frame's model and
    is visited exactly once, in time order from the init frame."""
    init = _as_init(case, theta0, cfg)
    spec = loss_spec(case, cfg)
    arch = init.params.arch
    t_start = time.perf_counter()
    start = init.frame
    params = {start: init.params}
    recs = [FrameRecord(start, init.epochs, frame_loss(init.params, case.residual_batch(start), spec),
                        init.wall_time, None, _save(init.params, out_dir, start))]
    current, prev = init.params, start
    state = None
    adapt_time = 0.0
    for t in adaptation_order(case.n_frames, start):
        batch = case.residual_batch(t)
        t0 = time.perf_counter()
        current, state, hist = fit(current, batch, spec, cfg.adapt_epochs, cfg=cfg,
                                   optimizer=cfg.adapt_optimizer, lr=cfg.adapt_lr, state=state,
                                   seed=frame_seed(cfg.seed, t), early_stopping=cfg.early_stopping)
        wall = time.perf_counter() - t0
        adapt_time += wall
        # predictions for frame t are final before frame t+1 is touched
        params[t] = current
        recs.append(FrameRecord(t, len(hist), frame_loss(current, batch, spec), wall, prev,
                                _save(current, out_dir, t)))
        prev = t
    extra = {"init_frame": start, "init_wall_time": init.wall_time,
             "adapt_wall_time": adapt_time, "order": [start] + adaptation_order(case.n_frames, start)}
    total = init.wall_time + (time.perf_counter() - t_start)
    return _record("seq", cfg, arch, recs, params, total, extra)


def sppinn_posterior(case: FlowCase, theta0, cfg: TrainConfig = TrainConfig(),
                     return_samples: bool = False):
    """Constant-SGD chain over the ``k`` frames after the init frame, one frame
    at a time; each frame's end point is one posterior sample."""
    init = _as_init(case, theta0, cfg)
    k = cfg.posterior_k
    if case.n_frames - 1 < k:
        raise DegenerateInputError(f"need {k} frames after the init frame, case has "
                                   f"{case.n_frames - 1}")
    spec = loss_spec(case, cfg)
    lr = cfg.adapt_lr if cfg.posterior_lr is None else cfg.posterior_lr
    current = init.params
    samples = []
    for t in adaptation_order(case.n_frames, init.frame)[:k]:
        current, _, _ = fit(current, case.residual_batch(t), spec, cfg.adapt_epochs, cfg=cfg,
                            optimizer="sgd", lr=lr, seed=frame_seed(cfg.seed, t))
        samples.append(current)
    stats = swag_fit(samples)
    return (stats, samples) if return_samples else stats


# SP-PINN workers receive the shared read-only state once, at start-up.
_SHARED: dict = {}


def _limit_blas():
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(1)
    except ImportError:  # pragma: no cover
        return None


def _worker_init(shared):
    _SHARED.clear()
    _SHARED.update(shared)
    _SHARED["blas_limit"] = _limit_blas()


def _adapt_one(t: int):
    s = _SHARED
    batch = s["batches"][t]
    t0 = time.perf_counter()
    cfg = s["cfg"]
    # a fresh optimizer state per frame keeps frames independent
    p, _, hist = fit(s["theta"], batch, s["spec"], s["epochs"], cfg=cfg,
                     optimizer=cfg.adapt_optimizer, lr=cfg.adapt_lr, seed=frame_seed(cfg.seed, t))
    wall = time.perf_counter() - t0
    return t, p.flat, len(hist), wall, frame_loss(p, batch, s["spec"])


def posterior_index(case: FlowCase, stats: PosteriorStats, cfg: TrainConfig) -> float:
    umap = uncertainty_map(stats, case.collocation, cfg.uncertainty_samples, seed=cfg.seed)
    return uncertainty_index(umap)


def sppinn_run(case: FlowCase, stats: PosteriorStats, cfg: TrainConfig = TrainConfig(),
               workers: int = 1, out_dir=None) -> RunRecord:
    """Every frame adapts independently from the posterior mean. Results do not
    depend on ``workers`` or on the order frames complete."""
    if not isinstance(stats, PosteriorStats):
        raise StructureError("sppinn_run needs fitted PosteriorStats")
    spec = loss_spec(case, cfg)
    index = posterior_index(case, stats, cfg)
    threshold = cfg.uncertainty_threshold
    if threshold is not None and index > threshold:
        msg = f"uncertainty index {index:.4g} exceeds threshold {threshold:.4g}"
        if cfg.abort_on_uncertainty:
            raise UncertaintyGateError(msg)
        warnings.warn(msg + "; proceeding", RuntimeWarning)
    epochs = cfg.adapt_epochs if cfg.sp_adapt_epochs is None else cfg.sp_adapt_epochs
    shared = {"theta": stats.mean_params, "spec": spec, "cfg": cfg, "epochs": epochs,
              "batches": [case.residual_batch(t) for t in range(case.n_frames)]}
    t0 = time.perf_counter()
    frames = list(range(case.n_frames))
    if workers <= 1:
        prev = dict(_SHARED)
        _SHARED.clear()
        _SHARED.update(shared)
        limit = _limit_blas()
        try:
            results = [_adapt_one(t) for t in frames]
        finally:
            if limit is not None:
                limit.restore_original_limits()
            _SHARED.clear()
            _SHARED.update(prev)
    else:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(workers, mp_context=ctx, initializer=_worker_init,
                                 initargs=(shared,)) as pool:
            results = list(pool.map(_adapt_one, frames))
    adapt_wall = time.perf_counter() - t0
    params, recs = {}, []
    for t, flat, ep, wall, lb in results:
        params[t] = NetworkParams(stats.arch, flat)
        recs.append(FrameRecord(t, ep, lb, wall, None, _save(params[t], out_dir, t)))
    extra = {"uncertainty_index": index, "uncertainty_threshold": threshold,
             "adapt_wall_time": adapt_wall, "posterior_k": stats.k}
    return _record("sp", cfg, stats.arch, recs, params, adapt_wall, extra)


def scratch_baseline_run(case: FlowCase, cfg: TrainConfig = TrainConfig(),
                         arch: Architecture = Architecture(), out_dir=None) -> RunRecord:
    """Every frame trained from a fresh network with the full init budget."""
    t_all = time.perf_counter()
    params, recs = {}, []
    spec = loss_spec(case, cfg)
    for t in range(case.n_frames):
        res = init_stage(case, t, cfg, arch)
        params[t] = res.params
        recs.append(FrameRecord(t, res.epochs, frame_loss(res.params, case.residual_batch(t), spec),
                                res.wall_time, None, _save(res.params, out_dir, t)))
    wall = time.perf_counter() - t_all
    return _record("baseline", cfg, arch, recs, params, wall,
                   {"train_wall_time": sum(r.wall_time for r in recs)})


def run_mode(case: FlowCase, mode: str, cfg: TrainConfig = TrainConfig(),
             arch: Architecture = Architecture(), workers: int = 1, out_dir=None,
             init: InitResult | None = None) -> RunRecord:
    """Full pipeline for one mode: ``seq``, ``sp`` or ``baseline``."""
    if mode == "baseline":
        return scratch_baseline_run(case, cfg, arch, out_dir)
    if mode not in ("seq", "sp"):
        raise StructureError(f"unknown mode {mode!r}")
    if init is None:
        init = init_stage(case, None, cfg, arch)
    if mode == "seq":
        return seqpinn_run(case, init, cfg, out_dir)
    t0 = time.perf_counter()
    stats = sppinn_posterior(case, init, cfg)
    post_wall = time.perf_counter() - t0
    rec = sppinn_run(case, stats, cfg, workers, out_dir)
    rec.extra.update(init_frame=init.frame, init_wall_time=init.wall_time,
                     posterior_wall_time=post_wall)
    rec.total_wall_time = init.wall_time + post_wall + rec.extra["adapt_wall_time"]
    if out_dir is not None:
        from .uncertainty import save_posterior
        save_posterior(stats, Path(out_dir) / "posterior.npz")
    return rec


def velocity_unit_scale(case: FlowCase) -> float:
    """Factor from case velocity units to cm/s."""
    return case.constants.U * 100.0 if case.nondimensional else 100.0


def score_frame(case: FlowCase, t: int, model, wall_time: float = 0.0) -> FrameScore:
    """Score one frame; ``model`` is NetworkParams or any callable mapping
    points to (n, 3) predictions."""
    truth = case.frames[t].truth
    if truth is None:
        raise DegenerateInputError(f"frame {t} has no ground truth")
    pred = forward(model, truth.points) if isinstance(model, NetworkParams) else model(truth.points)
    s = velocity_scores(pred[:, :2], truth.values[:, :2], velocity_unit_scale(case))
    return FrameScore(t, s["rmse"], s["relative_error"], wall_time, s["rmse_u"], s["rmse_v"])


def evaluate_record(case: FlowCase, record: RunRecord) -> list[FrameScore]:
    return [score_frame(case, r.frame, record.params[r.frame], r.wall_time) for r in record.frames]


def calibrate_threshold(cfg: TrainConfig, arch: Architecture, factor: float = 3.0,
                        n_collocation: int = 500) -> float:
    """``factor`` times the uncertainty index of a properly initialized model
    on a small synthetic pulsatile channel case."""
    from .data import generate_poiseuille
    case = generate_poiseuille(n_frames=max(cfg.posterior_k + 1, 16), n_collocation=n_collocation,
                               seed=cfg.seed)
    init = init_stage(case, None, cfg, arch)
    return factor * posterior_index(case, sppinn_posterior(case, init, cfg), cfg)
