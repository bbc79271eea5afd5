"""Command-line entry point: ``seqpinn {generate,init,train,eval,uncertainty}``.

Every command writes its outputs under ``--out`` with fixed names
(``report.json``, ``frames.csv``, ``stdmap.csv``, ``checkpoints/``) and a
``config.json`` snapshot holding everything needed to replay the run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (generate_kovasznay, generate_poiseuille, load_case, load_checkpoint,
                   save_case, save_checkpoint)
from .errors import FormatError, StructureError, ValidationError
from .metrics import write_report
from .network import Architecture
from .optimize import TrainConfig
from .train import (UncertaintyGateError, calibrate_threshold, init_stage, run_mode,
                    score_frame, InitResult)
from .uncertainty import load_posterior, uncertainty_index, uncertainty_map, write_std_map

log = logging.getLogger("seqpinn")

_OPTIONAL_TYPES = {"sp_adapt_epochs": int, "posterior_lr": float, "uncertainty_threshold": float}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_train_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("training configuration")
    for f in dataclasses.fields(TrainConfig):
        default = f.default
        if f.name == "uncertainty_threshold":
            g.add_argument(_flag(f.name), default="auto",
                           help="gate for SP-PINN: a number, 'none', or 'auto' (3x a calibration case)")
        elif f.name in _OPTIONAL_TYPES:
            g.add_argument(_flag(f.name), type=_OPTIONAL_TYPES[f.name], default=None)
        elif isinstance(default, bool):
            g.add_argument(_flag(f.name), action=argparse.BooleanOptionalAction, default=default)
        else:
            g.add_argument(_flag(f.name), type=type(default), default=default)
    a = p.add_argument_group("architecture")
    a.add_argument("--hidden-layers", type=int, default=8)
    a.add_argument("--hidden-width", type=int, default=150)
    a.add_argument("--attention", action=argparse.BooleanOptionalAction, default=True)


def _train_config(args) -> TrainConfig:
    kw = {f.name: getattr(args, f.name) for f in dataclasses.fields(TrainConfig)}
    thr = str(kw["uncertainty_threshold"]).lower()
    kw["uncertainty_threshold"] = None if thr in ("auto", "none") else float(thr)
    return TrainConfig(**kw)


def _arch(args) -> Architecture:
    return Architecture(args.hidden_layers, args.hidden_width, args.attention)


def _snapshot(out: Path, args, **extra):
    snap = {"version": __version__, "command": args.command, "argv": sys.argv[1:]}
    snap.update(extra)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(snap, indent=2, sort_keys=True) + "\n")


def cmd_generate(args) -> int:
    if args.kind == "kovasznay":
        case = generate_kovasznay(Re=args.re if args.re is not None else 40.0,
                                  n_collocation=args.n_collocation, seed=args.seed,
                                  n_samples=args.samples)
    else:
        case = generate_poiseuille(Re=args.re if args.re is not None else 100.0,
                                   n_collocation=args.n_collocation, seed=args.seed,
                                   n_frames=args.frames, n_samples=args.samples,
                                   strategy=args.strategy)
    save_case(case, args.out)
    print(f"wrote {args.kind} case with {case.n_frames} frame(s) to {args.out}")
    return 0


def cmd_init(args) -> int:
    out = Path(args.out)
    case = load_case(args.case)
    cfg, arch = _train_config(args), _arch(args)
    res = init_stage(case, args.frame, cfg, arch)
    save_checkpoint(res.params, out / "checkpoints" / "init.sqpn")
    score = score_frame(case, res.frame, res.params, res.wall_time)
    (out / "init.json").write_text(json.dumps(
        {"frame": res.frame, "epochs": res.epochs, "wall_time": res.wall_time,
         "loss_history": res.history, "score": score.to_dict()}, indent=2) + "\n")
    _snapshot(out, args, case=str(args.case), train_config=cfg.to_dict(), arch=arch.to_dict(),
              frame=res.frame)
    print(f"init frame {res.frame}: rmse {score.rmse:.4g} cm/s, "
          f"relative error {score.relative_error:.4g}, {res.wall_time:.1f} s")
    return 0


def cmd_train(args) -> int:
    out = Path(args.out)
    case = load_case(args.case)
    cfg, arch = _train_config(args), _arch(args)
    if args.mode == "sp" and str(args.uncertainty_threshold).lower() == "auto":
        cfg = dataclasses.replace(cfg, uncertainty_threshold=calibrate_threshold(cfg, arch))
    init = None
    if args.init_checkpoint:
        params = load_checkpoint(args.init_checkpoint)
        if params.arch != arch:
            raise StructureError("init checkpoint architecture differs from the requested one")
        frame = args.frame
        if frame is None:
            from .train import select_init_frame
            frame = select_init_frame(case)
        init = InitResult(params, frame, [], 0.0, cfg.init_epochs)
    elif args.mode != "baseline":
        init = init_stage(case, args.frame, cfg, arch)
    _snapshot(out, args, case=str(args.case), mode=args.mode, workers=args.workers,
              train_config=cfg.to_dict(), arch=arch.to_dict())
    try:
        rec = run_mode(case, args.mode, cfg, arch, args.workers, out, init=init)
    except UncertaintyGateError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3
    errors, scores = [], []
    for r in rec.frames:
        try:
            scores.append(score_frame(case, r.frame, rec.params[r.frame], r.wall_time))
        except Exception as exc:  # keep going; the report enumerates failures
            errors.append({"frame": r.frame, "error": str(exc)})
    write_report([rec], [scores], out, errors)
    if scores:
        print(f"{args.mode}: {len(rec.frames)} frames, mean rmse "
              f"{np.mean([s.rmse for s in scores]):.4g} cm/s, {rec.total_wall_time:.1f} s")
    return 0 if not errors and len(rec.frames) == case.n_frames else 1


def cmd_eval(args) -> int:
    out = Path(args.out)
    case = load_case(args.case)
    ckdir = Path(args.checkpoints)
    scores, errors = [], []
    for t in range(case.n_frames):
        path = ckdir / f"frame_{t:04d}.sqpn"
        try:
            params = load_checkpoint(path)
            scores.append(score_frame(case, t, params))
        except (OSError, FormatError, StructureError, ValueError) as exc:
            errors.append({"frame": t, "error": f"{type(exc).__name__}: {exc}"})
    write_report([], [scores], out, errors)
    _snapshot(out, args, case=str(args.case), checkpoints=str(ckdir))
    for e in errors:
        print(f"frame {e['frame']}: {e['error']}", file=sys.stderr)
    if scores:
        print(f"evaluated {len(scores)}/{case.n_frames} frames, mean rmse "
              f"{np.mean([s.rmse for s in scores]):.4g} cm/s")
    return 1 if errors else 0


def cmd_uncertainty(args) -> int:
    out = Path(args.out)
    case = load_case(args.case)
    stats = load_posterior(args.posterior)
    std = uncertainty_map(stats, case.collocation, args.samples, seed=args.seed,
                          component=args.component)
    idx = uncertainty_index(std)
    write_std_map(case.collocation, std, out / "stdmap.csv")
    (out / "uncertainty.json").write_text(json.dumps(
        {"uncertainty_index": idx, "samples": args.samples, "seed": args.seed,
         "component": args.component, "k": stats.k}, indent=2) + "\n")
    _snapshot(out, args, case=str(args.case), posterior=str(args.posterior))
    print(f"uncertainty index {idx:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqpinn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an analytic flow case to disk")
    g.add_argument("kind", choices=["poiseuille", "kovasznay"])
    g.add_argument("--out", required=True)
    g.add_argument("--re", type=float, default=None)
    g.add_argument("--frames", type=int, default=32)
    g.add_argument("--n-collocation", type=int, default=2000)
    g.add_argument("--samples", type=int, default=50)
    g.add_argument("--strategy", choices=["uniform", "axial-only"], default="uniform")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("init", help="steady-state initialization on one frame")
    i.add_argument("--case", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--frame", type=int, default=None, help="default: lowest-flow frame")
    _add_train_flags(i)
    i.set_defaults(func=cmd_init)

    t = sub.add_parser("train", help="adapt across all frames")
    t.add_argument("--case", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--mode", choices=["seq", "sp", "baseline"], default="seq")
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--frame", type=int, default=None, help="init frame; default: lowest-flow frame")
    t.add_argument("--init-checkpoint", default=None, help="skip the init stage")
    _add_train_flags(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score per-frame checkpoints against ground truth")
    e.add_argument("--case", required=True)
    e.add_argument("--checkpoints", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    u = sub.add_parser("uncertainty", help="std map and uncertainty index of a posterior")
    u.add_argument("--case", required=True)
    u.add_argument("--posterior", required=True)
    u.add_argument("--out", required=True)
    u.add_argument("--samples", type=int, default=30)
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--component", choices=["speed", "u", "v"], default="speed")
    u.set_defaults(func=cmd_uncertainty)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("--workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValidationError, FormatError, StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
