"""Flow cases: in-memory types, analytic generators, sparse sampling and the
on-disk case / checkpoint formats.

Case directory layout::

    manifest.json
    collocation.csv          x,y
    boundary.csv             x,y,kind,nx,ny
    frames/frame_0000.csv    x,y,role,u,v,p,mask

Frame rows have ``role`` in {inlet, outlet, data, truth}. Inlet rows carry
u,v and outlet rows carry p for the boundary points of that kind, in
boundary.csv order. Data rows carry u,v plus ``mask`` naming the supervised
components (``uv``, ``u`` or ``v``). Truth rows carry u,v,p and are only read
by evaluation code. Unused cells are empty.

Checkpoint layout (little-endian)::

    b"SQPN" | u16 version | u16 n_dims | u32 dims[n_dims] | u8 attention
    | u64 n_params | f64 params[n_params] | u64 checksum

``dims`` is the layer-width list ``[2, H, ..., H, 3]``; the checksum is an
8-byte BLAKE2b digest of everything before it. Parameter order is the flat
layout documented in :mod:`seqpinn.network`.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, FormatError, StructureError, ValidationError
from .network import Architecture, NetworkParams
from .physics import (BOUNDARY_KINDS, FluidConstants, ResidualBatch, Samples,
                      boundary_samples)

CASE_FORMAT = "seqpinn-case"
CASE_VERSION = 1
CKPT_MAGIC = b"SQPN"
CKPT_VERSION = 1
MASKS = {"uv": (True, True), "u": (True, False), "v": (False, True)}


@dataclass
class GroundTruth:
    """Dense evaluation grid. Never part of a ResidualBatch."""

    points: np.ndarray
    values: np.ndarray  # (m, 3): u, v, p


@dataclass
class Frame:
    index: int
    inlet: np.ndarray   # (n_inlet, 2) u, v at the inlet boundary points
    outlet: np.ndarray  # (n_outlet,) p at the outlet boundary points
    data: Samples
    truth: GroundTruth | None = None


@dataclass
class FlowCase:
    constants: FluidConstants
    collocation: np.ndarray
    boundary_points: np.ndarray
    boundary_kinds: list
    boundary_normals: np.ndarray
    frames: list
    bbox: tuple = (0.0, 1.0, 0.0, 1.0)  # xmin, xmax, ymin, ymax
    dt_ms: float = 1.0
    nondimensional: bool = True
    provenance: dict = field(default_factory=dict)

    @property
    def Re(self) -> float:
        return self.constants.Re

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def kind_index(self, kind: str) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.boundary_kinds) if k == kind], dtype=int)

    def validate(self):
        """Raise ValidationError if any case invariant is violated."""
        if self.n_frames < 1:
            raise ValidationError("a case needs at least one frame")
        for k in self.boundary_kinds:
            if k not in BOUNDARY_KINDS:
                raise ValidationError(f"unknown boundary kind {k!r}")
        xmin, xmax, ymin, ymax = self.bbox
        tol = 1e-9 * max(1.0, abs(xmax - xmin), abs(ymax - ymin))

        def inside(pts, what):
            pts = np.asarray(pts).reshape(-1, 2)
            if len(pts) and (pts[:, 0].min() < xmin - tol or pts[:, 0].max() > xmax + tol
                             or pts[:, 1].min() < ymin - tol or pts[:, 1].max() > ymax + tol):
                raise ValidationError(f"{what} has points outside the bounding box")

        inside(self.collocation, "collocation")
        inside(self.boundary_points, "boundary")
        n_in, n_out = len(self.kind_index("inlet")), len(self.kind_index("outlet"))
        for i, fr in enumerate(self.frames):
            if fr.index != i:
                raise ValidationError(f"frame {i} carries index {fr.index}")
            if fr.inlet.shape != (n_in, 2) or fr.outlet.shape != (n_out,):
                raise ValidationError(f"frame {i}: inlet/outlet values do not match boundary kinds")
            inside(fr.data.points, f"frame {i} data")
            if fr.truth is not None:
                inside(fr.truth.points, f"frame {i} truth")
        return self

    def residual_batch(self, t: int) -> ResidualBatch:
        """Training view of frame ``t``: no ground truth reaches it."""
        fr = self.frames[t]
        vals = np.zeros((len(self.boundary_points), 3))
        vals[self.kind_index("inlet"), :2] = fr.inlet
        vals[self.kind_index("outlet"), 2] = fr.outlet
        bnd = boundary_samples(self.boundary_points, self.boundary_kinds, vals)
        return ResidualBatch(self.collocation, bnd, fr.data)

    def rescaled(self, length: float, velocity: float, pressure: float, nondimensional: bool):
        def pts(a):
            return np.asarray(a) * length

        def samples(s: Samples) -> Samples:
            v = s.values * np.array([velocity, velocity, pressure])
            return Samples(pts(s.points), v, s.mask)

        frames = []
        for fr in self.frames:
            truth = None
            if fr.truth is not None:
                truth = GroundTruth(pts(fr.truth.points),
                                    fr.truth.values * np.array([velocity, velocity, pressure]))
            frames.append(Frame(fr.index, fr.inlet * velocity, fr.outlet * pressure,
                                samples(fr.data), truth))
        b = self.bbox
        return replace(self, collocation=pts(self.collocation),
                       boundary_points=pts(self.boundary_points),
                       bbox=(b[0] * length, b[1] * length, b[2] * length, b[3] * length),
                       frames=frames, nondimensional=nondimensional)

    def subsample(self, stride: int) -> "FlowCase":
        """Every ``stride``-th frame, re-indexed from 0 (dt scaled by stride)."""
        if stride < 1:
            raise StructureError("stride must be >= 1")
        frames = [replace(fr, index=i) for i, fr in enumerate(self.frames[::stride])]
        prov = dict(self.provenance, stride=stride * self.provenance.get("stride", 1))
        return replace(self, frames=frames, dt_ms=self.dt_ms * stride, provenance=prov)


# --- sparse sampling ------------------------------------------------------


def sample_sparse(frame: Frame, n_samples: int, strategy: str = "uniform", seed: int = 0,
                  bbox=None) -> Samples:
    """Draw supervision samples from the frame's ground-truth grid.

    ``uniform`` keeps both velocity components; ``axial-only`` keeps only v
    (the beam-direction component a Doppler acquisition measures reliably).
    Points on the bounding-box edge are excluded when ``bbox`` is given.
    """
    if strategy not in ("uniform", "axial-only"):
        raise StructureError(f"unknown sampling strategy {strategy!r}")
    if n_samples == 0:
        return Samples.empty()
    if frame.truth is None:
        raise DegenerateInputError("frame has no ground-truth grid to sample from")
    pts = frame.truth.points
    cand = np.arange(len(pts))
    if bbox is not None:
        xmin, xmax, ymin, ymax = bbox
        inner = ((pts[:, 0] > xmin) & (pts[:, 0] < xmax) & (pts[:, 1] > ymin) & (pts[:, 1] < ymax))
        cand = cand[inner]
    if n_samples > len(cand):
        raise DegenerateInputError(f"asked for {n_samples} samples from {len(cand)} candidates")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(cand, size=n_samples, replace=False))
    mask = np.zeros((n_samples, 3), dtype=bool)
    mask[:, 1] = True
    if strategy == "uniform":
        mask[:, 0] = True
    vals = frame.truth.values[idx].copy()
    vals[:, 2] = 0.0
    vals[~mask] = 0.0
    return Samples(pts[idx], vals, mask)


# --- generators -----------------------------------------------------------


def cardiac_waveform(n_frames: int, c_min: float = 0.3, systolic: float = 1.2,
                     dicrotic: float = 0.25, diastolic: float = 0.12) -> np.ndarray:
    """Centerline speed over one cycle starting at end diastole: a systolic
    peak, a dicrotic notch followed by a secondary wave, and diastolic runoff
    back to the minimum at phase 0."""
    if n_frames < 1:
        raise StructureError("n_frames must be >= 1")
    phi = np.arange(n_frames) / n_frames
    bump = lambda mu, w: np.exp(-(((phi - mu) / w) ** 2))
    return (c_min + systolic * bump(0.25, 0.07) + dicrotic * bump(0.5, 0.05)
            + diastolic * np.sin(np.pi * phi) ** 2)


def poiseuille_fields(pts, c, Re, h):
    """Non-dimensional channel flow u = c(1-(y/h)^2), v = 0, p = -2cx/(Re h^2)."""
    pts = np.asarray(pts, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    u = c * (1.0 - (y / h) ** 2)
    return np.stack([u, np.zeros_like(u), -2.0 * c * x / (Re * h * h)], axis=1)


def _grid(bbox, shape):
    xs = np.linspace(bbox[0], bbox[1], shape[0])
    ys = np.linspace(bbox[2], bbox[3], shape[1])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def generate_poiseuille(h: float = 0.5, L: float = 2.0, waveform=None, Re: float = 100.0,
                        n_collocation: int = 2000, seed: int = 0, n_frames: int = 32,
                        n_wall: int = 30, n_inlet: int = 20, n_outlet: int = 20,
                        n_samples: int = 50, strategy: str = "uniform",
                        truth_shape=(41, 21), dt_ms: float = 25.0) -> FlowCase:
    """Quasi-steady pulsatile channel flow in non-dimensional units.

    The channel is ``[0, L] x [-h, h]``; frame t is exact Poiseuille flow with
    centerline speed ``waveform[t]`` (default: :func:`cardiac_waveform`).
    """
    if not (h > 0 and L > 0):
        raise DegenerateInputError(f"channel needs h > 0 and L > 0, got h={h}, L={L}")
    wave = cardiac_waveform(n_frames) if waveform is None else np.asarray(waveform, dtype=float)
    if wave.ndim != 1 or len(wave) < 1:
        raise DegenerateInputError("waveform must be a non-empty 1-D sequence")
    bbox = (0.0, float(L), -float(h), float(h))
    rng = np.random.default_rng(seed)
    colloc = np.stack([rng.uniform(0.0, L, n_collocation), rng.uniform(-h, h, n_collocation)], axis=1)
    xw = np.linspace(0.0, L, n_wall)
    yi = np.linspace(-h, h, n_inlet + 2)[1:-1]
    yo = np.linspace(-h, h, n_outlet + 2)[1:-1]
    bpts = np.concatenate([
        np.stack([xw, np.full(n_wall, -h)], 1),
        np.stack([xw, np.full(n_wall, h)], 1),
        np.stack([np.zeros(n_inlet), yi], 1),
        np.stack([np.full(n_outlet, L), yo], 1),
    ])
    kinds = ["wall"] * (2 * n_wall) + ["inlet"] * n_inlet + ["outlet"] * n_outlet
    normals = np.concatenate([
        np.tile([0.0, -1.0], (n_wall, 1)), np.tile([0.0, 1.0], (n_wall, 1)),
        np.tile([-1.0, 0.0], (n_inlet, 1)), np.tile([1.0, 0.0], (n_outlet, 1)),
    ])
    inlet_pts, outlet_pts = bpts[2 * n_wall:2 * n_wall + n_inlet], bpts[2 * n_wall + n_inlet:]
    grid = _grid(bbox, truth_shape)
    frames = []
    for t, c in enumerate(wave):
        truth = GroundTruth(grid, poiseuille_fields(grid, c, Re, h))
        fr = Frame(t, poiseuille_fields(inlet_pts, c, Re, h)[:, :2],
                   poiseuille_fields(outlet_pts, c, Re, h)[:, 2], Samples.empty(), truth)
        fr.data = sample_sparse(fr, n_samples, strategy, seed=seed, bbox=bbox)
        frames.append(fr)
    prov = {"generator": "poiseuille", "h": h, "L": L, "Re": Re, "seed": seed,
            "n_collocation": n_collocation, "strategy": strategy,
            "waveform": [float(c) for c in wave]}
    return FlowCase(FluidConstants.for_reynolds(Re), colloc, bpts, kinds, normals, frames,
                    bbox=bbox, dt_ms=dt_ms, nondimensional=True, provenance=prov).validate()


def kovasznay_lambda(Re: float) -> float:
    return Re / 2.0 - np.sqrt(Re * Re / 4.0 + 4.0 * np.pi ** 2)


def kovasznay_fields(pts, Re):
    lam = kovasznay_lambda(Re)
    pts = np.asarray(pts, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    e = np.exp(lam * x)
    u = 1.0 - e * np.cos(2 * np.pi * y)
    v = lam / (2 * np.pi) * e * np.sin(2 * np.pi * y)
    p = 0.5 * (1.0 - np.exp(2 * lam * x))
    return np.stack([u, v, p], axis=1)


def generate_kovasznay(Re: float = 40.0, n_collocation: int = 2000, seed: int = 0,
                       n_boundary: int = 100, n_samples: int = 50,
                       truth_shape=(61, 81)) -> FlowCase:
    """Single-frame Kovasznay flow on ``[-0.5, 1] x [-0.5, 1.5]``.

    All boundary points impose velocity (kind ``inlet``); pressure is left
    free up to a constant, which the velocity metrics do not see.
    """
    if not Re > 0:
        raise DegenerateInputError("Re must be > 0")
    bbox = (-0.5, 1.0, -0.5, 1.5)
    rng = np.random.default_rng(seed)
    colloc = np.stack([rng.uniform(bbox[0], bbox[1], n_collocation),
                       rng.uniform(bbox[2], bbox[3], n_collocation)], axis=1)
    # evenly spaced along the perimeter, counter-clockwise from (xmin, ymin)
    w, hgt = bbox[1] - bbox[0], bbox[3] - bbox[2]
    s = (np.arange(n_boundary) + 0.5) * (2 * (w + hgt)) / n_boundary
    bpts, normals = [], []
    for si in s:
        if si < w:
            bpts.append((bbox[0] + si, bbox[2])); normals.append((0.0, -1.0))
        elif si < w + hgt:
            bpts.append((bbox[1], bbox[2] + si - w)); normals.append((1.0, 0.0))
        elif si < 2 * w + hgt:
            bpts.append((bbox[1] - (si - w - hgt), bbox[3])); normals.append((0.0, 1.0))
        else:
            bpts.append((bbox[0], bbox[3] - (si - 2 * w - hgt))); normals.append((-1.0, 0.0))
    bpts = np.array(bpts)
    grid = _grid(bbox, truth_shape)
    fr = Frame(0, kovasznay_fields(bpts, Re)[:, :2], np.zeros(0), Samples.empty(),
               GroundTruth(grid, kovasznay_fields(grid, Re)))
    fr.data = sample_sparse(fr, n_samples, "uniform", seed=[seed, 0], bbox=bbox)
    prov = {"generator": "kovasznay", "Re": Re, "seed": seed, "n_collocation": n_collocation}
    return FlowCase(FluidConstants.for_reynolds(Re), colloc, bpts, ["inlet"] * n_boundary,
                    np.array(normals), [fr], bbox=bbox, dt_ms=0.0, nondimensional=True,
                    provenance=prov).validate()


# --- case files -----------------------------------------------------------


def _f(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path: Path, header):
    try:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            got = next(r)
            if got != list(header):
                raise ValidationError(f"{path.name}: expected header {header}, got {got}")
            return [row for row in r]
    except FileNotFoundError as exc:
        raise ValidationError(f"missing file {path}") from exc
    except StopIteration as exc:
        raise ValidationError(f"{path.name} is empty") from exc


def save_case(case: FlowCase, path) -> Path:
    case.validate()
    root = Path(path)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    for old in (root / "frames").glob("frame_*.csv"):
        old.unlink()
    manifest = {
        "format": CASE_FORMAT,
        "version": CASE_VERSION,
        "constants": case.constants.to_dict(),
        "Re": case.Re,
        "n_frames": case.n_frames,
        "dt_ms": case.dt_ms,
        "bbox": list(case.bbox),
        "nondimensional": case.nondimensional,
        "provenance": case.provenance,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _write_csv(root / "collocation.csv", ["x", "y"], [[_f(x), _f(y)] for x, y in case.collocation])
    _write_csv(root / "boundary.csv", ["x", "y", "kind", "nx", "ny"],
               [[_f(p[0]), _f(p[1]), k, _f(n[0]), _f(n[1])]
                for p, k, n in zip(case.boundary_points, case.boundary_kinds, case.boundary_normals)])
    inl, outl = case.kind_index("inlet"), case.kind_index("outlet")
    for fr in case.frames:
        rows = []
        for (x, y), (u, v) in zip(case.boundary_points[inl], fr.inlet):
            rows.append([_f(x), _f(y), "inlet", _f(u), _f(v), "", ""])
        for (x, y), p in zip(case.boundary_points[outl], fr.outlet):
            rows.append([_f(x), _f(y), "outlet", "", "", _f(p), ""])
        for (x, y), val, m in zip(fr.data.points, fr.data.values, fr.data.mask):
            tag = "".join(c for c, on in zip("uv", m[:2]) if on)
            rows.append([_f(x), _f(y), "data", _f(val[0]) if m[0] else "",
                         _f(val[1]) if m[1] else "", "", tag])
        if fr.truth is not None:
            for (x, y), (u, v, p) in zip(fr.truth.points, fr.truth.values):
                rows.append([_f(x), _f(y), "truth", _f(u), _f(v), _f(p), ""])
        _write_csv(root / "frames" / f"frame_{fr.index:04d}.csv",
                   ["x", "y", "role", "u", "v", "p", "mask"], rows)
    return root


def _num(s: str, what: str) -> float:
    try:
        return float(s)
    except ValueError as exc:
        raise ValidationError(f"bad number {s!r} in {what}") from exc


def load_case(path) -> FlowCase:
    """Read and validate a case directory."""
    root = Path(path)
    try:
        man = json.loads((root / "manifest.json").read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"no manifest.json in {root}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest.json is not valid JSON: {exc}") from exc
    if man.get("format") != CASE_FORMAT or man.get("version") != CASE_VERSION:
        raise ValidationError("unsupported case format or version")
    try:
        const = FluidConstants(**man["constants"])
    except (TypeError, KeyError, DegenerateInputError) as exc:
        raise ValidationError(f"bad fluid constants: {exc}") from exc
    if abs(const.Re - man["Re"]) > 1e-12 * abs(man["Re"]):
        raise ValidationError(f"manifest Re {man['Re']} disagrees with rho U D / mu = {const.Re}")
    colloc = np.array([[_num(a, "collocation"), _num(b, "collocation")]
                       for a, b in _read_csv(root / "collocation.csv", ["x", "y"])]).reshape(-1, 2)
    brows = _read_csv(root / "boundary.csv", ["x", "y", "kind", "nx", "ny"])
    for r in brows:
        if r[2] not in BOUNDARY_KINDS:
            raise ValidationError(f"unknown boundary kind {r[2]!r}")
    bpts = np.array([[_num(r[0], "boundary"), _num(r[1], "boundary")] for r in brows]).reshape(-1, 2)
    kinds = [r[2] for r in brows]
    normals = np.array([[_num(r[3], "boundary"), _num(r[4], "boundary")] for r in brows]).reshape(-1, 2)
    files = sorted((root / "frames").glob("frame_*.csv"))
    n = int(man["n_frames"])
    if len(files) != n:
        raise ValidationError(f"manifest declares {n} frames but {len(files)} frame files exist")
    inl = [i for i, k in enumerate(kinds) if k == "inlet"]
    outl = [i for i, k in enumerate(kinds) if k == "outlet"]
    frames = []
    for t in range(n):
        fpath = root / "frames" / f"frame_{t:04d}.csv"
        if not fpath.exists():
            raise ValidationError(f"missing {fpath.name}")
        rows = _read_csv(fpath, ["x", "y", "role", "u", "v", "p", "mask"])
        by_role = {"inlet": [], "outlet": [], "data": [], "truth": []}
        for r in rows:
            if r[2] not in by_role:
                raise ValidationError(f"{fpath.name}: unknown role {r[2]!r}")
            by_role[r[2]].append(r)
        if len(by_role["inlet"]) != len(inl) or len(by_role["outlet"]) != len(outl):
            raise ValidationError(f"{fpath.name}: inlet/outlet rows do not match boundary.csv")
        for rows_k, idx in ((by_role["inlet"], inl), (by_role["outlet"], outl)):
            for r, i in zip(rows_k, idx):
                if (_num(r[0], fpath.name), _num(r[1], fpath.name)) != tuple(bpts[i]):
                    raise ValidationError(f"{fpath.name}: boundary row at ({r[0]}, {r[1]}) "
                                          "does not match boundary.csv order")
        inlet = np.array([[_num(r[3], fpath.name), _num(r[4], fpath.name)]
                          for r in by_role["inlet"]]).reshape(-1, 2)
        outlet = np.array([_num(r[5], fpath.name) for r in by_role["outlet"]])
        dpts, dvals, dmask = [], [], []
        for r in by_role["data"]:
            if r[6] not in MASKS:
                raise ValidationError(f"{fpath.name}: bad mask {r[6]!r}")
            mu, mv = MASKS[r[6]]
            dpts.append([_num(r[0], fpath.name), _num(r[1], fpath.name)])
            dvals.append([_num(r[3], fpath.name) if mu else 0.0,
                          _num(r[4], fpath.name) if mv else 0.0, 0.0])
            dmask.append([mu, mv, False])
        data = Samples(np.array(dpts).reshape(-1, 2), np.array(dvals).reshape(-1, 3),
                       np.array(dmask, dtype=bool).reshape(-1, 3))
        truth = None
        if by_role["truth"]:
            tv = np.array([[_num(c, fpath.name) for c in (r[0], r[1], r[3], r[4], r[5])]
                           for r in by_role["truth"]])
            truth = GroundTruth(tv[:, :2].copy(), tv[:, 2:].copy())
        frames.append(Frame(t, inlet, outlet, data, truth))
    case = FlowCase(const, colloc, bpts, kinds, normals, frames, bbox=tuple(man["bbox"]),
                    dt_ms=float(man["dt_ms"]), nondimensional=bool(man["nondimensional"]),
                    provenance=man.get("provenance", {}))
    return case.validate()


# --- checkpoints ----------------------------------------------------------


def checkpoint_bytes(params: NetworkParams) -> bytes:
    dims = params.arch.layer_dims()
    head = CKPT_MAGIC + struct.pack("<HH", CKPT_VERSION, len(dims))
    head += struct.pack(f"<{len(dims)}I", *dims)
    head += struct.pack("<BQ", int(params.arch.attention), params.flat.size)
    body = head + params.flat.astype("<f8").tobytes()
    return body + hashlib.blake2b(body, digest_size=8).digest()


def save_checkpoint(params: NetworkParams, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(params))
    return path


def parse_checkpoint(buf: bytes) -> NetworkParams:
    if len(buf) < 8 or buf[:4] != CKPT_MAGIC:
        raise FormatError("not a checkpoint (bad magic)")
    version, n_dims = struct.unpack_from("<HH", buf, 4)
    if version != CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    off = 8
    need = off + 4 * n_dims + 9
    if len(buf) < need:
        raise FormatError("truncated checkpoint header")
    dims = list(struct.unpack_from(f"<{n_dims}I", buf, off))
    off += 4 * n_dims
    attention, n_params = struct.unpack_from("<BQ", buf, off)
    off += 9
    if len(buf) != off + 8 * n_params + 8:
        raise FormatError(f"checkpoint length {len(buf)} does not match {n_params} parameters")
    body, digest = buf[:-8], buf[-8:]
    if hashlib.blake2b(body, digest_size=8).digest() != digest:
        raise FormatError("checkpoint checksum mismatch")
    if n_dims < 3 or dims[0] != 2 or dims[-1] != 3 or len(set(dims[1:-1])) != 1:
        raise FormatError(f"unsupported layer dimensions {dims}")
    try:
        arch = Architecture(n_dims - 2, dims[1], bool(attention))
        flat = np.frombuffer(buf, dtype="<f8", count=n_params, offset=off).astype(np.float64)
        return NetworkParams(arch, flat)
    except StructureError as exc:
        raise FormatError(str(exc)) from exc


def load_checkpoint(path) -> NetworkParams:
    return parse_checkpoint(Path(path).read_bytes())


def checkpoint_size(arch: Architecture) -> int:
    """Exact file size in bytes for an architecture."""
    n_dims = arch.hidden_layers + 2
    return 4 + 2 + 2 + 4 * n_dims + 1 + 8 + 8 * arch.n_params + 8
