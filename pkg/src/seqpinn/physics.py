"""Non-dimensional steady Navier-Stokes residuals and the composite PINN loss."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import DX, DXX, DY, DYY, VAL, FieldEval
from .errors import DegenerateInputError, StructureError

BOUNDARY_KINDS = ("wall", "inlet", "outlet")
# which of (u, v, p) each boundary kind imposes
KIND_MASK = {
    "wall": (True, True, False),
    "inlet": (True, True, False),
    "outlet": (False, False, True),
}


@dataclass(frozen=True)
class FluidConstants:
    """Dimensional fluid properties and characteristic scales (SI units)."""

    rho: float
    mu: float
    U: float
    D: float

    def __post_init__(self):
        for name in ("rho", "mu", "U", "D"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise DegenerateInputError(f"{name} must be finite and > 0, got {val}")

    @property
    def nu(self) -> float:
        return self.mu / self.rho

    @property
    def Re(self) -> float:
        return self.rho * self.U * self.D / self.mu

    @property
    def pressure_scale(self) -> float:
        return self.rho * self.U ** 2

    @classmethod
    def for_reynolds(cls, Re: float, rho=1037.0, U=0.828, D=0.005) -> "FluidConstants":
        """Keep blood-like rho, U, D and pick the viscosity that gives ``Re``."""
        if Re <= 0:
            raise DegenerateInputError(f"Re must be > 0, got {Re}")
        return cls(rho=rho, mu=rho * U * D / Re, U=U, D=D)

    def to_dict(self) -> dict:
        return {"rho": self.rho, "mu": self.mu, "U": self.U, "D": self.D}


@dataclass(frozen=True)
class LossSpec:
    Re: float
    weight_F: float = 1.0
    weight_B: float = 1.0
    weight_data: float = 1.0

    def __post_init__(self):
        for name in ("weight_F", "weight_B", "weight_data"):
            w = getattr(self, name)
            if not np.isfinite(w) or w < 0:
                raise StructureError(f"{name} must be finite and >= 0, got {w}")
        if not self.Re > 0:
            raise DegenerateInputError(f"Re must be > 0, got {self.Re}")


@dataclass
class Samples:
    """Supervised points: ``values`` columns are (u, v, p); ``mask`` marks the
    components that are actually imposed."""

    points: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        n = len(self.points)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(n, 3)
        self.mask = np.asarray(self.mask, dtype=bool).reshape(n, 3)

    def __len__(self):
        return len(self.points)

    @classmethod
    def empty(cls) -> "Samples":
        return cls(np.zeros((0, 2)), np.zeros((0, 3)), np.zeros((0, 3), dtype=bool))

    def take(self, idx) -> "Samples":
        return Samples(self.points[idx], self.values[idx], self.mask[idx])


def boundary_samples(points, kinds, values) -> Samples:
    """Boundary supervision with masks derived from each point's kind.

    ``values`` is (n, 3); wall rows are forced to zero velocity."""
    kinds = list(kinds)
    for k in kinds:
        if k not in KIND_MASK:
            raise StructureError(f"unknown boundary kind {k!r}")
    mask = np.array([KIND_MASK[k] for k in kinds], dtype=bool).reshape(-1, 3)
    vals = np.array(values, dtype=np.float64).reshape(-1, 3)
    walls = np.array([k == "wall" for k in kinds], dtype=bool)
    vals[walls, :2] = 0.0
    vals[~mask] = 0.0
    return Samples(points, vals, mask)


@dataclass
class ResidualBatch:
    collocation: np.ndarray
    boundary: Samples = field(default_factory=Samples.empty)
    data: Samples = field(default_factory=Samples.empty)

    def __post_init__(self):
        self.collocation = np.asarray(self.collocation, dtype=np.float64).reshape(-1, 2)

    def is_empty(self) -> bool:
        return len(self.collocation) == 0 and len(self.boundary) == 0 and len(self.data) == 0

    def all_points(self) -> np.ndarray:
        """Collocation, boundary and data points stacked in that order; the
        layout ``total_loss`` expects for its FieldEval."""
        return np.concatenate([self.collocation, self.boundary.points, self.data.points])


@dataclass
class LossBreakdown:
    L_F: float
    L_B: float
    L_data: float
    total: float
    empty: tuple = ()

    def to_dict(self) -> dict:
        return {"L_F": self.L_F, "L_B": self.L_B, "L_data": self.L_data,
                "total": self.total, "empty": list(self.empty)}


# --- non-dimensionalization ----------------------------------------------


def nondimensionalize(case):
    """Scale lengths by D, velocities by U and pressure by rho U^2."""
    if case.nondimensional:
        return case
    c = case.constants
    if c.U == 0:
        raise DegenerateInputError("characteristic velocity U is zero")
    return case.rescaled(1.0 / c.D, 1.0 / c.U, 1.0 / c.pressure_scale, nondimensional=True)


def redimensionalize(case):
    if not case.nondimensional:
        return case
    c = case.constants
    return case.rescaled(c.D, c.U, c.pressure_scale, nondimensional=False)


# --- residuals and loss ---------------------------------------------------


def residuals(ev: FieldEval, Re: float):
    """Momentum (x, y) and continuity residuals of the steady equations."""
    if not Re > 0:
        raise DegenerateInputError(f"Re must be > 0, got {Re}")
    inv = 1.0 / Re
    r_x = ev.u * ev.du_dx + ev.v * ev.du_dy + ev.dp_dx - inv * (ev.d2u_dx2 + ev.d2u_dy2)
    r_y = ev.u * ev.dv_dx + ev.v * ev.dv_dy + ev.dp_dy - inv * (ev.d2v_dx2 + ev.d2v_dy2)
    r_c = ev.du_dx + ev.dv_dy
    return r_x, r_y, r_c


def _pde_term(ev: FieldEval, Re: float, want_grad: bool):
    n = len(ev)
    if n == 0:
        return 0.0, None
    r_x, r_y, r_c = residuals(ev, Re)
    loss = float(np.mean(r_x * r_x + r_y * r_y + r_c * r_c))
    if not want_grad:
        return loss, None
    c = 2.0 / n
    rx, ry, rc = c * r_x, c * r_y, c * r_c
    g = np.zeros((5, n, 3))
    g[VAL, :, 0] = rx * ev.du_dx + ry * ev.dv_dx
    g[VAL, :, 1] = rx * ev.du_dy + ry * ev.dv_dy
    g[DX, :, 0] = rx * ev.u + rc
    g[DX, :, 1] = ry * ev.u
    g[DX, :, 2] = rx
    g[DY, :, 0] = rx * ev.v
    g[DY, :, 1] = ry * ev.v + rc
    g[DY, :, 2] = ry
    g[DXX, :, 0] = g[DYY, :, 0] = -rx / Re
    g[DXX, :, 1] = g[DYY, :, 1] = -ry / Re
    return loss, g


def _supervised_term(pred: np.ndarray, samples: Samples, want_grad: bool):
    count = int(samples.mask.sum())
    if count == 0:
        return 0.0, (np.zeros_like(pred) if want_grad else None)
    err = np.where(samples.mask, pred - samples.values, 0.0)
    loss = float(np.sum(err * err) / count)
    return loss, (2.0 * err / count if want_grad else None)


def _combine(lf, lb, ld, spec: LossSpec, batch: ResidualBatch) -> LossBreakdown:
    empty = []
    if len(batch.collocation) == 0:
        empty.append("F")
    if not batch.boundary.mask.any():
        empty.append("B")
    if not batch.data.mask.any():
        empty.append("data")
    total = spec.weight_F * lf + spec.weight_B * lb + spec.weight_data * ld
    return LossBreakdown(lf, lb, ld, total, tuple(empty))


def total_loss(ev: FieldEval, batch: ResidualBatch, spec: LossSpec) -> LossBreakdown:
    """Composite loss from fields evaluated at ``batch.all_points()``.

    Every term is a mean, so an empty category contributes 0 and is listed
    in ``LossBreakdown.empty``."""
    if batch.is_empty():
        raise DegenerateInputError("residual batch has no points in any category")
    nc, nb = len(batch.collocation), len(batch.boundary)
    if len(ev) != nc + nb + len(batch.data):
        raise StructureError("FieldEval length does not match the batch")
    pred = np.stack([ev.u, ev.v, ev.p], axis=1)
    colloc = FieldEval(**{k: getattr(ev, k)[:nc] for k in FieldEval.__dataclass_fields__})
    lf, _ = _pde_term(colloc, spec.Re, False)
    lb, _ = _supervised_term(pred[nc:nc + nb], batch.boundary, False)
    ld, _ = _supervised_term(pred[nc + nb:], batch.data, False)
    return _combine(lf, lb, ld, spec, batch)


def with_weights(spec: LossSpec, scale: float) -> LossSpec:
    return replace(spec, weight_F=spec.weight_F * scale, weight_B=spec.weight_B * scale,
                   weight_data=spec.weight_data * scale)
