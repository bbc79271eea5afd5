"""SWAG posterior over network parameters, Bayesian model averaging and the
uncertainty index used to vet an SP-PINN initialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, FormatError, StructureError
from .network import Architecture, NetworkParams, average_params, forward

POSTERIOR_FORMAT = "seqpinn-posterior"


@dataclass
class PosteriorStats:
    arch: Architecture
    mean: np.ndarray
    diag_var: np.ndarray
    deviations: np.ndarray = field(repr=False)  # (n_params, <= k-1)
    k: int = 1

    def __post_init__(self):
        n = self.arch.n_params
        if self.mean.shape != (n,) or self.diag_var.shape != (n,):
            raise StructureError("posterior vectors do not match the architecture")
        if self.deviations.ndim != 2 or self.deviations.shape[0] != n:
            raise StructureError("deviation matrix must be (n_params, columns)")
        if self.deviations.shape[1] > max(self.k - 1, 0):
            raise StructureError("more deviation columns than k - 1")
        if np.any(self.diag_var < 0):
            raise StructureError("negative variance")

    @property
    def mean_params(self) -> NetworkParams:
        return NetworkParams(self.arch, self.mean.copy())


def swag_fit(samples) -> PosteriorStats:
    """Mean, exact diagonal of the sample covariance (1/(k-1) normalisation)
    and running-mean deviation columns for the low-rank part."""
    samples = list(samples)
    if not samples:
        raise DegenerateInputError("swag_fit needs at least one sample")
    mean = average_params(samples)
    k = len(samples)
    thetas = np.stack([s.flat for s in samples])
    if k == 1:
        diag = np.zeros_like(mean.flat)
    else:
        d = thetas - mean.flat
        diag = np.sum(d * d, axis=0) / (k - 1)
    # column i-2 is theta_i minus the running mean of theta_1..theta_i; the
    # incremental update keeps identical samples at exactly zero deviation
    devs = np.empty((mean.flat.size, k - 1))
    running = thetas[0].copy()
    for i in range(1, k):
        running += (thetas[i] - running) / (i + 1)
        devs[:, i - 1] = thetas[i] - running
    return PosteriorStats(mean.arch, mean.flat.copy(), diag, devs, k)


def swag_sample(stats: PosteriorStats, seed) -> NetworkParams:
    """theta = mean + sqrt(diag/2) * z1 + D z2 / sqrt(2 (k-1))."""
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(stats.mean.size)
    theta = stats.mean + np.sqrt(stats.diag_var) * z1 / np.sqrt(2.0)
    c = stats.deviations.shape[1]
    if c:
        z2 = rng.standard_normal(c)
        theta = theta + stats.deviations @ z2 / np.sqrt(2.0 * (stats.k - 1))
    return NetworkParams(stats.arch, theta)


def uncertainty_map(stats: PosteriorStats, points, n_samples: int = 30, seed=0,
                    component: str = "speed") -> np.ndarray:
    """Per-point standard deviation (ddof=1) over ``n_samples`` posterior draws
    of the speed ``sqrt(u^2 + v^2)``, or of ``u`` / ``v`` alone."""
    if n_samples < 2:
        raise DegenerateInputError("need at least two samples for a standard deviation")
    base = np.atleast_1d(seed).tolist()
    draws = []
    for i in range(n_samples):
        out = forward(swag_sample(stats, base + [i]), points)
        if component == "speed":
            draws.append(np.hypot(out[:, 0], out[:, 1]))
        elif component in ("u", "v"):
            draws.append(out[:, "uv".index(component)])
        else:
            raise StructureError(f"unknown component {component!r}")
    draws = np.stack(draws)
    # shift by the first draw so identical draws give exactly zero
    return np.std(draws - draws[0], axis=0, ddof=1)


def uncertainty_index(std_map) -> float:
    m = np.asarray(std_map, dtype=np.float64)
    if m.size == 0:
        raise DegenerateInputError("empty std map")
    return float(m.mean())


def save_posterior(stats: PosteriorStats, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps({"format": POSTERIOR_FORMAT, "version": 1, "k": stats.k,
                         "arch": stats.arch.to_dict()})
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(header), mean=stats.mean, diag_var=stats.diag_var,
                 deviations=stats.deviations)
    return path


def load_posterior(path) -> PosteriorStats:
    try:
        with np.load(Path(path), allow_pickle=False) as z:
            header = json.loads(str(z["header"]))
            if header.get("format") != POSTERIOR_FORMAT:
                raise FormatError("not a posterior file")
            return PosteriorStats(Architecture.from_dict(header["arch"]), z["mean"].copy(),
                                  z["diag_var"].copy(), z["deviations"].copy(), int(header["k"]))
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"cannot read posterior file {path}: {exc}") from exc


def write_std_map(points, std_map, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pts = np.asarray(points)
    with open(path, "w") as fh:
        fh.write("x,y,std\n")
        for (x, y), s in zip(pts, std_map):
            fh.write(f"{float(x)!r},{float(y)!r},{float(s)!r}\n")
    return path
