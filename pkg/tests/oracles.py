"""Independent reference computations: central finite differences and
brute-force statistics. Nothing here touches the derivative engine."""

import numpy as np

from seqpinn.autodiff import FieldEval
from seqpinn.data import kovasznay_lambda
from seqpinn.network import NetworkParams, forward


def fd_input_derivatives(params, pts, h=1e-4):
    """First derivatives by central differences and second derivatives by a
    Richardson-extrapolated second difference, from ``forward`` only."""
    f = lambda x: forward(params, x)
    out = {}
    for axis, name in ((0, "x"), (1, "y")):
        e = np.zeros(2)
        e[axis] = 1.0
        d1 = (f(pts + h * e) - f(pts - h * e)) / (2 * h)
        d1h = (f(pts + 0.5 * h * e) - f(pts - 0.5 * h * e)) / h
        out["d" + name] = (4 * d1h - d1) / 3
        big = 1e-3
        f0 = f(pts)
        d2 = (f(pts + big * e) - 2 * f0 + f(pts - big * e)) / big ** 2
        d2h = (f(pts + 0.5 * big * e) - 2 * f0 + f(pts - 0.5 * big * e)) / (0.5 * big) ** 2
        out["d" + name + name] = (4 * d2h - d2) / 3
    return out


def fd_gradient(fun, flat, h=1e-6):
    """Central-difference gradient of a scalar function of a flat vector."""
    g = np.empty_like(flat)
    x = flat.copy()
    for i in range(flat.size):
        x[i] = flat[i] + h
        a = fun(x)
        x[i] = flat[i] - h
        b = fun(x)
        x[i] = flat[i]
        g[i] = (a - b) / (2 * h)
    return g


def within(actual, expected, rel=1e-4, floor=1e-8):
    """|actual - expected| <= max(rel * |expected|, floor), elementwise."""
    actual, expected = np.asarray(actual), np.asarray(expected)
    return np.abs(actual - expected) <= np.maximum(rel * np.abs(expected), floor)


def brute_stats(flats):
    """Sample mean and unbiased per-coordinate variance with plain loops."""
    k = len(flats)
    n = len(flats[0])
    mean = [0.0] * n
    for f in flats:
        for j in range(n):
            mean[j] += float(f[j])
    mean = [m / k for m in mean]
    var = [0.0] * n
    for f in flats:
        for j in range(n):
            d = float(f[j]) - mean[j]
            var[j] += d * d
    var = [v / (k - 1) for v in var] if k > 1 else [0.0] * n
    return np.array(mean), np.array(var)


def perturbed(params: NetworkParams, seed: int, scale: float = 0.3) -> NetworkParams:
    """Params with non-zero biases so every code path is exercised."""
    rng = np.random.default_rng(seed)
    return NetworkParams(params.arch, params.flat + rng.normal(0.0, scale, params.flat.size))


# hand-derived closed-form fields and derivatives


def kovasznay_eval(pts, Re):
    lam = kovasznay_lambda(Re)
    x, y = pts[:, 0], pts[:, 1]
    e = np.exp(lam * x)
    c, s = np.cos(2 * np.pi * y), np.sin(2 * np.pi * y)
    k = 2 * np.pi
    return FieldEval.from_functions(dict(
        u=1 - e * c, v=lam / k * e * s, p=0.5 * (1 - np.exp(2 * lam * x)),
        du_dx=-lam * e * c, du_dy=k * e * s, dv_dx=lam ** 2 / k * e * s, dv_dy=lam * e * c,
        dp_dx=-lam * np.exp(2 * lam * x), dp_dy=np.zeros_like(x),
        d2u_dx2=-lam ** 2 * e * c, d2u_dy2=k ** 2 * e * c,
        d2v_dx2=lam ** 3 / k * e * s, d2v_dy2=-k * lam * e * s))


def poiseuille_eval(pts, c, Re, h):
    y = pts[:, 1]
    z = np.zeros_like(y)
    return FieldEval.from_functions(dict(
        u=c * (1 - (y / h) ** 2), v=z, p=-2 * c * pts[:, 0] / (Re * h * h),
        du_dx=z, du_dy=-2 * c * y / h ** 2, dv_dx=z, dv_dy=z,
        dp_dx=np.full_like(y, -2 * c / (Re * h * h)), dp_dy=z,
        d2u_dx2=z, d2u_dy2=np.full_like(y, -2 * c / h ** 2), d2v_dx2=z, d2v_dy2=z))
