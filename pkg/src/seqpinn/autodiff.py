"""Exact derivatives for the fixed PINN family.

Input derivatives are carried forward as second-order jets. A jet is an array
of shape ``(S, n, width)`` where stream 0 is the value and, when ``S == 5``,
streams 1..4 are d/dx, d/dy, d2/dx2, d2/dy2. Mixed derivatives are never
needed by the steady Navier-Stokes residual and are not propagated.

Parameter gradients are obtained by a reverse sweep over a per-call tape of
layer records (forward-over-reverse), so the jet propagation itself is
differentiated exactly.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateInputError, StructureError
from .network import NetworkParams, as_points

VAL, DX, DY, DXX, DYY = range(5)
JET = 5

# route the jet elementwise work through the fused numba kernels
_fused = True


@contextmanager
def reference_mode():
    """Temporarily use the plain numpy primitives instead of the kernels."""
    global _fused
    prev, _fused = _fused, False
    try:
        yield
    finally:
        _fused = prev


@dataclass
class FieldEval:
    """Network fields and their input derivatives at a batch of points."""

    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    du_dx: np.ndarray
    du_dy: np.ndarray
    dv_dx: np.ndarray
    dv_dy: np.ndarray
    dp_dx: np.ndarray
    dp_dy: np.ndarray
    d2u_dx2: np.ndarray
    d2u_dy2: np.ndarray
    d2v_dx2: np.ndarray
    d2v_dy2: np.ndarray

    def __len__(self):
        return len(self.u)

    @classmethod
    def from_jet(cls, out: np.ndarray) -> "FieldEval":
        """Build from an output jet of shape ``(5, n, 3)``."""
        return cls(
            u=out[VAL, :, 0], v=out[VAL, :, 1], p=out[VAL, :, 2],
            du_dx=out[DX, :, 0], du_dy=out[DY, :, 0],
            dv_dx=out[DX, :, 1], dv_dy=out[DY, :, 1],
            dp_dx=out[DX, :, 2], dp_dy=out[DY, :, 2],
            d2u_dx2=out[DXX, :, 0], d2u_dy2=out[DYY, :, 0],
            d2v_dx2=out[DXX, :, 1], d2v_dy2=out[DYY, :, 1],
        )

    @classmethod
    def from_functions(cls, fields: dict) -> "FieldEval":
        return cls(**{k: np.asarray(fields[k], dtype=np.float64) for k in cls.__dataclass_fields__})


# --- jet primitives -------------------------------------------------------
# Each forward primitive returns its output and whatever its backward needs.


def _input_linear(x, W, b, streams):
    n = x.shape[0]
    a = np.empty((streams, n, W.shape[1]))
    np.matmul(x, W, out=a[VAL])
    a[VAL] += b
    if streams == JET:
        a[DX] = W[0]
        a[DY] = W[1]
        a[DXX:] = 0.0
    return a


def _input_linear_back(x, g):
    dW = x.T @ g[VAL]
    if g.shape[0] == JET:
        dW[0] += g[DX].sum(axis=0)
        dW[1] += g[DY].sum(axis=0)
    return dW, g[VAL].sum(axis=0)


def _linear(h, W, b):
    a = h @ W
    a[VAL] += b
    return a


def _linear_back(h, W, g):
    s, n, fin = h.shape
    dW = h.reshape(s * n, fin).T @ g.reshape(s * n, -1)
    return g @ W.T, dW, g[VAL].sum(axis=0)


def _tanh(a):
    """Jet through tanh. Returns (out, cache)."""
    s = np.tanh(a[VAL])
    out = np.empty_like(a)
    if a.shape[0] == JET and _fused:
        _kernels.tanh_jet(a, s, out)
        return out, (a, s)
    out[VAL] = s
    if a.shape[0] == JET:
        d1 = 1.0 - s * s
        d2 = -2.0 * s * d1
        out[DX] = d1 * a[DX]
        out[DY] = d1 * a[DY]
        out[DXX] = d2 * a[DX] * a[DX] + d1 * a[DXX]
        out[DYY] = d2 * a[DY] * a[DY] + d1 * a[DYY]
    return out, (a, s)


def _tanh_back(cache, g):
    a, s = cache
    da = np.empty_like(g)
    d1 = 1.0 - s * s
    if g.shape[0] == 1:
        da[VAL] = g[VAL] * d1
        return da
    if _fused:
        _kernels.tanh_back(a, s, g, da)
        return da
    d2 = -2.0 * s * d1
    d3 = (6.0 * s * s - 2.0) * d1
    ax, ay = a[DX], a[DY]
    da[VAL] = (
        g[VAL] * d1
        + d2 * (g[DX] * ax + g[DY] * ay + g[DXX] * a[DXX] + g[DYY] * a[DYY])
        + d3 * (g[DXX] * ax * ax + g[DYY] * ay * ay)
    )
    da[DX] = g[DX] * d1 + 2.0 * d2 * g[DXX] * ax
    da[DY] = g[DY] * d1 + 2.0 * d2 * g[DYY] * ay
    da[DXX] = g[DXX] * d1
    da[DYY] = g[DYY] * d1
    return da


def _mul(z, d):
    """Jet product z * d (elementwise, Leibniz rule to second order)."""
    out = z[VAL] * d[VAL]
    if z.shape[0] == 1:
        return out[None]
    res = np.empty_like(z)
    res[VAL] = out
    res[DX] = z[DX] * d[VAL] + z[VAL] * d[DX]
    res[DY] = z[DY] * d[VAL] + z[VAL] * d[DY]
    res[DXX] = z[DXX] * d[VAL] + 2.0 * z[DX] * d[DX] + z[VAL] * d[DXX]
    res[DYY] = z[DYY] * d[VAL] + 2.0 * z[DY] * d[DY] + z[VAL] * d[DYY]
    return res


def _mul_back_one(g, other):
    """Gradient wrt one factor of a jet product given the other factor."""
    r = np.empty_like(g)
    if g.shape[0] == 1:
        r[VAL] = g[VAL] * other[VAL]
        return r
    r[VAL] = (g[VAL] * other[VAL] + g[DX] * other[DX] + g[DY] * other[DY]
              + g[DXX] * other[DXX] + g[DYY] * other[DYY])
    r[DX] = g[DX] * other[VAL] + 2.0 * g[DXX] * other[DX]
    r[DY] = g[DY] * other[VAL] + 2.0 * g[DYY] * other[DY]
    r[DXX] = g[DXX] * other[VAL]
    r[DYY] = g[DYY] * other[VAL]
    return r


# --- network sweep --------------------------------------------------------


def _forward(params: NetworkParams, x: np.ndarray, streams: int):
    """Forward sweep. Returns the output jet ``(S, n, 3)`` and the tape."""
    t = params.tensors()
    L = params.arch.hidden_layers
    attn = params.arch.attention
    tape = {"x": x, "layers": []}
    if attn:
        e1, c1 = _tanh(_input_linear(x, t["W_enc1"], t["b_enc1"], streams))
        e2, c2 = _tanh(_input_linear(x, t["W_enc2"], t["b_enc2"], streams))
        diff = e2 - e1
        tape.update(enc=(c1, c2), diff=diff)
    h = None
    for k in range(1, L + 1):
        W, b = t[f"W{k}"], t[f"b{k}"]
        a = _input_linear(x, W, b, streams) if k == 1 else _linear(h, W, b)
        h_prev = h
        if attn and streams == JET and _fused:
            s = np.tanh(a[VAL])
            z, h = None, np.empty_like(a)
            _kernels.tanh_gate(a, s, e1, diff, h)
            cache = (a, s)
        else:
            z, cache = _tanh(a)
            h = e1 + _mul(z, diff) if attn else z
        tape["layers"].append((h_prev, cache, z))
    tape["h_last"] = h
    out = _linear(h, t["W_out"], t["b_out"])
    return out, tape


def _backward(params: NetworkParams, tape: dict, g_out: np.ndarray) -> np.ndarray:
    """Reverse sweep: gradient of a scalar wrt the flat parameter vector,
    given its gradient ``g_out`` wrt the output jet."""
    t = params.tensors()
    grads = {}
    attn = params.arch.attention
    g, grads["W_out"], grads["b_out"] = _linear_back(tape["h_last"], t["W_out"], g_out)
    if attn:
        g_e1 = np.zeros_like(g)
        g_diff = np.zeros_like(g)
    for k in range(params.arch.hidden_layers, 0, -1):
        h_prev, cache, z = tape["layers"][k - 1]
        if attn and g.shape[0] == JET and _fused:
            da = np.empty_like(g)
            _kernels.gate_back(cache[0], cache[1], tape["diff"], g, g_e1, g_diff, da)
            g = da
        else:
            if attn:
                g_e1 += g
                g_diff += _mul_back_one(g, z)
                g = _mul_back_one(g, tape["diff"])
            g = _tanh_back(cache, g)
        if k == 1:
            grads["W1"], grads["b1"] = _input_linear_back(tape["x"], g)
        else:
            g, grads[f"W{k}"], grads[f"b{k}"] = _linear_back(h_prev, t[f"W{k}"], g)
    if attn:
        c1, c2 = tape["enc"]
        g1 = _tanh_back(c1, g_e1 - g_diff)
        g2 = _tanh_back(c2, g_diff)
        grads["W_enc1"], grads["b_enc1"] = _input_linear_back(tape["x"], g1)
        grads["W_enc2"], grads["b_enc2"] = _input_linear_back(tape["x"], g2)
    return np.concatenate([grads[name].ravel() for name, _ in params.arch.shapes()])


def _check(params: NetworkParams):
    if params.flat.size != params.arch.n_params:
        raise StructureError("parameter vector does not match architecture")


def evaluate_with_input_derivatives(params: NetworkParams, points) -> FieldEval:
    """Fields plus first and second input derivatives at ``points``."""
    _check(params)
    x = as_points(points)
    out, _ = _forward(params, x, JET)
    return FieldEval.from_jet(out)


def value_and_backward(params: NetworkParams, points, streams: int):
    """Forward sweep plus a closure mapping output-jet gradients to a flat
    parameter gradient. Used by the loss assembly."""
    _check(params)
    x = as_points(points)
    if x.shape[0] == 0:
        raise DegenerateInputError("empty point batch")
    out, tape = _forward(params, x, streams)
    return out, lambda g_out: _backward(params, tape, g_out)


def loss_gradient(params: NetworkParams, batch, spec):
    """Composite loss and its exact gradient wrt the flat parameter vector.

    Collocation points are swept with full jets; boundary and data points only
    need values, so they take a cheaper value-only sweep.
    """
    from .physics import _combine, _pde_term, _supervised_term

    if batch.is_empty():
        raise DegenerateInputError("residual batch has no points in any category")
    _check(params)
    grad = np.zeros(params.arch.n_params)
    lf = lb = ld = 0.0
    if len(batch.collocation):
        out, back = value_and_backward(params, batch.collocation, JET)
        lf, g = _pde_term(FieldEval.from_jet(out), spec.Re, True)
        if spec.weight_F:
            grad += spec.weight_F * back(g)
    sup = [(batch.boundary, spec.weight_B), (batch.data, spec.weight_data)]
    sup = [(s, w) for s, w in sup if len(s)]
    if sup:
        pts = np.concatenate([s.points for s, _ in sup])
        out, back = value_and_backward(params, pts, 1)
        pred = out[VAL]
        g = np.zeros_like(pred)
        terms = []
        i = 0
        for s, w in sup:
            loss, gs = _supervised_term(pred[i:i + len(s)], s, True)
            g[i:i + len(s)] = w * gs
            terms.append(loss)
            i += len(s)
        if g.any():
            grad += back(g[None])
        it = iter(terms)
        if len(batch.boundary):
            lb = next(it)
        if len(batch.data):
            ld = next(it)
    return _combine(lf, lb, ld, spec, batch), grad
