"""Fused elementwise jet kernels (numba).

Each kernel does one pass over a ``(5, n, width)`` jet and mirrors a chain
of the numpy primitives in ``autodiff``; the numpy versions remain the
reference and are cross-checked in the tests. ``s`` is always
``tanh(a[0])``, computed by numpy beforehand because its vectorised tanh is
much faster than a scalar libm call per element.
"""

import numba as nb

_opts = dict(cache=True, nogil=True, boundscheck=False)


@nb.njit(**_opts)
def tanh_jet(a, s, out):
    n, w = s.shape
    for i in range(n):
        for j in range(w):
            sv = s[i, j]
            d1 = 1.0 - sv * sv
            d2 = -2.0 * sv * d1
            ax = a[1, i, j]
            ay = a[2, i, j]
            out[0, i, j] = sv
            out[1, i, j] = d1 * ax
            out[2, i, j] = d1 * ay
            out[3, i, j] = d2 * ax * ax + d1 * a[3, i, j]
            out[4, i, j] = d2 * ay * ay + d1 * a[4, i, j]


@nb.njit(**_opts)
def tanh_gate(a, s, e1, diff, h):
    """h = e1 + tanh-jet(a) * diff (jet product). The tanh jet itself is not
    stored; ``gate_back`` rebuilds it from ``a`` and ``s``."""
    n, w = s.shape
    for i in range(n):
        for j in range(w):
            sv = s[i, j]
            d1 = 1.0 - sv * sv
            d2 = -2.0 * sv * d1
            ax = a[1, i, j]
            ay = a[2, i, j]
            z0 = sv
            z1 = d1 * ax
            z2 = d1 * ay
            z3 = d2 * ax * ax + d1 * a[3, i, j]
            z4 = d2 * ay * ay + d1 * a[4, i, j]
            D0 = diff[0, i, j]
            D1 = diff[1, i, j]
            D2 = diff[2, i, j]
            h[0, i, j] = e1[0, i, j] + z0 * D0
            h[1, i, j] = e1[1, i, j] + z1 * D0 + z0 * D1
            h[2, i, j] = e1[2, i, j] + z2 * D0 + z0 * D2
            h[3, i, j] = e1[3, i, j] + z3 * D0 + 2.0 * z1 * D1 + z0 * diff[3, i, j]
            h[4, i, j] = e1[4, i, j] + z4 * D0 + 2.0 * z2 * D2 + z0 * diff[4, i, j]


@nb.njit(**_opts)
def tanh_back(a, s, g, da):
    n, w = s.shape
    for i in range(n):
        for j in range(w):
            sv = s[i, j]
            d1 = 1.0 - sv * sv
            d2 = -2.0 * sv * d1
            d3 = (6.0 * sv * sv - 2.0) * d1
            ax = a[1, i, j]
            ay = a[2, i, j]
            g0 = g[0, i, j]
            g1 = g[1, i, j]
            g2 = g[2, i, j]
            g3 = g[3, i, j]
            g4 = g[4, i, j]
            da[0, i, j] = (g0 * d1
                           + d2 * (g1 * ax + g2 * ay + g3 * a[3, i, j] + g4 * a[4, i, j])
                           + d3 * (g3 * ax * ax + g4 * ay * ay))
            da[1, i, j] = g1 * d1 + 2.0 * d2 * g3 * ax
            da[2, i, j] = g2 * d1 + 2.0 * d2 * g4 * ay
            da[3, i, j] = g3 * d1
            da[4, i, j] = g4 * d1


@nb.njit(**_opts)
def gate_back(a, s, diff, g, g_e1, g_diff, da):
    """Reverse of ``tanh_gate``: accumulates into g_e1 and g_diff, writes the
    gradient wrt the pre-activation into da."""
    n, w = s.shape
    for i in range(n):
        for j in range(w):
            g0 = g[0, i, j]
            g1 = g[1, i, j]
            g2 = g[2, i, j]
            g3 = g[3, i, j]
            g4 = g[4, i, j]
            g_e1[0, i, j] += g0
            g_e1[1, i, j] += g1
            g_e1[2, i, j] += g2
            g_e1[3, i, j] += g3
            g_e1[4, i, j] += g4
            sv = s[i, j]
            d1 = 1.0 - sv * sv
            d2 = -2.0 * sv * d1
            d3 = (6.0 * sv * sv - 2.0) * d1
            ax = a[1, i, j]
            ay = a[2, i, j]
            axx = a[3, i, j]
            ayy = a[4, i, j]
            z0 = sv
            z1 = d1 * ax
            z2 = d1 * ay
            z3 = d2 * ax * ax + d1 * axx
            z4 = d2 * ay * ay + d1 * ayy
            g_diff[0, i, j] += g0 * z0 + g1 * z1 + g2 * z2 + g3 * z3 + g4 * z4
            g_diff[1, i, j] += g1 * z0 + 2.0 * g3 * z1
            g_diff[2, i, j] += g2 * z0 + 2.0 * g4 * z2
            g_diff[3, i, j] += g3 * z0
            g_diff[4, i, j] += g4 * z0
            D0 = diff[0, i, j]
            D1 = diff[1, i, j]
            D2 = diff[2, i, j]
            gz0 = g0 * D0 + g1 * D1 + g2 * D2 + g3 * diff[3, i, j] + g4 * diff[4, i, j]
            gz1 = g1 * D0 + 2.0 * g3 * D1
            gz2 = g2 * D0 + 2.0 * g4 * D2
            gz3 = g3 * D0
            gz4 = g4 * D0
            da[0, i, j] = (gz0 * d1
                           + d2 * (gz1 * ax + gz2 * ay + gz3 * axx + gz4 * ayy)
                           + d3 * (gz3 * ax * ax + gz4 * ay * ay))
            da[1, i, j] = gz1 * d1 + 2.0 * d2 * gz3 * ax
            da[2, i, j] = gz2 * d1 + 2.0 * d2 * gz4 * ay
            da[3, i, j] = gz3 * d1
            da[4, i, j] = gz4 * d1
