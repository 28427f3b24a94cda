"""Compiled inner loops for the measurement optimizer.

Vectors are stored flat, ``x[3*i:3*i+3]`` for vertex ``i``, and evaluated
through their normalisations ``v_i = x_i / |x_i|`` so every objective call
sees unit vectors.  ``kind`` selects the smooth part of the objective:
0 is the state objective ``sum_i v_i^T diag(lam) v_i``, 1 is the negated
frame potential ``-||sum_i v_i v_i^T||_F^2``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATE = 0
FRAME = 1


@njit(cache=True)
def _normalized(x, n):
    v = np.empty(3 * n)
    norms = np.empty(n)
    for i in range(n):
        r = np.sqrt(x[3 * i] ** 2 + x[3 * i + 1] ** 2 + x[3 * i + 2] ** 2)
        norms[i] = r
        for k in range(3):
            v[3 * i + k] = x[3 * i + k] / r
    return v, norms


@njit(cache=True)
def _value_grad_buf(x, n, lam, ei, ej, mu, kind, grad, v, norms, gv, m):
    for i in range(n):
        r = np.sqrt(x[3 * i] ** 2 + x[3 * i + 1] ** 2 + x[3 * i + 2] ** 2)
        norms[i] = r
        for k in range(3):
            v[3 * i + k] = x[3 * i + k] / r
    f = 0.0
    if kind == STATE:
        for i in range(n):
            for k in range(3):
                f += lam[k] * v[3 * i + k] ** 2
                gv[3 * i + k] = 2.0 * lam[k] * v[3 * i + k]
    else:
        for a in range(3):
            for b in range(3):
                m[a, b] = 0.0
        for i in range(n):
            for a in range(3):
                for b in range(3):
                    m[a, b] += v[3 * i + a] * v[3 * i + b]
        for a in range(3):
            for b in range(3):
                f -= m[a, b] ** 2
        for i in range(n):
            for a in range(3):
                acc = 0.0
                for b in range(3):
                    acc += m[a, b] * v[3 * i + b]
                gv[3 * i + a] = -4.0 * acc
    for e in range(ei.shape[0]):
        i = ei[e]
        j = ej[e]
        d = v[3 * i] * v[3 * j] + v[3 * i + 1] * v[3 * j + 1] + v[3 * i + 2] * v[3 * j + 2]
        f -= mu * d * d
        for k in range(3):
            gv[3 * i + k] -= 2.0 * mu * d * v[3 * j + k]
            gv[3 * j + k] -= 2.0 * mu * d * v[3 * i + k]
    # Chain rule through the normalisation: (I - v v^T) g / |x|.
    for i in range(n):
        dot = v[3 * i] * gv[3 * i] + v[3 * i + 1] * gv[3 * i + 1] + v[3 * i + 2] * gv[3 * i + 2]
        for k in range(3):
            grad[3 * i + k] = (gv[3 * i + k] - dot * v[3 * i + k]) / norms[i]
    return f


@njit(cache=True)
def value_grad(x, n, lam, ei, ej, mu, kind, grad):
    """Penalised objective at ``x`` (to be maximised); writes d/dx into ``grad``."""
    return _value_grad_buf(
        x, n, lam, ei, ej, mu, kind, grad, np.empty(3 * n), np.empty(n), np.empty(3 * n), np.empty((3, 3))
    )


@njit(cache=True)
def _dot(a, b, size):
    acc = 0.0
    for k in range(size):
        acc += a[k] * b[k]
    return acc


@njit(cache=True)
def lbfgs_stage(x0, n, lam, ei, ej, mu, kind, max_iters, tol, memory):
    """Maximise the penalised objective from ``x0``; returns renormalised vectors.

    L-BFGS on the negated objective with Armijo backtracking.  The stage
    ends after three consecutive steps with relative change below ``tol``,
    when no descent step is found, or after ``max_iters`` iterations.
    """
    size = 3 * n
    v = np.empty(size)
    norms = np.empty(n)
    gv = np.empty(size)
    m = np.empty((3, 3))
    x = x0.copy()
    xt = np.empty(size)
    g = np.empty(size)
    g_new = np.empty(size)
    d = np.empty(size)
    s_hist = np.zeros((memory, size))
    y_hist = np.zeros((memory, size))
    rho = np.zeros(memory)
    alpha = np.zeros(memory)
    f = -_value_grad_buf(x, n, lam, ei, ej, mu, kind, g, v, norms, gv, m)
    for k in range(size):
        g[k] = -g[k]
    count = 0
    head = 0
    quiet = 0
    for _ in range(max_iters):
        gmax = 0.0
        for k in range(size):
            gmax = max(gmax, abs(g[k]))
        if gmax <= 1e-14:
            break
        # Two-loop recursion for d = -H g.
        for k in range(size):
            d[k] = -g[k]
        for c in range(count):
            idx = (head - 1 - c) % memory
            a = rho[idx] * _dot(s_hist[idx], d, size)
            alpha[idx] = a
            for k in range(size):
                d[k] -= a * y_hist[idx, k]
        if count > 0:
            last = (head - 1) % memory
            scale = 1.0 / (rho[last] * _dot(y_hist[last], y_hist[last], size))
        else:
            scale = 1.0 / max(1.0, np.sqrt(_dot(g, g, size)))
        for k in range(size):
            d[k] *= scale
        for c in range(count - 1, -1, -1):
            idx = (head - 1 - c) % memory
            b = rho[idx] * _dot(y_hist[idx], d, size)
            for k in range(size):
                d[k] += (alpha[idx] - b) * s_hist[idx, k]
        slope = _dot(g, d, size)
        if slope >= 0.0:
            count = 0
            scale = 1.0 / max(1.0, np.sqrt(_dot(g, g, size)))
            for k in range(size):
                d[k] = -g[k] * scale
            slope = _dot(g, d, size)
        t = 1.0
        accepted = False
        f_new = f
        for _ in range(60):
            for k in range(size):
                xt[k] = x[k] + t * d[k]
            f_new = -_value_grad_buf(xt, n, lam, ei, ej, mu, kind, g_new, v, norms, gv, m)
            if f_new <= f + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        sy = 0.0
        ss = 0.0
        yy = 0.0
        for k in range(size):
            g_new[k] = -g_new[k]
            sk = xt[k] - x[k]
            yk = g_new[k] - g[k]
            s_hist[head, k] = sk
            y_hist[head, k] = yk
            sy += sk * yk
            ss += sk * sk
            yy += yk * yk
        if sy > 1e-16 * np.sqrt(ss * yy):
            rho[head] = 1.0 / sy
            head = (head + 1) % memory
            count = min(count + 1, memory)
        if abs(f - f_new) <= tol * (1.0 + abs(f)):
            quiet += 1
        else:
            quiet = 0
        for k in range(size):
            x[k] = xt[k]
            g[k] = g_new[k]
        f = f_new
        if quiet >= 3:
            break
    out, _ = _normalized(x, n)
    return out


@njit(cache=True)
def run_starts(x0, n, lam, ei, ej, schedule, kind, max_iters, tol, memory):
    """Apply every penalty stage to every start (rows of ``x0``)."""
    out = np.empty_like(x0)
    for b in range(x0.shape[0]):
        x = x0[b].copy()
        if ei.shape[0] == 0:
            x = lbfgs_stage(x, n, lam, ei, ej, 0.0, kind, max_iters, tol, memory)
        else:
            for mu in schedule:
                x = lbfgs_stage(x, n, lam, ei, ej, mu, kind, max_iters, tol, memory)
        out[b] = x
    return out


@njit(cache=True)
def kkt_residual(z, n, lam, ei, ej):
    m_e = ei.shape[0]
    r = np.zeros(4 * n + m_e)
    for i in range(n):
        a = z[3 * n + i]
        nrm = 0.0
        for k in range(3):
            xi = z[3 * i + k]
            r[3 * i + k] = 2.0 * lam[k] * xi - 2.0 * a * xi
            nrm += xi * xi
        r[3 * n + i] = nrm - 1.0
    for e in range(m_e):
        i = ei[e]
        j = ej[e]
        b = z[4 * n + e]
        d = 0.0
        for k in range(3):
            r[3 * i + k] -= b * z[3 * j + k]
            r[3 * j + k] -= b * z[3 * i + k]
            d += z[3 * i + k] * z[3 * j + k]
        r[4 * n + e] = d
    return r


@njit(cache=True)
def kkt_jacobian(z, n, lam, ei, ej):
    m_e = ei.shape[0]
    size = 4 * n + m_e
    jac = np.zeros((size, size))
    for i in range(n):
        a = z[3 * n + i]
        for k in range(3):
            jac[3 * i + k, 3 * i + k] = 2.0 * lam[k] - 2.0 * a
            jac[3 * i + k, 3 * n + i] = -2.0 * z[3 * i + k]
            jac[3 * n + i, 3 * i + k] = 2.0 * z[3 * i + k]
    for e in range(m_e):
        i = ei[e]
        j = ej[e]
        b = z[4 * n + e]
        col = 4 * n + e
        for k in range(3):
            jac[3 * i + k, 3 * j + k] -= b
            jac[3 * j + k, 3 * i + k] -= b
            jac[3 * i + k, col] = -z[3 * j + k]
            jac[3 * j + k, col] = -z[3 * i + k]
            jac[col, 3 * i + k] = z[3 * j + k]
            jac[col, 3 * j + k] = z[3 * i + k]
    return jac


@njit(cache=True)
def _max_abs(r):
    out = 0.0
    for k in range(r.shape[0]):
        out = max(out, abs(r[k]))
    return out


@njit(cache=True)
def kkt_polish(v, n, lam, ei, ej, iters, tol):
    """Damped Newton on stationarity + constraints, from unit vectors ``v``.

    Multipliers start at their least-squares estimate.  Returns the
    renormalised vectors and the final residual norm.
    """
    m_e = ei.shape[0]
    cols = np.zeros((3 * n, n + m_e))
    rhs = np.empty(3 * n)
    for i in range(n):
        for k in range(3):
            cols[3 * i + k, i] = 2.0 * v[3 * i + k]
            rhs[3 * i + k] = 2.0 * lam[k] * v[3 * i + k]
    for e in range(m_e):
        i = ei[e]
        j = ej[e]
        for k in range(3):
            cols[3 * i + k, n + e] = v[3 * j + k]
            cols[3 * j + k, n + e] = v[3 * i + k]
    mult = np.linalg.lstsq(cols, rhs, 1e-13)[0]
    z = np.concatenate((v, mult))
    r = kkt_residual(z, n, lam, ei, ej)
    norm = _max_abs(r)
    for _ in range(iters):
        if norm <= tol:
            break
        dz = np.linalg.lstsq(kkt_jacobian(z, n, lam, ei, ej), -r, 1e-13)[0]
        t = 1.0
        improved = False
        while t > 1e-4:
            zt = z + t * dz
            rt = kkt_residual(zt, n, lam, ei, ej)
            nt = _max_abs(rt)
            if nt < norm:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        z = zt
        r = rt
        norm = nt
    out, _ = _normalized(z[: 3 * n].copy(), n)
    return out, norm


@njit(cache=True)
def project_feasible(v, n, ei, ej, iters, tol):
    """Minimum-norm Gauss-Newton projection onto the edge-orthogonality set."""
    m_e = ei.shape[0]
    x, _ = _normalized(v.copy(), n)
    for _ in range(iters):
        c = np.empty(m_e)
        for e in range(m_e):
            i = ei[e]
            j = ej[e]
            c[e] = x[3 * i] * x[3 * j] + x[3 * i + 1] * x[3 * j + 1] + x[3 * i + 2] * x[3 * j + 2]
        if m_e == 0 or _max_abs(c) <= tol:
            break
        jac = np.zeros((m_e, 3 * n))
        for e in range(m_e):
            i = ei[e]
            j = ej[e]
            for k in range(3):
                jac[e, 3 * i + k] = x[3 * j + k]
                jac[e, 3 * j + k] = x[3 * i + k]
        dx = np.linalg.lstsq(jac, -c, 1e-13)[0]
        x, _ = _normalized(x + dx, n)
    return x
