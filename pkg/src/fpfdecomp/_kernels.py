"""Hot numerical kernels, in numba (loops) and numpy (vectorized) twins.

Everything here operates on the packed array form used by the filters:
a particle block ``Xp`` of shape (N_p, d) sharing one diagonal covariance
``eps`` (d,), per-channel polynomial coefficients in K-tilde form
``ktilde`` (N_p, m, p) supported on a single coordinate per channel
(``chan_coord``), constants ``C`` (N_p, m) and observation means ``hbar``
(m,).  The packed evaluation reproduces the generic ``GainField``
exactly (tested) and is what the per-step filter loops call.

Dispatchers pick the numba twin unless ``FPF_PURE_NUMPY=1``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.special as sps

from ._compat import NUMBA_ENABLED, maybe_njit
from .special import _radial_kernel_core, radial_kernel_vec

_LOG_UNDERFLOW = -700.0


# ---------------------------------------------------------------------------
# per-coordinate backward recursion (single-coordinate observation channels)


@maybe_njit(cache=True, nogil=True)
def solve_percoord_nb(Xp, eps_chan, a_chan, chan_coord, p):
    n_p, d = Xp.shape
    m = chan_coord.shape[0]
    ktilde = np.zeros((n_p, m, p))
    C = np.zeros((n_p, m))
    kt = np.zeros(p + 2)
    for i in range(n_p):
        for s in range(m):
            c = chan_coord[s]
            X = Xp[i, c]
            eps = eps_chan[s]
            for k in range(p + 2):
                kt[k] = 0.0
            for k in range(p - 1, -1, -1):
                kt[k] = (
                    2.0 * eps * a_chan[s, k + 1]
                    + 2.0 * (2.0 * eps - 1.0) * (k + 2) * kt[k + 2]
                    + 2.0 * X * kt[k + 1]
                )
            const = a_chan[s, 0]
            if p >= 1:
                const += (X / eps) * kt[0]
            if p >= 2:
                const += (2.0 - 1.0 / eps) * kt[1]
            for k in range(p):
                ktilde[i, s, k] = kt[k]
            C[i, s] = const
    return ktilde, C


def solve_percoord_np(Xp, eps_chan, a_chan, chan_coord, p):
    n_p, _ = Xp.shape
    m = chan_coord.shape[0]
    ktilde = np.zeros((n_p, m, p))
    C = np.zeros((n_p, m))
    for s in range(m):
        X = Xp[:, chan_coord[s]]
        eps = eps_chan[s]
        kt = np.zeros((p + 2, n_p))
        for k in range(p - 1, -1, -1):
            kt[k] = (
                2.0 * eps * a_chan[s, k + 1]
                + 2.0 * (2.0 * eps - 1.0) * (k + 2) * kt[k + 2]
                + 2.0 * X * kt[k + 1]
            )
        const = np.full(n_p, a_chan[s, 0])
        if p >= 1:
            const = const + (X / eps) * kt[0]
        if p >= 2:
            const = const + (2.0 - 1.0 / eps) * kt[1]
        ktilde[:, s, :] = kt[:p].T
        C[:, s] = const
    return ktilde, C


def solve_percoord(Xp, eps_chan, a_chan, chan_coord, p):
    if NUMBA_ENABLED:
        return solve_percoord_nb(Xp, eps_chan, a_chan, chan_coord, np.int64(p))
    return solve_percoord_np(Xp, eps_chan, a_chan, chan_coord, p)


# ---------------------------------------------------------------------------
# packed gain evaluation (shared diagonal covariance)


@maybe_njit(cache=True, nogil=True)
def gain_eval_nb(queries, Xp, inv_eps, log_norm, rad_norm, ktilde, chan_coord, C, hbar, V, full, out_full, out_apply):
    n_q, d = queries.shape
    n_p = Xp.shape[0]
    m = chan_coord.shape[0]
    p = ktilde.shape[2]
    logs = np.empty(n_p)
    herm = np.empty((p, d))
    for n in range(n_q):
        top = -np.inf
        for i in range(n_p):
            acc = 0.0
            for l in range(d):
                delta = queries[n, l] - Xp[i, l]
                acc += delta * delta * inv_eps[l]
            logs[i] = log_norm - 0.5 * acc
            if logs[i] > top:
                top = logs[i]
        # Hermite table H_0..H_{p-1} at every coordinate of the query
        for l in range(d):
            x = queries[n, l]
            if p >= 1:
                herm[0, l] = 1.0
            if p >= 2:
                herm[1, l] = 2.0 * x
            for k in range(1, p - 1):
                herm[k + 1, l] = 2.0 * x * herm[k, l] - 2.0 * k * herm[k - 1, l]
        if top < _LOG_UNDERFLOW:
            i0 = 0
            for i in range(1, n_p):
                if logs[i] > logs[i0]:
                    i0 = i
            maha = 2.0 * (log_norm - logs[i0])
            r = math.sqrt(maha)
            ratio = math.exp(min(-logs[i0], 700.0)) * _radial_kernel_core(d, r) * rad_norm
            for s in range(m):
                c = chan_coord[s]
                poly = 0.0
                for k in range(p):
                    poly += ktilde[i0, s, k] * herm[k, c]
                coef = (hbar[s] - C[i0, s]) * ratio
                for l in range(d):
                    val = coef * (queries[n, l] - Xp[i0, l])
                    if l == c:
                        val += poly
                    if full:
                        out_full[n, l, s] = val
                    else:
                        out_apply[n, l] += val * V[n, s]
            continue
        W = 0.0
        for i in range(n_p):
            W += math.exp(logs[i] - top)
        scale = math.exp(-top) if top < 700.0 else 0.0
        for i in range(n_p):
            w = math.exp(logs[i] - top)
            maha = 2.0 * (log_norm - logs[i])
            if maha < 0.0:
                maha = 0.0
            r = math.sqrt(maha)
            radfac = scale * _radial_kernel_core(d, r) * rad_norm
            if full:
                for s in range(m):
                    c = chan_coord[s]
                    poly = 0.0
                    for k in range(p):
                        poly += ktilde[i, s, k] * herm[k, c]
                    coef = (hbar[s] - C[i, s]) * radfac
                    for l in range(d):
                        val = coef * (queries[n, l] - Xp[i, l])
                        if l == c:
                            val += w * poly
                        out_full[n, l, s] += val / W
            else:
                srad = 0.0
                for s in range(m):
                    c = chan_coord[s]
                    poly = 0.0
                    for k in range(p):
                        poly += ktilde[i, s, k] * herm[k, c]
                    out_apply[n, c] += w * poly * V[n, s] / W
                    srad += (hbar[s] - C[i, s]) * V[n, s]
                coef = radfac * srad / W
                for l in range(d):
                    out_apply[n, l] += coef * (queries[n, l] - Xp[i, l])


def _gain_eval_np(queries, Xp, inv_eps, log_norm, rad_norm, ktilde, chan_coord, C, hbar, V=None):
    n_q, d = queries.shape
    n_p = Xp.shape[0]
    m = chan_coord.shape[0]
    p = ktilde.shape[2]
    delta = queries[:, None, :] - Xp[None, :, :]  # (Nq, Np, d)
    maha = np.einsum("nil,l->ni", delta * delta, inv_eps)
    logs = log_norm - 0.5 * maha
    top = logs.max(axis=1)
    usable = top >= _LOG_UNDERFLOW
    w = np.exp(logs - top[:, None])
    W = w.sum(axis=1)
    scale = np.where(top < 700.0, np.exp(-np.minimum(top, 700.0)), 0.0)
    r = np.sqrt(np.maximum(maha, 0.0))
    G = radial_kernel_vec(d, r.ravel()).reshape(r.shape)
    radfac = scale[:, None] * G * rad_norm  # (Nq, Np)
    herm = np.ones((max(p, 1), n_q, d))
    if p >= 2:
        herm[1] = 2.0 * queries
    for k in range(1, p - 1):
        herm[k + 1] = 2.0 * queries * herm[k] - 2.0 * k * herm[k - 1]
    # poly[n, i, s]: per-channel polynomial part at the channel coordinate
    poly = np.zeros((n_q, n_p, m))
    for s in range(m):
        c = chan_coord[s]
        for k in range(p):
            poly[:, :, s] += ktilde[None, :, s, k] * herm[k, :, c][:, None]
    hmc = hbar[None, None, :] - C[None, :, :]  # (1, Np, m)
    if V is None:
        out = np.zeros((n_q, d, m))
        for s in range(m):
            c = chan_coord[s]
            out[:, c, s] += np.sum(w * poly[:, :, s], axis=1)
            out[:, :, s] += np.einsum("ni,nil->nl", radfac * hmc[:, :, s], delta)
        out /= W[:, None, None]
    else:
        out = np.zeros((n_q, d))
        srad = np.einsum("nis,ns->ni", np.broadcast_to(hmc, (n_q, n_p, m)), V)
        out += np.einsum("ni,nil->nl", radfac * srad, delta)
        contrib = np.einsum("ni,nis,ns->nis", w, poly, V)
        for s in range(m):
            out[:, chan_coord[s]] += contrib[:, :, s].sum(axis=1)
        out /= W[:, None]
    if not np.all(usable):
        # far-field fallback: nearest component only
        for n in np.nonzero(~usable)[0]:
            i0 = int(np.argmax(logs[n]))
            ratio = math.exp(min(-logs[n, i0], 700.0)) * float(G[n, i0]) * rad_norm
            vals = np.zeros((d, m))
            for s in range(m):
                vals[:, s] = (hbar[s] - C[i0, s]) * ratio * delta[n, i0]
                vals[chan_coord[s], s] += poly[n, i0, s]
            if V is None:
                out[n] = vals
            else:
                out[n] = vals @ V[n]
    return out


def gain_full_percoord(queries, Xp, eps, ktilde, chan_coord, C, hbar):
    """Full K(x) as (Nq, d, m) for packed per-coordinate coefficients."""
    queries = np.ascontiguousarray(queries, dtype=float)
    d = queries.shape[1]
    inv_eps = 1.0 / eps
    log_norm = -0.5 * float(np.sum(np.log(2.0 * np.pi * eps)))
    rad_norm = 1.0 / (2.0 * np.pi ** (0.5 * d) * math.sqrt(float(np.prod(eps))))
    if NUMBA_ENABLED:
        n_q = queries.shape[0]
        m = chan_coord.shape[0]
        out_full = np.zeros((n_q, d, m))
        dummy_v = np.zeros((1, 1))
        dummy_a = np.zeros((1, 1))
        gain_eval_nb(
            queries, Xp, inv_eps, log_norm, rad_norm, ktilde, chan_coord, C, hbar,
            dummy_v, True, out_full, dummy_a,
        )
        return out_full
    return _gain_eval_np(queries, Xp, inv_eps, log_norm, rad_norm, ktilde, chan_coord, C, hbar)


def gain_apply_percoord(queries, Xp, eps, ktilde, chan_coord, C, hbar, V):
    """K(x_n) @ V_n for every query row, as (Nq, d)."""
    queries = np.ascontiguousarray(queries, dtype=float)
    V = np.ascontiguousarray(V, dtype=float)
    d = queries.shape[1]
    inv_eps = 1.0 / eps
    log_norm = -0.5 * float(np.sum(np.log(2.0 * np.pi * eps)))
    rad_norm = 1.0 / (2.0 * np.pi ** (0.5 * d) * math.sqrt(float(np.prod(eps))))
    if NUMBA_ENABLED:
        n_q = queries.shape[0]
        out_apply = np.zeros((n_q, d))
        dummy_f = np.zeros((1, 1, 1))
        gain_eval_nb(
            queries, Xp, inv_eps, log_norm, rad_norm, ktilde, chan_coord, C, hbar,
            V, False, dummy_f, out_apply,
        )
        return out_apply
    return _gain_eval_np(queries, Xp, inv_eps, log_norm, rad_norm, ktilde, chan_coord, C, hbar, V=V)


# ---------------------------------------------------------------------------
# per-coordinate (decoupled) assembly: channel s is the scalar mixture gain
# on its own coordinate, with the 1-d erf transport


@maybe_njit(cache=True, nogil=True)
def gain_eval_percoord1d_nb(queries, Xp, eps_chan, ktilde, chan_coord, C, hbar, V, full, out_full, out_apply):
    n_q = queries.shape[0]
    n_p = Xp.shape[0]
    m = chan_coord.shape[0]
    p = ktilde.shape[2]
    herm = np.empty(max(p, 1))
    for n in range(n_q):
        for s in range(m):
            c = chan_coord[s]
            x = queries[n, c]
            if p >= 1:
                herm[0] = 1.0
            if p >= 2:
                herm[1] = 2.0 * x
            for k in range(1, p - 1):
                herm[k + 1] = 2.0 * x * herm[k] - 2.0 * k * herm[k - 1]
            eps = eps_chan[s]
            norm = 1.0 / math.sqrt(2.0 * math.pi * eps)
            num = 0.0
            den = 0.0
            for i in range(n_p):
                delta = x - Xp[i, c]
                w = norm * math.exp(-0.5 * delta * delta / eps)
                poly = 0.0
                for k in range(p):
                    poly += ktilde[i, s, k] * herm[k]
                num += w * poly + 0.5 * (hbar[s] - C[i, s]) * math.erf(
                    delta / math.sqrt(2.0 * eps)
                )
                den += w
            val = num / den
            if full:
                out_full[n, c, s] = val
            else:
                out_apply[n, c] += val * V[n, s]


def _gain_eval_percoord1d_np(queries, Xp, eps_chan, ktilde, chan_coord, C, hbar, V=None):
    n_q = queries.shape[0]
    n_p = Xp.shape[0]
    m = chan_coord.shape[0]
    p = ktilde.shape[2]
    d = queries.shape[1]
    out = np.zeros((n_q, d, m)) if V is None else np.zeros((n_q, d))
    for s in range(m):
        c = chan_coord[s]
        x = queries[:, c]
        eps = eps_chan[s]
        herm = np.ones((max(p, 1), n_q))
        if p >= 2:
            herm[1] = 2.0 * x
        for k in range(1, p - 1):
            herm[k + 1] = 2.0 * x * herm[k] - 2.0 * k * herm[k - 1]
        poly = np.einsum("kn,ik->ni", herm[:p], ktilde[:, s, :]) if p else np.zeros((n_q, n_p))
        delta = x[:, None] - Xp[None, :, c]
        w = np.exp(-0.5 * delta**2 / eps) / np.sqrt(2.0 * np.pi * eps)
        num = np.sum(w * poly, axis=1) + np.sum(
            0.5 * (hbar[s] - C[None, :, s]) * sps.erf(delta / np.sqrt(2.0 * eps)), axis=1
        )
        val = num / w.sum(axis=1)
        if V is None:
            out[:, c, s] = val
        else:
            out[:, c] += val * V[:, s]
    return out


def gain_full_percoord1d(queries, Xp, eps, ktilde, chan_coord, C, hbar):
    queries = np.ascontiguousarray(queries, dtype=float)
    eps_chan = np.ascontiguousarray(np.asarray(eps, dtype=float)[chan_coord])
    if NUMBA_ENABLED:
        out_full = np.zeros((queries.shape[0], queries.shape[1], chan_coord.shape[0]))
        dummy_v = np.zeros((1, 1))
        dummy_a = np.zeros((1, 1))
        gain_eval_percoord1d_nb(
            queries, Xp, eps_chan, ktilde, chan_coord, C, hbar, dummy_v, True, out_full, dummy_a
        )
        return out_full
    return _gain_eval_percoord1d_np(queries, Xp, eps_chan, ktilde, chan_coord, C, hbar)


def gain_apply_percoord1d(queries, Xp, eps, ktilde, chan_coord, C, hbar, V):
    queries = np.ascontiguousarray(queries, dtype=float)
    V = np.ascontiguousarray(V, dtype=float)
    eps_chan = np.ascontiguousarray(np.asarray(eps, dtype=float)[chan_coord])
    if NUMBA_ENABLED:
        out_apply = np.zeros_like(queries)
        dummy_f = np.zeros((1, 1, 1))
        gain_eval_percoord1d_nb(
            queries, Xp, eps_chan, ktilde, chan_coord, C, hbar, V, False, dummy_f, out_apply
        )
        return out_apply
    return _gain_eval_percoord1d_np(queries, Xp, eps_chan, ktilde, chan_coord, C, hbar, V=V)


# ---------------------------------------------------------------------------
# general dense-level backward recursion, diagonal precision


def build_level_maps(index_set):
    """Neighbor position tables for the dense-level solver.

    up1[t, m] = position of k_t + e_m (levels 0..p-1, else -1)
    up2[t, l] = position of k_t + 2 e_l (levels 0..p-2, else -1)
    """
    idx = index_set.indices
    n, d = idx.shape
    p = index_set.p
    up1 = np.full((n, d), -1, dtype=np.int64)
    up2 = np.full((n, d), -1, dtype=np.int64)
    for t in range(n):
        k = idx[t]
        deg = int(k.sum())
        for l in range(d):
            if deg + 1 <= p:
                kk = k.copy()
                kk[l] += 1
                up1[t, l] = index_set.position(tuple(kk))
            if deg + 2 <= p:
                kk = k.copy()
                kk[l] += 2
                up2[t, l] = index_set.position(tuple(kk))
    return up1, up2


@maybe_njit(cache=True, nogil=True)
def solve_generic_diag_nb(Xp, inv_eps, a_dense, indices, offsets, up1, up2, spos):
    """Dense-level backward solve for diagonal precision; extracts the
    per-coordinate K-tilde support listed in spos (m, p)."""
    n_p, d = Xp.shape
    m, n = a_dense.shape
    p = offsets.shape[0] - 2
    adiag = np.zeros(n)
    for t in range(n):
        for l in range(d):
            adiag[t] += indices[t, l] * inv_eps[l]
    ktilde = np.zeros((n_p, m, p))
    C = np.zeros((n_p, m))
    phi = np.zeros(n)
    sx = np.zeros(d)
    for i in range(n_p):
        for l in range(d):
            sx[l] = inv_eps[l] * Xp[i, l]
        for s in range(m):
            for t in range(n):
                phi[t] = 0.0
            for q in range(p, 0, -1):
                for t in range(offsets[q], offsets[q + 1]):
                    rhs = a_dense[s, t]
                    if q + 1 <= p:
                        for mm in range(d):
                            rhs += 2.0 * (indices[t, mm] + 1) * sx[mm] * phi[up1[t, mm]]
                    if q + 2 <= p:
                        for l in range(d):
                            rhs += (
                                2.0
                                * (2.0 - inv_eps[l])
                                * (indices[t, l] + 1)
                                * (indices[t, l] + 2)
                                * phi[up2[t, l]]
                            )
                    phi[t] = rhs / adiag[t]
            const = a_dense[s, 0]
            if p >= 1:
                for mm in range(d):
                    const += 2.0 * sx[mm] * phi[up1[0, mm]]
            if p >= 2:
                for l in range(d):
                    const += 4.0 * (2.0 - inv_eps[l]) * phi[up2[0, l]]
            C[i, s] = const
            for k in range(p):
                ktilde[i, s, k] = 2.0 * (k + 1) * phi[spos[s, k]]
    return ktilde, C


def solve_generic_diag_np(Xp, inv_eps, a_dense, indices, offsets, up1, up2, spos):
    n_p, d = Xp.shape
    m, n = a_dense.shape
    p = offsets.shape[0] - 2
    adiag = indices @ inv_eps
    ktilde = np.zeros((n_p, m, p))
    C = np.zeros((n_p, m))
    SX = Xp * inv_eps[None, :]  # (Np, d)
    for s in range(m):
        phi = np.zeros((n_p, n))
        for q in range(p, 0, -1):
            sl = slice(int(offsets[q]), int(offsets[q + 1]))
            rhs = np.broadcast_to(a_dense[s, sl], (n_p, sl.stop - sl.start)).copy()
            if q + 1 <= p:
                for mm in range(d):
                    rhs += 2.0 * (indices[sl, mm] + 1)[None, :] * SX[:, mm : mm + 1] * phi[:, up1[sl, mm]]
            if q + 2 <= p:
                for l in range(d):
                    rhs += (
                        2.0
                        * (2.0 - inv_eps[l])
                        * ((indices[sl, l] + 1) * (indices[sl, l] + 2))[None, :]
                        * phi[:, up2[sl, l]]
                    )
            phi[:, sl] = rhs / adiag[sl][None, :]
        const = np.full(n_p, a_dense[s, 0])
        if p >= 1:
            for mm in range(d):
                const += 2.0 * SX[:, mm] * phi[:, up1[0, mm]]
        if p >= 2:
            for l in range(d):
                const += 4.0 * (2.0 - inv_eps[l]) * phi[:, up2[0, l]]
        C[:, s] = const
        for k in range(p):
            ktilde[:, s, k] = 2.0 * (k + 1) * phi[:, spos[s, k]]
    return ktilde, C


def solve_generic_diag(Xp, inv_eps, a_dense, indices, offsets, up1, up2, spos):
    if NUMBA_ENABLED:
        return solve_generic_diag_nb(Xp, inv_eps, a_dense, indices, offsets, up1, up2, spos)
    return solve_generic_diag_np(Xp, inv_eps, a_dense, indices, offsets, up1, up2, spos)


# ---------------------------------------------------------------------------
# kernel-based gain (semigroup fixed point on a bi-normalized Gaussian kernel)


@maybe_njit(cache=True, nogil=True)
def kernel_gain_nb(Xp, h, hbar, eps_k, t_iter):
    n_p, d = Xp.shape
    m = h.shape[1]
    G = np.empty((n_p, n_p))
    for i in range(n_p):
        for j in range(n_p):
            acc = 0.0
            for l in range(d):
                delta = Xp[i, l] - Xp[j, l]
                acc += delta * delta
            G[i, j] = math.exp(-acc / (4.0 * eps_k))
    deg = np.zeros(n_p)
    for i in range(n_p):
        for j in range(n_p):
            deg[i] += G[i, j]
    status = -1
    for i in range(n_p):
        if not (deg[i] > 1e-300):  # catches underflow to 0 and non-finite rows
            status = i
    gains = np.zeros((n_p, d, m))
    if status >= 0:
        return gains, status
    T = np.empty((n_p, n_p))
    for i in range(n_p):
        rowsum = 0.0
        for j in range(n_p):
            T[i, j] = G[i, j] / math.sqrt(deg[i] * deg[j])
            rowsum += T[i, j]
        for j in range(n_p):
            T[i, j] /= rowsum
    phi = np.zeros((n_p, m))
    src = np.empty((n_p, m))
    for i in range(n_p):
        for s in range(m):
            src[i, s] = eps_k * (h[i, s] - hbar[s])
    for _ in range(t_iter):
        phi = np.dot(T, phi) + src
    psi = np.empty((n_p, m))
    for i in range(n_p):
        for s in range(m):
            psi[i, s] = phi[i, s] + eps_k * h[i, s]
    xbar = np.dot(T, Xp)  # (Np, d)
    for i in range(n_p):
        for j in range(n_p):
            t_ij = T[i, j]
            for s in range(m):
                coef = t_ij * psi[j, s] / (2.0 * eps_k)
                for l in range(d):
                    gains[i, l, s] += coef * (Xp[j, l] - xbar[i, l])
    return gains, status


def kernel_gain_np(Xp, h, hbar, eps_k, t_iter):
    n_p = Xp.shape[0]
    delta2 = ((Xp[:, None, :] - Xp[None, :, :]) ** 2).sum(axis=2)
    G = np.exp(-delta2 / (4.0 * eps_k))
    deg = G.sum(axis=1)
    bad = np.nonzero(~(deg > 1e-300))[0]
    if bad.size:
        return np.zeros((n_p, Xp.shape[1], h.shape[1])), int(bad[-1])
    Kt = G / np.sqrt(np.outer(deg, deg))
    T = Kt / Kt.sum(axis=1, keepdims=True)
    phi = np.zeros_like(h)
    src = eps_k * (h - hbar[None, :])
    for _ in range(t_iter):
        phi = T @ phi + src
    psi = phi + eps_k * h
    xbar = T @ Xp
    centered = Xp[None, :, :] - xbar[:, None, :]  # (i, j, d)
    gains = np.einsum("ij,ijl,js->ils", T, centered, psi) / (2.0 * eps_k)
    return gains, -1


def kernel_gain(Xp, h, hbar, eps_k, t_iter):
    Xp = np.ascontiguousarray(Xp, dtype=float)
    h = np.ascontiguousarray(h, dtype=float)
    hbar = np.ascontiguousarray(hbar, dtype=float)
    if NUMBA_ENABLED:
        return kernel_gain_nb(Xp, h, hbar, float(eps_k), int(t_iter))
    return kernel_gain_np(Xp, h, hbar, float(eps_k), int(t_iter))


def kernel_markov_matrix(Xp, eps_k):
    """The bi-normalized Markov matrix alone (row sums are 1)."""
    delta2 = ((Xp[:, None, :] - Xp[None, :, :]) ** 2).sum(axis=2)
    G = np.exp(-delta2 / (4.0 * eps_k))
    deg = G.sum(axis=1)
    Kt = G / np.sqrt(np.outer(deg, deg))
    return Kt / Kt.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# mixture log weights (helper shared by tests and the numpy paths)


def logw_shared_diag(queries, Xp, eps):
    queries = np.asarray(queries, dtype=float)
    Xp = np.asarray(Xp, dtype=float)
    eps = np.asarray(eps, dtype=float)
    log_norm = -0.5 * float(np.sum(np.log(2.0 * np.pi * eps)))
    delta = queries[:, None, :] - Xp[None, :, :]
    maha = np.einsum("nil,l->ni", delta * delta, 1.0 / eps)
    return log_norm - 0.5 * maha
