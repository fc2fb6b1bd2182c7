"""Compiled inner loops for SGD training and Metropolis annealing.

Inputs are plain numpy arrays; callers in :mod:`fmqubo.fm` and
:mod:`fmqubo.solvers` own validation.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def sample_gradient(active, y, w0, w, V, reg_w0, reg_w, reg_v):
    """Gradient of one sample's objective w.r.t. (w0, w[active], V[:, active]).

    Objective: 0.5 * (yhat - y)**2 + 0.5 * reg_w0 * w0**2
    + sum over active i of 0.5 * (reg_w * w_i**2 + reg_v * ||v_i||**2).
    """
    k = V.shape[0]
    nnz = active.shape[0]
    sums = np.zeros(k)
    sq = np.zeros(k)
    yhat = w0
    for a in range(nnz):
        i = active[a]
        yhat += w[i]
        for f in range(k):
            v = V[f, i]
            sums[f] += v
            sq[f] += v * v
    pair = 0.0
    for f in range(k):
        pair += sums[f] * sums[f] - sq[f]
    yhat += 0.5 * pair
    err = yhat - y

    g0 = err + reg_w0 * w0
    gw = np.empty(nnz)
    gV = np.empty((k, nnz))
    for a in range(nnz):
        i = active[a]
        gw[a] = err + reg_w * w[i]
        for f in range(k):
            gV[f, a] = err * (sums[f] - V[f, i]) + reg_v * V[f, i]
    return err, g0, gw, gV


@njit(cache=True)
def sgd_epoch(indptr, indices, y, order, params0, w, V, lr, reg_w0, reg_w, reg_v):
    """One pass of plain SGD over samples in ``order``; updates in place.

    ``params0`` is a length-1 array holding w0.
    """
    k = V.shape[0]
    for s in order:
        active = indices[indptr[s]:indptr[s + 1]]
        _, g0, gw, gV = sample_gradient(
            active, y[s], params0[0], w, V, reg_w0, reg_w, reg_v
        )
        params0[0] -= lr * g0
        for a in range(active.shape[0]):
            i = active[a]
            w[i] -= lr * gw[a]
            for f in range(k):
                V[f, i] -= lr * gV[f, a]


@njit(cache=True, nogil=True)
def anneal_shot(h, Jsym, spins, betas, uniforms):
    """Single-site Metropolis annealing of one spin configuration, in place.

    ``uniforms`` has shape (len(betas), n): one draw per attempted flip, site
    order 0..n-1 within every sweep.
    """
    n = h.shape[0]
    field = np.empty(n)
    for i in range(n):
        acc = h[i]
        for j in range(n):
            acc += Jsym[i, j] * spins[j]
        field[i] = acc
    for t in range(betas.shape[0]):
        beta = betas[t]
        for i in range(n):
            delta = -2.0 * spins[i] * field[i]
            if delta <= 0.0 or uniforms[t, i] < np.exp(-beta * delta):
                old = spins[i]
                spins[i] = -old
                step = -2.0 * old
                for j in range(n):
                    field[j] += Jsym[j, i] * step


@njit(cache=True)
def ising_energies(h, J, states):
    """Energies (offset excluded) for each row of a +/-1 state matrix."""
    m, n = states.shape
    out = np.empty(m)
    for r in range(m):
        e = 0.0
        for i in range(n):
            si = states[r, i]
            e += h[i] * si
            for j in range(i + 1, n):
                e += J[i, j] * si * states[r, j]
        out[r] = e
    return out
