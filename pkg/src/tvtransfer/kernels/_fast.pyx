# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled counterparts of the reference kernels in ``_reference.py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()


def rbf_features(states, centers, inv_two_bw2):
    states = np.ascontiguousarray(states, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    inv_two_bw2 = np.ascontiguousarray(inv_two_bw2, dtype=np.float64)
    cdef double[:, ::1] s = states
    cdef double[:, ::1] c = centers
    cdef double[::1] w = inv_two_bw2
    cdef Py_ssize_t n = s.shape[0], f = c.shape[0], d = s.shape[1]
    out = np.empty((n, f), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(f):
            acc = 0.0
            for k in range(d):
                diff = s[i, k] - c[j, k]
                acc += diff * diff * w[k]
            o[i, j] = exp(-acc)
    return out


def adam_update(m, v, params, grad, t, double alpha, double beta1,
                double beta2, double eps):
    """One bias-corrected ADAM update, in place on m, v and params."""
    cdef double[::1] mv = m.ravel()
    cdef double[::1] vv = v.ravel()
    cdef double[::1] pv = params.ravel()
    cdef double[::1] gv = np.ascontiguousarray(grad, dtype=np.float64).ravel()
    cdef Py_ssize_t n = mv.shape[0], i
    if vv.shape[0] != n or pv.shape[0] != n or gv.shape[0] != n:
        raise ValueError("shape mismatch")
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double a1 = alpha / c1
    cdef double g
    for i in range(n):
        g = gv[i]
        mv[i] = beta1 * mv[i] + (1.0 - beta1) * g
        vv[i] = beta2 * vv[i] + (1.0 - beta2) * g * g
        pv[i] -= a1 * mv[i] / (sqrt(vv[i] / c2) + eps)


def td_loss_grad_multi(phi_s, actions, rewards, phi_sp, nonterm,
                       thetas, double gamma, double omega, double proj):
    phi_s = np.ascontiguousarray(phi_s, dtype=np.float64)
    phi_sp = np.ascontiguousarray(phi_sp, dtype=np.float64)
    actions = np.ascontiguousarray(actions, dtype=np.int64)
    rewards = np.ascontiguousarray(rewards, dtype=np.float64)
    nonterm = np.ascontiguousarray(nonterm, dtype=np.float64)
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)

    cdef double[:, ::1] ps = phi_s
    cdef double[:, ::1] psp = phi_sp
    cdef cnp.int64_t[::1] act = actions
    cdef double[::1] rew = rewards
    cdef double[::1] nt = nonterm
    cdef double[:, :, ::1] th = thetas
    cdef Py_ssize_t n = ps.shape[0], f = ps.shape[1]
    cdef Py_ssize_t t = th.shape[0], a = th.shape[1]

    losses = np.zeros(t, dtype=np.float64)
    grads = np.zeros((t, a, f), dtype=np.float64)
    cdef double[::1] lo = losses
    cdef double[:, :, ::1] gr = grads

    qs_arr = np.empty(a, dtype=np.float64)
    qsp_arr = np.empty(a, dtype=np.float64)
    soft_arr = np.empty(a, dtype=np.float64)
    cdef double[::1] qs = qs_arr
    cdef double[::1] qsp = qsp_arr
    cdef double[::1] soft = soft_arr

    cdef Py_ssize_t i, j, k, m, ai
    cdef double acc, qmax, sumex, mm, b, wn, wc, scale
    scale = 2.0 / n
    for i in range(n):
        ai = act[i]
        for m in range(t):
            for j in range(a):
                acc = 0.0
                for k in range(f):
                    acc += th[m, j, k] * psp[i, k]
                qsp[j] = acc
            acc = 0.0
            for k in range(f):
                acc += th[m, ai, k] * ps[i, k]
            qs[ai] = acc

            qmax = qsp[0]
            for j in range(1, a):
                if qsp[j] > qmax:
                    qmax = qsp[j]
            sumex = 0.0
            for j in range(a):
                soft[j] = exp(omega * (qsp[j] - qmax))
                sumex += soft[j]
            mm = qmax + log(sumex / a) / omega
            for j in range(a):
                soft[j] /= sumex

            b = rew[i] + gamma * mm * nt[i] - qs[ai]
            lo[m] += b * b / n

            wn = scale * gamma * proj * b * nt[i]
            wc = scale * b
            if wn != 0.0:
                for j in range(a):
                    acc = wn * soft[j]
                    for k in range(f):
                        gr[m, j, k] += acc * psp[i, k]
            for k in range(f):
                gr[m, ai, k] -= wc * ps[i, k]
    return losses, grads
