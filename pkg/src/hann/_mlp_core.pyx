# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled MLP kernels; see _mlp_numpy.py for the layout contract.

Matrix products go through BLAS dgemm; the tanh / bias / masking epilogues
are fused C loops, which is where this wins over the numpy fallback.
"""

import numpy as np
from libc.math cimport tanh
from scipy.linalg.cython_blas cimport dgemm

BACKEND_NAME = "compiled"


cdef void _matmul(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c,
                  double beta) nogil:
    """c = a @ b (+ beta * c) for C-contiguous arrays via column-major dgemm.

    Row-major C = A B is computed as C^T = B^T A^T in Fortran order, so the
    arrays can be handed to dgemm untransposed with swapped roles.
    """
    cdef int m = b.shape[1]   # columns of C (rows of C^T)
    cdef int n = a.shape[0]   # rows of C
    cdef int k = a.shape[1]
    cdef double alpha = 1.0
    cdef char no = b'N'
    if m == 0 or n == 0:
        return
    dgemm(&no, &no, &m, &n, &k, &alpha, &b[0, 0], &m, &a[0, 0], &k,
          &beta, &c[0, 0], &m)


def mlp_forward(theta, sizes, tin):
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    t = np.ascontiguousarray(tin, dtype=np.float64)
    cdef int L = len(sizes) - 1
    cdef int B = t.shape[0]
    cdef int k, i, j, fan_in, fan_out
    cdef Py_ssize_t off = 0
    cdef double[:, ::1] pv, ov, wv

    prev = t.reshape(B, 1)
    acts = []
    out = None
    theta_arr = np.asarray(th)
    for k in range(L):
        fan_in = sizes[k]
        fan_out = sizes[k + 1]
        w = theta_arr[off:off + fan_in * fan_out].reshape(fan_in, fan_out)
        out = np.empty((B, fan_out))
        pv = prev
        ov = out
        wv = w
        with nogil:
            _matmul(pv, wv, ov, 0.0)
            if k < L - 1:
                for i in range(B):
                    for j in range(fan_out):
                        ov[i, j] = tanh(ov[i, j]
                                        + th[off + fan_in * fan_out + j])
            else:
                for i in range(B):
                    for j in range(fan_out):
                        ov[i, j] += th[off + fan_in * fan_out + j]
        off += fan_in * fan_out + fan_out
        if k < L - 1:
            acts.append(out)
        prev = out
    return out, acts


def mlp_backward(theta, sizes, tin, acts, gy):
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    t = np.ascontiguousarray(tin, dtype=np.float64)
    cdef int L = len(sizes) - 1
    cdef int B = t.shape[0]
    cdef int k, i, j, m, fan_in, fan_out
    cdef Py_ssize_t off = th.shape[0]
    cdef double s
    cdef double[:, ::1] dv, av, hv, nv, wgv, atv, wtv

    grad = np.zeros(th.shape[0])
    cdef double[::1] gv = grad
    delta = np.ascontiguousarray(gy, dtype=np.float64)
    theta_arr = np.asarray(th)

    inputs = [t.reshape(B, 1)] + list(acts)
    for k in range(L - 1, -1, -1):
        fan_in = sizes[k]
        fan_out = sizes[k + 1]
        off -= fan_in * fan_out + fan_out
        dv = delta
        av = np.ascontiguousarray(inputs[k], dtype=np.float64)
        # weight gradient: input^T @ delta, written straight into the slot
        wg = np.asarray(gv[off:off + fan_in * fan_out]) \
            .reshape(fan_in, fan_out)
        wgv = wg
        at = np.ascontiguousarray(np.asarray(av).T)
        atv = at
        with nogil:
            _matmul(atv, dv, wgv, 0.0)
            for j in range(fan_out):  # bias gradient: column sums of delta
                s = 0.0
                for i in range(B):
                    s += dv[i, j]
                gv[off + fan_in * fan_out + j] = s
        if k > 0:
            w = theta_arr[off:off + fan_in * fan_out] \
                .reshape(fan_in, fan_out)
            wt = np.ascontiguousarray(w.T)
            new_delta = np.empty((B, fan_in))
            nv = new_delta
            hv = np.ascontiguousarray(acts[k - 1], dtype=np.float64)
            wtv = wt
            with nogil:
                _matmul(dv, wtv, nv, 0.0)
                for i in range(B):
                    for m in range(fan_in):
                        nv[i, m] *= 1.0 - hv[i, m] * hv[i, m]
            delta = new_delta
    return grad
