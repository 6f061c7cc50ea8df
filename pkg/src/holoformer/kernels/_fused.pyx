# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled fused attention kernel.

The two dense products (correlation and value mixing) go through numpy's
BLAS; everything between them -- phase extraction, similarity, the decay
gate, row softmax and the complex mixing matrix -- runs as one C pass over
the T x T grid with no temporaries.  Semantics match
holoformer.kernels.numpy_backend exactly; that module remains the fallback
when this extension is not built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, exp, sqrt, fabs, cos, sin, pi

cnp.import_array()


def attention_forward(q, k, v, double alpha, double eps, double scale,
                      bint phase_decay, bint coherent_sum):
    """Fused phase-aware attention forward pass on T x d complex arrays.

    Returns (correlation, phase_diff, similarity, scores, weights, output).
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] qa = np.ascontiguousarray(q, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] ka = np.ascontiguousarray(k, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] va = np.ascontiguousarray(v, dtype=np.complex128)

    cdef Py_ssize_t T = qa.shape[0]
    cdef Py_ssize_t d = qa.shape[1]

    cdef cnp.ndarray[cnp.complex128_t, ndim=2] corr = np.dot(qa, ka.conj().T)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dphi = np.empty((T, T), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sim = np.empty((T, T), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] scores = np.empty((T, T), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] weights = np.empty((T, T), dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] mix = np.empty((T, T), dtype=np.complex128)

    cdef double complex[:, ::1] Q = qa
    cdef double complex[:, ::1] K = ka
    cdef double complex[:, ::1] S = corr
    cdef double[:, ::1] P = dphi
    cdef double[:, ::1] M = sim
    cdef double[:, ::1] W = scores
    cdef double[:, ::1] A = weights
    cdef double complex[:, ::1] X = mix

    cdef cnp.ndarray[cnp.float64_t, ndim=1] qn_arr = np.empty(T, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kn_arr = np.empty(T, dtype=np.float64)
    cdef double[::1] qn = qn_arr
    cdef double[::1] kn = kn_arr

    cdef Py_ssize_t i, j, c
    cdef double acc, a, w, mx, z, re, im
    cdef double complex s

    with nogil:
        for i in range(T):
            acc = 0.0
            for c in range(d):
                re = Q[i, c].real
                im = Q[i, c].imag
                acc += re * re + im * im
            qn[i] = sqrt(acc)
            acc = 0.0
            for c in range(d):
                re = K[i, c].real
                im = K[i, c].imag
                acc += re * re + im * im
            kn[i] = sqrt(acc)

        for i in range(T):
            for j in range(T):
                s = S[i, j]
                if s.real == 0.0 and s.imag == 0.0:
                    a = 0.0
                else:
                    a = atan2(s.imag, s.real)
                    if a <= -pi:
                        a += 2.0 * pi
                P[i, j] = a
                M[i, j] = s.real / (qn[i] * kn[j] + eps)
                w = M[i, j] * scale
                if phase_decay:
                    w *= exp(-alpha * fabs(a))
                W[i, j] = w

        for i in range(T):
            mx = W[i, 0]
            for j in range(1, T):
                if W[i, j] > mx:
                    mx = W[i, j]
            z = 0.0
            for j in range(T):
                A[i, j] = exp(W[i, j] - mx)
                z += A[i, j]
            for j in range(T):
                A[i, j] /= z
                if coherent_sum:
                    X[i, j].real = A[i, j] * cos(P[i, j])
                    X[i, j].imag = A[i, j] * sin(P[i, j])
                else:
                    X[i, j].real = A[i, j]
                    X[i, j].imag = 0.0

    out = np.dot(mix, va)
    return corr, dphi, sim, scores, weights, out


def attention_output(q, k, v, double alpha, double eps, double scale,
                     bint phase_decay, bint coherent_sum):
    """Output-only forward pass: the fused stage overwrites the correlation
    buffer with the complex mixing matrix and never materializes the trace."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] qa = np.ascontiguousarray(q, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] ka = np.ascontiguousarray(k, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] va = np.ascontiguousarray(v, dtype=np.complex128)

    cdef Py_ssize_t T = qa.shape[0]
    cdef Py_ssize_t d = qa.shape[1]

    cdef cnp.ndarray[cnp.complex128_t, ndim=2] corr = np.dot(qa, ka.conj().T)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wrow_arr = np.empty(T, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arow_arr = np.empty(T, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] qn_arr = np.empty(T, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kn_arr = np.empty(T, dtype=np.float64)

    cdef double complex[:, ::1] Q = qa
    cdef double complex[:, ::1] K = ka
    cdef double complex[:, ::1] S = corr
    cdef double[::1] wrow = wrow_arr
    cdef double[::1] arow = arow_arr
    cdef double[::1] qn = qn_arr
    cdef double[::1] kn = kn_arr

    cdef Py_ssize_t i, j, c
    cdef double acc, a, w, mx, z, re, im
    cdef double complex s

    with nogil:
        for i in range(T):
            acc = 0.0
            for c in range(d):
                re = Q[i, c].real
                im = Q[i, c].imag
                acc += re * re + im * im
            qn[i] = sqrt(acc)
            acc = 0.0
            for c in range(d):
                re = K[i, c].real
                im = K[i, c].imag
                acc += re * re + im * im
            kn[i] = sqrt(acc)

        for i in range(T):
            mx = -1e308
            for j in range(T):
                s = S[i, j]
                if s.real == 0.0 and s.imag == 0.0:
                    a = 0.0
                else:
                    a = atan2(s.imag, s.real)
                    if a <= -pi:
                        a += 2.0 * pi
                arow[j] = a
                w = s.real * scale / (qn[i] * kn[j] + eps)
                if phase_decay:
                    w *= exp(-alpha * fabs(a))
                wrow[j] = w
                if w > mx:
                    mx = w
            z = 0.0
            for j in range(T):
                wrow[j] = exp(wrow[j] - mx)
                z += wrow[j]
            for j in range(T):
                w = wrow[j] / z
                if coherent_sum:
                    S[i, j].real = w * cos(arow[j])
                    S[i, j].imag = w * sin(arow[j])
                else:
                    S[i, j].real = w
                    S[i, j].imag = 0.0

    return np.dot(corr, va)
