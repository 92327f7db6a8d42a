# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled layered-propagation kernels (same contract as ``_kernels_py``).

Complex data are handled as split real/imaginary planes and the propagated
fields are kept transposed (one contiguous row per antenna column or user)
so every inner loop is a unit-stride dot product.  The coupling matrices are
split once per channel in ``Propagator``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _step(const double[:, ::1] qr, const double[:, ::1] qi,
                const double[::1] tr, const double[::1] ti,
                const double[:, ::1] vr, const double[:, ::1] vi,
                double[:, ::1] sr, double[:, ::1] si,
                double[:, ::1] dr, double[:, ::1] di) noexcept nogil:
    # rows of d = Q diag(t) v ; s is scratch
    cdef Py_ssize_t M = qr.shape[0], R = vr.shape[0]
    cdef Py_ssize_t m, mp, j
    cdef double accr, acci
    for j in range(R):
        for mp in range(M):
            sr[j, mp] = tr[mp] * vr[j, mp] - ti[mp] * vi[j, mp]
            si[j, mp] = tr[mp] * vi[j, mp] + ti[mp] * vr[j, mp]
    for j in range(R):
        for m in range(M):
            accr = 0.0
            acci = 0.0
            for mp in range(M):
                accr = accr + qr[m, mp] * sr[j, mp] - qi[m, mp] * si[j, mp]
                acci = acci + qr[m, mp] * si[j, mp] + qi[m, mp] * sr[j, mp]
            dr[j, m] = accr
            di[j, m] = acci


cdef void _back(const double[:, ::1] qtr, const double[:, ::1] qti,
                const double[::1] tr, const double[::1] ti,
                const double[:, ::1] xr, const double[:, ::1] xi,
                double[:, ::1] sr, double[:, ::1] si,
                double[:, ::1] dr, double[:, ::1] di) noexcept nogil:
    # rows of d = Q^H diag(conj t) x, qt = Q^T ; s is scratch
    cdef Py_ssize_t M = qtr.shape[0], R = xr.shape[0]
    cdef Py_ssize_t m, mp, k
    cdef double accr, acci
    for k in range(R):
        for mp in range(M):
            sr[k, mp] = tr[mp] * xr[k, mp] + ti[mp] * xi[k, mp]
            si[k, mp] = tr[mp] * xi[k, mp] - ti[mp] * xr[k, mp]
    for k in range(R):
        for m in range(M):
            accr = 0.0
            acci = 0.0
            for mp in range(M):
                # conj(Q[mp, m]) * s[mp]
                accr = accr + qtr[m, mp] * sr[k, mp] + qti[m, mp] * si[k, mp]
                acci = acci + qtr[m, mp] * si[k, mp] - qti[m, mp] * sr[k, mp]
            dr[k, m] = accr
            di[k, m] = acci


cdef class Propagator:
    cdef double[:, :, ::1] qr, qi, qtr, qti
    cdef double[:, ::1] q1r, q1i, hr, hi
    cdef readonly Py_ssize_t L, M, N, K

    def __init__(self, Q1, Qs, H):
        Q1 = np.asarray(Q1)
        Qs = np.asarray(Qs)
        H = np.asarray(H)
        self.M, self.N = Q1.shape
        self.K = H.shape[1]
        self.L = Qs.shape[0] + 1
        self.qr = np.ascontiguousarray(Qs.real, dtype=np.float64)
        self.qi = np.ascontiguousarray(Qs.imag, dtype=np.float64)
        self.qtr = np.ascontiguousarray(np.swapaxes(Qs.real, 1, 2), dtype=np.float64)
        self.qti = np.ascontiguousarray(np.swapaxes(Qs.imag, 1, 2), dtype=np.float64)
        self.q1r = np.ascontiguousarray(Q1.real.T, dtype=np.float64)
        self.q1i = np.ascontiguousarray(Q1.imag.T, dtype=np.float64)
        self.hr = np.ascontiguousarray(H.real.T, dtype=np.float64)
        self.hi = np.ascontiguousarray(H.imag.T, dtype=np.float64)

    cdef _fields(self, double[:, ::1] tr, double[:, ::1] ti,
                 double[:, :, ::1] Vr, double[:, :, ::1] Vi):
        cdef double[:, ::1] sr = np.empty((self.N, self.M))
        cdef double[:, ::1] si = np.empty((self.N, self.M))
        cdef Py_ssize_t ell
        with nogil:
            Vr[0, :, :] = self.q1r
            Vi[0, :, :] = self.q1i
            for ell in range(self.L - 1):
                _step(self.qr[ell], self.qi[ell], tr[ell], ti[ell],
                      Vr[ell], Vi[ell], sr, si, Vr[ell + 1], Vi[ell + 1])

    def forward(self, theta):
        theta = np.asarray(theta)
        cdef double[:, ::1] tr = np.ascontiguousarray(theta.real, dtype=np.float64)
        cdef double[:, ::1] ti = np.ascontiguousarray(theta.imag, dtype=np.float64)
        cdef Py_ssize_t L = self.L, M = self.M, N = self.N, K = self.K
        cdef double[:, :, ::1] Vr = np.empty((L, N, M))
        cdef double[:, :, ::1] Vi = np.empty((L, N, M))
        self._fields(tr, ti, Vr, Vi)
        out_np = np.empty((K, N), dtype=np.complex128)
        cdef double complex[:, ::1] out = out_np
        cdef double[::1] wr = np.empty(M)
        cdef double[::1] wi = np.empty(M)
        cdef Py_ssize_t m, k, j
        cdef double accr, acci
        with nogil:
            for k in range(K):
                for m in range(M):
                    # conj(h) * t
                    wr[m] = self.hr[k, m] * tr[L - 1, m] + self.hi[k, m] * ti[L - 1, m]
                    wi[m] = self.hr[k, m] * ti[L - 1, m] - self.hi[k, m] * tr[L - 1, m]
                for j in range(N):
                    accr = 0.0
                    acci = 0.0
                    for m in range(M):
                        accr = accr + wr[m] * Vr[L - 1, j, m] - wi[m] * Vi[L - 1, j, m]
                        acci = acci + wr[m] * Vi[L - 1, j, m] + wi[m] * Vr[L - 1, j, m]
                    out[k, j] = accr + 1j * acci
        return out_np

    def gradient(self, theta, C):
        theta = np.asarray(theta)
        C = np.asarray(C)
        cdef double[:, ::1] tr = np.ascontiguousarray(theta.real, dtype=np.float64)
        cdef double[:, ::1] ti = np.ascontiguousarray(theta.imag, dtype=np.float64)
        cdef double[:, ::1] cr = np.ascontiguousarray(C.real, dtype=np.float64)
        cdef double[:, ::1] ci = np.ascontiguousarray(C.imag, dtype=np.float64)
        cdef Py_ssize_t L = self.L, M = self.M, N = self.N, K = self.K
        cdef double[:, :, ::1] Vr = np.empty((L, N, M))
        cdef double[:, :, ::1] Vi = np.empty((L, N, M))
        self._fields(tr, ti, Vr, Vi)
        cdef double[:, ::1] xr = np.empty((K, M))
        cdef double[:, ::1] xi = np.empty((K, M))
        cdef double[:, ::1] yr = np.empty((K, M))
        cdef double[:, ::1] yi = np.empty((K, M))
        cdef double[:, ::1] sr = np.empty((K, M))
        cdef double[:, ::1] si = np.empty((K, M))
        cdef double[:, ::1] pr = np.empty((N, M))
        cdef double[:, ::1] pi = np.empty((N, M))
        cdef double[:, ::1] swap
        grad_np = np.empty((L, M), dtype=np.complex128)
        cdef double complex[:, ::1] grad = grad_np
        cdef Py_ssize_t ell, m, k, j
        cdef double accr, acci, c_r, c_i
        with nogil:
            xr[:, :] = self.hr
            xi[:, :] = self.hi
            for ell in range(L - 1, -1, -1):
                # p[j, m] = sum_k x[k, m] C[k, j]
                pr[:, :] = 0.0
                pi[:, :] = 0.0
                for k in range(K):
                    for j in range(N):
                        c_r = cr[k, j]
                        c_i = ci[k, j]
                        for m in range(M):
                            pr[j, m] = pr[j, m] + xr[k, m] * c_r - xi[k, m] * c_i
                            pi[j, m] = pi[j, m] + xr[k, m] * c_i + xi[k, m] * c_r
                for m in range(M):
                    accr = 0.0
                    acci = 0.0
                    for j in range(N):
                        # p * conj(V)
                        accr = accr + pr[j, m] * Vr[ell, j, m] + pi[j, m] * Vi[ell, j, m]
                        acci = acci + pi[j, m] * Vr[ell, j, m] - pr[j, m] * Vi[ell, j, m]
                    grad[ell, m] = 2.0 * (accr + 1j * acci)
                if ell > 0:
                    _back(self.qtr[ell - 1], self.qti[ell - 1], tr[ell], ti[ell],
                          xr, xi, sr, si, yr, yi)
                    swap = xr
                    xr = yr
                    yr = swap
                    swap = xi
                    xi = yi
                    yi = swap
        return grad_np


def forward_amplitudes(theta, Q1, Qs, H):
    return Propagator(Q1, Qs, H).forward(theta)


def phase_gradient(theta, Q1, Qs, H, C):
    return Propagator(Q1, Qs, H).gradient(theta, C)
