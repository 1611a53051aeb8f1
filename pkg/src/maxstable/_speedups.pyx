# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stream: xoshiro256++ uniforms, ziggurat normals, C hot loops.

Implements the same primitive contracts and semantic draw counting as
``streams.NumpyStream`` (one Gaussian vector / exponential / uniform each
count one unit; early-exited scans count only what was consumed).  The
bit streams differ from the numpy backend, so results agree in law, not
bitwise.
"""

from libc.math cimport exp, fabs, log, sqrt
from libc.stdint cimport uint64_t
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

from .errors import NonTerminationError

cnp.import_array()

# Doornik's 128-block ziggurat for the standard normal.
cdef double ZIG_R = 3.442619855899
cdef double ZIG_V = 9.91256303526217e-3
cdef double _zx[129]
cdef double _zratio[128]

cdef void _init_zig() noexcept:
    cdef int i
    _zx[0] = ZIG_V / exp(-0.5 * ZIG_R * ZIG_R)
    _zx[1] = ZIG_R
    _zx[128] = 0.0
    for i in range(2, 128):
        _zx[i] = sqrt(-2.0 * log(ZIG_V / _zx[i - 1]
                                 + exp(-0.5 * _zx[i - 1] * _zx[i - 1])))
    for i in range(128):
        _zratio[i] = _zx[i + 1] / _zx[i]

_init_zig()

cdef double _INV53 = 1.0 / 9007199254740992.0  # 2^-53

cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef class CompiledStream:
    cdef uint64_t s0, s1, s2, s3
    cdef public long long n_gauss, n_exp, n_unif

    def __init__(self, state):
        s = np.asarray(state, dtype=np.uint64)
        if s.shape != (4,):
            raise ValueError("state must be four uint64 words")
        self.s0, self.s1, self.s2, self.s3 = int(s[0]), int(s[1]), int(s[2]), int(s[3])
        if not (self.s0 | self.s1 | self.s2 | self.s3):
            raise ValueError("state must not be all zero")
        self.n_gauss = 0
        self.n_exp = 0
        self.n_unif = 0

    @property
    def backend(self):
        return "compiled"

    @property
    def total_count(self):
        return self.n_gauss + self.n_exp + self.n_unif

    cdef inline uint64_t _next(self) noexcept nogil:
        cdef uint64_t result = _rotl(self.s0 + self.s3, 23) + self.s0
        cdef uint64_t t = self.s1 << 17
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        return result

    cdef inline double _u01(self) noexcept nogil:
        # uniform on [0, 1), 53 bits
        return <double> (self._next() >> 11) * _INV53

    cdef inline double _u01_open(self) noexcept nogil:
        cdef double u = self._u01()
        while u == 0.0:
            u = self._u01()
        return u

    cdef inline double _exp1(self) noexcept nogil:
        return -log(self._u01_open())

    cdef inline double _normal(self) noexcept nogil:
        cdef uint64_t r
        cdef int i
        cdef double u, x, f0, f1, tx, ty
        while True:
            r = self._next()
            i = <int> (r & 127)
            u = 2.0 * (<double> (r >> 11) * _INV53) - 1.0
            if fabs(u) < _zratio[i]:
                return u * _zx[i]
            if i == 0:
                # tail beyond R by Marsaglia's method
                while True:
                    tx = log(self._u01_open()) / ZIG_R
                    ty = log(self._u01_open())
                    if -2.0 * ty >= tx * tx:
                        break
                return tx - ZIG_R if u < 0.0 else ZIG_R - tx
            x = u * _zx[i]
            f0 = exp(-0.5 * (_zx[i] * _zx[i] - x * x))
            f1 = exp(-0.5 * (_zx[i + 1] * _zx[i + 1] - x * x))
            if f1 + self._u01() * (f0 - f1) < 1.0:
                return x

    # -- raw draws ------------------------------------------------------

    def uniform(self):
        self.n_unif += 1
        return self._u01_open()

    def uniforms(self, Py_ssize_t n):
        cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
        cdef Py_ssize_t k
        for k in range(n):
            out[k] = self._u01()
        self.n_unif += n
        return out

    def sign(self):
        self.n_unif += 1
        return 1.0 if self._u01() < 0.5 else -1.0

    def exponentials(self, Py_ssize_t n):
        cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
        cdef Py_ssize_t k
        for k in range(n):
            out[k] = self._exp1()
        self.n_exp += n
        return out

    cdef void _fill_gaussian_row(self, double[:, ::1] chol, double* z,
                                 double* row, int d) noexcept nogil:
        cdef int i, j
        cdef double acc
        for j in range(d):
            z[j] = self._normal()
        for i in range(d):
            acc = 0.0
            for j in range(i + 1):
                acc += chol[i, j] * z[j]
            row[i] = acc

    def gaussian_rows(self, cnp.ndarray[cnp.float64_t, ndim=2] chol,
                      Py_ssize_t n):
        cdef int d = chol.shape[0]
        cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, d))
        cdef double[:, ::1] L = np.ascontiguousarray(chol)
        cdef double[:, ::1] o = out
        cdef double* z = <double*> malloc(d * sizeof(double))
        cdef Py_ssize_t k
        try:
            for k in range(n):
                self._fill_gaussian_row(L, z, &o[k, 0], d)
        finally:
            free(z)
        self.n_gauss += n
        return out

    def gaussian_rows_sup(self, cnp.ndarray[cnp.float64_t, ndim=2] chol,
                          Py_ssize_t n):
        cdef int d = chol.shape[0]
        cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, d))
        cdef cnp.ndarray[cnp.float64_t, ndim=1] sup = np.empty(n)
        cdef double[:, ::1] L = np.ascontiguousarray(chol)
        cdef double[:, ::1] o = out
        cdef double[::1] s = sup
        cdef double* z = <double*> malloc(d * sizeof(double))
        cdef Py_ssize_t k
        cdef int i
        cdef double m, v
        try:
            for k in range(n):
                self._fill_gaussian_row(L, z, &o[k, 0], d)
                m = fabs(o[k, 0])
                for i in range(1, d):
                    v = fabs(o[k, i])
                    if v > m:
                        m = v
                s[k] = m
        finally:
            free(z)
        self.n_gauss += n
        return out, sup

    # -- record scanning ------------------------------------------------

    def record_scan(self, cnp.ndarray[cnp.float64_t, ndim=2] chol,
                    Py_ssize_t offset, double a, Py_ssize_t count):
        """Up to ``count`` Gaussian rows, stopping at the first record.

        Same contract as the numpy backend: returns (x, sup, bad) with
        arrays populated only when bad == 0.
        """
        cdef int d = chol.shape[0]
        if count == 0:
            return np.empty((0, d)), np.empty(0), 0
        cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((count, d))
        cdef cnp.ndarray[cnp.float64_t, ndim=1] sup = np.empty(count)
        cdef double[:, ::1] L = np.ascontiguousarray(chol)
        cdef double[:, ::1] o = out
        cdef double[::1] s = sup
        cdef double* z = <double*> malloc(d * sizeof(double))
        cdef double thr_lo = a * log(<double> (offset + 1))
        cdef Py_ssize_t k, bad = 0
        cdef int i
        cdef double m, v
        try:
            with nogil:
                for k in range(count):
                    self._fill_gaussian_row(L, z, &o[k, 0], d)
                    m = fabs(o[k, 0])
                    for i in range(1, d):
                        v = fabs(o[k, i])
                        if v > m:
                            m = v
                    s[k] = m
                    if m > thr_lo and m > a * log(<double> (offset + k + 1)):
                        bad = k + 1
                        break
        finally:
            free(z)
        if bad:
            self.n_gauss += bad
            return None, None, bad
        self.n_gauss += count
        return out, sup, 0

    # -- random walk segments -------------------------------------------

    def downcrossing(self, double x, double gamma):
        cdef Py_ssize_t cap = 64
        cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(cap)
        cdef double pos = x
        cdef Py_ssize_t k = 0
        while True:
            if k == cap:
                cap *= 2
                new = np.empty(cap)
                new[:k] = buf[:k]
                buf = new
            pos += gamma - self._exp1()
            buf[k] = pos
            k += 1
            if pos < 0.0:
                break
            if k > 1000000000:
                raise NonTerminationError("downcrossing exceeded step cap")
        self.n_exp += k
        return buf[:k].copy()

    def upcrossing(self, double x, double gamma, double theta):
        # The acceptance uniform is independent of the path and the test
        # value is bounded by exp(theta x); draw it first and skip the path
        # when acceptance is impossible (same joint law).
        self.n_unif += 1
        cdef double u = self._u01_open()
        if u > exp(theta * x):
            return None, False
        cdef double rate = 1.0 + theta
        cdef Py_ssize_t cap = 64
        cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(cap)
        cdef double pos = x
        cdef Py_ssize_t k = 0
        cdef bint accepted
        while True:
            if k == cap:
                cap *= 2
                new = np.empty(cap)
                new[:k] = buf[:k]
                buf = new
            pos += gamma - self._exp1() / rate
            buf[k] = pos
            k += 1
            if pos >= 0.0:
                break
            if k > 1000000000:
                raise NonTerminationError("upcrossing exceeded step cap")
        self.n_exp += k
        accepted = u <= exp(-theta * (pos - x))
        return buf[:k].copy(), accepted

    def walk_tail(self, double x, double gamma, double theta, Py_ssize_t ell):
        """ell plain steps from x conditioned on never reaching 0 again.

        The certifying upcrossing tracks only its position, not a path;
        counting matches the numpy backend step for step.
        """
        cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(ell)
        cdef double[::1] o = out
        cdef double rate = 1.0 + theta
        cdef double pos, up, u
        cdef Py_ssize_t k, steps
        cdef bint ok, upcrossed
        cdef long attempts = 0
        while attempts < 10000000:
            attempts += 1
            pos = x
            ok = True
            with nogil:
                for k in range(ell):
                    pos += gamma - self._exp1()
                    o[k] = pos
                    if pos >= 0.0:
                        self.n_exp += k + 1
                        ok = False
                        break
            if not ok:
                continue
            self.n_exp += ell
            # certify tau+ = infinity from the endpoint; uniform first, path
            # only if acceptance is still possible (see upcrossing)
            self.n_unif += 1
            u = self._u01_open()
            upcrossed = False
            if u <= exp(theta * pos):
                up = pos
                steps = 0
                with nogil:
                    while up < 0.0:
                        up += gamma - self._exp1() / rate
                        steps += 1
                self.n_exp += steps
                upcrossed = u <= exp(-theta * (up - pos))
            if not upcrossed:
                return out.copy()
        raise NonTerminationError("walk_tail exceeded attempt cap")

    # -- assembly (pure compute) ------------------------------------------

    @staticmethod
    def assemble(cnp.ndarray[cnp.float64_t, ndim=2] x,
                 cnp.ndarray[cnp.float64_t, ndim=1] s_path, double gamma,
                 cnp.ndarray[cnp.float64_t, ndim=1] mu):
        cdef Py_ssize_t n = x.shape[0]
        cdef int d = x.shape[1]
        cdef cnp.ndarray[cnp.float64_t, ndim=2] xc = np.ascontiguousarray(x)
        cdef double[:, ::1] xv = xc
        cdef double[::1] sv = s_path
        cdef cnp.ndarray[cnp.float64_t, ndim=1] m_out = np.empty(d)
        cdef cnp.ndarray[cnp.float64_t, ndim=1] x_sum = np.zeros(d)
        cdef double[::1] mo = m_out
        cdef double[::1] xs = x_sum
        cdef Py_ssize_t k
        cdef int i
        cdef double la, v
        for i in range(d):
            mo[i] = -1e308
        with nogil:
            for k in range(n):
                la = log(gamma * (<double> (k + 1)) - sv[k + 1])
                for i in range(d):
                    v = xv[k, i] - la
                    if v > mo[i]:
                        mo[i] = v
                    xs[i] += xv[k, i]
        for i in range(d):
            mo[i] += mu[i]
        return m_out, x_sum
