# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernel.

Same algorithm and return convention as ``_pykernel``; the stepping loop and
the register program run without the GIL so probes can run on threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, fmax, fmin, pow, isfinite, INFINITY
from libc.stdlib cimport malloc, free


cdef extern from "<complex.h>" nogil:
    double complex csin(double complex)
    double complex ccos(double complex)
    double complex csinh(double complex)
    double complex ccosh(double complex)
    double complex cexp(double complex)
    double complex clog(double complex)
    double complex csqrt(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

cnp.import_array()

NAME = "cython"

cdef enum:
    OP_CONST = 0
    OP_ADD = 1
    OP_SUB = 2
    OP_MUL = 3
    OP_DIV = 4
    OP_NEG = 5
    OP_POWI = 6
    OP_POW = 7
    OP_SIN = 8
    OP_COS = 9
    OP_TAN = 10
    OP_SINH = 11
    OP_COSH = 12
    OP_EXP = 13
    OP_LOG = 14
    OP_SQRT = 15

cdef double SINGULAR_EPS = 1e-300

cdef enum:
    ST_OK = 0
    ST_SINGULAR = 1
    ST_OVERFLOW = 2
    ST_MAX_STEPS = 3

STATUS_OK = ST_OK
STATUS_SINGULAR = ST_SINGULAR
STATUS_OVERFLOW = ST_OVERFLOW
STATUS_MAX_STEPS = ST_MAX_STEPS

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176
cdef double A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784
cdef double A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFE = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 10.0


cdef struct Machine:
    int n
    int nin
    int nops
    const int* ops
    const int* a0
    const int* a1
    const double complex* consts
    const int* outputs
    double complex* regs
    # path piece
    int kind
    double complex p0
    double complex p1
    double radius
    double theta0
    double sweep


cdef inline double complex _powi(double complex z, int k, int* bad) noexcept nogil:
    cdef double complex r = 1.0
    cdef int neg = k < 0
    if neg:
        if cabs(z) <= SINGULAR_EPS:
            bad[0] = 1
            return 0
        k = -k
    while k:
        if k & 1:
            r = r * z
        z = z * z
        k >>= 1
    if neg:
        return 1.0 / r
    return r


cdef int run_program(Machine* m) noexcept nogil:
    cdef int k, r, op, a, b
    cdef int bad = 0
    cdef double complex den
    cdef double complex* R = m.regs
    for k in range(m.nops):
        r = m.nin + k
        op = m.ops[k]
        a = m.a0[k]
        b = m.a1[k]
        if op == OP_CONST:
            R[r] = m.consts[a]
        elif op == OP_ADD:
            R[r] = R[a] + R[b]
        elif op == OP_SUB:
            R[r] = R[a] - R[b]
        elif op == OP_MUL:
            R[r] = R[a] * R[b]
        elif op == OP_DIV:
            den = R[b]
            if cabs(den) <= SINGULAR_EPS:
                return 1
            R[r] = R[a] / den
        elif op == OP_NEG:
            R[r] = -R[a]
        elif op == OP_POWI:
            if b == 2:
                R[r] = R[a] * R[a]
            else:
                R[r] = _powi(R[a], b, &bad)
                if bad:
                    return 1
        elif op == OP_POW:
            if R[a] == 0:
                if creal(R[b]) > 0:
                    R[r] = 0
                else:
                    return 1
            else:
                R[r] = cexp(R[b] * clog(R[a]))
        elif op == OP_SIN:
            R[r] = csin(R[a])
        elif op == OP_COS:
            R[r] = ccos(R[a])
        elif op == OP_TAN:
            den = ccos(R[a])
            if cabs(den) <= SINGULAR_EPS:
                return 1
            R[r] = csin(R[a]) / den
        elif op == OP_SINH:
            R[r] = csinh(R[a])
        elif op == OP_COSH:
            R[r] = ccosh(R[a])
        elif op == OP_EXP:
            R[r] = cexp(R[a])
        elif op == OP_LOG:
            if cabs(R[a]) <= SINGULAR_EPS:
                return 1
            R[r] = clog(R[a])
        elif op == OP_SQRT:
            R[r] = csqrt(R[a])
    return 0


cdef inline double complex _reg(Machine* m, int j) noexcept nogil:
    cdef int o = m.outputs[j]
    if o < 0:
        return 0
    return m.regs[o]


cdef int rhs(Machine* m, double u, const double complex* y, double complex* out) noexcept nogil:
    """Augmented field d(x, Xi)/du; non-zero return means reject."""
    cdef int n = m.n
    cdef int i, j, k, o
    cdef double complex t, dt, e, aik
    if m.kind == 0:
        dt = m.p1 - m.p0
        t = m.p0 + dt * u
    else:
        e = cexp(1j * (m.theta0 + m.sweep * u))
        t = m.p0 + m.radius * e
        dt = 1j * m.sweep * m.radius * e
    for i in range(n):
        m.regs[i] = y[i]
    m.regs[n] = t
    if run_program(m):
        return 1
    for i in range(n):
        out[i] = _reg(m, i) * dt
    for i in range(n):
        for j in range(n):
            out[n + i * n + j] = 0
        for k in range(n):
            o = m.outputs[n + i * n + k]
            if o < 0:
                continue
            aik = m.regs[o] * dt
            for j in range(n):
                out[n + i * n + j] = out[n + i * n + j] + aik * y[n + k * n + j]
    for i in range(n + n * n):
        if not (isfinite(creal(out[i])) and isfinite(cimag(out[i]))):
            return 2
    return 0


cdef class Prepared:
    """A program bound to a state dimension, ready for the stepper."""
    cdef public int n
    cdef int[::1] ops
    cdef int[::1] a0
    cdef int[::1] a1
    cdef double complex[::1] consts
    cdef int[::1] outputs
    cdef int nin
    cdef int nregs

    def __init__(self, program, int n):
        if len(program.outputs) != n + n * n or program.n_inputs != n + 1:
            raise ValueError("program does not match an augmented system of dimension n")
        self.n = n
        self.ops = np.ascontiguousarray(program.ops, dtype=np.intc)
        self.a0 = np.ascontiguousarray(program.arg0, dtype=np.intc)
        self.a1 = np.ascontiguousarray(program.arg1, dtype=np.intc)
        consts = np.ascontiguousarray(program.consts, dtype=np.complex128)
        if consts.shape[0] == 0:
            consts = np.zeros(1, dtype=np.complex128)
        self.consts = consts
        self.outputs = np.ascontiguousarray(program.outputs, dtype=np.intc)
        self.nin = program.n_inputs
        self.nregs = program.n_registers

    cdef void _bind(self, Machine* m, double complex* regs):
        m.n = self.n
        m.nin = self.nin
        m.nops = self.ops.shape[0]
        m.ops = &self.ops[0] if m.nops else NULL
        m.a0 = &self.a0[0] if m.nops else NULL
        m.a1 = &self.a1[0] if m.nops else NULL
        m.consts = &self.consts[0]
        m.outputs = &self.outputs[0]
        m.regs = regs

    def evaluate(self, x, t):
        """Outputs ``(v, A)`` at state ``x`` and time ``t``."""
        cdef Machine m
        cdef int n = self.n
        regs = np.zeros(self.nregs, dtype=np.complex128)
        cdef double complex[::1] rv = regs
        self._bind(&m, &rv[0])
        for i in range(n):
            rv[i] = complex(x[i])
        rv[n] = complex(t)
        if run_program(&m):
            raise ZeroDivisionError("singular evaluation")
        outs = np.array([0j if o < 0 else regs[o] for o in self.outputs], dtype=complex)
        return outs[:n].copy(), outs[n:].reshape(n, n).copy()


def prepare(program, int n):
    return Prepared(program, n)


def integrate_interval(Prepared prep, int kind, double complex p0, double complex p1,
                       double radius, double theta0, double sweep, double u0, double u1,
                       cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] y,
                       double h, double rtol, double atol, double hmin, long max_steps):
    """Integrate the augmented system over ``u0 -> u1`` of one path piece.

    ``y`` is overwritten with the last accepted state.  Returns ``(status, u,
    h_next, accepted, rejected, min_h, err_sum)``.
    """
    cdef Machine m
    cdef int n = prep.n
    cdef int dim = n + n * n
    cdef int i, st = 0, clipped, last_rejected = 0, stage_bad
    cdef long n_acc = 0, n_rej = 0
    cdef double u = u0, unew = u0, span = u1 - u0, remaining
    cdef double facold = 1e-4, fac11, fac, hnew, err, sc, ae, maxae
    cdef double min_h = INFINITY, err_sum = 0.0
    cdef double complex* Y = &y[0]
    cdef double complex* buf
    cdef double complex* k1
    cdef double complex* k2
    cdef double complex* k3
    cdef double complex* k4
    cdef double complex* k5
    cdef double complex* k6
    cdef double complex* k7
    cdef double complex* yt
    cdef double complex* yn
    cdef double complex* tmp
    cdef double complex* regs

    if y.shape[0] != dim:
        raise ValueError("state vector has the wrong length")
    if span <= 0:
        return STATUS_OK, u, h, 0, 0, min_h, 0.0

    buf = <double complex*> malloc(sizeof(double complex) * (9 * dim + prep.nregs))
    if buf == NULL:
        raise MemoryError()
    k1 = buf
    k2 = buf + dim
    k3 = buf + 2 * dim
    k4 = buf + 3 * dim
    k5 = buf + 4 * dim
    k6 = buf + 5 * dim
    k7 = buf + 6 * dim
    yt = buf + 7 * dim
    yn = buf + 8 * dim
    regs = buf + 9 * dim
    prep._bind(&m, regs)
    m.kind = kind
    m.p0 = p0
    m.p1 = p1
    m.radius = radius
    m.theta0 = theta0
    m.sweep = sweep

    if h <= 0:
        h = 0.01
    h = fmin(h, span)

    with nogil:
        if rhs(&m, u, Y, k1):
            st = ST_OVERFLOW
        while st == 0:
            remaining = u1 - u
            if remaining <= 1e-15 * fmax(1.0, fabs(u1)):
                break
            if n_acc + n_rej >= max_steps:
                st = ST_MAX_STEPS
                break
            clipped = h >= remaining
            if clipped:
                h = remaining
            elif h < hmin:
                st = ST_SINGULAR
                break
            unew = u1 if clipped else u + h
            stage_bad = 1
            for i in range(dim):
                yt[i] = Y[i] + h * (A21 * k1[i])
            if not rhs(&m, u + C2 * h, yt, k2):
                for i in range(dim):
                    yt[i] = Y[i] + h * (A31 * k1[i] + A32 * k2[i])
                if not rhs(&m, u + C3 * h, yt, k3):
                    for i in range(dim):
                        yt[i] = Y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                    if not rhs(&m, u + C4 * h, yt, k4):
                        for i in range(dim):
                            yt[i] = Y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i]
                                                + A54 * k4[i])
                        if not rhs(&m, u + C5 * h, yt, k5):
                            for i in range(dim):
                                yt[i] = Y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                                    + A64 * k4[i] + A65 * k5[i])
                            if not rhs(&m, u + h, yt, k6):
                                for i in range(dim):
                                    yn[i] = Y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i]
                                                        + A75 * k5[i] + A76 * k6[i])
                                if not rhs(&m, unew, yn, k7):
                                    stage_bad = 0
            if stage_bad:
                n_rej += 1
                last_rejected = 1
                h *= FAC_MIN
                continue
            err = 0.0
            maxae = 0.0
            for i in range(dim):
                ae = cabs(h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                               + E6 * k6[i] + E7 * k7[i]))
                sc = fmax(atol, rtol * fmax(cabs(Y[i]), cabs(yn[i])))
                err = fmax(err, ae / sc)
                maxae = fmax(maxae, ae)
            fac11 = pow(err, EXPO1)
            if err <= 1.0:
                facold = fmax(err, 1e-4)
                fac = fac11 / pow(facold, BETA)
                fac = fmax(1.0 / FAC_MAX, fmin(1.0 / FAC_MIN, fac / SAFE))
                hnew = h / fac
                if last_rejected:
                    hnew = fmin(hnew, h)
                last_rejected = 0
                n_acc += 1
                min_h = fmin(min_h, h)
                err_sum += maxae
                u = unew
                for i in range(dim):
                    Y[i] = yn[i]
                tmp = k1
                k1 = k7
                k7 = tmp
                h = hnew
            else:
                n_rej += 1
                last_rejected = 1
                h = h / fmin(1.0 / FAC_MIN, fac11 / SAFE)
    free(buf)
    return st, u, h, n_acc, n_rej, min_h, err_sum
