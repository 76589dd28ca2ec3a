# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training hot kernels; drop-in twin of ``numpy_kernels``.

All 2-D arguments are C-contiguous, outputs are caller-allocated, and
float32/float64 variants are generated from one fused-type definition.
"""

from libc.math cimport exp, pow, sqrt, tanh

ctypedef fused real:
    float
    double


def leaky_relu_fwd(real[:, ::1] x, double alpha, real[:, ::1] out):
    cdef Py_ssize_t i, j
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            out[i, j] = x[i, j] if x[i, j] > 0 else <real> (alpha * x[i, j])


def leaky_relu_bwd(real[:, ::1] x, real[:, ::1] gy, double alpha, real[:, ::1] gx):
    cdef Py_ssize_t i, j
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            gx[i, j] = gy[i, j] if x[i, j] > 0 else <real> (alpha * gy[i, j])


def tanh_fwd(real[:, ::1] x, real[:, ::1] out):
    cdef Py_ssize_t i, j
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            out[i, j] = <real> tanh(x[i, j])


def tanh_bwd(real[:, ::1] y, real[:, ::1] gy, real[:, ::1] gx):
    cdef Py_ssize_t i, j
    for i in range(y.shape[0]):
        for j in range(y.shape[1]):
            gx[i, j] = <real> (gy[i, j] * (1.0 - <double> y[i, j] * y[i, j]))


def sigmoid_fwd(real[:, ::1] x, real[:, ::1] out):
    cdef Py_ssize_t i, j
    cdef double e
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            if x[i, j] >= 0:
                e = exp(-<double> x[i, j])
                out[i, j] = <real> (1.0 / (1.0 + e))
            else:
                e = exp(<double> x[i, j])
                out[i, j] = <real> (e / (1.0 + e))


def sigmoid_bwd(real[:, ::1] y, real[:, ::1] gy, real[:, ::1] gx):
    cdef Py_ssize_t i, j
    for i in range(y.shape[0]):
        for j in range(y.shape[1]):
            gx[i, j] = <real> (gy[i, j] * y[i, j] * (1.0 - <double> y[i, j]))


def bn_train_fwd(real[:, ::1] x, real[::1] gamma, real[::1] beta, double eps,
                 real[:, ::1] out, real[:, ::1] xhat, real[::1] mean,
                 real[::1] var, real[::1] invstd):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, dev
    for j in range(d):
        acc = 0.0
        for i in range(n):
            acc += x[i, j]
        mean[j] = <real> (acc / n)
    for j in range(d):
        acc = 0.0
        for i in range(n):
            dev = x[i, j] - mean[j]
            acc += dev * dev
        var[j] = <real> (acc / n)
        invstd[j] = <real> (1.0 / sqrt(<double> var[j] + eps))
    for i in range(n):
        for j in range(d):
            xhat[i, j] = <real> ((x[i, j] - mean[j]) * invstd[j])
            out[i, j] = <real> (gamma[j] * xhat[i, j] + beta[j])


def bn_infer_fwd(real[:, ::1] x, real[::1] gamma, real[::1] beta,
                 real[::1] rmean, real[::1] rvar, double eps,
                 real[:, ::1] out):
    cdef Py_ssize_t i, j
    cdef double scale
    for j in range(x.shape[1]):
        scale = gamma[j] / sqrt(rvar[j] + eps)
        for i in range(x.shape[0]):
            out[i, j] = <real> ((x[i, j] - rmean[j]) * scale + beta[j])


def bn_bwd(real[:, ::1] xhat, real[::1] invstd, real[::1] gamma,
           real[:, ::1] gy, real[:, ::1] gx, real[::1] dgamma,
           real[::1] dbeta):
    cdef Py_ssize_t n = xhat.shape[0], d = xhat.shape[1]
    cdef Py_ssize_t i, j
    cdef double sg, sgx, coef
    for j in range(d):
        sg = 0.0
        sgx = 0.0
        for i in range(n):
            sg += gy[i, j]
            sgx += gy[i, j] * xhat[i, j]
        dbeta[j] = <real> sg
        dgamma[j] = <real> sgx
        coef = gamma[j] * invstd[j] / n
        for i in range(n):
            gx[i, j] = <real> (coef * (n * gy[i, j] - sg - xhat[i, j] * sgx))


def dropout_fwd(real[:, ::1] x, double[:, ::1] u, double rate, real[:, ::1] out):
    cdef Py_ssize_t i, j
    cdef double scale = 1.0 / (1.0 - rate)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            out[i, j] = <real> (x[i, j] * scale) if u[i, j] >= rate else <real> 0.0


def dropout_bwd(double[:, ::1] u, real[:, ::1] gy, double rate, real[:, ::1] gx):
    cdef Py_ssize_t i, j
    cdef double scale = 1.0 / (1.0 - rate)
    for i in range(gy.shape[0]):
        for j in range(gy.shape[1]):
            gx[i, j] = <real> (gy[i, j] * scale) if u[i, j] >= rate else <real> 0.0


def adam_update(real[::1] p, real[::1] g, real[::1] m, real[::1] v,
                long t, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t i
    cdef double c1 = 1.0 - pow(beta1, <double> t)
    cdef double c2 = 1.0 - pow(beta2, <double> t)
    cdef double mi, vi
    for i in range(p.shape[0]):
        mi = beta1 * m[i] + (1.0 - beta1) * g[i]
        vi = beta2 * v[i] + (1.0 - beta2) * (<double> g[i] * g[i])
        m[i] = <real> mi
        v[i] = <real> vi
        p[i] = <real> (p[i] - lr * (mi / c1) / (sqrt(vi / c2) + eps))
