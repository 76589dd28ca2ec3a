"""Pure-numpy implementations of the training hot kernels.

Shares a calling convention with the compiled extension in ``_ckernels``:
2-D inputs are C-contiguous, outputs are written into caller-allocated
arrays, and every kernel preserves the input dtype (float32 or float64).
Matrix products are not kernels here; both backends leave those to BLAS.
"""

import numpy as np


def leaky_relu_fwd(x, alpha, out):
    np.multiply(x, np.where(x > 0, 1.0, alpha).astype(x.dtype), out=out)


def leaky_relu_bwd(x, gy, alpha, gx):
    np.multiply(gy, np.where(x > 0, 1.0, alpha).astype(x.dtype), out=gx)


def tanh_fwd(x, out):
    np.tanh(x, out=out)


def tanh_bwd(y, gy, gx):
    np.multiply(gy, 1.0 - y * y, out=gx)


def sigmoid_fwd(x, out):
    # Split by sign so exp never overflows.
    pos = x >= 0
    ex = np.exp(np.where(pos, -x, x))
    np.copyto(out, np.where(pos, 1.0 / (1.0 + ex), ex / (1.0 + ex)))


def sigmoid_bwd(y, gy, gx):
    np.multiply(gy, y * (1.0 - y), out=gx)


def bn_train_fwd(x, gamma, beta, eps, out, xhat, mean, var, invstd):
    """Batch statistics forward pass; writes normalized activations.

    ``mean``/``var`` receive the per-column batch mean and biased
    variance, ``invstd`` receives 1/sqrt(var + eps).
    """
    np.mean(x, axis=0, out=mean)
    np.mean((x - mean) ** 2, axis=0, out=var)
    np.copyto(invstd, 1.0 / np.sqrt(var + eps))
    np.multiply(x - mean, invstd, out=xhat)
    np.multiply(xhat, gamma, out=out)
    out += beta


def bn_infer_fwd(x, gamma, beta, rmean, rvar, eps, out):
    scale = gamma / np.sqrt(rvar + eps)
    np.multiply(x - rmean, scale, out=out)
    out += beta


def bn_bwd(xhat, invstd, gamma, gy, gx, dgamma, dbeta):
    n = xhat.shape[0]
    np.sum(gy, axis=0, out=dbeta)
    np.sum(gy * xhat, axis=0, out=dgamma)
    np.multiply(
        gamma * invstd / n,
        n * gy - dbeta - xhat * dgamma,
        out=gx,
    )


def dropout_fwd(x, u, rate, out):
    scale = 1.0 / (1.0 - rate)
    np.multiply(x, np.where(u >= rate, scale, 0.0).astype(x.dtype), out=out)


def dropout_bwd(u, gy, rate, gx):
    scale = 1.0 / (1.0 - rate)
    np.multiply(gy, np.where(u >= rate, scale, 0.0).astype(gy.dtype), out=gx)


def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step over flat views, in place."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
