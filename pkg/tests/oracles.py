"""Independent reference computations the tests check the library against.

Everything here deliberately avoids the library's own code paths: the
spline oracle assembles the full dense linear system instead of the
tridiagonal solve, the gradient oracle uses central finite differences,
the Adam oracle is a plain-float recurrence, and the forward oracle is
per-neuron Python loops.
"""

import math

import numpy as np


def dense_natural_spline(times, values):
    """Segment coefficients (a, b, c, d) from a dense solve.

    One equation per condition: each segment matches its two knot
    values, first and second derivatives agree across interior knots,
    and the second derivative vanishes at both ends.  Unknown layout:
    [a0, b0, c0, d0, a1, ...] in the local basis a + b*d + c*d^2 + d*d^3.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    nseg = len(t) - 1
    size = 4 * nseg
    A = np.zeros((size, size))
    rhs = np.zeros(size)
    row = 0
    for i in range(nseg):
        h = t[i + 1] - t[i]
        # value at segment start and end
        A[row, 4 * i] = 1.0
        rhs[row] = y[i]
        row += 1
        A[row, 4 * i : 4 * i + 4] = [1.0, h, h * h, h * h * h]
        rhs[row] = y[i + 1]
        row += 1
    for i in range(nseg - 1):
        h = t[i + 1] - t[i]
        # slope continuity at interior knot i+1
        A[row, 4 * i + 1 : 4 * i + 4] = [1.0, 2.0 * h, 3.0 * h * h]
        A[row, 4 * (i + 1) + 1] = -1.0
        row += 1
        # curvature continuity
        A[row, 4 * i + 2 : 4 * i + 4] = [2.0, 6.0 * h]
        A[row, 4 * (i + 1) + 2] = -2.0
        row += 1
    # natural ends: zero curvature at the first and last knot
    A[row, 2] = 2.0
    row += 1
    h_last = t[-1] - t[-2]
    A[row, 4 * (nseg - 1) + 2] = 2.0
    A[row, 4 * (nseg - 1) + 3] = 6.0 * h_last
    row += 1
    sol = np.linalg.solve(A, rhs)
    return sol.reshape(nseg, 4)


def eval_segment_poly(coeffs_row, d):
    """Evaluate one segment polynomial at local offset d."""
    a, b, c, e = coeffs_row
    return a + d * (b + d * (c + d * e))


def finite_difference_gradients(net, x, y, epsilon=1e-6):
    """Central-difference gradients of the batch loss for every parameter.

    Returns (weight_grads, bias_grads) lists shaped like the layers.
    """
    from motionmimic.network import forward, mse_loss

    def loss():
        return mse_loss(forward(net, x), y)

    w_grads, b_grads = [], []
    for layer in net.layers:
        gw = np.zeros_like(layer.weights)
        for idx in np.ndindex(*layer.weights.shape):
            orig = layer.weights[idx]
            layer.weights[idx] = orig + epsilon
            hi = loss()
            layer.weights[idx] = orig - epsilon
            lo = loss()
            layer.weights[idx] = orig
            gw[idx] = (hi - lo) / (2.0 * epsilon)
        w_grads.append(gw)
        gb = np.zeros_like(layer.biases)
        for idx in np.ndindex(*layer.biases.shape):
            orig = layer.biases[idx]
            layer.biases[idx] = orig + epsilon
            hi = loss()
            layer.biases[idx] = orig - epsilon
            lo = loss()
            layer.biases[idx] = orig
            gb[idx] = (hi - lo) / (2.0 * epsilon)
        b_grads.append(gb)
    return w_grads, b_grads


def max_relative_gradient_error(analytic_w, analytic_b, fd_w, fd_b, loss=1.0):
    """Worst-case |analytic - fd| / max(|analytic|, |fd|, floor).

    Central differences at epsilon 1e-6 carry roundoff noise of about
    loss * eps / epsilon ~ loss * 2e-10, so the denominator floor scales
    with the loss: parameters whose true gradient sits below the floor
    still have to agree absolutely to floor * tolerance, well above the
    noise; everything larger is compared relatively.
    """
    floor = 1e-4 * max(1.0, loss)
    worst = 0.0
    for a, n in zip(analytic_w + analytic_b, fd_w + fd_b):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def scalar_adam(grads, lr, beta1=0.9, beta2=0.999, eps=1e-8, theta0=0.0):
    """Plain-float Adam recurrence for one scalar parameter.

    Returns the parameter value after each step.
    """
    theta, m, v = theta0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        mhat = m / (1.0 - beta1**t)
        vhat = v / (1.0 - beta2**t)
        theta = theta - lr * mhat / (math.sqrt(vhat) + eps)
        out.append(theta)
    return out


def loop_forward(net, x):
    """Per-neuron scalar re-implementation of the forward pass."""
    values = [float(v) for v in x]
    for layer in net.layers:
        nxt = []
        for o in range(layer.out_dim):
            z = float(layer.biases[o])
            for i in range(layer.in_dim):
                z += float(layer.weights[o, i]) * values[i]
            if layer.activation == "leakyrelu":
                z = z if z >= 0 else layer.alpha * z
            nxt.append(z)
        values = nxt
    return np.array(values)
