"""Shared numerical infrastructure: the symmetric normalization operator,
sparse-dense products, parameter containers, Adam, and a central-difference
gradient checker that guards every hand-written backward pass.

Dense matrices are float64 numpy arrays; sparse operators are scipy CSR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class ParamTensor:
    """A trainable array with a same-shaped gradient slot."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(default=None)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        else:
            self.grad = np.asarray(self.grad, dtype=np.float64)
            if self.grad.shape != self.value.shape:
                raise ValueError(f"grad shape {self.grad.shape} != value shape "
                                 f"{self.value.shape} for {self.name}")

    def zero_grad(self):
        self.grad[...] = 0.0


def sym_normalize(matrix, add_identity: bool = True):
    """D^{-1/2} (M + I) D^{-1/2} with D the degree matrix of (M + I).

    With add_identity=False the identity is skipped and every row must have
    positive sum. Input must be structurally symmetric with non-negative
    values.
    """
    m = sp.csr_matrix(matrix, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if m.nnz and m.data.min() < 0:
        raise ValueError("negative value in matrix to normalize")
    if add_identity:
        m = m + sp.identity(m.shape[0], format="csr", dtype=np.float64)
    deg = np.asarray(m.sum(axis=1)).ravel()
    if (deg <= 0).any():
        raise ValueError("zero-degree row; cannot normalize without identity")
    inv_sqrt = 1.0 / np.sqrt(deg)
    scale = sp.diags(inv_sqrt)
    out = sp.csr_matrix(scale @ m @ scale)
    out.sort_indices()
    return out


def spmm(sparse_matrix, dense: np.ndarray) -> np.ndarray:
    """Sparse @ dense product with shape checking."""
    dense = np.asarray(dense, dtype=np.float64)
    if sparse_matrix.shape[1] != dense.shape[0]:
        raise ValueError(
            f"shape mismatch: {sparse_matrix.shape} @ {dense.shape}")
    return np.asarray(sparse_matrix @ dense)


def glorot(rng, fan_in, fan_out, shape=None):
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    if shape is None:
        shape = (fan_in, fan_out)
    return rng.uniform(-limit, limit, size=shape)


class Adam:
    """Adam with classic L2 weight decay folded into the gradient."""

    def __init__(self, params, learning_rate=0.01, weight_decay=0.0,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.step_count
        bias2 = 1.0 - b2 ** self.step_count
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.value
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.value -= self.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def l2_penalty(params, weight_decay):
    """(wd/2) * sum of squared entries, matching Adam's folded L2 gradient."""
    if not weight_decay:
        return 0.0
    return 0.5 * weight_decay * sum(float((p.value ** 2).sum()) for p in params)


def grad_check(f, params, eps: float = 1e-5) -> float:
    """Max relative error between params' analytic grads and central differences.

    f() evaluates the scalar objective at the params' current values; the
    caller must have filled each param's .grad with the analytic gradient
    beforehand. Relative error per entry is |ga - gn| / max(1, |ga| + |gn|).
    """
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        gflat = p.grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            f_plus = float(f())
            flat[idx] = orig - eps
            f_minus = float(f())
            flat[idx] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise FloatingPointError(f"non-finite objective at {p.name}[{idx}]")
            numeric = (f_plus - f_minus) / (2 * eps)
            analytic = gflat[idx]
            err = abs(analytic - numeric) / max(1.0, abs(analytic) + abs(numeric))
            worst = max(worst, err)
    return worst


def power_iteration_radius(matrix, iters=200, seed=0):
    """Dominant |eigenvalue| estimate for a symmetric operator."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=matrix.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = matrix @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        lam = float(x @ y)
        x = y / norm
    return abs(lam)
