"""The value head: a D -> H -> H -> 1 tanh network with hand-written gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PARAM_NAMES = ("W1", "b1", "W2", "b2", "w3", "b3")


@dataclass
class Params:
    W1: np.ndarray  # (D, H)
    b1: np.ndarray  # (H,)
    W2: np.ndarray  # (H, H)
    b2: np.ndarray  # (H,)
    w3: np.ndarray  # (H,)
    b3: np.ndarray  # ()

    def items(self):
        return [(n, getattr(self, n)) for n in PARAM_NAMES]

    def copy(self) -> "Params":
        return Params(*(np.array(getattr(self, n), copy=True) for n in PARAM_NAMES))

    def finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for _, v in self.items())

    def check_shapes(self) -> None:
        d, h = self.W1.shape
        if self.b1.shape != (h,) or self.W2.shape != (h, h) or self.b2.shape != (h,):
            raise ValueError("inconsistent hidden layer shapes")
        if self.w3.shape != (h,) or np.shape(self.b3) != ():
            raise ValueError("inconsistent output layer shapes")

    def to_dict(self) -> dict:
        return {n: np.asarray(v).tolist() for n, v in self.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        p = cls(*(np.asarray(d[n], dtype=float) for n in PARAM_NAMES))
        p.check_shapes()
        return p


def init_params(dim: int, hidden: int, rng: np.random.Generator) -> Params:
    return Params(
        W1=rng.normal(0.0, 1.0, (dim, hidden)),  # inputs are unit-norm, so unit-scale weights
        b1=np.zeros(hidden),
        W2=rng.normal(0.0, 1.0 / np.sqrt(hidden), (hidden, hidden)),
        b2=np.zeros(hidden),
        w3=rng.normal(0.0, 1.0 / np.sqrt(hidden), hidden),
        b3=np.array(0.0),
    )


def forward(p: Params, X) -> tuple[np.ndarray, tuple]:
    """X is (n, D), dense or scipy sparse. Returns outputs (n,) and a cache."""
    z1 = np.asarray(X @ p.W1) + p.b1
    h1 = np.tanh(z1)
    z2 = h1 @ p.W2 + p.b2
    h2 = np.tanh(z2)
    out = h2 @ p.w3 + p.b3
    return out, (X, h1, h2)


def mse_loss_and_grad(p: Params, X, y: np.ndarray) -> tuple[float, Params]:
    """Mean squared error over the batch and its gradient for every parameter."""
    out, (X, h1, h2) = forward(p, X)
    n = len(y)
    r = out - y
    loss = float(np.mean(r * r))
    g_out = 2.0 * r / n                     # (n,)
    g_w3 = h2.T @ g_out
    g_b3 = np.array(g_out.sum())
    g_z2 = np.outer(g_out, p.w3) * (1.0 - h2 * h2)
    g_W2 = h1.T @ g_z2
    g_b2 = g_z2.sum(axis=0)
    g_z1 = (g_z2 @ p.W2.T) * (1.0 - h1 * h1)
    g_W1 = np.asarray(X.T @ g_z1)
    g_b1 = g_z1.sum(axis=0)
    return loss, Params(g_W1, g_b1, g_W2, g_b2, g_w3, g_b3)


@dataclass
class AdamW:
    """Adam with decoupled weight decay on the weight matrices (not biases)."""

    lr: float = 1e-3
    weight_decay: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, p: Params, g: Params) -> None:
        self.t += 1
        for name, value in p.items():
            grad = getattr(g, name)
            m = self.m.get(name, np.zeros_like(value))
            v = self.v.get(name, np.zeros_like(value))
            m = self.beta1 * m + (1 - self.beta1) * grad
            v = self.beta2 * v + (1 - self.beta2) * grad * grad
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            new = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if name.startswith(("W", "w")):
                new = new - self.lr * self.weight_decay * value
            setattr(p, name, new)
