"""Adam with lazy row updates for embedding tables.

Each optimizer instance owns the moment buffers for one parameter array.
``step_rows`` applies Adam only to the rows touched by the current batch;
moments for untouched rows stay frozen and the bias correction uses the
per-instance global step, matching the usual sparse-Adam convention.

Gradient accumulation over repeated ids goes through ``accumulate_rows``,
which uses sorted unique ids plus ``np.add.at`` so results do not depend on
batch ordering accidents.
"""

import numpy as np


def accumulate_rows(ids: np.ndarray, grads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sums gradient rows that share an id.

    Returns (unique_ids, summed_grads) with unique_ids sorted ascending.
    """
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    grads = np.asarray(grads, dtype=np.float64).reshape(ids.shape[0], -1)
    unique, inverse = np.unique(ids, return_inverse=True)
    out = np.zeros((unique.shape[0], grads.shape[1]), dtype=np.float64)
    np.add.at(out, inverse, grads)
    return unique, out


class Adam:
    def __init__(
        self,
        shape: tuple[int, ...],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = np.zeros(shape, dtype=np.float64)
        self.v = np.zeros(shape, dtype=np.float64)
        self.t = 0

    def _correction(self) -> tuple[float, float]:
        return 1.0 - self.beta1**self.t, 1.0 - self.beta2**self.t

    def step_dense(self, param: np.ndarray, grad: np.ndarray) -> None:
        """Updates the whole parameter array in place."""
        self.t += 1
        self.m += (1.0 - self.beta1) * (grad - self.m)
        self.v += (1.0 - self.beta2) * (grad * grad - self.v)
        c1, c2 = self._correction()
        param -= self.lr * (self.m / c1) / (np.sqrt(self.v / c2) + self.eps)

    def step_rows(self, param: np.ndarray, rows: np.ndarray, grads: np.ndarray) -> None:
        """Updates only the given (unique) rows in place."""
        if rows.size == 0:
            return
        self.t += 1
        m = self.m[rows]
        v = self.v[rows]
        m += (1.0 - self.beta1) * (grads - m)
        v += (1.0 - self.beta2) * (grads * grads - v)
        self.m[rows] = m
        self.v[rows] = v
        c1, c2 = self._correction()
        param[rows] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
