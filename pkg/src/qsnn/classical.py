"""Classical comparison network: word populations -> affine map -> softmax over (No, Yes)."""
from dataclasses import dataclass

import numpy as np

from .training import NumericError, TrainingHistory, draw_uniform_block

# output order of the softmax
OUTPUTS = ("No", "Yes")


@dataclass
class ClassicalNN:
    weights: np.ndarray  # (2, V)
    biases: np.ndarray  # (2,)

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=float)
        self.biases = np.array(self.biases, dtype=float).reshape(-1)
        if self.weights.ndim != 2 or self.weights.shape[0] != len(OUTPUTS):
            raise ValueError(f"weights must have shape (2, V), got {self.weights.shape}")
        if self.biases.shape != (len(OUTPUTS),):
            raise ValueError("biases must have length 2")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValueError("non-finite network parameters")

    @property
    def n_inputs(self):
        return self.weights.shape[1]

    @classmethod
    def initial(cls, n_inputs, seed, sample):
        """Weights uniform on [-1, 1], biases zero.

        The weights come from the same per-sample draw as the QSNN output rates
        (2V numbers), so sample s of each model starts from matched randomness.
        """
        w = draw_uniform_block(seed, sample, 2 * n_inputs)
        return cls(w.reshape(n_inputs, 2).T, np.zeros(2))


def softmax(z):
    z = np.asarray(z, dtype=float)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def classical_forward(nn, populations):
    """Return (y_no, y_yes) for one population vector or a batch of shape (N, V)."""
    x = np.asarray(populations, dtype=float)
    if x.shape[-1] != nn.n_inputs:
        raise ValueError(f"expected {nn.n_inputs} inputs, got {x.shape[-1]}")
    return softmax(x @ nn.weights.T + nn.biases)


def _targets(labels):
    t = np.zeros((len(labels), 2))
    for s, lab in enumerate(labels):
        if lab not in OUTPUTS:
            raise ValueError(f"unknown label {lab!r}")
        t[s, OUTPUTS.index(lab)] = 1.0
    return t


def classical_loss(nn, inputs, labels):
    """1 - mean over pairs of label . y."""
    if len(labels) == 0:
        raise ValueError("dataset is empty")
    y = classical_forward(nn, inputs)
    return 1.0 - float(np.mean(np.sum(_targets(labels) * y, axis=1)))


def classical_gradient(nn, inputs, labels):
    """Gradients of the loss with respect to (weights, biases)."""
    x = np.asarray(inputs, dtype=float)
    t = _targets(labels)
    y = classical_forward(nn, x)
    # d y_c / d z_j = y_c (delta_cj - y_j), with c the target class
    yc = np.sum(t * y, axis=1, keepdims=True)
    dz = -(yc * (t - y)) / len(labels)
    return dz.T @ x, dz.sum(axis=0)


def classical_finite_diff(nn, inputs, labels, epsilon=1e-6):
    flat = np.concatenate([nn.weights.ravel(), nn.biases])
    out = np.empty_like(flat)
    nw = nn.weights.size
    for k in range(flat.size):
        vals = []
        for sign in (1, -1):
            f = flat.copy()
            f[k] += sign * epsilon
            vals.append(classical_loss(ClassicalNN(f[:nw].reshape(nn.weights.shape), f[nw:]), inputs, labels))
        out[k] = (vals[0] - vals[1]) / (2 * epsilon)
    return out[:nw].reshape(nn.weights.shape), out[nw:]


def classical_train(nn, inputs, labels, learning_rate, iterations, test_inputs=None, test_ids=None,
                    corrupted_labels=None, correct_at=None):
    """Gradient descent on (weights, biases). Robustness is undefined here and recorded as NaN."""
    if learning_rate < 0:
        raise ValueError("learning rate must be non-negative")
    tests = None if test_inputs is None or len(test_inputs) == 0 else np.asarray(test_inputs, dtype=float)
    history = TrainingHistory(test_ids=tuple(test_ids or range(0 if tests is None else len(tests))))
    for it in range(iterations + 1):
        labs = corrupted_labels if corrupted_labels is not None and it < correct_at else labels
        value = classical_loss(nn, inputs, labs)
        if not np.isfinite(value):
            raise NumericError(f"non-finite classical loss at iteration {it}")
        p_yes = classical_forward(nn, tests)[:, 1] if tests is not None else np.empty(0)
        history.append(value, np.nan, p_yes)
        if it < iterations:
            gw, gb = classical_gradient(nn, inputs, labs)
            nn = ClassicalNN(nn.weights - learning_rate * gw, nn.biases - learning_rate * gb)
    history.final = nn
    return history
