"""Hand-rolled fully connected nets with leaky-rectifier activations.

Forward, exact backprop (parameter and input gradients), and the binary
softmax cross-entropy loss used by every gradient-based attack. The loss is
computed from the logit margin z[+1] - z[-1], which makes it invariant to
adding a constant to both logits by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, InvalidInput

LEAKY_SLOPE = 0.1


@dataclass
class MlpModel:
    """weights[i] has shape (fan_in, fan_out); scalar or two-logit output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    slope: float = LEAKY_SLOPE

    def __post_init__(self):
        if self.out_dim not in (1, 2):
            raise InvalidInput("output dimension must be 1 (scalar g) or 2 (logit pair)")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.slope)


def init_mlp(sizes, seed: int, slope: float = LEAKY_SLOPE) -> MlpModel:
    """He-style normal init, deterministic in the seed."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2:
        raise InvalidInput("need at least an input and an output layer")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, slope)


def _leaky(a: np.ndarray, slope: float) -> np.ndarray:
    return np.where(a > 0, a, slope * a)


def _leaky_grad(a: np.ndarray, slope: float) -> np.ndarray:
    return np.where(a > 0, 1.0, slope)


def forward(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Raw network output, shape (n, out_dim)."""
    return forward_cached(model, X)[0]


def forward_cached(model: MlpModel, X: np.ndarray):
    """Returns (output, preactivations per hidden layer, inputs per layer)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.in_dim:
        raise DimensionMismatch(f"input has dim {X.shape[1]}, model wants {model.in_dim}")
    acts = [X]
    pres = []
    h = X
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = h @ w + b
        if i < len(model.weights) - 1:
            pres.append(a)
            h = _leaky(a, model.slope)
            acts.append(h)
        else:
            h = a
    return h, pres, acts


def logit_pair_from_output(out: np.ndarray) -> np.ndarray:
    """(n, 1) scalar g -> logits (-g, +g); (n, 2) passes through."""
    if out.shape[1] == 1:
        g = out[:, 0]
        return np.column_stack([-g, g])
    return out


def ce_loss(logits: np.ndarray, y: np.ndarray):
    """Binary softmax cross entropy from the margin; returns (loss, dloss/dlogits).

    y is in {-1, +1}. margin = z_pos - z_neg; loss = log(1 + exp(-y * margin)).
    """
    y = np.asarray(y, dtype=float)
    margin = logits[:, 1] - logits[:, 0]
    loss = np.logaddexp(0.0, -y * margin)
    dmargin = -y * expit(-y * margin)
    dlogits = np.column_stack([-dmargin, dmargin])
    return loss, dlogits


def backward(model: MlpModel, X: np.ndarray, dout: np.ndarray,
             need_param_grads: bool = True):
    """Backpropagate dL/d(output) through the net.

    Returns (param_grads, input_grad); param_grads is a list of (dW, db) pairs
    summed over the batch, or None if not requested.
    """
    out, pres, acts = forward_cached(model, X)
    if dout.shape != out.shape:
        raise InvalidInput(f"dout shape {dout.shape} != output shape {out.shape}")
    grads = [None] * len(model.weights) if need_param_grads else None
    delta = dout
    for i in reversed(range(len(model.weights))):
        if need_param_grads:
            grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        delta = delta @ model.weights[i].T
        if i > 0:
            delta = delta * _leaky_grad(pres[i - 1], model.slope)
    return grads, delta


def loss_and_grads(model: MlpModel, X: np.ndarray, y: np.ndarray,
                   need_param_grads: bool = True, need_input_grad: bool = True):
    """Cross-entropy loss plus requested gradients in one pass."""
    out = forward(model, X)
    logits = logit_pair_from_output(out)
    loss, dlogits = ce_loss(logits, y)
    dout = dlogits if out.shape[1] == 2 else (dlogits[:, 1] - dlogits[:, 0]).reshape(-1, 1)
    param_grads, input_grad = backward(model, X, dout, need_param_grads)
    if not need_input_grad:
        input_grad = None
    return loss, param_grads, input_grad


# ---------------------------------------------------------------------------
# Serialization: layer sizes + row-major parameter arrays
# ---------------------------------------------------------------------------

def mlp_to_dict(model: MlpModel) -> dict:
    return {
        "sizes": list(model.sizes),
        "slope": model.slope,
        "weights": [w.ravel(order="C").tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def mlp_from_dict(d: dict) -> MlpModel:
    sizes = [int(s) for s in d["sizes"]]
    weights = [
        np.array(w, dtype=float).reshape(fan_in, fan_out)
        for w, fan_in, fan_out in zip(d["weights"], sizes[:-1], sizes[1:])
    ]
    biases = [np.array(b, dtype=float) for b in d["biases"]]
    return MlpModel(weights, biases, float(d.get("slope", LEAKY_SLOPE)))
