from dataclasses import dataclass

import numpy as np

from gs_model.models import sigmoid
from opacity_net.models import MlpWeights


@dataclass(frozen=True)
class ForwardCache:
    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    output: np.ndarray


def init_mlp(dims: tuple[int, ...], rng: np.random.Generator) -> MlpWeights:
    """Kaiming-uniform (fan-in) weights and zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpWeights(weights, biases)


def forward(x: np.ndarray, w: MlpWeights) -> ForwardCache:
    hidden = np.atleast_2d(np.asarray(x, dtype=np.float64))
    inputs, pre = [], []
    last = len(w.weights) - 1
    for index, (weight, bias) in enumerate(zip(w.weights, w.biases)):
        inputs.append(hidden)
        z = hidden @ weight + bias
        pre.append(z)
        hidden = sigmoid(z) if index == last else np.maximum(z, 0.0)
    return ForwardCache(inputs, pre, hidden[:, 0])


def mlp_forward(x: np.ndarray, w: MlpWeights):
    """Sigmoid output for one input vector (a float) or for a batch of rows."""
    out = forward(x, w).output
    return float(out[0]) if np.ndim(x) == 1 else out


def mlp_backward(cache: ForwardCache, w: MlpWeights, upstream: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Gradients of ``sum(upstream * output)``: parameter grads in ``w.params()`` order, and input grads."""
    out = cache.output
    delta = (np.asarray(upstream, dtype=np.float64) * out * (1.0 - out))[:, None]
    grads = []
    for index in range(len(w.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))
        grads.append(cache.inputs[index].T @ delta)
        delta = delta @ w.weights[index].T
        if index:
            delta = delta * (cache.pre_activations[index - 1] > 0)
    grads.reverse()
    return grads, delta
