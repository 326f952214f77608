"""Feed-forward network with a single real output z and its training loop.

The network maps ``x -> z`` through ``n -> 256 -> 128 -> 128 -> 1`` linear
layers, with a rectifier after the first two. The class probabilities are
the softmax over the logit pair ``(z, 1 - z)``, so ``P(minority) =
sigmoid(2z - 1)`` and a point is classified as minority iff ``z > 1/2``.

All parameters live in one flat float64 vector; ``ModelState.layers()``
returns ``(W, b)`` views into it with ``W`` shaped ``(out, in)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .exceptions import TrainingError

HIDDEN = (256, 128, 128)
RELU_LAYERS = 2


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    grad_tol: float = 1e-3
    max_epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


def _layer_shapes(n_inputs, hidden):
    widths = (n_inputs, *hidden, 1)
    return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]


def n_parameters(n_inputs, hidden=HIDDEN) -> int:
    return sum(o * i + o for o, i in _layer_shapes(n_inputs, hidden))


@dataclass(frozen=True, eq=False)
class ModelState:
    n_inputs: int
    params: np.ndarray
    hidden: tuple[int, ...] = HIDDEN
    relu_layers: int = RELU_LAYERS
    seed: int = 0

    def __post_init__(self):
        params = np.ascontiguousarray(self.params, dtype=np.float64)
        expected = n_parameters(self.n_inputs, self.hidden)
        if params.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got shape {params.shape}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def layers(self, flat=None):
        """``(W, b)`` views into `flat` (default: this model's parameters)."""
        flat = self.params if flat is None else flat
        out, at = [], 0
        for o, i in _layer_shapes(self.n_inputs, self.hidden):
            W = flat[at:at + o * i].reshape(o, i)
            at += o * i
            b = flat[at:at + o]
            at += o
            out.append((W, b))
        return out

    def equals(self, other: "ModelState") -> bool:
        return (
            self.n_inputs == other.n_inputs
            and self.hidden == other.hidden
            and self.relu_layers == other.relu_layers
            and np.array_equal(self.params, other.params)
        )


def init_model(n, seed=0, hidden=HIDDEN, zero=False) -> ModelState:
    """Fan-in scaled uniform initialization, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``.

    ``zero=True`` gives an all-zero network whose output is 0 everywhere.
    """
    if n < 1:
        raise ValueError(f"input width must be >= 1, got {n}")
    total = n_parameters(n, hidden)
    if zero:
        return ModelState(n, np.zeros(total), hidden=hidden, seed=seed)
    rng = np.random.default_rng(seed)
    parts = []
    for o, i in _layer_shapes(n, hidden):
        bound = 1.0 / np.sqrt(i)
        parts.append(rng.uniform(-bound, bound, size=o * i))
        parts.append(rng.uniform(-bound, bound, size=o))
    return ModelState(n, np.concatenate(parts), hidden=hidden, seed=seed)


def _forward(layers, X, relu_layers):
    acts = [X]
    h = X
    for i, (W, b) in enumerate(layers):
        h = h @ W.T + b
        if i < relu_layers:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return h[:, 0], acts


def forward(m: ModelState, x):
    """Network output z for one point (returns float) or a batch (returns array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    if X.ndim != 2 or X.shape[1] != m.n_inputs:
        raise ValueError(f"expected input width {m.n_inputs}, got shape {x.shape}")
    z, _ = _forward(m.layers(), X, m.relu_layers)
    return float(z[0]) if single else z


def point_probabilities(z):
    """``(P(minority), P(majority))`` from the softmax over logits ``(z, 1 - z)``."""
    p_min = expit(2.0 * np.asarray(z, dtype=np.float64) - 1.0)
    p_maj = 1.0 - p_min
    if np.ndim(z) == 0:
        return float(p_min), float(p_maj)
    return p_min, p_maj


def classify(z):
    """1 (minority) iff z > 1/2; ties go to the majority."""
    out = (np.asarray(z) > 0.5).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def _pointwise_loss(z, y):
    # -log softmax in log-sum-exp form: minority -> softplus(1 - 2z), majority -> softplus(2z - 1)
    t = 2.0 * z - 1.0
    return np.where(y == 1, np.logaddexp(0.0, -t), np.logaddexp(0.0, t))


def sample_loss(m: ModelState, S) -> tuple[float, float, float]:
    """Sample loss and its minority / majority parts, each scaled by ``1/|S|``."""
    if len(S) == 0:
        raise ValueError("sample loss of an empty set")
    per_point = _pointwise_loss(forward(m, S.X), S.y)
    minority = float(per_point[S.y == 1].sum() / len(S))
    majority = float(per_point[S.y == 0].sum() / len(S))
    return minority + majority, minority, majority


def loss_and_gradient(m: ModelState, X, y, params=None):
    """Mean loss over ``(X, y)`` and its gradient w.r.t. the flat parameters."""
    params = m.params if params is None else params
    layers = m.layers(params)
    z, acts = _forward(layers, X, m.relu_layers)
    loss = float(_pointwise_loss(z, y).mean())
    grad = np.empty_like(params)
    grad_layers = m.layers(grad)
    # d loss / dz = 2 (P(minority) - y) / |batch|
    delta = (2.0 * (expit(2.0 * z - 1.0) - y) / len(y))[:, None]
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        gW, gb = grad_layers[i]
        gW[...] = delta.T @ acts[i]
        gb[...] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ W
            if i - 1 < m.relu_layers:
                delta *= acts[i] > 0
    return loss, grad


def train(m: ModelState, S, cfg: TrainConfig = TrainConfig(), log=None) -> ModelState:
    """Mini-batch Adam on the sample loss.

    Before each epoch the full-batch gradient norm is checked; training stops
    once it is at most ``cfg.grad_tol`` or after ``cfg.max_epochs`` epochs.
    Batches are reshuffled every epoch from ``default_rng((cfg.seed, epoch))``
    and the last short batch is kept.

    If `log` is a list, ``(epoch, loss, grad_norm)`` is appended per check.
    """
    if len(S) == 0 or S.n_minority == 0 or S.n_majority == 0:
        raise ValueError("training set must contain both classes")
    X, y = S.X, S.y.astype(np.float64)
    n = len(y)
    params = m.params.copy()
    mom = np.zeros_like(params)
    vel = np.zeros_like(params)
    b1, b2, lr, eps = cfg.beta1, cfg.beta2, cfg.learning_rate, cfg.epsilon
    t = 0
    for epoch in range(cfg.max_epochs + 1):
        loss, g = loss_and_gradient(m, X, y, params)
        gnorm = float(np.linalg.norm(g))
        if not (np.isfinite(loss) and np.isfinite(gnorm)):
            raise TrainingError(f"non-finite loss {loss}", epoch=epoch)
        if log is not None:
            log.append((epoch, loss, gnorm))
        if gnorm <= cfg.grad_tol or epoch == cfg.max_epochs:
            break
        order = np.random.default_rng((cfg.seed, epoch)).permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, g = loss_and_gradient(m, X[batch], y[batch], params)
            t += 1
            mom *= b1
            mom += (1.0 - b1) * g
            vel *= b2
            vel += (1.0 - b2) * g * g
            step = lr * np.sqrt(1.0 - b2 ** t) / (1.0 - b1 ** t)
            params -= step * mom / (np.sqrt(vel) + eps * np.sqrt(1.0 - b2 ** t))
    return replace(m, params=params)


# ---------------------------------------------------------------------------
# Checkpoints: <stem>.json header + <stem>.bin little-endian float64 vector
# ---------------------------------------------------------------------------

def save_checkpoint(m: ModelState, path) -> Path:
    path = Path(path).with_suffix(".json")
    blob = path.with_suffix(".bin")
    header = {
        "format": "moods-mlp",
        "n_inputs": m.n_inputs,
        "hidden": list(m.hidden),
        "relu_layers": m.relu_layers,
        "seed": m.seed,
        "n_params": int(m.params.size),
        "dtype": "<f8",
        "data": blob.name,
    }
    path.write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")
    blob.write_bytes(m.params.astype("<f8").tobytes())
    return path


def load_checkpoint(path) -> ModelState:
    path = Path(path).with_suffix(".json")
    header = json.loads(path.read_text(encoding="utf-8"))
    if header.get("format") != "moods-mlp":
        raise ValueError(f"{path} is not a model checkpoint")
    params = np.frombuffer((path.parent / header["data"]).read_bytes(), dtype="<f8")
    if params.size != header["n_params"]:
        raise ValueError(f"{path}: expected {header['n_params']} parameters, found {params.size}")
    return ModelState(
        n_inputs=header["n_inputs"],
        params=params.astype(np.float64),
        hidden=tuple(header["hidden"]),
        relu_layers=header["relu_layers"],
        seed=header["seed"],
    )
