"""Image-context detection from segmented-area features.

A small two-hidden-layer ReLU network with a softmax head, trained with plain
mini-batch SGD on mean cross-entropy. Everything is written against numpy so
training is bit-for-bit reproducible for a given seed.
"""
from __future__ import annotations

import enum
import math
import os

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import OBJECT_CLASSES, VOID, check_label_map
from .exceptions import DivergedLoss, EmptyLabelMap, MalformedModelFile

N_FEATURES = len(OBJECT_CLASSES)


class Context(enum.IntEnum):
    PET = 0
    OTHER_ANIMALS = 1
    VEHICLE = 2
    INDOOR = 3
    OTHERS = 4

    @property
    def label(self) -> str:
        return _CONTEXT_LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "Context":
        """Accept ``OtherAnimals``, ``other_animals``, ``OTHER-ANIMALS`` ..."""
        key = name.strip().replace("_", "").replace("-", "").replace(" ", "").lower()
        for ctx in cls:
            if ctx.label.lower() == key:
                return ctx
        raise ValueError(f"unknown context name {name!r}")


_CONTEXT_LABELS = {
    Context.PET: "Pet",
    Context.OTHER_ANIMALS: "OtherAnimals",
    Context.VEHICLE: "Vehicle",
    Context.INDOOR: "Indoor",
    Context.OTHERS: "Others",
}
N_CONTEXTS = len(Context)


def extract_area_features(labels) -> np.ndarray:
    """Fraction of non-VOID pixels carried by each of the 20 object classes."""
    labels = check_label_map(labels)
    valid = labels[labels != VOID]
    if valid.size == 0:
        raise EmptyLabelMap("label map contains only VOID pixels")
    counts = np.bincount(valid, minlength=N_FEATURES + 1)
    return counts[1:].astype(np.float64) / valid.size


class AreaFeatures(BaseEstimator, TransformerMixin):
    """Stateless transformer: sequence of label maps -> ``(n, 20)`` area matrix."""

    def fit(self, X=None, y=None):
        self.n_features_out_ = N_FEATURES
        return self

    def transform(self, X):
        return np.stack([extract_area_features(labels) for labels in X])


# -- network math ---------------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward_pass(coefs, intercepts, X):
    """Return the list of layer activations; the last entry is softmax output."""
    activations = [X]
    h = X
    for W, b in zip(coefs[:-1], intercepts[:-1]):
        h = np.maximum(h @ W + b, 0.0)
        activations.append(h)
    activations.append(softmax(h @ coefs[-1] + intercepts[-1]))
    return activations


def cross_entropy(proba: np.ndarray, y: np.ndarray) -> float:
    picked = proba[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.maximum(picked, np.finfo(np.float64).tiny))))


def loss_and_gradients(coefs, intercepts, X, y):
    """Mean cross-entropy and its gradients with respect to every parameter."""
    acts = forward_pass(coefs, intercepts, X)
    proba = acts[-1]
    n = X.shape[0]
    loss = cross_entropy(proba, y)

    delta = proba.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_W = [None] * len(coefs)
    grad_b = [None] * len(coefs)
    for layer in range(len(coefs) - 1, -1, -1):
        grad_W[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ coefs[layer].T) * (acts[layer] > 0)
    return loss, grad_W, grad_b


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


# -- estimator ------------------------------------------------------------


class ContextClassifier(ClassifierMixin, BaseEstimator):
    """MLP context classifier over area features.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default (120, 120)
        Widths of the two ReLU hidden layers.
    learning_rate : float, default 0.01
        Fixed SGD step size.
    epochs : int, default 500
    batch_size : int, default 32
        A batch size at least the sample count gives full-batch descent.
    random_state : int, default 0
        Seeds both the weight initialisation and the per-epoch shuffles.

    Attributes
    ----------
    coefs_, intercepts_ : list of ndarray
    classes_ : ndarray of shape (5,)
        Always the five context codes, whatever subset ``y`` contains.
    history_ : list of (epoch, loss, accuracy)
        Full training-set loss and accuracy measured after every epoch.
    train_accuracy_ : float
    """

    def __init__(self, hidden_layer_sizes=(120, 120), learning_rate=0.01, epochs=500,
                 batch_size=32, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def _init_params(self, rng):
        sizes = [N_FEATURES, *self.hidden_layer_sizes, N_CONTEXTS]
        self.coefs_ = [glorot_uniform(rng, a, b) for a, b in zip(sizes[:-1], sizes[1:])]
        self.intercepts_ = [np.zeros(b) for b in sizes[1:]]

    def fit(self, X, y, epoch_callback=None):
        """Train from scratch.

        ``epoch_callback(epoch, loss, accuracy)``, when given, is called after
        each epoch with full-training-set statistics.
        """
        X, y = check_X_y(X, y, dtype=np.float64)
        if X.shape[1] != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} area features, got {X.shape[1]}")
        y = y.astype(np.int64)
        if y.min() < 0 or y.max() >= N_CONTEXTS:
            raise ValueError("context labels must be integers in 0..4")
        if self.epochs < 1 or self.batch_size < 1 or not self.learning_rate > 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")

        rng = np.random.default_rng(self.random_state)
        self._init_params(rng)
        self.classes_ = np.arange(N_CONTEXTS)
        self.n_features_in_ = N_FEATURES
        self.history_ = []
        n = X.shape[0]
        lr = self.learning_rate

        for epoch in range(1, self.epochs + 1):
            order = rng.permutation(n)
            # overflow shows up as a non-finite loss below
            with np.errstate(over="ignore", invalid="ignore"):
                for start in range(0, n, self.batch_size):
                    idx = order[start:start + self.batch_size]
                    _, gW, gb = loss_and_gradients(self.coefs_, self.intercepts_, X[idx], y[idx])
                    for i in range(len(self.coefs_)):
                        self.coefs_[i] -= lr * gW[i]
                        self.intercepts_[i] -= lr * gb[i]
                proba = forward_pass(self.coefs_, self.intercepts_, X)[-1]

            loss = cross_entropy(proba, y)
            if not math.isfinite(loss) or not all(np.all(np.isfinite(W)) for W in self.coefs_):
                raise DivergedLoss(f"loss became non-finite at epoch {epoch}")
            acc = float(np.mean(np.argmax(proba, axis=1) == y))
            self.history_.append((epoch, loss, acc))
            if epoch_callback is not None:
                epoch_callback(epoch, loss, acc)

        self.train_accuracy_ = self.history_[-1][2]
        return self

    def decision_function(self, X):
        """Pre-softmax logits."""
        check_is_fitted(self, "coefs_")
        X = check_array(X, dtype=np.float64, ensure_2d=False)
        h = np.atleast_2d(X)
        for W, b in zip(self.coefs_[:-1], self.intercepts_[:-1]):
            h = np.maximum(h @ W + b, 0.0)
        return h @ self.coefs_[-1] + self.intercepts_[-1]

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        # argmax takes the first maximum, so ties go to the lowest context code
        return np.argmax(self.predict_proba(X), axis=1)


def forward(model: ContextClassifier, x) -> np.ndarray:
    """Softmax probabilities for a single area-feature vector."""
    return model.predict_proba(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def classify(model: ContextClassifier, labels) -> Context:
    return Context(int(model.predict(extract_area_features(labels).reshape(1, -1))[0]))


def train(X, y, *, learning_rate=0.01, epochs=500, batch_size=32, seed=0,
          epoch_callback=None) -> ContextClassifier:
    model = ContextClassifier(learning_rate=learning_rate, epochs=epochs,
                              batch_size=batch_size, random_state=seed)
    return model.fit(X, y, epoch_callback=epoch_callback)


# -- persistence ----------------------------------------------------------

_MAGIC = "CTXMODEL"
_VERSION = "v1"


def _tensor_names(n_layers):
    for i in range(1, n_layers + 1):
        yield f"W{i}"
        yield f"b{i}"


def save_model(model: ContextClassifier, path) -> None:
    """Write the model as plain text.

    Header ``CTXMODEL v1 20 h1 h2 5 <seed>``, a ``meta`` line, then one
    ``[name] rows cols`` section per tensor (weights and biases in layer
    order) holding row-major values in shortest round-trip decimal form.
    """
    check_is_fitted(model, "coefs_")
    sizes = [model.coefs_[0].shape[0]] + [W.shape[1] for W in model.coefs_]
    lines = [" ".join([_MAGIC, _VERSION, *map(str, sizes), str(model.random_state)])]
    acc = getattr(model, "train_accuracy_", float("nan"))
    lines.append(
        f"meta activation=relu epochs={model.epochs} learning_rate={model.learning_rate!r} "
        f"batch_size={model.batch_size} train_accuracy={acc!r}"
    )
    tensors = []
    for W, b in zip(model.coefs_, model.intercepts_):
        tensors += [W, b.reshape(1, -1)]
    for name, t in zip(_tensor_names(len(model.coefs_)), tensors):
        lines.append(f"[{name}] {t.shape[0]} {t.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in t)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> ContextClassifier:
    try:
        with open(path, encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedModelFile(f"{os.fspath(path)}: cannot read model file: {exc}") from exc
    try:
        return _parse_model(lines)
    except MalformedModelFile as exc:
        raise MalformedModelFile(f"{os.fspath(path)}: {exc}") from None


def _parse_model(lines) -> ContextClassifier:
    if not lines:
        raise MalformedModelFile("empty file")
    head = lines[0].split()
    if len(head) != 7 or head[0] != _MAGIC or head[1] != _VERSION:
        raise MalformedModelFile("bad magic or header")
    try:
        sizes = [int(s) for s in head[2:6]]
        seed = int(head[6])
    except ValueError:
        raise MalformedModelFile("non-integer header field") from None
    if sizes[0] != N_FEATURES or sizes[-1] != N_CONTEXTS or min(sizes) < 1:
        raise MalformedModelFile(f"unsupported architecture {sizes}")

    meta = {}
    if len(lines) < 2 or not lines[1].startswith("meta"):
        raise MalformedModelFile("missing meta line")
    for item in lines[1].split()[1:]:
        key, _, value = item.partition("=")
        meta[key] = value

    expected = []
    for a, b in zip(sizes[:-1], sizes[1:]):
        expected += [(a, b), (1, b)]
    pos = 2
    tensors = []
    for name, shape in zip(_tensor_names(len(sizes) - 1), expected):
        if pos >= len(lines):
            raise MalformedModelFile(f"truncated before tensor {name}")
        if lines[pos].split() != [f"[{name}]", str(shape[0]), str(shape[1])]:
            raise MalformedModelFile(f"bad section header for {name}: {lines[pos]!r}")
        pos += 1
        rows = lines[pos:pos + shape[0]]
        if len(rows) != shape[0]:
            raise MalformedModelFile(f"truncated tensor {name}")
        try:
            t = np.array([[float(v) for v in row.split()] for row in rows], dtype=np.float64)
        except ValueError:
            raise MalformedModelFile(f"unparseable value in {name}") from None
        if t.shape != shape:
            raise MalformedModelFile(f"tensor {name} has shape {t.shape}, expected {shape}")
        if not np.all(np.isfinite(t)):
            raise MalformedModelFile(f"non-finite value in {name}")
        tensors.append(t)
        pos += shape[0]
    if any(line.strip() for line in lines[pos:]):
        raise MalformedModelFile("trailing data after last tensor")

    try:
        model = ContextClassifier(
            hidden_layer_sizes=tuple(sizes[1:-1]),
            learning_rate=float(meta.get("learning_rate", 0.01)),
            epochs=int(meta.get("epochs", 0)),
            batch_size=int(meta.get("batch_size", 32)),
            random_state=seed,
        )
        model.train_accuracy_ = float(meta.get("train_accuracy", "nan"))
    except ValueError:
        raise MalformedModelFile("bad meta line") from None
    model.coefs_ = tensors[0::2]
    model.intercepts_ = [b.reshape(-1) for b in tensors[1::2]]
    model.classes_ = np.arange(N_CONTEXTS)
    model.n_features_in_ = N_FEATURES
    return model
