"""Multinomial logistic regression for intent classification.

Training is intentionally boring and fully deterministic: zero-initialized
weights, full-batch gradient descent (learning rate 0.5, 300 epochs) with
L2 weight decay 0.01.  Running it twice on the same data yields bit-identical
weights, which makes trained packs reproducible artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEARNING_RATE = 0.5
EPOCHS = 300
L2_LAMBDA = 0.01


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class IntentClassifier:
    """Softmax classifier over a fixed, ordered set of intent classes."""

    class_ids: tuple  # of (dialogue id, node id), order fixed at training
    weights: np.ndarray  # (num_classes, dim)
    bias: np.ndarray  # (num_classes,)

    @property
    def num_classes(self) -> int:
        return len(self.class_ids)

    def probabilities(self, embedding: np.ndarray) -> np.ndarray:
        logits = self.weights @ embedding + self.bias
        return _softmax_rows(logits[np.newaxis, :])[0]

    def classify(self, embedding: np.ndarray):
        """Returns ``(class_id, confidence)`` for the most probable class."""
        probs = self.probabilities(embedding)
        best = int(np.argmax(probs))
        return self.class_ids[best], float(probs[best])


def train_classifier(class_ids: list, examples: list) -> IntentClassifier:
    """Fit a classifier from ``(class_index, embedding)`` training pairs.

    A single-class context degenerates to a constant classifier (zero
    weights already produce probability 1.0 for the only class).
    """
    if not class_ids:
        raise ValueError("cannot train a classifier with no classes")
    dim = len(examples[0][1]) if examples else 0
    num_classes = len(class_ids)
    weights = np.zeros((num_classes, dim), dtype=np.float64)
    bias = np.zeros(num_classes, dtype=np.float64)
    if num_classes == 1 or not examples:
        return IntentClassifier(tuple(class_ids), weights, bias)

    x = np.stack([e for _, e in examples]).astype(np.float64)
    y = np.zeros((len(examples), num_classes), dtype=np.float64)
    for row, (class_index, _) in enumerate(examples):
        y[row, class_index] = 1.0

    n = float(len(examples))
    for _ in range(EPOCHS):
        probs = _softmax_rows(x @ weights.T + bias)
        grad = (probs - y) / n
        weights -= LEARNING_RATE * (grad.T @ x + L2_LAMBDA * weights)
        bias -= LEARNING_RATE * grad.sum(axis=0)
    return IntentClassifier(tuple(class_ids), weights, bias)
