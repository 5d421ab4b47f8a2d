"""scikit-learn style estimator around DQNN training."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dqnn import Architecture, InternalNoise, NetworkParams, forward
from .linalg import StateValidityError, check_density, check_pure, projector
from .training import TrainingConfig, TrainingPair, fidelities, train


def check_states(X, n_qubits: int | None = None) -> np.ndarray:
    """Batch of density matrices ``(N, d, d)``; pure vectors ``(N, d)`` become projectors."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 2:
        X = np.stack([projector(check_pure(x)) for x in X]) if len(X) else X.reshape(0, X.shape[1], X.shape[1])
    if X.ndim != 3:
        raise StateValidityError(f"expected (N, d, d) density matrices or (N, d) vectors, got shape {X.shape}")
    for rho in X:
        check_density(rho)
    if n_qubits is not None and X.shape[-1] != 2**n_qubits:
        raise StateValidityError(f"expected {n_qubits}-qubit states, got dimension {X.shape[-1]}")
    return X


def check_targets(y, n_qubits: int | None = None) -> np.ndarray:
    """Batch of normalized pure target vectors ``(N, d)``."""
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2:
        raise StateValidityError(f"targets must have shape (N, d), got {y.shape}")
    for psi in y:
        check_pure(psi)
    if n_qubits is not None and y.shape[-1] != 2**n_qubits:
        raise StateValidityError(f"expected {n_qubits}-qubit targets, got dimension {y.shape[-1]}")
    return y


def check_pairs(X, y, n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    X = check_states(X, n_in)
    y = check_targets(y, n_out)
    if len(X) != len(y):
        raise ValueError(f"{len(X)} inputs but {len(y)} targets")
    if len(X) == 0:
        raise ValueError("need at least one training pair")
    return X, y


class QAEEstimator(BaseEstimator):
    """Quantum autoencoder fitted to map noisy inputs onto pure targets.

    ``fit`` trains a DQNN with widths ``layer_widths``; ``predict`` (and
    ``transform``) return output density matrices and ``score`` is the mean
    fidelity to the targets.
    """

    def __init__(
        self,
        layer_widths: Sequence[int] = (3, 1, 3),
        self_inverse: bool = True,
        epsilon: float = 0.1,
        epochs: int = 200,
        minibatch_size: int = 3,
        max_restarts: int = 5,
        restart_threshold: float = 0.05,
        optimizer: str = "nadam",
        internal_p_n: float = 0.0,
        random_state: int = 0,
    ):
        self.layer_widths = layer_widths
        self.self_inverse = self_inverse
        self.epsilon = epsilon
        self.epochs = epochs
        self.minibatch_size = minibatch_size
        self.max_restarts = max_restarts
        self.restart_threshold = restart_threshold
        self.optimizer = optimizer
        self.internal_p_n = internal_p_n
        self.random_state = random_state

    def _architecture(self) -> Architecture:
        return Architecture(tuple(self.layer_widths), self.self_inverse)

    def _noise(self) -> InternalNoise | None:
        return InternalNoise(self.internal_p_n) if self.internal_p_n else None

    def _config(self) -> TrainingConfig:
        return TrainingConfig(
            epsilon=self.epsilon,
            epochs=self.epochs,
            minibatch_size=self.minibatch_size,
            max_restarts=self.max_restarts,
            restart_threshold=self.restart_threshold,
            optimizer=self.optimizer,
            seed=int(self.random_state),
        )

    def fit(self, X, y):
        arch = self._architecture()
        config = self._config()
        X, y = check_pairs(X, y, arch.n_in, arch.n_out)
        pairs = [TrainingPair(rho, psi) for rho, psi in zip(X, y)]
        init = NetworkParams.random(arch, np.random.default_rng([config.seed, 1000]))
        result = train(init, pairs, config, noise=self._noise())
        self.model_ = result.model
        self.history_ = list(result.history)
        self.converged_ = result.converged
        self.n_restarts_ = result.restarts
        self.n_qubits_in_ = arch.n_in
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_states(X, self.n_qubits_in_)
        return forward(self.model_, X, self._noise())

    def transform(self, X) -> np.ndarray:
        return self.predict(X)

    def score(self, X, y) -> float:
        check_is_fitted(self, "model_")
        X, y = check_pairs(X, y, self.n_qubits_in_, self.model_.n_out)
        pairs = [TrainingPair(rho, psi) for rho, psi in zip(X, y)]
        return float(np.mean(fidelities(self.model_, pairs, self._noise())))

