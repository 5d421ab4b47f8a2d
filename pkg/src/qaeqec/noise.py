"""Noise channels acting on (batched) density matrices.

Every channel accepts arrays shaped ``(..., d, d)`` and is linear, so it can
also be pushed through non-Hermitian operators (needed for tomography).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .linalg import X, Y, Z, apply_operators, embed_identity, num_qubits, partial_trace


class InfeasibleNoiseError(ValueError):
    """Parameters do not define a valid probability distribution."""


def _check_prob(p: float, upper: float = 1.0, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= upper + 1e-15:
        raise ValueError(f"{name}={p} outside [0, {upper}]")
    return p


def _pauli_mix(rho: np.ndarray, weights: Sequence[tuple[float, np.ndarray]], qubit: int) -> np.ndarray:
    out = (1.0 - sum(w for w, _ in weights)) * rho
    for w, pauli in weights:
        if w:
            out = out + w * apply_operators(rho, pauli, pauli, [qubit])
    return out


def bit_flip(rho: np.ndarray, p: float, qubits: Iterable[int]) -> np.ndarray:
    """Independent ``(1-p) rho + p X rho X`` on each listed qubit."""
    p = _check_prob(p)
    for q in qubits:
        rho = _pauli_mix(rho, [(p, X)], q)
    return rho


def depolarizing_single(rho: np.ndarray, p: float, qubits: Iterable[int]) -> np.ndarray:
    """Independent single-qubit depolarizing noise, X, Y and Z each with ``p/3``."""
    p = _check_prob(p)
    for q in qubits:
        rho = _pauli_mix(rho, [(p / 3, X), (p / 3, Y), (p / 3, Z)], q)
    return rho


def depolarizing_multi(rho: np.ndarray, p_n: float, qubits: Sequence[int]) -> np.ndarray:
    """``m``-qubit depolarizing channel on ``qubits``.

    Each of the ``4**m - 1`` non-identity Pauli strings occurs with
    probability ``p_n / (4**m - 1)``. Evaluated in the equivalent form
    ``(1 - lam) rho + lam Tr_q(rho) (x) I/2**m`` with ``lam = 4**m p_n / (4**m - 1)``.
    """
    qubits = list(qubits)
    m = len(qubits)
    if m == 0:
        return rho
    p_n = _check_prob(p_n, 1.0 - 1.0 / 4**m, "p_n")
    if p_n == 0.0:
        return rho
    lam = 4**m * p_n / (4**m - 1)
    mixed = embed_identity(partial_trace(rho, qubits), qubits) / 2**m
    return (1.0 - lam) * rho + lam * mixed


def depolarizing_coefficient(m: int, p_n: float) -> float:
    """Weight of the maximally mixed part in :func:`depolarizing_multi`."""
    return 4**m * p_n / (4**m - 1)


# ---------------------------------------------------------------------------
# spatially correlated bit flips on three qubits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelatedFlipDistribution:
    """Exchangeable distribution over the 8 flip patterns of three qubits.

    ``q0`` is the no-flip probability; ``q1``, ``q2`` and ``q3`` are the
    probabilities of *each* weight-1, weight-2 and weight-3 pattern.
    """

    p: float
    eta: float
    q0: float
    q1: float
    q2: float
    q3: float

    @property
    def p_c(self) -> float:
        """Probability of a flip on one qubit given a flip on another."""
        return self.eta * self.p / (1.0 - self.p + self.eta * self.p)

    def pattern_probability(self, pattern: Sequence[int]) -> float:
        return (self.q0, self.q1, self.q2, self.q3)[int(sum(pattern))]

    def patterns(self) -> list[tuple[tuple[int, int, int], float]]:
        return [(pat, self.pattern_probability(pat)) for pat in product((0, 1), repeat=3)]


def correlated_flip_distribution(p: float, eta: float) -> CorrelatedFlipDistribution:
    """Joint flip distribution with marginal ``p`` and correlation ratio ``eta``.

    Closed by exchangeability together with the rule that a flip on one qubit
    given a flip on a second does not depend on the third qubit.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} must lie in (0, 1)")
    if eta <= 0.0:
        raise ValueError(f"eta={eta} must be positive")
    pc = eta * p / (1.0 - p + eta * p)
    q1 = p * (1.0 - pc) ** 2
    q2 = p * pc * (1.0 - pc)
    q3 = p * pc**2
    q0 = 1.0 - p * (3.0 - 3.0 * pc + pc**2)
    if q0 < -1e-15:
        raise InfeasibleNoiseError(f"(p={p}, eta={eta}) gives negative no-flip probability {q0:.3g}")
    return CorrelatedFlipDistribution(p=p, eta=eta, q0=max(q0, 0.0), q1=q1, q2=q2, q3=q3)


def _flip_pattern(rho: np.ndarray, pattern: Sequence[int], qubits: Sequence[int]) -> np.ndarray:
    for bit, q in zip(pattern, qubits):
        if bit:
            rho = apply_operators(rho, X, X, [q])
    return rho


def correlated_bit_flip(rho: np.ndarray, dist: CorrelatedFlipDistribution) -> np.ndarray:
    """Mixture over the 8 flip patterns of a 3-qubit register, weighted by ``dist``."""
    if num_qubits(rho.shape[-1]) != 3:
        raise ValueError("correlated_bit_flip expects a 3-qubit register")
    out = np.zeros_like(rho, dtype=complex)
    for pattern, prob in dist.patterns():
        if prob:
            out = out + prob * _flip_pattern(rho, pattern, (0, 1, 2))
    return out


# ---------------------------------------------------------------------------
# erasures and collective dephasing
# ---------------------------------------------------------------------------


def erase(rho: np.ndarray, positions: Iterable[int]) -> tuple[np.ndarray, tuple[int, ...]]:
    """Lose the qubits at ``positions``.

    Returns the marginal on the remaining qubits together with the sorted
    erased positions, which are classically known and select the decoder.
    """
    positions = tuple(sorted(set(int(q) for q in positions)))
    return partial_trace(rho, positions), positions


@dataclass(frozen=True)
class DephasingQuadrature:
    """Discretized Gaussian distribution of the collective rotation angle."""

    sigma: float
    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.nodes) == 0 or len(self.nodes) != len(self.weights):
            raise ValueError("quadrature needs matching, non-empty nodes and weights")


def dephasing_quadrature(sigma: float = 1.0, n_nodes: int = 21) -> DephasingQuadrature:
    """Gauss-Hermite rule for a centred Gaussian with standard deviation ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return DephasingQuadrature(0.0, (0.0,), (1.0,))
    x, w = hermegauss(n_nodes)
    w = w / w.sum()
    return DephasingQuadrature(float(sigma), tuple(sigma * x), tuple(w))


def _magnetization(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    ones = np.array([bin(i).count("1") for i in idx])
    return n - 2 * ones


def dephasing_factors(n: int, quad: DephasingQuadrature) -> np.ndarray:
    """Elementwise damping factors of collective dephasing on ``n`` qubits."""
    m = _magnetization(n)
    diff = (m[:, None] - m[None, :]).astype(float)
    alpha = np.asarray(quad.nodes)
    w = np.asarray(quad.weights)
    return np.tensordot(w, np.exp(-0.5j * alpha[:, None, None] * diff[None]), axes=1)


def collective_dephasing(rho: np.ndarray, quad: DephasingQuadrature) -> np.ndarray:
    """``sum_j w_j U(a_j) rho U(a_j)^dag`` with ``U(a) = exp(-i a/2 sum_n Z_n)``."""
    n = num_qubits(rho.shape[-1])
    return rho * dephasing_factors(n, quad)
