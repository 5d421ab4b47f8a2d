"""Fidelity-cost training of DQNN models with commutator update matrices and Nadam.

Works on any model exposing ``ops(route, noise)``, ``flat_unitaries()``,
``replace_unitaries(list)`` and ``input_qubits(route)`` (plain networks,
collections and encoding finders alike). Gradients are obtained by one
forward pass that records every intermediate register state and one
backward pass that pulls the target projector through the adjoint ops.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dqnn import Append, Discard, Gate, InternalNoise, run_ops, gate_matrix
from .linalg import (
    apply_unitary,
    embed_identity,
    exp_i_hermitian,
    haar_random_unitary,
    is_hermitian,
    num_qubits,
    partial_trace,
    permute_qubits,
    project_zeros,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrainingPair:
    input: np.ndarray
    target: np.ndarray
    route: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(self.route))
        if self.target.ndim != 1:
            raise ValueError("targets must be pure-state vectors")
        if self.input.ndim != 2 or self.input.shape[0] != self.input.shape[1]:
            raise ValueError("inputs must be square density matrices")


@dataclass(frozen=True)
class TrainingConfig:
    epsilon: float = 0.1
    epochs: int = 200
    minibatch_size: int = 3
    beta1: float = 0.9
    beta2: float = 0.999
    nadam_eps: float = 1e-8
    max_restarts: int = 5
    restart_threshold: float = 0.05
    seed: int = 0
    optimizer: str = "nadam"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.minibatch_size < 1 or self.epochs < 0 or self.max_restarts < 0:
            raise ValueError("minibatch_size >= 1, epochs >= 0 and max_restarts >= 0 required")
        if self.optimizer not in ("nadam", "plain"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.optimizer == "nadam" and not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")


# ---------------------------------------------------------------------------
# cost and gradients
# ---------------------------------------------------------------------------


def _group(pairs: Sequence[TrainingPair]):
    groups = defaultdict(list)
    for p in pairs:
        groups[p.route].append(p)
    return groups


def _stack(group: Sequence[TrainingPair]) -> tuple[np.ndarray, np.ndarray]:
    rho = np.stack([p.input for p in group]).astype(complex)
    phi = np.stack([p.target for p in group]).astype(complex)
    return rho, phi


def _overlaps(rho_out: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.einsum("bi,bij,bj->b", phi.conj(), rho_out, phi).real


def fidelities(model, pairs: Sequence[TrainingPair], noise: InternalNoise | None = None) -> np.ndarray:
    """``<phi|rho_out|phi>`` per pair, in input order."""
    out = np.empty(len(pairs))
    index = {id(p): i for i, p in enumerate(pairs)}
    flat = model.flat_unitaries()
    for route, group in _group(pairs).items():
        rho, phi = _stack(group)
        vals = _overlaps(run_ops(model.ops(route, noise), flat, rho), phi)
        for p, v in zip(group, vals):
            out[index[id(p)]] = v
    return out


def cost(model, pairs: Sequence[TrainingPair], noise: InternalNoise | None = None) -> float:
    """Mean infidelity ``1 - (1/N) sum <phi|rho_out|phi>``."""
    if not pairs:
        raise ValueError("cost of an empty pair set is undefined")
    return float(1.0 - fidelities(model, pairs, noise).mean())


def _reduce_to_targets(m: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    n = num_qubits(m.shape[-1])
    others = [q for q in range(n) if q not in targets]
    red = partial_trace(m, others).sum(axis=0)
    order = sorted(targets)
    return permute_qubits(red, [order.index(t) for t in targets])


def commutator_sums(model, pairs: Sequence[TrainingPair], noise: InternalNoise | None = None) -> list[np.ndarray]:
    """Per slot, the summed partial traces ``m`` of ``[rho, O]`` at every gate using it.

    Gates that use a slot's adjoint contribute ``-U m U^dag``, which is how
    parameter sharing between an encoder and its mirrored decoder enters.
    """
    flat = model.flat_unitaries()
    sums = [np.zeros_like(u) for u in flat]
    for route, group in _group(pairs).items():
        ops = model.ops(route, noise)
        rho, phi = _stack(group)
        _, states = run_ops(ops, flat, rho, record=True)
        obs = np.einsum("bi,bj->bij", phi, phi.conj())
        for i in reversed(range(len(ops))):
            op = ops[i]
            if isinstance(op, Gate):
                after = states[i]
                m = _reduce_to_targets(after @ obs - obs @ after, op.targets)
                if op.adjoint:
                    u = flat[op.slot]
                    sums[op.slot] -= u @ m @ u.conj().T
                else:
                    sums[op.slot] += m
                g = gate_matrix(flat, op)
                obs = apply_unitary(obs, g.conj().T, op.targets)
            elif isinstance(op, Discard):
                obs = embed_identity(obs, op.qubits)
            elif isinstance(op, Append):
                obs = project_zeros(obs, op.count)
            else:
                obs = op.adjoint(obs)
    return sums


def update_matrices(model, minibatch: Sequence[TrainingPair], noise: InternalNoise | None = None) -> list[np.ndarray]:
    """Hermitian steepest-descent generators ``K = i dim/(2N) m`` for every slot."""
    if not minibatch:
        raise ValueError("minibatch must not be empty")
    n = len(minibatch)
    out = []
    for u, m in zip(model.flat_unitaries(), commutator_sums(model, minibatch, noise)):
        k = 1j * u.shape[0] / (2 * n) * m
        out.append((k + k.conj().T) / 2)
    return out


def update_matrices_self_inverse(params, minibatch, noise=None) -> list[np.ndarray]:
    """Update matrices of a self-inverse network; decoder terms fold into the encoder slots."""
    if not params.architecture.self_inverse:
        raise ValueError("network is not self-inverse")
    return update_matrices(params, minibatch, noise)


def cost_derivative(model, minibatch: Sequence[TrainingPair], ks: Sequence[np.ndarray], noise=None) -> float:
    """``dC/ds`` of the minibatch cost along ``U_j -> exp(i s K_j) U_j`` for all slots at once."""
    n = len(minibatch)
    sums = commutator_sums(model, minibatch, noise)
    return float(sum((-1j / n * np.trace(k @ m)).real for k, m in zip(ks, sums)))


def perturb(model, ks: Sequence[np.ndarray], s: float):
    return model.replace_unitaries([exp_i_hermitian(k, s) @ u for k, u in zip(ks, model.flat_unitaries())])


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------


@dataclass
class OptimizerState:
    """Nadam moments per slot. Real and imaginary parts of ``K`` are tracked separately.

    ``v`` stores the second moment of the real part in its real component and
    that of the imaginary part in its imaginary component.
    """

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros(cls, unitaries: Sequence[np.ndarray]) -> "OptimizerState":
        return cls([np.zeros_like(u) for u in unitaries], [np.zeros_like(u) for u in unitaries])


def nadam_direction(state: OptimizerState, ks: Sequence[np.ndarray], config: TrainingConfig) -> list[np.ndarray]:
    """Advance the moments with ``ks`` and return the Hermitian effective steps.

    The entrywise Nadam step has entries of order one, so it is divided by
    the matrix dimension to keep the generator's size independent of how many
    qubits the unitary acts on.
    """
    b1, b2, eps = config.beta1, config.beta2, config.nadam_eps
    state.step += 1
    t = state.step
    out = []
    for i, k in enumerate(ks):
        if not is_hermitian(k, 1e-8):
            raise ValueError("update matrix is not Hermitian")
        state.m[i] = b1 * state.m[i] + (1 - b1) * k
        state.v[i] = b2 * state.v[i] + (1 - b2) * (k.real**2 + 1j * k.imag**2)
        m_hat = state.m[i] / (1 - b1**t)
        v_hat = state.v[i] / (1 - b2**t)
        mix = b1 * m_hat + (1 - b1) * k / (1 - b1**t)
        step = mix.real / (np.sqrt(v_hat.real) + eps) + 1j * mix.imag / (np.sqrt(v_hat.imag) + eps)
        out.append((step + step.conj().T) / (2 * k.shape[0]))
    return out


def nadam_step(model, state: OptimizerState, ks: Sequence[np.ndarray], config: TrainingConfig, trainable=None):
    """One optimizer update ``U <- exp(i eps K~) U`` on every trainable slot."""
    if config.optimizer == "plain":
        for k in ks:
            if not is_hermitian(k, 1e-8):
                raise ValueError("update matrix is not Hermitian")
        steps = list(ks)
    else:
        steps = nadam_direction(state, ks, config)
    flat = model.flat_unitaries()
    new = [
        u if (trainable is not None and not trainable[i]) else exp_i_hermitian(k, config.epsilon) @ u
        for i, (k, u) in enumerate(zip(steps, flat))
    ]
    return model.replace_unitaries(new)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainingResult:
    model: object
    history: list[float]
    converged: bool
    restarts: int
    all_final_costs: list[float] = field(default_factory=list)

    @property
    def final_cost(self) -> float:
        return self.history[-1]


def reinitialize(model, rng: np.random.Generator, trainable=None):
    flat = model.flat_unitaries()
    return model.replace_unitaries(
        [
            u if (trainable is not None and not trainable[i]) else haar_random_unitary(num_qubits(u.shape[0]), rng)
            for i, u in enumerate(flat)
        ]
    )


def _run(model, pairs, config, trainable, noise, rng):
    state = OptimizerState.zeros(model.flat_unitaries())
    history = [cost(model, pairs, noise)]
    n = len(pairs)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            batch = [pairs[i] for i in order[start : start + config.minibatch_size]]
            ks = update_matrices(model, batch, noise)
            model = nadam_step(model, state, ks, config, trainable)
        history.append(cost(model, pairs, noise))
    return model, history


def train(
    model,
    pairs: Sequence[TrainingPair],
    config: TrainingConfig,
    trainable_mask: Sequence[bool] | None = None,
    noise: InternalNoise | None = None,
) -> TrainingResult:
    """Minibatch training with random restarts; the best run is returned.

    The first attempt starts from ``model``; each restart redraws every
    trainable unitary. ``trainable_mask[i] = False`` keeps slot ``i`` fixed.
    """
    if not pairs:
        raise ValueError("no training pairs")
    flat = model.flat_unitaries()
    if trainable_mask is not None:
        trainable_mask = [bool(b) for b in trainable_mask]
        if len(trainable_mask) != len(flat):
            raise ValueError(f"mask has {len(trainable_mask)} entries for {len(flat)} unitaries")
    rng = np.random.default_rng(config.seed)
    best = None
    finals = []
    start = model
    for attempt in range(config.max_restarts + 1):
        if attempt:
            start = reinitialize(model, rng, trainable_mask)
        trained, history = _run(start, pairs, config, trainable_mask, noise, rng)
        finals.append(history[-1])
        log.info("attempt %d final cost %.3e", attempt, history[-1])
        if best is None or history[-1] < best[1][-1]:
            best = (trained, history, attempt)
        if history[-1] <= config.restart_threshold:
            break
    trained, history, attempt = best
    return TrainingResult(trained, history, history[-1] <= config.restart_threshold, len(finals) - 1, finals)


def with_seed(config: TrainingConfig, seed: int) -> TrainingConfig:
    return replace(config, seed=seed)
