"""Dissipative quantum neural networks.

A network is compiled into a flat list of register operations
(:class:`Append`, :class:`Gate`, :class:`Channel`, :class:`Discard`) that
refer to trainable unitaries by *slot* index. Self-inverse decoders refer to
the encoder's slot with ``adjoint=True``, so parameter sharing is explicit
and the same list drives forward passes, tomography and backpropagation.

Fresh qubits of a new layer are always appended at the register tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .linalg import (
    append_zeros,
    apply_unitary,
    haar_random_unitary,
    is_unitary,
    num_qubits,
    partial_trace,
    swap_matrix,
)
from .noise import DephasingQuadrature, collective_dephasing, depolarizing_multi


# ---------------------------------------------------------------------------
# register operations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Append:
    count: int


@dataclass(frozen=True)
class Gate:
    slot: int
    targets: tuple[int, ...]
    adjoint: bool = False


@dataclass(frozen=True)
class Discard:
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Channel:
    """Fixed (untrained) channel on the whole current register."""

    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    name: str = "channel"


Op = Append | Gate | Discard | Channel


@dataclass(frozen=True)
class InternalNoise:
    """Depolarizing noise of strength ``p_n`` after every gate, on that gate's qubits."""

    p_n: float

    def __post_init__(self):
        if not 0.0 <= self.p_n <= 1.0:
            raise ValueError(f"p_n={self.p_n} outside [0, 1]")

    def after(self, targets: tuple[int, ...]) -> Channel:
        p_n = self.p_n
        m = len(targets)
        if not 0.0 <= p_n <= 1.0 - 1.0 / 4**m:
            raise ValueError(f"p_n={p_n} too large for a {m}-qubit depolarizing channel")

        def fn(rho, targets=targets):
            return depolarizing_multi(rho, p_n, targets)

        return Channel(fn, fn, f"depol{m}")


def dephasing_channel(quad: DephasingQuadrature) -> Channel:
    def fn(rho):
        return collective_dephasing(rho, quad)

    return Channel(fn, fn, "collective-dephasing")


def with_noise(ops: Sequence[Op], noise: InternalNoise | None) -> list[Op]:
    if noise is None or noise.p_n == 0.0:
        return list(ops)
    out: list[Op] = []
    for op in ops:
        out.append(op)
        if isinstance(op, Gate):
            out.append(noise.after(op.targets))
    return out


def gate_matrix(unitaries: Sequence[np.ndarray], gate: Gate) -> np.ndarray:
    u = unitaries[gate.slot]
    return u.conj().T if gate.adjoint else u


def run_ops(ops: Sequence[Op], unitaries: Sequence[np.ndarray], rho: np.ndarray, record: bool = False):
    """Push ``rho`` (shape ``(..., d, d)``) through ``ops``.

    With ``record=True`` also return the register state after every op.
    """
    states = []
    for op in ops:
        if isinstance(op, Append):
            rho = append_zeros(rho, op.count)
        elif isinstance(op, Gate):
            rho = apply_unitary(rho, gate_matrix(unitaries, op), op.targets)
        elif isinstance(op, Discard):
            rho = partial_trace(rho, op.qubits)
        else:
            rho = op.apply(rho)
        if record:
            states.append(rho)
    return (rho, states) if record else rho


def forward_transition(n_prev: int, n_next: int, slots: Sequence[int]) -> list[Op]:
    """Layer map: append ``n_next`` qubits, apply one gate per new neuron, discard the old layer."""
    ops: list[Op] = [Append(n_next)]
    prev = tuple(range(n_prev))
    for j, s in enumerate(slots):
        ops.append(Gate(s, prev + (n_prev + j,)))
    ops.append(Discard(prev))
    return ops


def mirrored_transition(n_prev: int, n_next: int, slots: Sequence[int]) -> list[Op]:
    """Inverse-layer map built from the adjoints of an ``n_next -> n_prev`` transition.

    ``slots`` are that transition's gates in their forward order. Gate ``j``
    reappears as the ``n_prev + 1 - j``-th gate, with the fresh qubits taking
    the place of its input layer and old neuron ``j`` the place of its output
    neuron; the index permutation replaces explicit swap gates.
    """
    if len(slots) != n_prev:
        raise ValueError("mirrored transition needs one slot per neuron of the current layer")
    ops: list[Op] = [Append(n_next)]
    fresh = tuple(range(n_prev, n_prev + n_next))
    for j in reversed(range(n_prev)):
        ops.append(Gate(slots[j], fresh + (j,), adjoint=True))
    ops.append(Discard(tuple(range(n_prev))))
    return ops


def mirror_index(n_k: int, j: int) -> int:
    """1-based position of encoder gate ``j`` inside its mirrored decoder transition."""
    return n_k + 1 - j


# ---------------------------------------------------------------------------
# plain networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Architecture:
    layer_widths: tuple[int, ...]
    self_inverse: bool = False

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError(f"need at least two layers of positive width, got {widths}")
        if self.self_inverse and (len(widths) % 2 == 0 or widths != widths[::-1]):
            raise ValueError(f"self-inverse networks need an odd-length palindrome, got {widths}")

    @property
    def n_in(self) -> int:
        return self.layer_widths[0]

    @property
    def n_out(self) -> int:
        return self.layer_widths[-1]

    @property
    def stored_transitions(self) -> int:
        n_trans = len(self.layer_widths) - 1
        return n_trans // 2 if self.self_inverse else n_trans

    def unitary_qubits(self) -> list[list[int]]:
        """Qubit count of every stored unitary, grouped by transition."""
        w = self.layer_widths
        return [[w[k] + 1] * w[k + 1] for k in range(self.stored_transitions)]


@dataclass(eq=False)
class NetworkParams:
    architecture: Architecture
    unitaries: list[list[np.ndarray]]

    def __post_init__(self):
        shapes = self.architecture.unitary_qubits()
        if [len(t) for t in self.unitaries] != [len(t) for t in shapes]:
            raise ValueError("unitary counts do not match the architecture")
        for trans, qubits in zip(self.unitaries, shapes):
            for u, q in zip(trans, qubits):
                if u.shape != (2**q, 2**q):
                    raise ValueError(f"expected a {q}-qubit unitary, got shape {u.shape}")

    @classmethod
    def random(cls, architecture: Architecture, rng: np.random.Generator) -> "NetworkParams":
        return cls(
            architecture,
            [[haar_random_unitary(q, rng) for q in trans] for trans in architecture.unitary_qubits()],
        )

    @classmethod
    def identity(cls, architecture: Architecture) -> "NetworkParams":
        return cls(
            architecture,
            [[np.eye(2**q, dtype=complex) for q in trans] for trans in architecture.unitary_qubits()],
        )

    @property
    def n_in(self) -> int:
        return self.architecture.n_in

    @property
    def n_out(self) -> int:
        return self.architecture.n_out

    def flat_unitaries(self) -> list[np.ndarray]:
        return [u for trans in self.unitaries for u in trans]

    def replace_unitaries(self, flat: Sequence[np.ndarray]) -> "NetworkParams":
        it = iter(flat)
        return NetworkParams(self.architecture, [[next(it) for _ in trans] for trans in self.unitaries])

    def _slots(self) -> list[list[int]]:
        slots, k = [], 0
        for trans in self.unitaries:
            slots.append(list(range(k, k + len(trans))))
            k += len(trans)
        return slots

    def encoder_ops(self) -> list[Op]:
        """Operations of the stored transitions only."""
        w = self.architecture.layer_widths
        ops: list[Op] = []
        for k, slots in enumerate(self._slots()):
            ops += forward_transition(w[k], w[k + 1], slots)
        return ops

    def decoder_ops(self) -> list[Op]:
        """Derived transitions of a self-inverse network (empty otherwise)."""
        if not self.architecture.self_inverse:
            return []
        w = self.architecture.layer_widths
        ops: list[Op] = []
        for k, slots in reversed(list(enumerate(self._slots()))):
            ops += mirrored_transition(w[k + 1], w[k], slots)
        return ops

    def transition_ops(self) -> list[list[Op]]:
        """Operations of every layer transition, stored or mirrored, in order."""
        w = self.architecture.layer_widths
        out = [forward_transition(w[k], w[k + 1], slots) for k, slots in enumerate(self._slots())]
        if self.architecture.self_inverse:
            out += [mirrored_transition(w[k + 1], w[k], slots) for k, slots in reversed(list(enumerate(self._slots())))]
        return out

    def ops(self, route=None, noise: InternalNoise | None = None) -> list[Op]:
        if route not in (None, ()):
            raise ValueError(f"plain networks have no route {route!r}")
        return with_noise(self.encoder_ops() + self.decoder_ops(), noise)

    def input_qubits(self, route=None) -> int:
        return self.n_in

    def validate(self, atol: float = 1e-8) -> None:
        for u in self.flat_unitaries():
            if not is_unitary(u, atol):
                raise ValueError("network contains a non-unitary matrix")


def build_self_inverse_decoder(params: NetworkParams) -> list[list[tuple[np.ndarray, tuple[int, ...]]]]:
    """Materialize the decoder of a self-inverse network.

    Returns, per decoder transition, the ordered ``(matrix, targets)`` pairs
    acting on the register ``[old layer, fresh layer]`` of that transition.
    """
    if not params.architecture.self_inverse:
        raise ValueError("network is not self-inverse")
    flat = params.flat_unitaries()
    transitions, current = [], None
    for op in params.decoder_ops():
        if isinstance(op, Append):
            current = []
        elif isinstance(op, Gate):
            current.append((gate_matrix(flat, op), op.targets))
        elif isinstance(op, Discard):
            transitions.append(current)
    return transitions


def layer_map(
    rho_prev: np.ndarray,
    transition_unitaries: Sequence[np.ndarray],
    noise: InternalNoise | None = None,
) -> np.ndarray:
    """Single layer-to-layer channel with one unitary per new neuron."""
    n_prev = num_qubits(rho_prev.shape[-1])
    ops = forward_transition(n_prev, len(transition_unitaries), range(len(transition_unitaries)))
    for u, op in zip(transition_unitaries, [o for o in ops if isinstance(o, Gate)]):
        if u.shape != (2 ** len(op.targets),) * 2:
            raise ValueError(f"unitary of shape {u.shape} does not fit {len(op.targets)} qubits")
    return run_ops(with_noise(ops, noise), list(transition_unitaries), rho_prev)


def forward(model, rho_in: np.ndarray, noise: InternalNoise | None = None, route=None) -> np.ndarray:
    """Output state(s) of ``model`` for input ``rho_in`` of shape ``(..., d, d)``."""
    d_in = 2 ** model.input_qubits(route)
    if rho_in.shape[-1] != d_in:
        raise ValueError(f"input dimension {rho_in.shape[-1]} != {d_in}")
    return run_ops(model.ops(route, noise), model.flat_unitaries(), rho_in)


def channel_of(model, noise: InternalNoise | None = None, route=None) -> Callable[[np.ndarray], np.ndarray]:
    ops = model.ops(route, noise)
    flat = model.flat_unitaries()
    return lambda rho: run_ops(ops, flat, rho)


# ---------------------------------------------------------------------------
# collections sharing one self-inverse decoder
# ---------------------------------------------------------------------------


def erasure_patterns(n: int, max_erasures: int) -> list[tuple[int, ...]]:
    from itertools import combinations

    return [c for e in range(max_erasures + 1) for c in combinations(range(n), e)]


@dataclass(eq=False)
class QAECollection:
    """Self-inverse ``n-1-n`` QAE plus one extra encoder per erasure pattern.

    Slot 0 is the shared ``(n+1)``-qubit unitary; the encoder for erased
    ``pattern`` maps the ``n - len(pattern)`` surviving qubits onto the hidden
    qubit and reuses the shared decoder.
    """

    n: int
    shared: np.ndarray
    encoders: dict[tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.shared.shape != (2 ** (self.n + 1),) * 2:
            raise ValueError("shared unitary must act on n + 1 qubits")
        for pat, u in self.encoders.items():
            if not pat:
                raise ValueError("the empty pattern uses the shared unitary")
            if u.shape != (2 ** (self.n - len(pat) + 1),) * 2:
                raise ValueError(f"encoder for {pat} has shape {u.shape}")
        self.encoders = dict(sorted(self.encoders.items(), key=lambda kv: (len(kv[0]), kv[0])))

    @classmethod
    def random(cls, n: int, patterns: Iterable[tuple[int, ...]], rng: np.random.Generator) -> "QAECollection":
        shared = haar_random_unitary(n + 1, rng)
        enc = {tuple(p): haar_random_unitary(n - len(p) + 1, rng) for p in patterns if p}
        return cls(n, shared, enc)

    @property
    def patterns(self) -> list[tuple[int, ...]]:
        return [()] + list(self.encoders)

    @property
    def qae(self) -> NetworkParams:
        """The no-loss member as a plain self-inverse network."""
        return NetworkParams(Architecture((self.n, 1, self.n), True), [[self.shared]])

    def flat_unitaries(self) -> list[np.ndarray]:
        return [self.shared] + list(self.encoders.values())

    def replace_unitaries(self, flat: Sequence[np.ndarray]) -> "QAECollection":
        return QAECollection(self.n, flat[0], dict(zip(self.encoders, flat[1:])))

    def slot(self, pattern: tuple[int, ...]) -> int:
        pattern = tuple(pattern)
        if not pattern:
            return 0
        return 1 + list(self.encoders).index(pattern)

    def encoder_ops(self, pattern: tuple[int, ...]) -> list[Op]:
        if tuple(pattern) not in self.patterns:
            raise KeyError(f"no encoder for erasure pattern {pattern}")
        return forward_transition(self.n - len(pattern), 1, [self.slot(pattern)])

    def decoder_ops(self) -> list[Op]:
        return mirrored_transition(1, self.n, [0])

    def input_qubits(self, route=()) -> int:
        return self.n - len(tuple(route or ()))

    def ops(self, route=(), noise: InternalNoise | None = None) -> list[Op]:
        route = tuple(route or ())
        return with_noise(self.encoder_ops(route) + self.decoder_ops(), noise)


@dataclass(eq=False)
class EncodingFinder:
    """``1-n-1`` network: shared decoder, fixed noise, then the matching encoder.

    Wraps a :class:`QAECollection`; the decoder half creates the logical
    state, the (possibly erased) register passes through ``channel`` and the
    encoder for that erasure pattern compresses it back onto one qubit.
    """

    collection: QAECollection
    quadrature: DephasingQuadrature | None = None

    @classmethod
    def random(cls, n: int, max_erasures: int, rng: np.random.Generator, quadrature=None) -> "EncodingFinder":
        return cls(QAECollection.random(n, erasure_patterns(n, max_erasures), rng), quadrature)

    @property
    def patterns(self) -> list[tuple[int, ...]]:
        return self.collection.patterns

    def flat_unitaries(self) -> list[np.ndarray]:
        return self.collection.flat_unitaries()

    def replace_unitaries(self, flat: Sequence[np.ndarray]) -> "EncodingFinder":
        return EncodingFinder(self.collection.replace_unitaries(flat), self.quadrature)

    def input_qubits(self, route=()) -> int:
        return 1

    def ops(self, route=(), noise: InternalNoise | None = None) -> list[Op]:
        route = tuple(route or ())
        c = self.collection
        middle: list[Op] = []
        if self.quadrature is not None:
            middle.append(dephasing_channel(self.quadrature))
        if route:
            middle.append(Discard(route))
        return with_noise(c.decoder_ops(), noise) + middle + with_noise(c.encoder_ops(route), noise)


def rearrange_to_qae(finder: EncodingFinder) -> QAECollection:
    """Swap the roles of a trained finder's halves: its encoders become QAE inputs.

    No retraining is involved; the unitaries are shared as-is.
    """
    return finder.collection


# ---------------------------------------------------------------------------
# hand-built 3-1-3 corrector
# ---------------------------------------------------------------------------


def _permutation_unitary(n: int, fn: Callable[[list[int]], list[int]]) -> np.ndarray:
    d = 2**n
    u = np.zeros((d, d), dtype=complex)
    for idx in range(d):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        out = fn(bits)
        u[int("".join(map(str, out)), 2), idx] = 1.0
    if not is_unitary(u):
        raise ValueError("bit map is not reversible")
    return u


def _syndrome_correct_swap(bits: list[int]) -> list[int]:
    a, b, c, h = bits
    s1, s2 = a ^ b, b ^ c
    if (s1, s2) == (0, 1):
        c ^= 1
    return [s1, s2, h, c]


CNOT = _permutation_unitary(2, lambda b: [b[0], b[0] ^ b[1]])
SWAP = swap_matrix(2, 0, 1)


def handbuilt_three_qubit_qae() -> NetworkParams:
    """Standard-architecture 3-1-3 network realizing repetition-code recovery.

    The encoder gate writes both syndrome bits into input qubits 1-2, applies
    the majority correction to qubit 3 and swaps it onto the hidden qubit; the
    decoder fans it out with CNOT, CNOT, SWAP.
    """
    u21 = _permutation_unitary(4, _syndrome_correct_swap)
    return NetworkParams(Architecture((3, 1, 3)), [[u21], [CNOT, CNOT, SWAP]])
