"""Small stabilizer codes, logical states and syndrome-lookup recovery."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .linalg import apply_operators, ket, pauli_string

_LETTERS = "XYZ"


def pauli_weight(label: str) -> int:
    return sum(c != "I" for c in label)


def paulis_commute(a: str, b: str) -> bool:
    clashes = sum(1 for x, y in zip(a, b) if x != "I" and y != "I" and x != y)
    return clashes % 2 == 0


def multiply_labels(a: str, b: str) -> str:
    """Pauli string product up to phase."""
    table = {"I": 0, "X": 1, "Z": 2, "Y": 3}
    inv = "IXZY"
    return "".join(inv[table[x] ^ table[y]] for x, y in zip(a, b))


def paulis_by_weight(n: int, max_weight: int, letters: str = _LETTERS) -> list[str]:
    """All Pauli strings up to ``max_weight``, ordered by weight, then qubit index."""
    out = ["I" * n]
    for w in range(1, max_weight + 1):
        for qubits in combinations(range(n), w):
            for ops in product(letters, repeat=w):
                label = ["I"] * n
                for q, c in zip(qubits, ops):
                    label[q] = c
                out.append("".join(label))
    return out


@dataclass(frozen=True)
class LogicalPoint:
    """Bloch-sphere angles of a logical state."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi + 1e-12:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2 * np.pi + 1e-12:
            raise ValueError(f"phi={self.phi} outside [0, 2pi)")


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """A code encoding one logical qubit into ``n`` physical qubits."""

    name: str
    n: int
    generators: tuple[str, ...]
    logical_x: str
    logical_z: str
    basis0: np.ndarray = field(repr=False)
    basis1: np.ndarray = field(repr=False)
    recovery_table: dict = field(repr=False)

    def syndrome(self, error: str) -> tuple[int, ...]:
        """Syndrome bits of a Pauli error; bit ``i`` is 1 if it anticommutes with generator ``i``."""
        return tuple(int(not paulis_commute(error, g)) for g in self.generators)

    @cached_property
    def logical_y(self) -> np.ndarray:
        return 1j * pauli_string(self.logical_x) @ pauli_string(self.logical_z)

    @cached_property
    def codespace_projector(self) -> np.ndarray:
        return np.outer(self.basis0, self.basis0.conj()) + np.outer(self.basis1, self.basis1.conj())

    def syndrome_projector(self, bits: Sequence[int]) -> np.ndarray:
        d = 2**self.n
        proj = np.eye(d, dtype=complex)
        for bit, g in zip(bits, self.generators):
            proj = proj @ (np.eye(d) + (-1) ** bit * pauli_string(g)) / 2
        return proj

    @cached_property
    def recovery_kraus(self) -> list[np.ndarray]:
        return [pauli_string(corr) @ self.syndrome_projector(bits) for bits, corr in sorted(self.recovery_table.items())]


def _stabilizer_basis(n: int, generators: Sequence[str], logical_x: str, logical_z: str) -> tuple[np.ndarray, np.ndarray]:
    d = 2**n
    proj = np.eye(d, dtype=complex)
    for g in generators:
        proj = proj @ (np.eye(d) + pauli_string(g)) / 2
    proj = proj @ (np.eye(d) + pauli_string(logical_z)) / 2
    for idx in range(d):
        v = proj[:, idx]
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            break
    v = v / norm
    first = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
    zero = v * (abs(first) / first)
    one = pauli_string(logical_x) @ zero
    return zero, one


def _min_weight_table(n: int, generators: Sequence[str], letters: str = _LETTERS) -> dict:
    table: dict[tuple[int, ...], str] = {}
    n_syndromes = 2 ** len(generators)
    for err in paulis_by_weight(n, n, letters):
        bits = tuple(int(not paulis_commute(err, g)) for g in generators)
        table.setdefault(bits, err)
        if len(table) == n_syndromes:
            break
    if len(table) != n_syndromes:
        raise ValueError("error set does not reach every syndrome")
    return table


def _build(name, n, generators, logical_x, logical_z, table=None, basis=None, letters=_LETTERS) -> StabilizerCode:
    generators = tuple(generators)
    if basis is None:
        basis = _stabilizer_basis(n, generators, logical_x, logical_z)
    if table is None:
        table = _min_weight_table(n, generators, letters)
    return StabilizerCode(name, n, generators, logical_x, logical_z, basis[0], basis[1], dict(table))


def three_qubit_code(strategy: str = "standard") -> StabilizerCode:
    """Bit-flip repetition code ``|000>, |111>`` with generators Z1Z2, Z2Z3.

    ``strategy="alternative"`` swaps in the table that reads every non-trivial
    syndrome as the complementary two-qubit flip.
    """
    table = None
    if strategy == "alternative":
        table = {(0, 0): "III", (1, 0): "IXX", (1, 1): "XIX", (0, 1): "XXI"}
    elif strategy != "standard":
        raise ValueError(f"unknown strategy {strategy!r}")
    return _build("3qc", 3, ["ZZI", "IZZ"], "XXX", "ZZZ", table=table, letters="X")


def five_qubit_code(strategy: str = "standard") -> StabilizerCode:
    """Perfect 5-qubit code.

    ``strategy="bitflip"`` decodes every syndrome as the lightest X-only
    pattern, which covers all single and double bit flips.
    """
    if strategy not in ("standard", "bitflip"):
        raise ValueError(f"unknown strategy {strategy!r}")
    letters = "X" if strategy == "bitflip" else _LETTERS
    return _build("5qc", 5, ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"], "XXXXX", "ZZZZZ", letters=letters)


def four_qubit_erasure_code() -> StabilizerCode:
    """Distance-2 code ``(|0000>+|1111>)/sqrt2``, ``(|0011>+|1100>)/sqrt2``."""
    zero = (ket("0000") + ket("1111")) / np.sqrt(2)
    one = (ket("0011") + ket("1100")) / np.sqrt(2)
    return _build("4qec", 4, ["XXXX", "ZZZZ", "ZZII"], "XXII", "IZZI", basis=(zero, one))


CODES = {"3qc": three_qubit_code, "4qec": four_qubit_erasure_code, "5qc": five_qubit_code}


def get_code(name: str) -> StabilizerCode:
    try:
        return CODES[name]()
    except KeyError:
        raise ValueError(f"unknown code {name!r}; choose from {sorted(CODES)}") from None


# ---------------------------------------------------------------------------
# logical states
# ---------------------------------------------------------------------------


def logical_state(code: StabilizerCode, point: LogicalPoint) -> np.ndarray:
    return np.cos(point.theta / 2) * code.basis0 + np.exp(1j * point.phi) * np.sin(point.theta / 2) * code.basis1


def sample_bloch_uniform(rng: np.random.Generator) -> LogicalPoint:
    cos_t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * np.pi)
    return LogicalPoint(float(np.arccos(cos_t)), float(phi))


def sample_bloch_amplitudes(rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` Bloch-uniform qubit amplitude pairs ``(cos(t/2), e^{i phi} sin(t/2))``."""
    cos_t = rng.uniform(-1.0, 1.0, size)
    phi = rng.uniform(0.0, 2 * np.pi, size)
    theta = np.arccos(cos_t)
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def encode_amplitudes(code: StabilizerCode, amps: np.ndarray) -> np.ndarray:
    return amps[..., 0:1] * code.basis0 + amps[..., 1:2] * code.basis1


def cardinal_logical_states(code: StabilizerCode) -> list[np.ndarray]:
    """``|0_L>, |1_L>, |+_L>, |-_L>, |+'_L>, |-'_L>`` (Z, X and Y eigenstates)."""
    b0, b1 = code.basis0, code.basis1
    s = 1 / np.sqrt(2)
    return [b0, b1, s * (b0 + b1), s * (b0 - b1), s * (b0 + 1j * b1), s * (b0 - 1j * b1)]


def cardinal_qubit_states() -> list[np.ndarray]:
    """The six single-qubit X, Y and Z eigenstates, ordered as for logical states."""
    s = 1 / np.sqrt(2)
    b0, b1 = ket("0"), ket("1")
    return [b0, b1, s * (b0 + b1), s * (b0 - b1), s * (b0 + 1j * b1), s * (b0 - 1j * b1)]


# ---------------------------------------------------------------------------
# recovery and closed forms
# ---------------------------------------------------------------------------


def apply_pauli(rho: np.ndarray, label: str) -> np.ndarray:
    for q, c in enumerate(label):
        if c != "I":
            p = pauli_string(c)
            rho = apply_operators(rho, p, p, [q])
    return rho


def perfect_recovery(code: StabilizerCode, rho: np.ndarray) -> np.ndarray:
    """Syndrome projection followed by the tabulated Pauli correction."""
    out = np.zeros_like(rho, dtype=complex)
    for m in code.recovery_kraus:
        out = out + m @ rho @ m.conj().T
    return out


def analytic_3qc(p: float) -> tuple[float, float]:
    """Logical flip rate and Bloch-averaged fidelity of the corrected repetition code."""
    p_l = 3 * p**2 * (1 - p) + p**3
    return p_l, 1 - 2 * p_l / 3
