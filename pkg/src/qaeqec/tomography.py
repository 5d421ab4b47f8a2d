"""Process tomography: chi matrices in (rectangular) Pauli bases, reference channels, distances."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .codes import perfect_recovery, three_qubit_code
from .linalg import ket, pauli_string


class ConsistencyError(ValueError):
    """The probed map is not linear or returns outputs of the wrong shape."""


@lru_cache(maxsize=None)
def operator_basis(n_in: int, n_out: int) -> tuple[tuple[str, ...], np.ndarray]:
    """Orthonormal basis of ``2**n_out x 2**n_in`` operators and its labels.

    Square case: normalized Pauli strings in lexicographic ``IXYZ`` order.
    Otherwise the Paulis act on the smaller register and the surplus qubits
    (the tail of the larger register) carry a computational-basis bra (when
    ``n_in > n_out``) or ket (when ``n_out > n_in``).
    """
    m = min(n_in, n_out)
    extra = abs(n_in - n_out)
    labels, ops = [], []
    for letters in product("IXYZ", repeat=m):
        p = pauli_string("".join(letters)) if m else np.ones((1, 1), dtype=complex)
        for k in range(2**extra):
            bits = format(k, f"0{extra}b") if extra else ""
            tail = ket(bits).reshape(-1, 1) if extra else np.ones((1, 1))
            if n_in > n_out:
                op = np.kron(p, tail.conj().T)
            else:
                op = np.kron(p, tail)
            ops.append(op / np.sqrt(2**m))
            labels.append("".join(letters) + (f"|{bits}" if extra else ""))
    return tuple(labels), np.array(ops)


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    n_in: int
    n_out: int
    chi: np.ndarray

    @property
    def labels(self) -> tuple[str, ...]:
        return operator_basis(self.n_in, self.n_out)[0]

    def kraus(self, tol: float = 1e-12) -> list[np.ndarray]:
        basis = operator_basis(self.n_in, self.n_out)[1]
        w, v = np.linalg.eigh((self.chi + self.chi.conj().T) / 2)
        return [np.sqrt(wi) * np.tensordot(v[:, i], basis, axes=1) for i, wi in enumerate(w) if wi > tol]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``sum_ab chi_ab E_a rho E_b^dag`` (valid for non-Hermitian ``rho`` too)."""
        basis = operator_basis(self.n_in, self.n_out)[1]
        left = np.einsum("aij,...jk->...aik", basis, rho)
        return np.einsum("ab,...aik,blk->...il", self.chi, left, basis.conj())

    def choi(self) -> np.ndarray:
        basis = operator_basis(self.n_in, self.n_out)[1]
        vecs = basis.reshape(len(basis), -1)
        return vecs.T @ self.chi @ vecs.conj()

    def is_trace_preserving(self, atol: float = 1e-8) -> bool:
        basis = operator_basis(self.n_in, self.n_out)[1]
        s = np.einsum("ab,bji,ajk->ik", self.chi, basis.conj(), basis)
        return bool(np.allclose(s, np.eye(2**self.n_in), atol=atol))


def choi_matrix(channel: Callable[[np.ndarray], np.ndarray], n_in: int) -> np.ndarray:
    """``J = sum_jk Q(|j><k|) (x) |j><k|`` with the output factor first."""
    d = 2**n_in
    units = np.zeros((d * d, d, d), dtype=complex)
    units[np.arange(d * d), np.repeat(np.arange(d), d), np.tile(np.arange(d), d)] = 1.0
    out = np.asarray(channel(units))
    if out.ndim != 3 or out.shape[0] != d * d or out.shape[1] != out.shape[2]:
        raise ConsistencyError(f"channel returned shape {out.shape} for {d * d} probes")
    d_out = out.shape[1]
    # J[(i, j), (l, k)] = Q(|j><k|)[i, l]
    return out.reshape(d, d, d_out, d_out).transpose(2, 0, 3, 1).reshape(d_out * d, d_out * d)


def _check_linear(channel, n_in: int, rng: np.random.Generator) -> None:
    d = 2**n_in
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    lhs = channel(np.stack([0.3 * a + 0.7 * b]))[0]
    rhs = 0.3 * channel(np.stack([a]))[0] + 0.7 * channel(np.stack([b]))[0]
    if not np.allclose(lhs, rhs, atol=1e-9):
        raise ConsistencyError("channel is not linear on probe states")


def chi_matrix(channel: Callable[[np.ndarray], np.ndarray], n_in: int, n_out: int, check: bool = True) -> ProcessMatrix:
    """Chi matrix of a (batched, linear) channel in :func:`operator_basis`."""
    if check:
        _check_linear(channel, n_in, np.random.default_rng(12345))
    j = choi_matrix(channel, n_in)
    if j.shape[0] != 2 ** (n_in + n_out):
        raise ConsistencyError(f"channel output does not have {n_out} qubits")
    basis = operator_basis(n_in, n_out)[1]
    vecs = basis.reshape(len(basis), -1)
    chi = vecs.conj() @ j @ vecs.T
    return ProcessMatrix(n_in, n_out, chi)


def kraus_channel(kraus: Sequence[np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    return lambda rho: sum(k @ rho @ k.conj().T for k in ks)


def random_kraus(n_in: int, n_out: int, rank: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Kraus operators of a random CPTP map (isometry slices of a Haar-like matrix)."""
    d_in, d_out = 2**n_in, 2**n_out
    if rank * d_out < d_in:
        raise ValueError(f"rank {rank} too small for a trace-preserving {n_in} -> {n_out} map")
    g = rng.normal(size=(rank * d_out, d_in)) + 1j * rng.normal(size=(rank * d_out, d_in))
    q, _ = np.linalg.qr(g)
    return [q[r * d_out : (r + 1) * d_out] for r in range(rank)]


# ---------------------------------------------------------------------------
# reference channels of the repetition code
# ---------------------------------------------------------------------------


def _bra_ket(out: str, inp: str) -> np.ndarray:
    return np.outer(ket(out), ket(inp))


def reference_encoder_kraus() -> list[np.ndarray]:
    """Correct-and-compress map ``3 -> 1`` indexed by syndrome."""
    pairs = [("000", "111"), ("001", "110"), ("100", "011"), ("010", "101")]
    return [_bra_ket("0", a) + _bra_ket("1", b) for a, b in pairs]


def reference_decoder_kraus() -> list[np.ndarray]:
    return [_bra_ket("000", "0") + _bra_ket("111", "1")]


def reference_recovery_chi() -> ProcessMatrix:
    code = three_qubit_code()
    return chi_matrix(lambda r: perfect_recovery(code, r), 3, 3)


def reference_encoder_chi() -> ProcessMatrix:
    return chi_matrix(kraus_channel(reference_encoder_kraus()), 3, 1)


def reference_decoder_chi() -> ProcessMatrix:
    return chi_matrix(kraus_channel(reference_decoder_kraus()), 1, 3)


# ---------------------------------------------------------------------------
# comparisons and export
# ---------------------------------------------------------------------------


def channel_distance(a: ProcessMatrix, b: ProcessMatrix) -> float:
    """Largest absolute elementwise difference of two chi matrices."""
    if (a.n_in, a.n_out) != (b.n_in, b.n_out):
        raise ValueError("process matrices act on different registers")
    return float(np.abs(a.chi - b.chi).max())


def choi_fidelity(a: ProcessMatrix, b: ProcessMatrix) -> float:
    """Uhlmann fidelity of the trace-normalized Choi states."""
    from .linalg import fidelity

    ja, jb = a.choi(), b.choi()
    return fidelity(ja / np.trace(ja).real, jb / np.trace(jb).real)


def write_chi_csv(path, pm: ProcessMatrix, header_lines: Sequence[str] = ()) -> None:
    labels = pm.labels
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for i, j in product(range(len(labels)), repeat=2):
            w.writerow([labels[i], labels[j], f"{pm.chi[i, j].real:.17g}", f"{pm.chi[i, j].imag:.17g}"])
