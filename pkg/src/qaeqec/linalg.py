"""Dense multi-qubit linear algebra.

Conventions used throughout the package:

* qubit 0 is the most significant bit of a computational-basis index, so
  ``|q0 q1 ... q_{n-1}>`` has index ``q0 * 2**(n-1) + ... + q_{n-1}``;
* states are plain ``numpy`` arrays. Operator arrays may carry leading batch
  dimensions, ``(..., d, d)``, and every register helper here acts on the
  trailing two axes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12

ATOL_HERMITIAN = 1e-10
ATOL_TRACE = 1e-10
EIG_FLOOR = -1e-9
ATOL_UNITARY = 1e-8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


class RegisterSizeError(ValueError):
    """Raised when a register would exceed :data:`MAX_QUBITS`."""


class StateValidityError(ValueError):
    """Raised when an array is not a valid density matrix or pure state."""


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def _check_size(n: int) -> None:
    if n > MAX_QUBITS:
        raise RegisterSizeError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices (or vectors)."""
    out = np.ones((1, 1), dtype=complex) if mats and mats[0].ndim == 2 else np.ones(1, dtype=complex)
    rows = 1
    for m in mats:
        rows *= m.shape[0]
        if rows > 2**MAX_QUBITS:
            raise RegisterSizeError(f"kron dimension {rows} exceeds 2**{MAX_QUBITS}")
        out = np.kron(out, m)
    return out


def pauli_string(label: str) -> np.ndarray:
    """Matrix of a Pauli string such as ``"XZZXI"`` (leftmost letter on qubit 0)."""
    return kron(*(PAULIS[c] for c in label.upper()))


def ket(bits: str) -> np.ndarray:
    """Computational basis vector for a bit string, e.g. ``ket("010")``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return psi[..., :, None] * psi[..., None, :].conj()


# ---------------------------------------------------------------------------
# register manipulation on (..., d, d) arrays
# ---------------------------------------------------------------------------


def _as_tensor(arr: np.ndarray, n: int) -> np.ndarray:
    return arr.reshape(arr.shape[:-2] + (2,) * (2 * n))


def _right_mul_on_axes(x: np.ndarray, m: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    t = len(axes)
    dest = list(range(-t, 0))
    x = np.moveaxis(x, axes, dest)
    shape = x.shape
    x = (x.reshape(shape[:-t] + (2**t,)) @ m).reshape(shape)
    return np.moveaxis(x, dest, axes)


def _check_targets(targets: Sequence[int], n: int) -> tuple[int, ...]:
    targets = tuple(int(q) for q in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets {targets} are not distinct")
    if any(q < 0 or q >= n for q in targets):
        raise ValueError(f"targets {targets} out of range for {n} qubits")
    return targets


def apply_operators(
    arr: np.ndarray, left: np.ndarray, right: np.ndarray, targets: Sequence[int]
) -> np.ndarray:
    """Return ``L arr R`` with ``L`` and ``R`` embedded on ``targets``."""
    n = num_qubits(arr.shape[-1])
    targets = _check_targets(targets, n)
    if left.shape != (2 ** len(targets),) * 2 or right.shape != left.shape:
        raise ValueError(f"operator shape {left.shape} does not match {len(targets)} targets")
    lead = arr.ndim - 2
    x = _as_tensor(arr, n)
    x = _right_mul_on_axes(x, left.T, [lead + q for q in targets])
    x = _right_mul_on_axes(x, right, [lead + n + q for q in targets])
    return x.reshape(arr.shape)


def apply_unitary(rho: np.ndarray, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Conjugate ``rho`` by ``u`` acting on the ordered ``targets``.

    The first target is the most significant qubit of ``u``'s own index.
    """
    u = np.asarray(u, dtype=complex)
    return apply_operators(rho, u, u.conj().T, targets)


def partial_trace(rho: np.ndarray, discard: Iterable[int]) -> np.ndarray:
    """Trace out the qubits in ``discard``; the remaining qubits keep their order."""
    n = num_qubits(rho.shape[-1])
    discard = sorted(set(int(q) for q in discard))
    if any(q < 0 or q >= n for q in discard):
        raise ValueError(f"discard set {discard} out of range for {n} qubits")
    if not discard:
        return rho
    keep = [q for q in range(n) if q not in discard]
    lead = rho.ndim - 2
    b = list(range(lead))
    x = _as_tensor(rho, n)
    order = b + [lead + q for q in keep] + [lead + q for q in discard]
    order += [lead + n + q for q in keep] + [lead + n + q for q in discard]
    dk, dr = 2 ** len(keep), 2 ** len(discard)
    x = x.transpose(order).reshape(rho.shape[:-2] + (dk, dr, dk, dr))
    return np.einsum("...iaja->...ij", x)


def embed_identity(op: np.ndarray, positions: Iterable[int]) -> np.ndarray:
    """Adjoint of :func:`partial_trace`: insert identity factors at ``positions``.

    ``positions`` index the *enlarged* register.
    """
    positions = sorted(set(int(q) for q in positions))
    if not positions:
        return op
    m = num_qubits(op.shape[-1])
    n = m + len(positions)
    _check_size(n)
    keep = [q for q in range(n) if q not in positions]
    r = 2 ** len(positions)
    # identity block appended at the tail, then moved into place
    x = np.einsum("...ij,ab->...iajb", op, np.eye(r)).reshape(op.shape[:-2] + (op.shape[-1] * r,) * 2)
    perm = [0] * n
    for new_pos, old_pos in enumerate(keep + positions):
        perm[old_pos] = new_pos
    return permute_qubits(x, perm)


def append_zeros(rho: np.ndarray, count: int) -> np.ndarray:
    """Tensor ``|0...0><0...0|`` on ``count`` new qubits onto the register tail."""
    if count == 0:
        return rho
    d = rho.shape[-1]
    _check_size(num_qubits(d) + count)
    r = 2**count
    out = np.zeros(rho.shape[:-2] + (d * r, d * r), dtype=np.result_type(rho, complex))
    out[..., ::r, ::r] = rho
    return out


def project_zeros(op: np.ndarray, count: int) -> np.ndarray:
    """Adjoint of :func:`append_zeros`: ``<0...0| op |0...0>`` on the tail qubits."""
    if count == 0:
        return op
    r = 2**count
    return op[..., ::r, ::r]


def permute_qubits(m: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Relabel qubits: position ``i`` of the result holds qubit ``perm[i]`` of ``m``.

    Equivalent to conjugation by the permutation matrix assembled from swaps.
    """
    n = num_qubits(m.shape[-1])
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} qubits")
    lead = m.ndim - 2
    x = _as_tensor(m, n)
    order = list(range(lead)) + [lead + p for p in perm] + [lead + n + p for p in perm]
    return x.transpose(order).reshape(m.shape)


def swap_matrix(n: int, a: int, b: int) -> np.ndarray:
    """Permutation matrix exchanging qubits ``a`` and ``b`` of an ``n``-qubit register."""
    perm = list(range(n))
    perm[a], perm[b] = perm[b], perm[a]
    d = 2**n
    idx = np.arange(d)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    new_idx = (bits[:, perm] << (n - 1 - np.arange(n))).sum(axis=1)
    s = np.zeros((d, d), dtype=complex)
    s[new_idx, idx] = 1.0
    return s


# ---------------------------------------------------------------------------
# scalar functions of states
# ---------------------------------------------------------------------------


def is_hermitian(m: np.ndarray, atol: float = ATOL_HERMITIAN) -> bool:
    return bool(np.allclose(m, np.swapaxes(m, -1, -2).conj(), rtol=0.0, atol=atol))


def is_unitary(u: np.ndarray, atol: float = ATOL_UNITARY) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= atol


def check_density(rho: np.ndarray) -> np.ndarray:
    """Validate a single density matrix and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise StateValidityError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits(rho.shape[0])
    if not np.all(np.isfinite(rho)):
        raise StateValidityError("density matrix has non-finite entries")
    if not is_hermitian(rho):
        raise StateValidityError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > ATOL_TRACE:
        raise StateValidityError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.eigvalsh(rho).min() < EIG_FLOOR:
        raise StateValidityError("density matrix has negative eigenvalues")
    return rho


def check_pure(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise StateValidityError(f"pure state must be a vector, got shape {psi.shape}")
    num_qubits(psi.shape[0])
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise StateValidityError("pure state is not normalized")
    return psi


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho2) rho1 sqrt(rho2)))**2``.

    Either argument may be a state vector. If one density matrix has rank one
    the overlap ``<psi|rho|psi>`` is used directly.
    """
    a = np.asarray(rho1, dtype=complex)
    b = np.asarray(rho2, dtype=complex)
    if a.ndim == 1 and b.ndim == 1:
        return float(abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        a, b = b, a
    if b.ndim == 1:
        return float(np.clip(np.vdot(b, a @ b).real, 0.0, 1.0))
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    for m in (a, b):
        if np.linalg.eigvalsh(m).min() < EIG_FLOOR:
            raise StateValidityError("fidelity argument is not positive semidefinite")
    for m, other in ((a, b), (b, a)):
        w, v = np.linalg.eigh(m)
        if np.abs(w[:-1]).sum() < 1e-10:
            psi = v[:, -1] * np.sqrt(max(w[-1], 0.0))
            return float(np.clip(np.vdot(psi, other @ psi).real, 0.0, 1.0))
    s = _psd_sqrt(b)
    w = np.linalg.eigvalsh(s @ a @ s)
    return float(np.clip(np.sqrt(np.clip(w, 0.0, None)).sum() ** 2, 0.0, 1.0))


# ---------------------------------------------------------------------------
# unitaries
# ---------------------------------------------------------------------------


def haar_random_unitary(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary on ``n_qubits`` qubits.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` moved into
    ``Q`` so the result is unbiased.
    """
    _check_size(n_qubits)
    d = 2**n_qubits
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases[None, :]


def exp_i_hermitian(k: np.ndarray, epsilon: float) -> np.ndarray:
    """``exp(i * epsilon * k)`` for Hermitian ``k`` via eigendecomposition."""
    k = np.asarray(k, dtype=complex)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or not is_hermitian(k, atol=1e-8):
        raise ValueError("exp_i_hermitian needs a square Hermitian matrix")
    w, v = np.linalg.eigh((k + k.conj().T) / 2)
    return (v * np.exp(1j * epsilon * w)) @ v.conj().T
