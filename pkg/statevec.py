"""
State Vector Engine
Dense amplitude simulation of system spins plus auxiliary control qubits

Features:
- StateVector with single-qubit, Pauli-string and controlled gate application
- Diagonal phase gates on the full register
- Born-rule measurement with optical-pumping reset
- Expectation values, fidelities, small density-matrix oracle
- Per-trajectory RNG streams derived from (master_seed, trajectory_id)
- Binary amplitude dump for debugging

Binary dump layout (little-endian):
    magic   8 bytes  b"DQSVDUMP"
    n       uint32   qubit count
    count   uint64   amplitude count (2**n)
    data    count pairs of float64 (real, imag)
"""

import logging
import struct
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from pauli import CapacityError, PauliString, parity, string_action

logger = logging.getLogger(__name__)

STATE_CAP = 24
UNITARY_TOL = 1e-10
NORM_TOL = 1e-9
DUMP_MAGIC = b"DQSVDUMP"

__all__ = [
    'CapacityError', 'StateVector', 'DensityMatrix', 'apply_single_qubit',
    'apply_pauli_string', 'apply_controlled', 'apply_diagonal', 'measure_and_reset',
    'expectation', 'fidelity', 'trajectory_rng', 'dump_state', 'load_state',
]


@lru_cache(maxsize=32)
def basis_labels(n: int) -> np.ndarray:
    """Read-only array 0 .. 2**n - 1"""
    labels = np.arange(1 << n, dtype=np.int64)
    labels.setflags(write=False)
    return labels


def bit_values(n: int, q: int) -> np.ndarray:
    """Bit q of every basis label"""
    return (basis_labels(n) >> q) & 1


class StateVector:
    """Pure state over n qubits; system spins first, control qubits appended"""

    def __init__(self, n: int, amplitudes: Optional[np.ndarray] = None):
        if n < 0:
            raise ValueError(f"Qubit count must be non-negative, got {n}")
        if n > STATE_CAP:
            raise CapacityError(f"{n} qubits exceeds the state-vector cap of {STATE_CAP}")
        self.n = n
        if amplitudes is None:
            self.amplitudes = np.zeros(1 << n, dtype=complex)
            self.amplitudes[0] = 1.0
        else:
            amplitudes = np.asarray(amplitudes, dtype=complex)
            if amplitudes.shape != (1 << n,):
                raise ValueError(f"Expected {1 << n} amplitudes, got shape {amplitudes.shape}")
            self.amplitudes = amplitudes.copy()

    @classmethod
    def basis(cls, n: int, label: int) -> 'StateVector':
        if not 0 <= label < (1 << n):
            raise ValueError(f"Basis label {label} out of range for {n} qubits")
        state = cls(n)
        state.amplitudes[0] = 0.0
        state.amplitudes[label] = 1.0
        return state

    @classmethod
    def product(cls, single_qubit_states: Sequence[Sequence[complex]]) -> 'StateVector':
        """Tensor product; entry k is the state of qubit k"""
        vector = np.ones(1, dtype=complex)
        for local in single_qubit_states:
            local = np.asarray(local, dtype=complex)
            vector = np.kron(local, vector)
        vector = vector / np.linalg.norm(vector)
        return cls(len(single_qubit_states), vector)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> 'StateVector':
        vector = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        return cls(n, vector / np.linalg.norm(vector))

    def copy(self) -> 'StateVector':
        return StateVector(self.n, self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def extended(self, extra: int) -> 'StateVector':
        """Append `extra` qubits in |0>"""
        vector = np.zeros(1 << (self.n + extra), dtype=complex)
        vector[:1 << self.n] = self.amplitudes
        return StateVector(self.n + extra, vector)

    def system_part(self, n_system: int) -> 'StateVector':
        """Drop appended qubits that are all in |0>"""
        dim = 1 << n_system
        rest = self.amplitudes[dim:]
        if rest.size and np.vdot(rest, rest).real > NORM_TOL:
            raise ValueError("Appended qubits are not in |0>; cannot drop them")
        return StateVector(n_system, self.amplitudes[:dim])

    def prob_one(self, q: int) -> float:
        """Probability that qubit q reads 1"""
        self._check_qubit(q)
        return float(self.probabilities()[bit_values(self.n, q) == 1].sum())

    def _check_qubit(self, q: int):
        if not 0 <= q < self.n:
            raise ValueError(f"Qubit {q} out of range for {self.n} qubits")

    def __repr__(self):
        return f"StateVector(n={self.n}, norm={self.norm():.12f})"


class DensityMatrix:
    """Small-n mixed-state oracle"""

    def __init__(self, n: int, matrix: np.ndarray, check: bool = True):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (1 << n, 1 << n):
            raise ValueError(f"Expected {1 << n}x{1 << n} matrix, got {matrix.shape}")
        if check:
            if np.max(np.abs(matrix - matrix.conj().T)) > NORM_TOL:
                raise ValueError("Density matrix is not Hermitian")
            if abs(np.trace(matrix) - 1) > NORM_TOL:
                raise ValueError(f"Density matrix trace {np.trace(matrix).real} != 1")
        self.n = n
        self.matrix = matrix

    @classmethod
    def from_state(cls, state: StateVector) -> 'DensityMatrix':
        psi = state.amplitudes
        return cls(state.n, np.outer(psi, psi.conj()))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, rank: Optional[int] = None) -> 'DensityMatrix':
        dim = 1 << n
        rank = rank or dim
        g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
        rho = g @ g.conj().T
        return cls(n, rho / np.trace(rho).real)

    def expectation(self, operator: np.ndarray) -> complex:
        return complex(np.trace(operator @ self.matrix))


def _check_unitary(U: np.ndarray):
    eye = np.eye(U.shape[0])
    if np.max(np.abs(U.conj().T @ U - eye)) > UNITARY_TOL:
        raise ValueError("Gate matrix is not unitary")


def apply_single_qubit(state: StateVector, q: int, U: np.ndarray):
    """Apply a 2x2 unitary to qubit q in place"""
    state._check_qubit(q)
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise ValueError(f"Single-qubit gate must be 2x2, got {U.shape}")
    _check_unitary(U)
    psi = state.amplitudes.reshape(1 << (state.n - q - 1), 2, 1 << q)
    state.amplitudes = np.einsum('ab,ibj->iaj', U, psi).reshape(-1)


def apply_pauli_string(state: StateVector, ps: PauliString):
    """Apply a Pauli string in place (permutation plus phases)"""
    if ps.max_site >= state.n:
        raise ValueError(f"{ps} acts outside {state.n} qubits")
    labels = basis_labels(state.n)
    target, values = string_action(ps, labels)
    out = np.empty_like(state.amplitudes)
    out[target] = values * state.amplitudes
    state.amplitudes = out


def _apply_matrix(state: StateVector, matrix: np.ndarray, targets: Sequence[int],
                  control: Optional[int], control_value: int):
    """Dense matrix on `targets` (targets[0] is the least significant matrix bit)"""
    n = state.n
    k = len(targets)
    tensor = state.amplitudes.reshape([2] * n)
    # qubit q lives on tensor axis n - 1 - q
    if control is None:
        view = tensor
        axes = [n - 1 - t for t in targets]
    else:
        index = [slice(None)] * n
        index[n - 1 - control] = control_value
        view = tensor[tuple(index)]
        c_axis = n - 1 - control
        axes = [(n - 1 - t) - (1 if (n - 1 - t) > c_axis else 0) for t in targets]

    gate = matrix.reshape([2] * (2 * k))
    # matrix row/column bit order is most significant first: targets[k-1] ... targets[0]
    in_axes = list(range(2 * k - 1, k - 1, -1))
    moved = np.tensordot(gate, view, axes=(in_axes, axes))
    # result axes: gate output axes (targets[k-1] .. targets[0]) followed by remaining view axes
    out_positions = list(reversed(axes))
    result = np.moveaxis(moved, list(range(k)), out_positions)

    if control is None:
        tensor = result
    else:
        tensor = tensor.copy()
        tensor[tuple(index)] = result
    state.amplitudes = np.ascontiguousarray(tensor).reshape(-1)


def apply_unitary(state: StateVector, matrix: np.ndarray, targets: Sequence[int]):
    """Apply a dense unitary on a few target qubits"""
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"Duplicate target qubits: {targets}")
    for t in targets:
        state._check_qubit(t)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (1 << len(targets),) * 2:
        raise ValueError(f"Matrix shape {matrix.shape} does not match {len(targets)} targets")
    _check_unitary(matrix)
    _apply_matrix(state, matrix, targets, None, 1)


def apply_controlled(state: StateVector, control_qubit: int,
                     op: Union[PauliString, np.ndarray], targets: Optional[Sequence[int]] = None,
                     control_value: int = 1):
    """
    |v><v| (x) op + |1-v><1-v| (x) 1 with v = control_value.

    `op` is a PauliString (targets are its support) or a dense unitary on `targets`.
    """
    state._check_qubit(control_qubit)
    if isinstance(op, PauliString):
        if control_qubit in op.support:
            raise ValueError(f"Control qubit {control_qubit} inside target set {op.support}")
        if op.max_site >= state.n:
            raise ValueError(f"{op} acts outside {state.n} qubits")
        labels = basis_labels(state.n)
        selected = labels[((labels >> control_qubit) & 1) == control_value]
        target, values = string_action(op, selected)
        out = state.amplitudes.copy()
        out[target] = values * state.amplitudes[selected]
        state.amplitudes = out
        return

    if targets is None:
        raise ValueError("Dense controlled operation needs explicit targets")
    targets = list(targets)
    if control_qubit in targets:
        raise ValueError(f"Control qubit {control_qubit} inside target set {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"Duplicate target qubits: {targets}")
    for t in targets:
        state._check_qubit(t)
    matrix = np.asarray(op, dtype=complex)
    if matrix.shape != (1 << len(targets),) * 2:
        raise ValueError(f"Matrix shape {matrix.shape} does not match {len(targets)} targets")
    _check_unitary(matrix)
    _apply_matrix(state, matrix, targets, control_qubit, control_value)


def apply_diagonal(state: StateVector, diagonal: np.ndarray):
    """Multiply by a unit-modulus diagonal over the full register"""
    diagonal = np.asarray(diagonal, dtype=complex)
    if diagonal.shape != state.amplitudes.shape:
        raise ValueError("Diagonal length does not match the register")
    if np.max(np.abs(np.abs(diagonal) - 1)) > UNITARY_TOL:
        raise ValueError("Diagonal gate entries must have unit modulus")
    state.amplitudes = state.amplitudes * diagonal


def measure_and_reset(state: StateVector, q: int, rng: np.random.Generator) -> int:
    """Born-sample qubit q, collapse, renormalize and pump q back to |0>"""
    state._check_qubit(q)
    bits = bit_values(state.n, q)
    p1 = float(np.sum(np.abs(state.amplitudes[bits == 1]) ** 2))
    outcome = 1 if rng.random() < p1 else 0
    p = p1 if outcome == 1 else 1.0 - p1
    if p <= 0.0:
        raise RuntimeError(f"Selected measurement branch {outcome} on qubit {q} has zero norm")

    out = np.zeros_like(state.amplitudes)
    labels = basis_labels(state.n)
    chosen = labels[bits == outcome]
    out[chosen & ~(1 << q)] = state.amplitudes[chosen] / np.sqrt(p)
    state.amplitudes = out
    return outcome


def expectation(state: StateVector, ps: PauliString) -> float:
    """<psi|P|psi> for a Hermitian Pauli string"""
    if not ps.is_hermitian():
        raise ValueError(f"Expectation needs a Hermitian string, got {ps}")
    if ps.max_site >= state.n:
        raise ValueError(f"{ps} acts outside {state.n} qubits")
    labels = basis_labels(state.n)
    psi = state.amplitudes
    # <psi|P|psi> = sum_x conj(psi[x ^ xm]) * value[x] * psi[x]
    target, values = string_action(ps, labels)
    return float(np.real(np.sum(np.conj(psi[target]) * values * psi)))


def z_parity_expectation(state: StateVector, sites: Sequence[int]) -> float:
    """<prod sigma^z> over `sites` straight from the probabilities"""
    mask = 0
    for s in sites:
        mask |= 1 << s
    signs = 1 - 2 * parity(basis_labels(state.n), mask)
    return float(np.dot(signs, state.probabilities()))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2"""
    if a.n != b.n:
        raise ValueError(f"Qubit counts differ: {a.n} vs {b.n}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def trajectory_rng(master_seed: int, trajectory_id: int) -> np.random.Generator:
    """Independent stream for one trajectory: SeedSequence(master_seed, spawn_key=(id,))"""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trajectory_id),))
    return np.random.default_rng(seq)


def dump_state(state: StateVector, path: str):
    count = state.amplitudes.size
    with open(path, 'wb') as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack('<IQ', state.n, count))
        pairs = np.empty(2 * count, dtype='<f8')
        pairs[0::2] = state.amplitudes.real
        pairs[1::2] = state.amplitudes.imag
        fh.write(pairs.tobytes())
    logger.debug("Dumped %d amplitudes to %s", count, path)


def load_state(path: str) -> StateVector:
    with open(path, 'rb') as fh:
        magic = fh.read(len(DUMP_MAGIC))
        if magic != DUMP_MAGIC:
            raise ValueError(f"{path} is not a state dump (bad magic {magic!r})")
        n, count = struct.unpack('<IQ', fh.read(12))
        if count != (1 << n):
            raise ValueError(f"Dump header inconsistent: n={n}, count={count}")
        pairs = np.frombuffer(fh.read(16 * count), dtype='<f8')
    if pairs.size != 2 * count:
        raise ValueError(f"{path} is truncated")
    return StateVector(n, pairs[0::2] + 1j * pairs[1::2])
