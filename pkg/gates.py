"""
Gate Toolbox for the Digital Quantum Simulator
Many-body Rydberg gates expressed as sequences over state-vector primitives

Gate descriptors (one per line in text form):
- UC q                        : U_c(pi/2) = exp(-i pi sigma^y / 4) on qubit q
- UCDG q                      : inverse of UC
- ZPHASE q angle              : exp(i angle sigma^z_q)
- CPAULI c | string           : |0><0| (x) 1 + |1><1| (x) string   (gate U_g)
- CPAULIQ c angle | string | Q: |0><0| (x) exp(i angle Q) + |1><1| (x) string
- CROT c letter site angle    : |1><1| (x) exp(i angle letter_site)
- CZROT c angle s1 s2 ...     : |1><1| (x) prod_j exp(i angle sigma^z_sj)
- CZZPHASE c a angle          : exp(i angle (1 - sigma^z_c) sigma^z_a)
- MEASURE q                   : measure qubit q and pump it back to |0>

Comments start with '#'.

Features:
- Mapping G of a Pauli product onto a control qubit (an involution)
- Perfect and imperfect many-body gates U_g / U~_g
- Coherent step G exp(i phi sigma^z_c) G = exp(i phi prod W)
- Controlled rotations, the octahedron constraint gate and the U_B gate
- Assembler / disassembler for golden-file tests
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from pauli import ORACLE_CAP, CapacityError, OperatorSum, PauliString, local_matrix
from statevec import (
    StateVector, apply_controlled, apply_diagonal, apply_single_qubit,
    basis_labels, measure_and_reset,
)

logger = logging.getLogger(__name__)

U_C = np.array([[1, -1], [1, 1]], dtype=complex) / np.sqrt(2)
U_C_INV = U_C.conj().T

CONSTRAINT_ANGLE = np.pi / 6
UB_FACTOR_PHASE = np.pi / 32
CONTROL_TOL = 1e-9

# B_p = S1+ S2- S3+ S4- + h.c. = 1/8 sum of these signed strings
RING_EXCHANGE_TABLE = (
    (+1, 'XXXX'), (+1, 'YYXX'), (+1, 'XXYY'), (-1, 'YXYX'),
    (-1, 'XYXY'), (+1, 'YXXY'), (+1, 'XYYX'), (+1, 'YYYY'),
)

# B_p^2 = projector on flippable plaquettes = 1/8 sum of these signed strings
RK_TABLE = (
    (+1, 'IIII'), (-1, 'ZZII'), (-1, 'IZZI'), (-1, 'IIZZ'),
    (+1, 'ZIZI'), (+1, 'IZIZ'), (+1, 'ZZZZ'), (-1, 'ZIIZ'),
)


@dataclass(frozen=True)
class Gate:
    """One primitive gate descriptor"""
    opcode: str
    qubits: Tuple[int, ...]
    angle: float = 0.0
    letter: str = ''
    string: Optional[PauliString] = None
    error: Optional[OperatorSum] = None

    def touched(self) -> Tuple[int, ...]:
        extra = ()
        if self.string is not None:
            extra += self.string.support
        if self.error is not None:
            extra += self.error.support
        return self.qubits + extra

    def inverse(self) -> 'Gate':
        if self.opcode == 'UC':
            return Gate('UCDG', self.qubits)
        if self.opcode == 'UCDG':
            return Gate('UC', self.qubits)
        if self.opcode == 'CPAULI':
            return Gate('CPAULI', self.qubits, string=self.string.dagger())
        if self.opcode in ('ZPHASE', 'CROT', 'CZROT', 'CZZPHASE'):
            return Gate(self.opcode, self.qubits, -self.angle, self.letter)
        raise ValueError(f"{self.opcode} is not declared unitary-invertible")

    def to_text(self) -> str:
        op = self.opcode
        if op in ('UC', 'UCDG', 'MEASURE'):
            return f"{op} {self.qubits[0]}"
        if op == 'ZPHASE':
            return f"ZPHASE {self.qubits[0]} {self.angle!r}"
        if op == 'CPAULI':
            return f"CPAULI {self.qubits[0]} | {self.string.to_text()}"
        if op == 'CPAULIQ':
            return f"CPAULIQ {self.qubits[0]} {self.angle!r} | {self.string.to_text()} | {self.error.to_text()}"
        if op == 'CROT':
            return f"CROT {self.qubits[0]} {self.letter} {self.qubits[1]} {self.angle!r}"
        if op == 'CZROT':
            sites = ' '.join(str(s) for s in self.qubits[1:])
            return f"CZROT {self.qubits[0]} {self.angle!r} {sites}"
        if op == 'CZZPHASE':
            return f"CZZPHASE {self.qubits[0]} {self.qubits[1]} {self.angle!r}"
        raise ValueError(f"Unknown gate opcode: {op}")


class GateSequence:
    """Ordered, replayable list of gate descriptors"""

    def __init__(self, gates: Optional[Sequence[Gate]] = None):
        self.gates: List[Gate] = list(gates or [])

        self.trace = False
        self.execution_history: List[str] = []
        self.max_history = 1000

        self._handlers = {
            'UC': self._execute_uc,
            'UCDG': self._execute_ucdg,
            'ZPHASE': self._execute_zphase,
            'CPAULI': self._execute_cpauli,
            'CPAULIQ': self._execute_cpauliq,
            'CROT': self._execute_crot,
            'CZROT': self._execute_czrot,
            'CZZPHASE': self._execute_czzphase,
            'MEASURE': self._execute_measure,
        }

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: 'GateSequence') -> 'GateSequence':
        return GateSequence(self.gates + other.gates)

    def append(self, gate: Gate) -> 'GateSequence':
        self.gates.append(gate)
        return self

    def extend(self, other: 'GateSequence') -> 'GateSequence':
        self.gates.extend(other.gates)
        return self

    def is_unitary(self) -> bool:
        return all(g.opcode != 'MEASURE' for g in self.gates)

    def inverse(self) -> 'GateSequence':
        """Reversed sequence of inverted gates"""
        return GateSequence([g.inverse() for g in reversed(self.gates)])

    def validate(self, n: int):
        for k, gate in enumerate(self.gates):
            for q in gate.touched():
                if not 0 <= q < n:
                    raise ValueError(f"Gate {k} ({gate.opcode}) references qubit {q} outside {n} qubits")

    def log_instruction(self, message: str):
        self.execution_history.append(message)
        if len(self.execution_history) > self.max_history:
            self.execution_history.pop(0)

    def run(self, state: StateVector, rng: Optional[np.random.Generator] = None) -> List[int]:
        """Apply every gate in order; returns the measurement outcomes"""
        self.validate(state.n)
        outcomes = []
        for gate in self.gates:
            handler = self._handlers.get(gate.opcode)
            if handler is None:
                raise ValueError(f"Unknown gate opcode: {gate.opcode}")
            if gate.opcode == 'MEASURE':
                if rng is None:
                    raise ValueError("Sequence contains MEASURE but no rng was given")
                outcomes.append(handler(state, gate, rng))
            else:
                handler(state, gate)
            if self.trace:
                self.log_instruction(gate.to_text())
        return outcomes

    def to_matrix(self, n: int) -> np.ndarray:
        """Dense unitary of a measurement-free sequence, column by column"""
        if not self.is_unitary():
            raise ValueError("Sequence with MEASURE has no unitary matrix")
        if n > ORACLE_CAP:
            raise CapacityError(f"{n} qubits exceeds the dense oracle cap of {ORACLE_CAP}")
        dim = 1 << n
        matrix = np.zeros((dim, dim), dtype=complex)
        for label in range(dim):
            state = StateVector.basis(n, label)
            self.run(state)
            matrix[:, label] = state.amplitudes
        return matrix

    def to_text(self) -> str:
        return '\n'.join(g.to_text() for g in self.gates)

    def _execute_uc(self, state, gate):
        apply_single_qubit(state, gate.qubits[0], U_C)

    def _execute_ucdg(self, state, gate):
        apply_single_qubit(state, gate.qubits[0], U_C_INV)

    def _execute_zphase(self, state, gate):
        phase = np.exp(1j * gate.angle)
        apply_single_qubit(state, gate.qubits[0], np.diag([phase, np.conj(phase)]))

    def _execute_cpauli(self, state, gate):
        apply_controlled(state, gate.qubits[0], gate.string)

    def _execute_cpauliq(self, state, gate):
        _apply_error_branch(state, gate.qubits[0], gate.angle, gate.error)
        apply_controlled(state, gate.qubits[0], gate.string)

    def _execute_crot(self, state, gate):
        control, site = gate.qubits
        matrix = expm(1j * gate.angle * _SINGLE[gate.letter])
        apply_controlled(state, control, matrix, targets=[site])

    def _execute_czrot(self, state, gate):
        control, sites = gate.qubits[0], gate.qubits[1:]
        labels = basis_labels(state.n)
        total = np.zeros(labels.shape, dtype=np.int64)
        for s in sites:
            total += 1 - 2 * ((labels >> s) & 1)
        bits = (labels >> control) & 1
        apply_diagonal(state, np.where(bits == 1, np.exp(1j * gate.angle * total), 1.0))

    def _execute_czzphase(self, state, gate):
        control, helper = gate.qubits
        labels = basis_labels(state.n)
        s_c = 1 - 2 * ((labels >> control) & 1)
        s_a = 1 - 2 * ((labels >> helper) & 1)
        apply_diagonal(state, np.exp(1j * gate.angle * (1 - s_c) * s_a))

    def _execute_measure(self, state, gate, rng):
        return measure_and_reset(state, gate.qubits[0], rng)

    def __repr__(self):
        return f"GateSequence({len(self.gates)} gates)"


_SINGLE = {
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}


class GateAssembler:
    """Text form <-> GateSequence, collecting line-numbered errors"""

    def __init__(self):
        self.errors: List[str] = []

        # minimum operand count before any '|' section
        self.instruction_formats = {
            'UC': 1, 'UCDG': 1, 'MEASURE': 1, 'ZPHASE': 2,
            'CPAULI': 1, 'CPAULIQ': 2, 'CROT': 4, 'CZROT': 3, 'CZZPHASE': 3,
        }

    def reset(self):
        self.errors.clear()

    def preprocess_line(self, line: str) -> str:
        if '#' in line:
            line = line[:line.index('#')]
        return line.strip()

    def parse_instruction(self, line: str, line_num: int) -> Optional[Gate]:
        sections = [s.strip() for s in line.split('|')]
        parts = sections[0].split()
        opcode = parts[0].upper()
        operands = parts[1:]

        if opcode not in self.instruction_formats:
            self.errors.append(f"Line {line_num}: Unknown instruction: {opcode}")
            return None
        expected = self.instruction_formats[opcode]
        if len(operands) < expected:
            self.errors.append(f"Line {line_num}: {opcode} requires {expected} operands")
            return None

        try:
            if opcode in ('UC', 'UCDG', 'MEASURE'):
                self._expect_sections(sections, 1)
                return Gate(opcode, (int(operands[0]),))
            if opcode == 'ZPHASE':
                self._expect_sections(sections, 1)
                return Gate(opcode, (int(operands[0]),), float(operands[1]))
            if opcode == 'CPAULI':
                self._expect_sections(sections, 2)
                return Gate(opcode, (int(operands[0]),), string=PauliString.from_text(sections[1]))
            if opcode == 'CPAULIQ':
                self._expect_sections(sections, 3)
                return Gate(opcode, (int(operands[0]),), float(operands[1]),
                            string=PauliString.from_text(sections[1]),
                            error=OperatorSum.from_text(sections[2]))
            if opcode == 'CROT':
                self._expect_sections(sections, 1)
                letter = operands[1].upper()
                if letter not in ('X', 'Y', 'Z'):
                    raise ValueError(f"Invalid rotation letter: {letter}")
                return Gate(opcode, (int(operands[0]), int(operands[2])), float(operands[3]), letter)
            if opcode == 'CZROT':
                self._expect_sections(sections, 1)
                sites = tuple(int(s) for s in operands[2:])
                return Gate(opcode, (int(operands[0]),) + sites, float(operands[1]))
            self._expect_sections(sections, 1)
            return Gate(opcode, (int(operands[0]), int(operands[1])), float(operands[2]))
        except ValueError as e:
            self.errors.append(f"Line {line_num}: {e}")
            return None

    @staticmethod
    def _expect_sections(sections: List[str], count: int):
        if len(sections) != count:
            raise ValueError(f"expected {count - 1} '|' sections, got {len(sections) - 1}")

    def assemble(self, source: str) -> Tuple[GateSequence, List[str]]:
        self.reset()
        gates = []
        for line_num, line in enumerate(source.split('\n'), 1):
            processed = self.preprocess_line(line)
            if not processed:
                continue
            gate = self.parse_instruction(processed, line_num)
            if gate is not None:
                gates.append(gate)
        return GateSequence(gates), list(self.errors)

    def disassemble(self, sequence: GateSequence) -> str:
        return sequence.to_text()


def parse_sequence(source: str) -> GateSequence:
    """Assemble text; raise one ValueError listing every bad line"""
    sequence, errors = GateAssembler().assemble(source)
    if errors:
        raise ValueError("Gate sequence errors:\n" + '\n'.join(errors))
    return sequence


@dataclass
class ErrorModel:
    """
    Imperfect-gate error: the control-|0> branch of U_g picks up exp(i phi Q).

    When `q` is None the operator is q_norm * sigma^z on the region's
    lowest-indexed spin.
    """
    q_norm: float = 0.1
    q: Optional[OperatorSum] = None
    enabled: bool = False

    def __post_init__(self):
        if self.q_norm < 0 or not np.isfinite(self.q_norm):
            raise ValueError(f"|Q| must be a finite non-negative number, got {self.q_norm}")
        if self.q is not None and not self.q.is_hermitian():
            raise ValueError(f"Error operator must be Hermitian, got {self.q}")

    @property
    def magnitude(self) -> float:
        return self.q.magnitude() if self.q is not None else self.q_norm

    def operator_for(self, region: PauliString) -> OperatorSum:
        if self.q is not None:
            return self.q
        if not region.support:
            raise ValueError("Default error operator needs a non-empty region")
        return OperatorSum.single(PauliString({min(region.support): 'Z'}), self.q_norm)

    def active(self) -> bool:
        return self.enabled and self.magnitude > 0


def _check_region(control: int, region: PauliString):
    if not region.is_hermitian():
        raise ValueError(f"Region product must be Hermitian, got {region}")
    if control in region.support:
        raise ValueError(f"Control qubit {control} lies inside region {region.support}")


def _check_control_zero(state: StateVector, control: int):
    if state.prob_one(control) > CONTROL_TOL:
        raise ValueError(f"Control qubit {control} is not prepared in |0>")


def _apply_error_branch(state: StateVector, control: int, phi: float, q: OperatorSum):
    if not q.is_hermitian():
        raise ValueError(f"Error operator must be Hermitian, got {q}")
    if control in q.support:
        raise ValueError(f"Error operator acts on control qubit {control}")
    if not q.terms or phi == 0:
        return
    q_local, support = local_matrix(q)
    theta = expm(1j * phi * q_local)
    apply_controlled(state, control, theta, targets=list(support), control_value=0)


def mapping_G(control: int, region: PauliString, error: Optional[ErrorModel] = None,
              phase: float = 0.0) -> GateSequence:
    """
    G = U_c^-1 U_g U_c. With the control in |0>, G leaves it in |0> on the
    +1 eigenspace of the region product and flips it to |1> on the -1
    eigenspace. G is its own inverse.
    """
    _check_region(control, region)
    if error is not None and error.active():
        q = error.operator_for(region)
        if control in q.support:
            raise ValueError(f"Error operator acts on control qubit {control}")
        core = Gate('CPAULIQ', (control,), float(phase), string=region, error=q)
    else:
        core = Gate('CPAULI', (control,), string=region)
    return GateSequence([Gate('UC', (control,)), core, Gate('UCDG', (control,))])


def apply_Ug(state: StateVector, control: int, region: PauliString):
    """Perfect many-body gate |0><0| (x) 1 + |1><1| (x) prod W"""
    _check_region(control, region)
    apply_controlled(state, control, region)


def apply_Ug_imperfect(state: StateVector, control: int, region: PauliString, phi: float,
                       error: ErrorModel):
    """U~_g = |0><0| (x) exp(i phi Q) + |1><1| (x) prod W"""
    _check_region(control, region)
    if error.enabled:
        _apply_error_branch(state, control, phi, error.operator_for(region))
    apply_controlled(state, control, region)


def coherent_step_sequence(control: int, region: PauliString, phi: float,
                           error: Optional[ErrorModel] = None) -> GateSequence:
    seq = mapping_G(control, region, error, phi)
    seq.append(Gate('ZPHASE', (control,), float(phi)))
    seq.extend(mapping_G(control, region, error, phi))
    if error is not None and error.active():
        seq.append(Gate('MEASURE', (control,)))
    return seq


def coherent_step(state: StateVector, control: int, region: PauliString, phi: float,
                  error: Optional[ErrorModel] = None,
                  rng: Optional[np.random.Generator] = None) -> int:
    """
    exp(i phi prod W) on the system via G exp(i phi sigma^z_c) G.

    With an active error model the control is pumped back to |0> at the
    end and the pump outcome is returned; otherwise returns 0.
    """
    _check_control_zero(state, control)
    seq = coherent_step_sequence(control, region, phi, error)
    outcomes = seq.run(state, rng)
    return outcomes[0] if outcomes else 0


def controlled_rotation(state: StateVector, control: int, site: int, letter: str, theta: float):
    """|0><0| (x) 1 + |1><1| (x) exp(i theta letter_site)"""
    letter = letter.upper()
    if letter not in ('X', 'Y', 'Z'):
        raise ValueError(f"Invalid rotation letter: {letter}")
    if site == control:
        raise ValueError(f"Rotation target {site} equals the control qubit")
    GateSequence([Gate('CROT', (control, site), float(theta), letter)]).run(state)


def controlled_rotation_UZ(state: StateVector, control: int, target_spin: int, theta: float):
    """Sigma = exp(i theta sigma^z_i) conditioned on the control"""
    controlled_rotation(state, control, target_spin, 'Z', theta)


def _check_octahedron(control: int, octahedron: Sequence[int]):
    if len(octahedron) != 6 or len(set(octahedron)) != 6:
        raise ValueError(f"Octahedron needs 6 distinct links, got {tuple(octahedron)}")
    if control in octahedron:
        raise ValueError(f"Control qubit {control} lies inside the octahedron")


def constraint_sequence(control: int, octahedron: Sequence[int], inverse: bool = False) -> GateSequence:
    _check_octahedron(control, octahedron)
    angle = -CONSTRAINT_ANGLE if inverse else CONSTRAINT_ANGLE
    return GateSequence([Gate('CZROT', (control,) + tuple(octahedron), angle)])


def constraint_gate(state: StateVector, control: int, octahedron: Sequence[int],
                    inverse: bool = False):
    """|0><0| (x) 1 + |1><1| (x) prod_j exp(i pi/6 sigma^z_j) over the six links"""
    constraint_sequence(control, octahedron, inverse).run(state)


def plaquette_string(letters: str, plaquette: Sequence[int], sign: int = 1) -> PauliString:
    return PauliString(dict(zip(plaquette, letters)), sign)


def _check_plaquette(plaquette: Sequence[int]):
    if len(plaquette) != 4 or len(set(plaquette)) != 4:
        raise ValueError(f"Plaquette needs 4 distinct ordered links, got {tuple(plaquette)}")


def ub_strings(plaquette: Sequence[int]) -> List[PauliString]:
    """C_p^(j): the 8 ring-exchange strings followed by the 8 negated RK strings"""
    _check_plaquette(plaquette)
    strings = [plaquette_string(letters, plaquette, sign) for sign, letters in RING_EXCHANGE_TABLE]
    strings += [plaquette_string(letters, plaquette, -sign) for sign, letters in RK_TABLE]
    return strings


def ub_sequence(control: int, plaquette: Sequence[int], helper: int) -> GateSequence:
    """
    U_B = |0><0| (x) 1 + |1><1| (x) exp[i pi/2 (1 - B_p) B_p] as 16 factors.

    Each factor maps C_p^(j) onto the helper qubit, applies
    exp(i pi/32 (1 - sigma^z_c) sigma^z_a) and maps back.
    """
    _check_plaquette(plaquette)
    if control == helper or control in plaquette or helper in plaquette:
        raise ValueError("Control, helper and plaquette links must be distinct")
    seq = GateSequence()
    for string in ub_strings(plaquette):
        seq.extend(mapping_G(helper, string))
        seq.append(Gate('CZZPHASE', (control, helper), UB_FACTOR_PHASE))
        seq.extend(mapping_G(helper, string))
    return seq


def gate_UB(state: StateVector, control: int, plaquette: Sequence[int], helper: int):
    _check_control_zero(state, helper)
    ub_sequence(control, plaquette, helper).run(state)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral norm of a - exp(i chi) b, chi aligning the global phase of b to a"""
    overlap = np.vdot(b.reshape(-1), a.reshape(-1))
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b, ord=2))
