import numpy as np
import pytest
from scipy.linalg import expm

from gates import (
    RING_EXCHANGE_TABLE, RK_TABLE, ErrorModel, Gate, GateAssembler, GateSequence,
    apply_Ug, apply_Ug_imperfect, coherent_step, coherent_step_sequence, constraint_gate,
    constraint_sequence, controlled_rotation, gate_UB, mapping_G, parse_sequence,
    phase_aligned_distance, plaquette_string, ub_sequence,
)
from pauli import OperatorSum, PauliString, to_matrix
from statevec import StateVector, trajectory_rng

PLAQUETTE = PauliString.uniform('X', range(4))


def table_operator(table, n=4):
    op = OperatorSum()
    for sign, letters in table:
        op.add(sign / 8, plaquette_string(letters, range(4)))
    return to_matrix(op, n)


class TestAssembler:
    def test_assemble_and_disassemble(self):
        source = "\n".join([
            "UC 4",
            "CPAULI 4 | +1 X0 X1 X2 X3",
            "UCDG 4",
            "ZPHASE 4 0.25",
            "CROT 4 Y 2 0.5",
            "CZROT 6 0.5 0 1 2 3 4 5",
            "CZZPHASE 4 5 0.125",
            "CPAULIQ 4 0.1 | +1 Z0 Z1 | 0.1 * +1 Z0",
            "MEASURE 4",
        ])
        assembler = GateAssembler()
        sequence, errors = assembler.assemble(source)
        assert errors == []
        assert len(sequence) == 9
        assert assembler.disassemble(sequence) == source

    def test_comments_and_blank_lines(self):
        sequence = parse_sequence("# header\n\nUC 0   # rotate\nUCDG 0\n")
        assert [g.opcode for g in sequence] == ['UC', 'UCDG']

    def test_errors_carry_line_numbers(self):
        source = "UC 0\nFOO 1\nZPHASE 0\nCPAULI 0 +1 X1\nCROT 0 W 1 0.1"
        _, errors = GateAssembler().assemble(source)
        assert len(errors) == 4
        assert errors[0] == "Line 2: Unknown instruction: FOO"
        assert errors[1].startswith("Line 3:")
        assert errors[2].startswith("Line 4:")
        assert errors[3].startswith("Line 5:")

    def test_parse_sequence_raises_with_all_errors(self):
        with pytest.raises(ValueError, match="Line 1"):
            parse_sequence("BAD 0\nUC 0")


class TestMappingG:
    def test_involution(self):
        g = mapping_G(4, PLAQUETTE).to_matrix(5)
        np.testing.assert_allclose(g @ g, np.eye(32), atol=1e-12)

    @pytest.mark.parametrize("flip,expected", [(False, 0.0), (True, 1.0)])
    def test_control_records_eigenvalue(self, flip, expected):
        plus = [1, 1]
        minus = [1, -1]
        state = StateVector.product([minus if flip else plus, plus, plus, plus, [1, 0]])
        mapping_G(4, PLAQUETTE).run(state)
        assert state.prob_one(4) == pytest.approx(expected)

    def test_rejects_bad_region(self):
        with pytest.raises(ValueError):
            mapping_G(0, PLAQUETTE)
        with pytest.raises(ValueError):
            mapping_G(4, PauliString({0: 'X'}, 1j))


class TestCoherentStep:
    @pytest.mark.parametrize("phi", [0.3, -1.1, np.pi / 4])
    def test_matches_exponential(self, phi):
        u = coherent_step_sequence(4, PLAQUETTE, phi).to_matrix(5)
        target = expm(1j * phi * to_matrix(PLAQUETTE, 4))
        np.testing.assert_allclose(u[:16, :16], target, atol=1e-12)
        np.testing.assert_allclose(u[16:, :16], 0, atol=1e-12)

    def test_inverse_sequence(self):
        seq = coherent_step_sequence(4, PLAQUETTE, 0.4)
        np.testing.assert_allclose(seq.inverse().to_matrix(5), seq.to_matrix(5).conj().T, atol=1e-12)

    def test_requires_control_in_zero(self):
        state = StateVector.basis(5, 16)
        with pytest.raises(ValueError):
            coherent_step(state, 4, PLAQUETTE, 0.2)

    def test_imperfect_step_resets_control(self, rng):
        error = ErrorModel(q_norm=0.3, enabled=True)
        system = StateVector.random(4, rng)
        for tid in range(20):
            state = system.extended(1)
            outcome = coherent_step(state, 4, PLAQUETTE, np.pi / 2, error, trajectory_rng(5, tid))
            assert outcome in (0, 1)
            assert state.prob_one(4) == 0.0
            assert state.norm() == pytest.approx(1.0)

    def test_imperfect_without_rng_fails(self):
        error = ErrorModel(q_norm=0.3, enabled=True)
        with pytest.raises(ValueError):
            coherent_step(StateVector(5), 4, PLAQUETTE, 0.2, error)

    def test_imperfect_gate_has_no_matrix(self):
        error = ErrorModel(q_norm=0.3, enabled=True)
        with pytest.raises(ValueError):
            coherent_step_sequence(4, PLAQUETTE, 0.2, error).to_matrix(5)


def test_error_model_default_operator():
    error = ErrorModel(q_norm=0.2, enabled=True)
    q = error.operator_for(PauliString.uniform('Z', [3, 5, 7]))
    assert q.terms == [(0.2, PauliString({3: 'Z'}))]
    assert ErrorModel(q_norm=0.2).active() is False
    with pytest.raises(ValueError):
        ErrorModel(q_norm=-1.0)


def test_perfect_ug_flips_on_control_one():
    state = StateVector.basis(5, 16)
    apply_Ug(state, 4, PLAQUETTE)
    assert abs(state.amplitudes[16 + 15]) == pytest.approx(1.0)


def test_controlled_rotation():
    state = StateVector.product([[1, 0], [0, 1]])
    controlled_rotation(state, 1, 0, 'X', np.pi / 2)
    # exp(i pi/2 X)|0> = i|1>
    assert state.amplitudes[3] == pytest.approx(1j)
    with pytest.raises(ValueError):
        controlled_rotation(state, 1, 1, 'X', 0.1)
    with pytest.raises(ValueError):
        controlled_rotation(state, 1, 0, 'Q', 0.1)


def test_constraint_gate_phases():
    octahedron = tuple(range(6))
    u = constraint_sequence(6, octahedron).to_matrix(7)
    labels = np.arange(64)
    total = sum(1 - 2 * ((labels >> s) & 1) for s in octahedron)
    np.testing.assert_allclose(np.diag(u)[64:], np.exp(1j * np.pi / 6 * total), atol=1e-12)
    np.testing.assert_allclose(np.diag(u)[:64], 1, atol=1e-12)
    state = StateVector.basis(7, 64 + 0b000111)
    constraint_gate(state, 6, octahedron)
    constraint_gate(state, 6, octahedron, inverse=True)
    assert state.amplitudes[64 + 0b000111] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        constraint_sequence(6, (0, 1, 2, 3, 4))
    with pytest.raises(ValueError):
        constraint_sequence(3, octahedron)


def test_ring_exchange_table_flips_one_pair():
    b = table_operator(RING_EXCHANGE_TABLE)
    assert np.count_nonzero(np.abs(b) > 1e-12) == 2
    assert b[0b1010, 0b0101] == pytest.approx(1.0)
    assert b[0b0101, 0b1010] == pytest.approx(1.0)
    np.testing.assert_allclose(b @ b, table_operator(RK_TABLE), atol=1e-12)


def test_ub_gate_block_structure():
    b = table_operator(RING_EXCHANGE_TABLE)
    target = expm(1j * np.pi / 2 * (np.eye(16) - b) @ b)
    u = ub_sequence(4, (0, 1, 2, 3), 5).to_matrix(6)
    assert phase_aligned_distance(u[16:32, 16:32], target) < 1e-9
    np.testing.assert_allclose(u[:16, :16], np.eye(16), atol=1e-9)
    with pytest.raises(ValueError):
        ub_sequence(4, (0, 1, 2, 3), 4)
    with pytest.raises(ValueError):
        ub_sequence(4, (0, 1, 1, 3), 5)


def test_phase_aligned_distance_ignores_global_phase(rng):
    a = expm(1j * np.diag(rng.normal(size=4)))
    assert phase_aligned_distance(a, np.exp(0.7j) * a) == pytest.approx(0.0, abs=1e-12)


def test_sequence_trace_and_validation():
    seq = GateSequence([Gate('UC', (0,)), Gate('UCDG', (0,))])
    seq.trace = True
    seq.run(StateVector(1))
    assert seq.execution_history == ["UC 0", "UCDG 0"]
    with pytest.raises(ValueError):
        GateSequence([Gate('UC', (3,))]).run(StateVector(2))
    with pytest.raises(ValueError):
        Gate('MEASURE', (0,)).inverse()


def test_imperfect_ug_phases_the_idle_branch():
    error = ErrorModel(q_norm=0.2, enabled=True)
    state = StateVector.basis(5, 0)
    apply_Ug_imperfect(state, 4, PLAQUETTE, 0.5, error)
    assert state.amplitudes[0] == pytest.approx(np.exp(0.1j))
    state = StateVector.basis(5, 16)
    apply_Ug_imperfect(state, 4, PLAQUETTE, 0.5, error)
    assert abs(state.amplitudes[16 + 15]) == pytest.approx(1.0)


def test_gate_ub_exchanges_flippable_pair():
    state = StateVector.basis(6, 16 + 0b0101)
    gate_UB(state, 4, (0, 1, 2, 3), 5)
    assert abs(state.amplitudes[16 + 0b1010]) == pytest.approx(1.0)
    idle = StateVector.basis(6, 0b0101)
    gate_UB(idle, 4, (0, 1, 2, 3), 5)
    assert abs(idle.amplitudes[0b0101]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        gate_UB(StateVector.basis(6, 32), 4, (0, 1, 2, 3), 5)
