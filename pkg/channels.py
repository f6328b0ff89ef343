"""
Dissipative Channels and Trotter Sweeps
Engineered jump operators as stroboscopic trajectory operations, with dense oracles

Features:
- JumpOperatorSpec for the standard, octahedron-constraint and RK-projector jumps
- dissipative_step: G, controlled rotation, G, optical pumping of the control
- Kraus pairs of every gate circuit (perfect and imperfect) and the
  closed-form error pair (C, D) of an imperfect coherent step
- Lindblad generator and the small-angle reduction check
- ModelSpec / trotter_sweep: one stroboscopic time step tau
- Observable sampling through the mapping G and correlation estimates
- Density-matrix integrator and parallel trajectory runner

Units: hbar = 1 unless a ModelSpec says otherwise, E = hbar * phi / tau,
kappa = theta^2 / tau, H = -sum_alpha E_alpha A_alpha.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import partial
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from gates import (
    RING_EXCHANGE_TABLE, CONSTRAINT_ANGLE, ErrorModel, Gate, GateSequence,
    mapping_G, coherent_step, constraint_sequence, plaquette_string, ub_sequence,
)
from pauli import ORACLE_CAP, CapacityError, OperatorSum, PauliString, commutes, to_matrix
from statevec import STATE_CAP, StateVector, basis_labels

logger = logging.getLogger(__name__)

VARIANTS = ('standard', 'constraint', 'rk')
SCHEDULES = ('round_robin', 'random')
FLIP_LETTERS = ('X', 'Y', 'Z')
CONTROL_TOL = 1e-9


@dataclass
class JumpOperatorSpec:
    """
    One engineered jump c = 1/2 Q_i (1 - sign * prod W) or one of its variants.

    A standard jump's flip letter must anticommute with the region product,
    since only then does the pump move the state between eigenspaces. A
    commuting Q_i (the Q_i = 1 dephasing case among them) is an error
    channel, not a pump: build it through ErrorModel, which feeds
    error_kraus_pair and apply_Ug_imperfect.

    `links` carries the ordered geometry the variants need: the six links
    of an octahedron, or the four cyclically ordered links of a plaquette.
    """
    name: str
    region: PauliString
    flip_letter: str
    flip_sites: Tuple[int, ...]
    theta: float = np.pi / 2
    variant: str = 'standard'
    schedule: str = 'round_robin'
    sign: int = 1
    links: Tuple[int, ...] = ()
    enabled: bool = True

    def __post_init__(self):
        self.flip_letter = self.flip_letter.upper()
        self.flip_sites = tuple(self.flip_sites)
        self.links = tuple(self.links)
        if self.variant not in VARIANTS:
            raise ValueError(f"Unknown jump variant: {self.variant}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"Unknown spin-selection schedule: {self.schedule}")
        if self.flip_letter not in FLIP_LETTERS:
            raise ValueError(f"Flip letter must be X, Y or Z, got {self.flip_letter}")
        if self.sign not in (1, -1):
            raise ValueError(f"Jump sign must be +1 or -1, got {self.sign}")
        if not np.isfinite(self.theta):
            raise ValueError(f"Jump phase theta must be real and finite, got {self.theta}")
        if not self.flip_sites:
            raise ValueError(f"Jump {self.name} has no flip sites")
        if not self.region.is_hermitian():
            raise ValueError(f"Jump region must be Hermitian, got {self.region}")

        if self.variant == 'standard':
            for site in self.flip_sites:
                if site not in self.region.support:
                    raise ValueError(f"Flip site {site} lies outside region {self.region.support}")
                flip = PauliString({site: self.flip_letter})
                if commutes(flip, self.region):
                    raise ValueError(f"{self.flip_letter}{site} must anticommute with {self.region}")
        elif self.variant == 'constraint':
            if len(self.links) != 6 or len(set(self.links)) != 6:
                raise ValueError(f"Constraint jump needs 6 distinct links, got {self.links}")
        elif len(self.links) != 4 or len(set(self.links)) != 4:
            raise ValueError(f"RK jump needs 4 distinct ordered links, got {self.links}")
        if self.variant != 'standard':
            for site in self.flip_sites:
                if site not in self.links:
                    raise ValueError(f"Flip site {site} lies outside links {self.links}")

    @property
    def product(self) -> PauliString:
        """sign * prod W, the operator whose -1 eigenspace is pumped"""
        return self.region if self.sign == 1 else -self.region

    @property
    def sites(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.region.support) | set(self.links) | set(self.flip_sites)))

    def rate(self, tau: float) -> float:
        """kappa = theta^2 / tau"""
        return self.theta ** 2 / tau

    def flip_site(self, sweep: int = 0, rng: Optional[np.random.Generator] = None) -> int:
        if self.schedule == 'random':
            if rng is None:
                raise ValueError("Random spin selection needs an rng")
            return self.flip_sites[int(rng.integers(len(self.flip_sites)))]
        return self.flip_sites[sweep % len(self.flip_sites)]


@dataclass
class HamiltonianTerm:
    """H contribution -E A with E = hbar * phase / tau"""
    name: str
    string: PauliString
    phase: float
    owner: Tuple[str, int] = ('term', 0)

    def __post_init__(self):
        if not self.string.is_hermitian():
            raise ValueError(f"Hamiltonian term {self.name} is not Hermitian: {self.string}")


@dataclass
class SweepSchedule:
    """Sublattice-colored order of coherent terms and jumps inside one sweep"""
    coherent: Tuple[Tuple[int, ...], ...] = ()
    dissipative: Tuple[Tuple[int, ...], ...] = ()

    @classmethod
    def sequential(cls, n_terms: int, n_jumps: int) -> 'SweepSchedule':
        return cls((tuple(range(n_terms)),) if n_terms else (),
                   (tuple(range(n_jumps)),) if n_jumps else ())

    def coherent_order(self) -> List[int]:
        return [k for group in self.coherent for k in group]

    def dissipative_order(self) -> List[int]:
        return [k for group in self.dissipative for k in group]

    def validate(self, n_terms: int, n_jumps: int):
        if sorted(self.coherent_order()) != list(range(n_terms)):
            raise ValueError(f"Schedule does not cover the {n_terms} coherent terms exactly once")
        if sorted(self.dissipative_order()) != list(range(n_jumps)):
            raise ValueError(f"Schedule does not cover the {n_jumps} jump terms exactly once")


@dataclass
class ModelSpec:
    """A full stroboscopic simulation program"""
    n_system: int
    terms: List[HamiltonianTerm] = field(default_factory=list)
    jumps: List[JumpOperatorSpec] = field(default_factory=list)
    tau: float = 1.0
    error: ErrorModel = field(default_factory=ErrorModel)
    schedule: Optional[SweepSchedule] = None
    n_ancilla: int = 1
    hbar: float = 1.0
    lattice: object = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"Step time tau must be positive, got {self.tau}")
        if self.schedule is None:
            self.schedule = SweepSchedule.sequential(len(self.terms), len(self.jumps))
        if any(j.variant == 'rk' for j in self.jumps) and self.n_ancilla < 2:
            raise ValueError("RK jumps need a helper auxiliary qubit (n_ancilla >= 2)")
        self.validate()

    def validate(self):
        self.schedule.validate(len(self.terms), len(self.jumps))
        for term in self.terms:
            if term.string.max_site >= self.n_system:
                raise ValueError(f"Term {term.name} acts outside {self.n_system} system qubits")
        for jump in self.jumps:
            if max(jump.sites) >= self.n_system:
                raise ValueError(f"Jump {jump.name} acts outside {self.n_system} system qubits")
        if self.total_qubits > STATE_CAP:
            raise CapacityError(f"{self.total_qubits} qubits exceeds the state-vector cap of {STATE_CAP}")

    @property
    def total_qubits(self) -> int:
        return self.n_system + self.n_ancilla

    @property
    def control_qubit(self) -> int:
        return self.n_system

    @property
    def helper_qubit(self) -> Optional[int]:
        return self.n_system + 1 if self.n_ancilla >= 2 else None

    def energies(self) -> np.ndarray:
        """E_alpha = hbar * phi_alpha / tau"""
        return np.array([self.hbar * t.phase / self.tau for t in self.terms])

    def rates(self) -> np.ndarray:
        """kappa_beta = theta_beta^2 / tau"""
        return np.array([j.rate(self.tau) for j in self.jumps])

    def set_energy(self, index: int, energy: float):
        self.terms[index].phase = energy * self.tau / self.hbar

    def scale_phases(self, factor: float):
        for term in self.terms:
            term.phase *= factor

    def hamiltonian(self) -> OperatorSum:
        return OperatorSum((-self.hbar * t.phase / self.tau, t.string) for t in self.terms)

    def describe(self) -> Dict[str, object]:
        return {
            'n_system': self.n_system,
            'n_ancilla': self.n_ancilla,
            'terms': len(self.terms),
            'jumps': len(self.jumps),
            'tau': self.tau,
            'error_enabled': self.error.active(),
            'q_norm': self.error.magnitude,
        }


@dataclass
class TrajectoryRecord:
    """Per-trajectory time series and bounded jump log"""
    trajectory_id: int
    seed: int
    times: List[float] = field(default_factory=list)
    samples: Dict[str, List[float]] = field(default_factory=dict)
    jump_log: List[str] = field(default_factory=list)
    jump_count: int = 0
    max_history: int = 1000

    def record(self, time: float, **observables: float):
        if self.times and time < self.times[-1]:
            raise ValueError(f"Time stamps must be monotone: {time} after {self.times[-1]}")
        self.times.append(float(time))
        for name, value in observables.items():
            self.samples.setdefault(name, []).append(float(value))

    def log_jump(self, sweep: int, name: str, outcome: int):
        self.jump_count += int(outcome)
        self.jump_log.append(f"[{sweep}] {name}: {outcome}")
        if len(self.jump_log) > self.max_history:
            self.jump_log.pop(0)

    def series(self, name: str) -> np.ndarray:
        return np.array(self.samples.get(name, []))

    def rows(self):
        """(trajectory_id, sweep, time, observable, value) in sweep order"""
        for sweep, time in enumerate(self.times):
            for name in sorted(self.samples):
                yield self.trajectory_id, sweep, time, name, self.samples[name][sweep]


def _check_control_zero(state: StateVector, control: int):
    if state.prob_one(control) > CONTROL_TOL:
        raise ValueError(f"Control qubit {control} is not prepared in |0>")


def dissipative_sequence(control: int, spec: JumpOperatorSpec, site: int,
                         error: Optional[ErrorModel] = None,
                         helper: Optional[int] = None) -> GateSequence:
    """G, controlled rotation of the flip site, G^-1, pump"""
    rotation = Gate('CROT', (control, site), float(spec.theta), spec.flip_letter)
    if spec.variant == 'standard':
        seq = mapping_G(control, spec.product, error, spec.theta)
        seq.append(rotation)
        seq.extend(mapping_G(control, spec.product, error, spec.theta))
    elif spec.variant == 'constraint':
        seq = GateSequence([Gate('UC', (control,))])
        seq.extend(constraint_sequence(control, spec.links))
        seq.append(Gate('UCDG', (control,)))
        seq.append(rotation)
        seq.append(Gate('UC', (control,)))
        seq.extend(constraint_sequence(control, spec.links, inverse=True))
        seq.append(Gate('UCDG', (control,)))
    else:
        if helper is None:
            raise ValueError("RK jump needs a helper auxiliary qubit")
        ub = ub_sequence(control, spec.links, helper)
        seq = GateSequence([Gate('UC', (control,))])
        seq.extend(ub)
        seq.append(Gate('UCDG', (control,)))
        seq.append(rotation)
        seq.append(Gate('UC', (control,)))
        seq.extend(ub)
        seq.append(Gate('UCDG', (control,)))
    seq.append(Gate('MEASURE', (control,)))
    return seq


def dissipative_step(state: StateVector, control: int, spec: JumpOperatorSpec,
                     rng: np.random.Generator, sweep: int = 0,
                     error: Optional[ErrorModel] = None, helper: Optional[int] = None) -> int:
    """One pumping step; returns 1 when the control was found in |1> (a jump)"""
    _check_control_zero(state, control)
    site = spec.flip_site(sweep, rng)
    seq = dissipative_sequence(control, spec, site, error, helper)
    return seq.run(state, rng)[-1]


def _kraus_from_branches(enc_t: np.ndarray, enc_k: np.ndarray, dec_t: np.ndarray,
                         dec_k: np.ndarray, mid0, mid1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Kraus pair of encode / middle / decode on a control starting in |0>.

    The encode map sends |0>psi to 1/2 |0>(T+K)psi + 1/2 |1>(K-T)psi; the
    decode map acts likewise with (T', K') on both control inputs.
    """
    e0 = 0.5 * (enc_t + enc_k)
    e1 = 0.5 * (enc_k - enc_t)
    d_same = 0.5 * (dec_k + dec_t)
    d_swap = 0.5 * (dec_k - dec_t)
    k0 = d_same @ (mid0 @ e0) + d_swap @ (mid1 @ e1)
    k1 = d_swap @ (mid0 @ e0) + d_same @ (mid1 @ e1)
    return k0, k1


def _oracle_size(spec: JumpOperatorSpec, n: Optional[int]) -> int:
    n = max(spec.sites) + 1 if n is None else n
    if n > ORACLE_CAP:
        raise CapacityError(f"{n} qubits exceeds the dense oracle cap of {ORACLE_CAP}")
    return n


def ring_exchange_matrix(links: Sequence[int], n: int) -> np.ndarray:
    op = OperatorSum((sign / 8, plaquette_string(letters, links)) for sign, letters in RING_EXCHANGE_TABLE)
    return to_matrix(op, n)


def encoder_operator(spec: JumpOperatorSpec, n: int) -> np.ndarray:
    """K in G_K = U_c^-1 U_K U_c for the jump variant"""
    if spec.variant == 'standard':
        return to_matrix(spec.product, n)
    if spec.variant == 'constraint':
        labels = basis_labels(n)
        total = np.zeros(labels.shape, dtype=np.int64)
        for s in spec.links:
            total += 1 - 2 * ((labels >> s) & 1)
        return np.diag(np.exp(1j * CONSTRAINT_ANGLE * total))
    b = ring_exchange_matrix(spec.links, n)
    return expm(0.5j * np.pi * (np.eye(1 << n) - b) @ b)


def flip_rotation(letter: str, site: int, theta: float, n: int) -> np.ndarray:
    """exp(i theta letter_site) on n qubits"""
    return np.cos(theta) * np.eye(1 << n) + 1j * np.sin(theta) * to_matrix(PauliString({site: letter}), n)


def kraus_pair(spec: JumpOperatorSpec, n: Optional[int] = None, site: Optional[int] = None,
               error: Optional[ErrorModel] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    (A, B) of one dissipative step; A for control outcome 0, B for 1.

    For the perfect standard step with M = sign * prod W:
    A = 1/4 [(M+1)^2 + (M-1) Sigma (M-1)], B = 1/4 [(M-1)(M+1) + (M+1) Sigma (M-1)].
    """
    n = _oracle_size(spec, n)
    site = spec.flip_sites[0] if site is None else site
    eye = np.eye(1 << n, dtype=complex)
    k = encoder_operator(spec, n)
    sigma = flip_rotation(spec.flip_letter, site, spec.theta, n)

    if spec.variant == 'standard' and error is not None and error.active():
        q = to_matrix(error.operator_for(spec.product), n)
        theta_q = expm(1j * spec.theta * q)
        return _kraus_from_branches(theta_q, k, theta_q, k, eye, sigma)
    return _kraus_from_branches(eye, k, eye, k.conj().T, eye, sigma)


def coherent_kraus_pair(region: PauliString, phi: float, n: int,
                        error: Optional[ErrorModel] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Kraus pair of G~ exp(i phi sigma^z_c) G~ followed by pumping"""
    if n > ORACLE_CAP:
        raise CapacityError(f"{n} qubits exceeds the dense oracle cap of {ORACLE_CAP}")
    eye = np.eye(1 << n, dtype=complex)
    m = to_matrix(region, n)
    theta_q = eye
    if error is not None and error.active():
        theta_q = expm(1j * phi * to_matrix(error.operator_for(region), n))
    return _kraus_from_branches(theta_q, m, theta_q, m, np.exp(1j * phi) * eye, np.exp(-1j * phi) * eye)


def error_kraus_pair(phi: float, region: PauliString, q: OperatorSum,
                     n: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form Kraus pair of an imperfect coherent step, Theta = exp(i phi Q):
    C = 1/2 [cos(phi)(Theta^2 + 1) + i sin(phi)(Theta A + A Theta)]
    D = 1/4 [e^{i phi}(A - Theta)(Theta + A) + e^{-i phi}(A + Theta)(A - Theta)]
    """
    n = max(region.max_site, q.max_site) + 1 if n is None else n
    a = to_matrix(region, n)
    eye = np.eye(1 << n, dtype=complex)
    theta_q = expm(1j * phi * to_matrix(q, n))
    c = 0.5 * (np.cos(phi) * (theta_q @ theta_q + eye) + 1j * np.sin(phi) * (theta_q @ a + a @ theta_q))
    d = 0.25 * (np.exp(1j * phi) * (a - theta_q) @ (theta_q + a)
                + np.exp(-1j * phi) * (a + theta_q) @ (a - theta_q))
    return c, d


@dataclass
class ExpansionReport:
    """Small-phase expansion errors of the imperfect-step Kraus pair"""
    phis: List[float]
    c_errors: List[float]
    d_first_order: List[float]
    d_second_order: List[float]

    def ratios(self, values: List[float]) -> List[float]:
        return [values[k] / values[k + 1] for k in range(len(values) - 1)]


def expansion_report(phis: Sequence[float], region: PauliString, q: OperatorSum,
                     n: Optional[int] = None) -> ExpansionReport:
    """
    Errors of C against exp[i phi (A + Q)] - phi^2 Q^2 / 2, and of D against
    -i phi Q (first order) and -i phi Q + phi^2 (Q^2 + [Q, A] / 2) (second order).
    """
    n = max(region.max_site, q.max_site) + 1 if n is None else n
    a = to_matrix(region, n)
    qm = to_matrix(q, n)
    c_errors, d1, d2 = [], [], []
    for phi in phis:
        c, d = error_kraus_pair(phi, region, q, n)
        c_model = expm(1j * phi * (a + qm)) - 0.5 * phi ** 2 * qm @ qm
        d_first = -1j * phi * qm
        d_second = d_first + phi ** 2 * (qm @ qm + 0.5 * (qm @ a - a @ qm))
        c_errors.append(float(np.linalg.norm(c - c_model, 2)))
        d1.append(float(np.linalg.norm(d - d_first, 2)))
        d2.append(float(np.linalg.norm(d - d_second, 2)))
    return ExpansionReport(list(phis), c_errors, d1, d2)


def circuit_kraus(sequence: GateSequence, n_system: int, control: int,
                  n_total: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Kraus pair read off a gate circuit by running it on every system basis
    state with all auxiliary qubits in |0>. A trailing MEASURE is dropped.
    """
    gates = list(sequence.gates)
    if gates and gates[-1].opcode == 'MEASURE':
        gates = gates[:-1]
    body = GateSequence(gates)
    dim = 1 << n_system
    k0 = np.zeros((dim, dim), dtype=complex)
    k1 = np.zeros((dim, dim), dtype=complex)
    offset = 1 << control
    for label in range(dim):
        state = StateVector.basis(n_total, label)
        body.run(state)
        amps = state.amplitudes
        k0[:, label] = amps[:dim]
        k1[:, label] = amps[offset:offset + dim]
        leaked = 1.0 - np.sum(np.abs(k0[:, label]) ** 2) - np.sum(np.abs(k1[:, label]) ** 2)
        if leaked > 1e-9:
            raise ValueError("Circuit leaves auxiliary qubits other than the control excited")
    return k0, k1


def jump_operator(spec: JumpOperatorSpec, n: int, site: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lindblad operator c (rate theta^2 / tau) and first-order coherent part
    A1 of the step, from A = 1 + i theta A1 + O(theta^2), B = i theta c + O(theta^2).
    """
    eye = np.eye(1 << n, dtype=complex)
    k = encoder_operator(spec, n)
    kd = k.conj().T
    flip = to_matrix(PauliString({site: spec.flip_letter}), n)
    c = 0.25 * (kd + eye) @ flip @ (k - eye)
    a1 = 0.25 * (kd - eye) @ flip @ (k - eye)
    return c, a1


def lindblad_generator(model: ModelSpec, sweep: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """
    L(rho) = -(i/hbar)[H, rho] + sum_beta kappa_beta D(c_beta) rho.

    Random spin selection contributes the average dissipator over the flip
    sites; round-robin uses the site scheduled for `sweep`.
    """
    n = model.n_system
    if n > ORACLE_CAP:
        raise CapacityError(f"{n} qubits exceeds the dense oracle cap of {ORACLE_CAP}")
    h = to_matrix(model.hamiltonian(), n) if model.terms else np.zeros((1 << n, 1 << n), dtype=complex)
    dissipators = []
    for spec in model.jumps:
        if not spec.enabled:
            continue
        if spec.schedule == 'random':
            sites = list(spec.flip_sites)
        else:
            sites = [spec.flip_site(sweep)]
        for site in sites:
            c, a1 = jump_operator(spec, n, site)
            weight = 1.0 / len(sites)
            h = h - weight * model.hbar * spec.theta / model.tau * a1
            dissipators.append((weight * spec.rate(model.tau), c))

    def generator(rho: np.ndarray) -> np.ndarray:
        out = -1j / model.hbar * (h @ rho - rho @ h)
        for kappa, c in dissipators:
            cd = c.conj().T
            cdc = cd @ c
            out = out + kappa * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
        return out

    return generator


@dataclass
class ReductionReport:
    thetas: List[float]
    defects: List[float]
    exponent: float


def verify_small_parameter_reduction(spec: JumpOperatorSpec, thetas: Sequence[float],
                                     rho: Optional[np.ndarray] = None, tau: float = 1.0,
                                     rng: Optional[np.random.Generator] = None) -> ReductionReport:
    """
    Defect ||channel(rho) - rho - tau L(rho)|| for decreasing theta and the
    log-log slope of defect against theta.
    """
    thetas = [float(t) for t in thetas]
    if any(b >= a for a, b in zip(thetas, thetas[1:])):
        raise ValueError(f"theta list must be strictly decreasing, got {thetas}")
    n = _oracle_size(spec, None)
    if rho is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        g = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
        rho = g @ g.conj().T
        rho = rho / np.trace(rho).real
    site = spec.flip_sites[0]

    defects = []
    for theta in thetas:
        step = replace(spec, theta=theta, schedule='round_robin', flip_sites=(site,))
        a, b = kraus_pair(step, n, site)
        channel = a @ rho @ a.conj().T + b @ rho @ b.conj().T
        model = ModelSpec(n_system=n, jumps=[step], tau=tau,
                          n_ancilla=2 if step.variant == 'rk' else 1)
        lind = lindblad_generator(model)
        defects.append(float(np.linalg.norm(channel - rho - tau * lind(rho), 2)))

    usable = [(t, d) for t, d in zip(thetas, defects) if t > 0 and d > 0]
    if len(usable) >= 2:
        slope = np.polyfit(np.log([t for t, _ in usable]), np.log([d for _, d in usable]), 1)[0]
    else:
        slope = float('nan')
    logger.debug("Reduction defects %s, exponent %.3f", defects, slope)
    return ReductionReport(thetas, defects, float(slope))


def _ancilla_errors(model: ModelSpec) -> Optional[ErrorModel]:
    return model.error if model.error.active() else None


def trotter_sweep(state: StateVector, model: ModelSpec, rng: np.random.Generator,
                  sweep: int = 0, record: Optional[TrajectoryRecord] = None) -> List[str]:
    """
    One time step tau: every coherent term once, then every jump once, each
    family in sublattice-color order. Returns the names of the jumps that fired.
    """
    if state.n != model.total_qubits:
        raise ValueError(f"State has {state.n} qubits, model needs {model.total_qubits}")
    control = model.control_qubit
    error = _ancilla_errors(model)
    fired = []

    for idx in model.schedule.coherent_order():
        term = model.terms[idx]
        if term.string.is_identity():
            continue
        outcome = coherent_step(state, control, term.string, term.phase, error, rng)
        if outcome and record is not None:
            record.log_jump(sweep, term.name, outcome)

    for idx in model.schedule.dissipative_order():
        spec = model.jumps[idx]
        if not spec.enabled:
            continue
        outcome = dissipative_step(state, control, spec, rng, sweep,
                                   error if spec.variant == 'standard' else None,
                                   model.helper_qubit)
        if outcome:
            fired.append(spec.name)
        if record is not None and outcome:
            record.log_jump(sweep, spec.name, outcome)
    return fired


def sweep_channel(rho: np.ndarray, model: ModelSpec, sweep: int = 0) -> np.ndarray:
    """Ensemble map of one trotter_sweep on a system density matrix"""
    n = model.n_system
    if n > ORACLE_CAP:
        raise CapacityError(f"{n} qubits exceeds the dense oracle cap of {ORACLE_CAP}")
    error = _ancilla_errors(model)
    for idx in model.schedule.coherent_order():
        term = model.terms[idx]
        if term.string.is_identity():
            continue
        c, d = coherent_kraus_pair(term.string, term.phase, n, error)
        rho = c @ rho @ c.conj().T + d @ rho @ d.conj().T
    for idx in model.schedule.dissipative_order():
        spec = model.jumps[idx]
        if not spec.enabled:
            continue
        sites = list(spec.flip_sites) if spec.schedule == 'random' else [spec.flip_site(sweep)]
        new = np.zeros_like(rho)
        for site in sites:
            a, b = kraus_pair(spec, n, site, error if spec.variant == 'standard' else None)
            new += (a @ rho @ a.conj().T + b @ rho @ b.conj().T) / len(sites)
        rho = new
    return rho


def evolve_density(rho: np.ndarray, model: ModelSpec, sweeps: int) -> List[np.ndarray]:
    """rho after 0, 1, ..., sweeps stroboscopic steps"""
    out = [rho]
    for sweep in range(sweeps):
        rho = sweep_channel(rho, model, sweep)
        out.append(rho)
    return out


def sample_observables(state: StateVector, regions: Sequence[PauliString], control: int,
                       rng: np.random.Generator) -> np.ndarray:
    """
    Born-sample each region product through G onto the control qubit and
    pump it back; the state collapses onto the sampled eigenspaces.
    """
    for k, region in enumerate(regions):
        if not region.is_hermitian():
            raise ValueError(f"Observable {region} is not Hermitian")
        for other in regions[:k]:
            if not commutes(region, other):
                raise ValueError(f"Observables {other} and {region} do not commute")
    _check_control_zero(state, control)
    values = np.empty(len(regions), dtype=np.int64)
    for k, region in enumerate(regions):
        seq = mapping_G(control, region)
        seq.append(Gate('MEASURE', (control,)))
        outcome = seq.run(state, rng)[-1]
        values[k] = 1 - 2 * outcome
    return values


def correlation(samples: np.ndarray) -> Tuple[float, float]:
    """chi = <A_1 ... A_n> and its standard error from rows of +-1 samples"""
    samples = np.atleast_2d(np.asarray(samples))
    products = np.prod(samples, axis=1)
    mean = float(np.mean(products))
    stderr = float(np.std(products, ddof=1) / np.sqrt(len(products))) if len(products) > 1 else 0.0
    return mean, stderr


def run_trajectories(worker: Callable[[int], object], trajectories: int,
                     workers: int = 1) -> List[object]:
    """
    worker(trajectory_id) for every id; results come back ordered by id
    whatever the worker count.
    """
    ids = list(range(trajectories))
    if workers <= 1 or trajectories <= 1:
        return [worker(t) for t in ids]
    pool = Pool(processes=workers)
    try:
        return pool.map(worker, ids)
    finally:
        pool.terminate()
        pool.join()


def bind_worker(function: Callable, *args) -> Callable[[int], object]:
    """Picklable worker with leading arguments bound; the trajectory id comes last"""
    return partial(function, *args)
