"""
Pauli String Algebra
Signed multi-site Pauli operators and their dense-matrix realization

Features:
- Immutable PauliString with exact phase tracking (powers of i)
- OperatorSum for real-weighted sums of strings (Hamiltonian terms)
- Symplectic commutation test
- Dense and sparse matrix oracles under the project-wide qubit ordering
- Canonical text form, e.g. "+1 X3 X7 X12 X14"

Conventions:
- site 0 is the least significant bit of a basis-state label
- bit 0 is spin up (sigma^z = +1), bit 1 is spin down
"""

import logging
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

logger = logging.getLogger(__name__)

ORACLE_CAP = 14
LETTERS = ('I', 'X', 'Y', 'Z')

_PHASE_TEXT = {0: '+1', 1: '+i', 2: '-1', 3: '-i'}
_TEXT_PHASE = {v: k for k, v in _PHASE_TEXT.items()}

# single-site products: (a, b) -> (phase power of i, letter)
_PRODUCT = {
    ('X', 'Y'): (1, 'Z'), ('Y', 'X'): (3, 'Z'),
    ('Y', 'Z'): (1, 'X'), ('Z', 'Y'): (3, 'X'),
    ('Z', 'X'): (1, 'Y'), ('X', 'Z'): (3, 'Y'),
}


class CapacityError(ValueError):
    """Requested qubit count exceeds a dense-representation cap"""


def _phase_power(phase) -> int:
    if isinstance(phase, (int, np.integer)) and not isinstance(phase, bool) and phase in (1, -1):
        return 0 if phase == 1 else 2
    for k, value in enumerate((1, 1j, -1, -1j)):
        if abs(complex(phase) - value) < 1e-12:
            return k
    raise ValueError(f"Pauli phase must be one of +1, +i, -1, -i, got {phase!r}")


class PauliString:
    """
    Signed Pauli product i^k * prod_j P_j.

    Stored as a phase power k and a sorted tuple of (site, letter) pairs
    with identity letters removed.
    """

    __slots__ = ('_power', '_letters', '_x_mask', '_z_mask')

    def __init__(self, letters: Union[Dict[int, str], Iterable[Tuple[int, str]], None] = None,
                 phase=1):
        items = dict(letters or {})
        clean = []
        for site, letter in items.items():
            letter = str(letter).upper()
            if letter not in LETTERS:
                raise ValueError(f"Unknown Pauli letter: {letter}")
            if not isinstance(site, (int, np.integer)) or site < 0:
                raise ValueError(f"Invalid site index: {site!r}")
            if letter != 'I':
                clean.append((int(site), letter))
        clean.sort()
        self._letters = tuple(clean)
        self._power = _phase_power(phase)

        x_mask = 0
        z_mask = 0
        for site, letter in self._letters:
            if letter in ('X', 'Y'):
                x_mask |= 1 << site
            if letter in ('Z', 'Y'):
                z_mask |= 1 << site
        self._x_mask = x_mask
        self._z_mask = z_mask

    @classmethod
    def identity(cls, phase=1) -> 'PauliString':
        return cls({}, phase)

    @classmethod
    def uniform(cls, letter: str, sites: Iterable[int], phase=1) -> 'PauliString':
        """Same letter on every listed site"""
        sites = list(sites)
        if len(set(sites)) != len(sites):
            raise ValueError(f"Duplicate sites in {sites}")
        return cls({s: letter for s in sites}, phase)

    @property
    def phase(self) -> complex:
        return (1, 1j, -1, -1j)[self._power]

    @property
    def phase_power(self) -> int:
        return self._power

    @property
    def letters(self) -> Dict[int, str]:
        return dict(self._letters)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(site for site, _ in self._letters)

    @property
    def x_mask(self) -> int:
        return self._x_mask

    @property
    def z_mask(self) -> int:
        return self._z_mask

    @property
    def y_count(self) -> int:
        return sum(1 for _, letter in self._letters if letter == 'Y')

    @property
    def weight(self) -> int:
        return len(self._letters)

    @property
    def max_site(self) -> int:
        return self._letters[-1][0] if self._letters else -1

    def letter(self, site: int) -> str:
        for s, letter in self._letters:
            if s == site:
                return letter
        return 'I'

    def is_hermitian(self) -> bool:
        return self._power % 2 == 0

    def is_identity(self) -> bool:
        return not self._letters

    def scaled(self, phase) -> 'PauliString':
        """Same letters with the phase multiplied by `phase`"""
        return PauliString(self._letters, (1, 1j, -1, -1j)[(self._power + _phase_power(phase)) % 4])

    def dagger(self) -> 'PauliString':
        return PauliString(self._letters, (1, 1j, -1, -1j)[(-self._power) % 4])

    def factor(self) -> complex:
        """Scalar multiplying |x ^ x_mask> when acting on |x> with no Z sign"""
        return (1, 1j, -1, -1j)[(self._power + self.y_count) % 4]

    def __mul__(self, other: 'PauliString') -> 'PauliString':
        return multiply(self, other)

    def __neg__(self) -> 'PauliString':
        return self.scaled(-1)

    def __eq__(self, other):
        if not isinstance(other, PauliString):
            return NotImplemented
        return self._power == other._power and self._letters == other._letters

    def __hash__(self):
        return hash((self._power, self._letters))

    def to_text(self) -> str:
        tokens = [_PHASE_TEXT[self._power]]
        tokens.extend(f"{letter}{site}" for site, letter in self._letters)
        return ' '.join(tokens)

    @classmethod
    def from_text(cls, text: str) -> 'PauliString':
        tokens = text.split()
        if not tokens:
            raise ValueError("Empty Pauli string text")
        phase_token = tokens[0]
        if phase_token not in _TEXT_PHASE:
            raise ValueError(f"Invalid phase token: {phase_token}")
        letters = {}
        for token in tokens[1:]:
            letter, digits = token[0].upper(), token[1:]
            if letter not in LETTERS or not digits.isdigit():
                raise ValueError(f"Invalid Pauli token: {token}")
            site = int(digits)
            if site in letters:
                raise ValueError(f"Site {site} repeated in: {text}")
            letters[site] = letter
        return cls(letters, (1, 1j, -1, -1j)[_TEXT_PHASE[phase_token]])

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"PauliString('{self.to_text()}')"


class OperatorSum:
    """Real-weighted sum of Pauli strings"""

    def __init__(self, terms: Optional[Iterable[Tuple[float, PauliString]]] = None):
        self.terms: List[Tuple[float, PauliString]] = []
        for coefficient, string in terms or []:
            self.add(coefficient, string)

    def add(self, coefficient: float, string: PauliString) -> 'OperatorSum':
        coefficient = float(coefficient)
        if not np.isfinite(coefficient):
            raise ValueError(f"Non-finite coefficient {coefficient} for {string}")
        if not isinstance(string, PauliString):
            raise ValueError(f"Expected PauliString, got {type(string).__name__}")
        self.terms.append((coefficient, string))
        return self

    @classmethod
    def single(cls, string: PauliString, coefficient: float = 1.0) -> 'OperatorSum':
        return cls([(coefficient, string)])

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: 'OperatorSum') -> 'OperatorSum':
        return OperatorSum(self.terms + other.terms)

    def scaled(self, factor: float) -> 'OperatorSum':
        return OperatorSum((factor * c, s) for c, s in self.terms)

    @property
    def support(self) -> Tuple[int, ...]:
        sites = set()
        for _, string in self.terms:
            sites.update(string.support)
        return tuple(sorted(sites))

    @property
    def max_site(self) -> int:
        return max((s.max_site for _, s in self.terms), default=-1)

    def magnitude(self) -> float:
        """|Q|: largest absolute coefficient"""
        return max((abs(c) for c, _ in self.terms), default=0.0)

    def is_hermitian(self) -> bool:
        return all(s.is_hermitian() for _, s in self.terms)

    def relabeled(self, mapping: Dict[int, int]) -> 'OperatorSum':
        """Same operator with sites renamed through `mapping`"""
        out = OperatorSum()
        for c, s in self.terms:
            out.add(c, PauliString({mapping[site]: letter for site, letter in s.letters.items()},
                                   s.phase))
        return out

    def to_text(self) -> str:
        return ' ; '.join(f"{c!r} * {s.to_text()}" for c, s in self.terms)

    @classmethod
    def from_text(cls, text: str) -> 'OperatorSum':
        out = cls()
        for chunk in text.split(';'):
            chunk = chunk.strip()
            if not chunk:
                continue
            if '*' not in chunk:
                raise ValueError(f"Operator term needs 'coefficient * string': {chunk}")
            coefficient, string = chunk.split('*', 1)
            out.add(float(coefficient), PauliString.from_text(string.strip()))
        return out

    def __repr__(self):
        return f"OperatorSum('{self.to_text()}')"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Phase-exact product a * b"""
    power = a.phase_power + b.phase_power
    letters = a.letters
    for site, lb in b.letters.items():
        la = letters.get(site, 'I')
        if la == 'I':
            letters[site] = lb
        elif la == lb:
            letters[site] = 'I'
        else:
            k, letter = _PRODUCT[(la, lb)]
            power += k
            letters[site] = letter
    return PauliString(letters, (1, 1j, -1, -1j)[power % 4])


def commutes(a: PauliString, b: PauliString) -> bool:
    """Symplectic test: strings commute iff they anticommute on an even number of sites"""
    overlap = (a.x_mask & b.z_mask) ^ (a.z_mask & b.x_mask)
    return bin(overlap).count('1') % 2 == 0


def operator_sums_commute(a: OperatorSum, b: OperatorSum, n: Optional[int] = None) -> bool:
    """Matrix commutator test for two sums (term-wise commutation is sufficient but not necessary)"""
    if all(commutes(sa, sb) for _, sa in a for _, sb in b):
        return True
    n = n if n is not None else max(a.max_site, b.max_site) + 1
    ma = to_sparse(a, n)
    mb = to_sparse(b, n)
    comm = ma @ mb - mb @ ma
    return comm.count_nonzero() == 0 or abs(comm).max() < 1e-12


def parity(labels: np.ndarray, mask: int) -> np.ndarray:
    """Parity of popcount(label & mask) for an array of basis labels"""
    out = np.zeros(labels.shape, dtype=np.int64)
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            out ^= (labels >> bit) & 1
        bit += 1
    return out


def string_action(string: PauliString, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Action on computational basis states: P|x> = value[x] |target[x]>.
    """
    target = labels ^ string.x_mask
    signs = 1 - 2 * parity(labels, string.z_mask)
    return target, string.factor() * signs


def _check_size(n: int, op_max_site: int, cap: int):
    if n < 0:
        raise ValueError(f"Qubit count must be non-negative, got {n}")
    if op_max_site >= n:
        raise ValueError(f"Operator acts on site {op_max_site} outside {n} qubits")
    if n > cap:
        raise CapacityError(f"{n} qubits exceeds the dense oracle cap of {cap}")


def to_sparse(op: Union[PauliString, OperatorSum], n: int, cap: int = 24) -> sparse.csr_matrix:
    """Sparse 2^n x 2^n matrix of a string or sum"""
    if isinstance(op, PauliString):
        op = OperatorSum.single(op)
    _check_size(n, op.max_site, cap)
    dim = 1 << n
    labels = np.arange(dim, dtype=np.int64)
    total = sparse.csr_matrix((dim, dim), dtype=complex)
    for coefficient, string in op:
        target, values = string_action(string, labels)
        total = total + sparse.csr_matrix((coefficient * values, (target, labels)), shape=(dim, dim))
    return total


def to_matrix(op: Union[PauliString, OperatorSum], n: int, cap: int = ORACLE_CAP) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a string or sum"""
    if isinstance(op, PauliString):
        op = OperatorSum.single(op)
    _check_size(n, op.max_site, cap)
    dim = 1 << n
    labels = np.arange(dim, dtype=np.int64)
    matrix = np.zeros((dim, dim), dtype=complex)
    for coefficient, string in op:
        target, values = string_action(string, labels)
        matrix[target, labels] += coefficient * values
    return matrix


def local_matrix(op: OperatorSum) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Dense matrix of `op` on its own support, with the support sites in order"""
    support = op.support
    mapping = {site: k for k, site in enumerate(support)}
    return to_matrix(op.relabeled(mapping), len(support)), support
