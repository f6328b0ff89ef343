"""
Lattice Geometry for the Digital Quantum Simulator
Indexing and incidence structure for the spin lattices the simulator runs on

Features:
- 2D periodic toric lattice with spins on links (plaquettes and vertices)
- 3D periodic cubic lattice with spins on links (octahedra and plaquettes)
- Stabilizer Pauli strings built from the incidence tables
- Greedy sublattice coloring for parallel sweeps

Link numbering:
- toric: link id = 2 * (x + L * y) + d, d = 0 east link, d = 1 north link of vertex (x, y)
- cubic: link id = 3 * cell + axis, cell = x + Lx * (y + Ly * z)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from pauli import PauliString

logger = logging.getLogger(__name__)

TERM_KINDS = ('plaquette', 'vertex', 'octahedron')


class ToricLattice:
    """Periodic L x L square lattice with one spin on every link"""

    def __init__(self, L: int):
        self.L = L
        self.link_count = 2 * L * L
        self.plaquettes: List[Tuple[int, ...]] = []
        self.vertices: List[Tuple[int, ...]] = []
        self.plaquette_corners: List[Tuple[int, ...]] = []

        for y in range(L):
            for x in range(L):
                # bottom, right, top, left (cyclic order around the face)
                self.plaquettes.append((
                    self.link_id(x, y, 0),
                    self.link_id(x + 1, y, 1),
                    self.link_id(x, y + 1, 0),
                    self.link_id(x, y, 1),
                ))
                self.plaquette_corners.append((
                    self.vertex_id(x, y),
                    self.vertex_id(x + 1, y),
                    self.vertex_id(x + 1, y + 1),
                    self.vertex_id(x, y + 1),
                ))
                self.vertices.append((
                    self.link_id(x, y, 0),
                    self.link_id(x, y, 1),
                    self.link_id(x - 1, y, 0),
                    self.link_id(x, y - 1, 1),
                ))

        # link -> the two plaquettes / vertices that contain it
        self.link_plaquettes = _incidence(self.plaquettes, self.link_count)
        self.link_vertices = _incidence(self.vertices, self.link_count)

        # one control slot per plaquette, then one per vertex
        self.control_slots: Dict[Tuple[str, int], int] = {}
        for p in range(len(self.plaquettes)):
            self.control_slots[('plaquette', p)] = p
        for s in range(len(self.vertices)):
            self.control_slots[('vertex', s)] = len(self.plaquettes) + s

    def link_id(self, x: int, y: int, d: int) -> int:
        L = self.L
        return 2 * ((x % L) + L * (y % L)) + d

    def vertex_id(self, x: int, y: int) -> int:
        return (x % self.L) + self.L * (y % self.L)

    @property
    def vertex_count(self) -> int:
        return self.L * self.L

    def terms(self, kind: str) -> List[Tuple[int, ...]]:
        if kind == 'plaquette':
            return self.plaquettes
        if kind == 'vertex':
            return self.vertices
        raise ValueError(f"Toric lattice has no term kind: {kind}")

    def footprint(self, kind: str, index: int) -> Tuple[int, ...]:
        """Corner sites of a plaquette, or the faces around a vertex"""
        if kind == 'plaquette':
            return self.plaquette_corners[index]
        faces = set()
        for link in self.vertices[index]:
            faces.update(self.link_plaquettes[link])
        return tuple(sorted(faces))

    def plaquette_stabilizer(self, p: int) -> PauliString:
        """A_p = product of sigma^x around plaquette p"""
        return PauliString({link: 'X' for link in self.plaquettes[p]})

    def vertex_stabilizer(self, s: int) -> PauliString:
        """B_s = product of sigma^z around vertex s"""
        return PauliString({link: 'Z' for link in self.vertices[s]})

    def neighbor_across(self, kind: str, cell: int, link: int) -> int:
        """The other cell of the same kind that shares `link` with `cell`"""
        pair = self.link_plaquettes[link] if kind == 'plaquette' else self.link_vertices[link]
        if pair[0] == cell:
            return pair[1]
        if pair[1] == cell:
            return pair[0]
        raise ValueError(f"Link {link} does not touch {kind} {cell}")

    def __repr__(self):
        return f"ToricLattice(L={self.L}, links={self.link_count})"


class CubicLattice:
    """
    Periodic cubic lattice with spins on links; every site is the centre of
    an octahedron formed by its six links.

    A dimension of size 1 is closed with a twist: its step vector is the sum
    of the unit steps along the other axes. The up and down links of a site
    then stay distinct, so every octahedron keeps six distinct links.
    """

    def __init__(self, dims: Sequence[int]):
        self.dims = tuple(int(d) for d in dims)
        Lx, Ly, Lz = self.dims
        self.site_count = Lx * Ly * Lz
        self.link_count = 3 * self.site_count

        self.steps = []
        for axis in range(3):
            if self.dims[axis] >= 2:
                step = [0, 0, 0]
                step[axis] = 1
            else:
                step = [1 if (b != axis and self.dims[b] >= 2) else 0 for b in range(3)]
            self.steps.append(tuple(step))

        self.octahedra: List[Tuple[int, ...]] = []
        for s in range(self.site_count):
            links = []
            for axis in range(3):
                links.append(3 * s + axis)
                links.append(3 * self.shift(s, axis, -1) + axis)
            self.octahedra.append(tuple(links))

        self.plaquettes: List[Tuple[int, ...]] = []
        self.plaquette_corners: List[Tuple[int, ...]] = []
        self.dropped_plaquettes = 0
        seen = set()
        for s in range(self.site_count):
            for a, b in ((0, 1), (0, 2), (1, 2)):
                sa = self.shift(s, a)
                sb = self.shift(s, b)
                links = (3 * s + a, 3 * sa + b, 3 * sb + a, 3 * s + b)
                corners = (s, sa, self.shift(sa, b), sb)
                key = frozenset(links)
                if len(key) < 4 or len(set(corners)) < 4 or key in seen:
                    self.dropped_plaquettes += 1
                    continue
                seen.add(key)
                self.plaquettes.append(links)
                self.plaquette_corners.append(corners)

        if self.dropped_plaquettes:
            logger.debug("CubicLattice%s dropped %d degenerate plaquettes",
                         self.dims, self.dropped_plaquettes)

        self.link_octahedra = _incidence(self.octahedra, self.link_count)

        self.control_slots: Dict[Tuple[str, int], int] = {}
        for o in range(len(self.octahedra)):
            self.control_slots[('octahedron', o)] = o
        for p in range(len(self.plaquettes)):
            self.control_slots[('plaquette', p)] = len(self.octahedra) + p

    def coords(self, site: int) -> Tuple[int, int, int]:
        Lx, Ly, _ = self.dims
        return site % Lx, (site // Lx) % Ly, site // (Lx * Ly)

    def site_id(self, x: int, y: int, z: int) -> int:
        Lx, Ly, Lz = self.dims
        return (x % Lx) + Lx * ((y % Ly) + Ly * (z % Lz))

    def shift(self, site: int, axis: int, sign: int = 1) -> int:
        x, y, z = self.coords(site)
        dx, dy, dz = self.steps[axis]
        return self.site_id(x + sign * dx, y + sign * dy, z + sign * dz)

    def link_endpoints(self, link: int) -> Tuple[int, int]:
        site, axis = divmod(link, 3)
        return site, self.shift(site, axis)

    def terms(self, kind: str) -> List[Tuple[int, ...]]:
        if kind == 'octahedron':
            return self.octahedra
        if kind == 'plaquette':
            return self.plaquettes
        raise ValueError(f"Cubic lattice has no term kind: {kind}")

    def footprint(self, kind: str, index: int) -> Tuple[int, ...]:
        if kind == 'plaquette':
            return self.plaquette_corners[index]
        sites = set()
        for link in self.octahedra[index]:
            sites.update(self.link_endpoints(link))
        return tuple(sorted(sites))

    def __repr__(self):
        return f"CubicLattice(dims={self.dims}, links={self.link_count})"


@dataclass(frozen=True)
class SublatticeColoring:
    """Partition of one term family into groups that can run in parallel"""
    kind: str
    groups: Tuple[Tuple[int, ...], ...] = field(default_factory=tuple)

    @property
    def z(self) -> int:
        return len(self.groups)

    def order(self) -> List[int]:
        """Term indices in sweep order (color by color)"""
        return [t for group in self.groups for t in group]


def _incidence(terms: List[Tuple[int, ...]], link_count: int) -> List[Tuple[int, ...]]:
    table: List[List[int]] = [[] for _ in range(link_count)]
    for t, links in enumerate(terms):
        for link in links:
            table[link].append(t)
    return [tuple(entry) for entry in table]


def build_toric(L: int) -> ToricLattice:
    """Build the periodic toric lattice of linear size L"""
    if not isinstance(L, int) or L < 2:
        raise ValueError(f"Toric lattice needs L >= 2, got {L!r}")
    lattice = ToricLattice(L)
    logger.debug("Built %r", lattice)
    return lattice


def build_cubic(Lx: int, Ly: int, Lz: int) -> CubicLattice:
    """Build the periodic cubic link lattice"""
    dims = (Lx, Ly, Lz)
    if any((not isinstance(d, int)) or d < 1 for d in dims):
        raise ValueError(f"Cubic dimensions must be positive integers, got {dims}")
    if sum(1 for d in dims if d == 1) > 1:
        raise ValueError(f"At most one cubic dimension may have size 1, got {dims}")
    lattice = CubicLattice(dims)
    logger.debug("Built %r with %d plaquettes", lattice, len(lattice.plaquettes))
    return lattice


def color_sublattices(lattice, kind: str) -> SublatticeColoring:
    """
    Deterministic greedy coloring over term index order. Two terms conflict
    when they share a link or a footprint site (corner vertex or face), so
    every group is link-disjoint.
    """
    terms = lattice.terms(kind)
    footprints = [set(lattice.footprint(kind, t)) for t in range(len(terms))]
    links = [set(t) for t in terms]

    colors: List[int] = []
    for t in range(len(terms)):
        used = set()
        for u in range(t):
            if links[t] & links[u] or footprints[t] & footprints[u]:
                used.add(colors[u])
        color = 0
        while color in used:
            color += 1
        colors.append(color)

    z = max(colors) + 1 if colors else 0
    groups = tuple(tuple(t for t in range(len(terms)) if colors[t] == c) for c in range(z))
    logger.debug("Colored %d %s terms with z=%d", len(terms), kind, z)
    return SublatticeColoring(kind=kind, groups=groups)
