import itertools
from functools import reduce

import pytest

from lattice import build_cubic, build_toric, color_sublattices


def test_toric_counts():
    lattice = build_toric(2)
    assert lattice.link_count == 8
    assert len(lattice.plaquettes) == 4
    assert len(lattice.vertices) == 4
    assert lattice.vertex_count == 4


@pytest.mark.parametrize("L", [2, 3, 4])
def test_toric_every_link_in_two_cells(L):
    lattice = build_toric(L)
    for link in range(lattice.link_count):
        assert len(lattice.link_plaquettes[link]) == 2
        assert len(lattice.link_vertices[link]) == 2
    for cell in lattice.plaquettes + lattice.vertices:
        assert len(set(cell)) == 4


def test_toric_stabilizers_commute():
    from pauli import commutes
    lattice = build_toric(3)
    for p in range(len(lattice.plaquettes)):
        for s in range(len(lattice.vertices)):
            assert commutes(lattice.plaquette_stabilizer(p), lattice.vertex_stabilizer(s))


@pytest.mark.parametrize("L", [2, 3])
def test_toric_stabilizer_products_are_identity(L):
    from pauli import multiply
    lattice = build_toric(L)
    for build, count in ((lattice.plaquette_stabilizer, len(lattice.plaquettes)),
                         (lattice.vertex_stabilizer, len(lattice.vertices))):
        product = reduce(multiply, (build(k) for k in range(count)))
        assert product.is_identity()
        assert product.phase_power == 0


def test_neighbor_across_is_symmetric(toric3):
    for p, links in enumerate(toric3.plaquettes):
        for link in links:
            other = toric3.neighbor_across('plaquette', p, link)
            assert other != p
            assert toric3.neighbor_across('plaquette', other, link) == p
    outside = next(link for link in range(toric3.link_count) if link not in toric3.plaquettes[0])
    with pytest.raises(ValueError):
        toric3.neighbor_across('plaquette', 0, outside)


def test_cubic_221_counts():
    lattice = build_cubic(2, 2, 1)
    assert lattice.link_count == 12
    assert len(lattice.octahedra) == 4
    assert len(lattice.plaquettes) == 12
    for links in lattice.octahedra:
        assert len(set(links)) == 6
    for link in range(lattice.link_count):
        assert len(lattice.link_octahedra[link]) == 2


def test_cubic_222_plaquettes_are_distinct_cycles():
    lattice = build_cubic(2, 2, 2)
    assert lattice.link_count == 24
    assert len(lattice.octahedra) == 8
    keys = {frozenset(p) for p in lattice.plaquettes}
    assert len(keys) == len(lattice.plaquettes)
    for links, corners in zip(lattice.plaquettes, lattice.plaquette_corners):
        assert len(set(links)) == 4
        assert len(set(corners)) == 4


def test_invalid_sizes():
    with pytest.raises(ValueError):
        build_toric(1)
    with pytest.raises(ValueError):
        build_cubic(1, 1, 2)
    with pytest.raises(ValueError):
        build_cubic(0, 2, 2)


@pytest.mark.parametrize("factory,kind", [
    (lambda: build_toric(4), 'plaquette'),
    (lambda: build_toric(4), 'vertex'),
    (lambda: build_toric(3), 'plaquette'),
    (lambda: build_cubic(2, 2, 1), 'octahedron'),
    (lambda: build_cubic(2, 2, 1), 'plaquette'),
    (lambda: build_cubic(2, 2, 2), 'plaquette'),
])
def test_coloring_groups_are_link_disjoint(factory, kind):
    lattice = factory()
    coloring = color_sublattices(lattice, kind)
    terms = lattice.terms(kind)
    assert sorted(coloring.order()) == list(range(len(terms)))
    for group in coloring.groups:
        for a, b in itertools.combinations(group, 2):
            assert not set(terms[a]) & set(terms[b])


def test_toric_four_colors_at_L4():
    lattice = build_toric(4)
    assert color_sublattices(lattice, 'plaquette').z == 4
    assert color_sublattices(lattice, 'vertex').z == 4


def test_coloring_is_deterministic():
    lattice = build_cubic(2, 2, 2)
    assert color_sublattices(lattice, 'plaquette') == color_sublattices(lattice, 'plaquette')
