import random

import pytest

from truncalg.cw import (
    LocalizedAbelianGroup,
    chain_form,
    denominator_bound,
    ktheory,
    make_cw,
    reduced_cohomology,
    skeletal_verification,
    sphere,
    suspension,
    wedge,
)
from truncalg.errors import SchemaError


def rp2():
    return make_cw([1, 1, 1], [[[0]], [[2]]])


def cp2():
    return make_cw([1, 0, 1, 0, 1], [[], [[]], [], [[]]])


def test_denominator_bounds():
    assert denominator_bound(2) == (1, 1, ())
    assert denominator_bound(0) == (0, 1, ())
    assert denominator_bound(5) == (3, 6, (2, 3))


def test_boundary_squared_checked():
    with pytest.raises(SchemaError):
        make_cw([1, 1, 1], [[[1]], [[1]]])


def test_reduced_cohomology_examples():
    groups = reduced_cohomology(sphere(2))
    assert groups[0].rank == 0 and groups[1].rank == 0 and groups[2].rank == 1
    g = reduced_cohomology(rp2())
    assert g[1] == LocalizedAbelianGroup(0, ()) and g[2] == LocalizedAbelianGroup(0, (2,))
    g2 = reduced_cohomology(rp2(), (2,))
    assert all(v.rank == 0 and not v.torsion_divisors for v in g2.values())


@pytest.mark.parametrize("d", range(5))
def test_sphere_ktheory(d):
    k = ktheory(sphere(d))
    even = k.k0 if d % 2 == 0 else k.k1
    odd = k.k1 if d % 2 == 0 else k.k0
    assert even == LocalizedAbelianGroup(1, ())
    assert odd == LocalizedAbelianGroup(0, ())


def test_rp2_cp2_point_goldens():
    k = ktheory(rp2())
    assert k.m_index == 1 and k.k0 == LocalizedAbelianGroup(0, (2,))
    assert k.k1 == LocalizedAbelianGroup(0, ())
    kc = ktheory(cp2())
    assert kc.m_index == 2 and kc.k0.rank == 2 and not kc.k0.torsion_divisors
    assert kc.k1 == LocalizedAbelianGroup(0, ())
    kp = ktheory(make_cw([1], []))
    assert kp.k0.rank == 0 and kp.k1.rank == 0


def test_skeletal_verification_goldens():
    for x in (sphere(2), rp2(), cp2(), wedge(sphere(1), sphere(1))):
        trace = skeletal_verification(x)
        assert all(step["wedge_values_ok"] for step in trace)
        assert all(n["exact"] for step in trace for n in step["nodes"])


def test_rp2_connecting_map_realizes_mult_2():
    trace = skeletal_verification(rp2())
    top = trace[-1]
    assert top["skeleton"] == 2
    names = [n["node"] for n in top["nodes"]]
    assert any("cofiber" in nm for nm in names)


def test_suspension_shift():
    # single-0-cell complexes: K-groups swap under the reduced suspension,
    # compared at the common localization
    for x in (sphere(1), sphere(2), rp2(), cp2()):
        sx = suspension(x)
        kx = ktheory(x)
        ksx = ktheory(sx)
        inv = tuple(sorted(set(kx.inverted) | set(ksx.inverted)))
        gx = reduced_cohomology(x, inv)
        gsx = reduced_cohomology(sx, inv)

        def parity(groups, par):
            rank = sum(g.rank for j, g in groups.items() if j % 2 == par)
            tors = []
            for j, g in groups.items():
                if j % 2 == par:
                    tors.extend(g.torsion_divisors)
            return rank, chain_form(tors)

        assert parity(gx, 0) == parity(gsx, 1)
        assert parity(gx, 1) == parity(gsx, 0)


def test_wedge_additivity():
    x = wedge(rp2(), sphere(2))
    k = ktheory(x)
    assert k.k0 == LocalizedAbelianGroup(1, (2,))
    assert k.k1 == LocalizedAbelianGroup(0, ())
    y = wedge(sphere(1), sphere(3))
    ky = ktheory(y)
    assert ky.k1.rank == 2 and ky.k0.rank == 0


def test_euler_characteristic():
    for x in (sphere(1), sphere(2), sphere(3), rp2(), cp2(),
              wedge(sphere(1), sphere(1))):
        k = ktheory(x)
        chi = sum((-1) ** j * c for j, c in enumerate(x.cells)) - 1
        assert k.k0.rank - k.k1.rank == chi


def test_dimension_vanishing():
    x = rp2()
    groups = reduced_cohomology(x)
    assert max(groups) == x.dimension


def test_parity_identity_structural():
    # K0/K1 equal the even/odd sums by construction; asserted in the result
    k = ktheory(cp2())
    assert k.k0 == k.even and k.k1 == k.odd


from hypothesis import given, settings, strategies as st


@given(st.lists(st.integers(min_value=2, max_value=48), max_size=5))
@settings(max_examples=80, deadline=None)
def test_chain_form_properties(divisors):
    chain = chain_form(divisors)
    for a, b in zip(chain, chain[1:]):
        assert b % a == 0
    prod = 1
    for d in divisors:
        prod *= d
    cprod = 1
    for d in chain:
        cprod *= d
    assert prod == cprod  # group order preserved
    assert chain_form(chain) == chain  # canonical form is idempotent


def test_random_wedges_of_spheres():
    rng = random.Random(10)
    for _ in range(10):
        parts = [sphere(rng.randint(1, 3)) for _ in range(rng.randint(1, 3))]
        x = parts[0]
        for ypart in parts[1:]:
            x = wedge(x, ypart)
        k = ktheory(x)
        even = sum(1 for s in parts if s.dimension % 2 == 0)
        odd = len(parts) - even
        assert k.k0.rank == even and k.k1.rank == odd
        trace = skeletal_verification(x)
        assert all(n["exact"] for step in trace for n in step["nodes"])
