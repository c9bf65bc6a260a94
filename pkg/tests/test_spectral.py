import random

import pytest

from helpers import random_filtered_complex
from truncalg.errors import HypothesisUnmetError, SchemaError, UnsupportedRingError
from truncalg.linalg import Mat
from truncalg.modules import (
    BaseChangeSpec,
    PresentedModule,
    direct_sum,
    torsion_divisor_profile,
)
from truncalg.rings import LocalizedIntegers, TruncatedPadic
from truncalg.spectral import (
    base_change_report,
    degeneration_report,
    homology_filtered,
    lenfil_check,
    oracle,
    page,
    validate,
)

ZP34 = TruncatedPadic(3, 4)


def golden_complex():
    c0 = PresentedModule.cyclic(ZP34, ZP34.from_int(9))
    sub = PresentedModule.cyclic(ZP34, ZP34.from_int(3))
    return validate(ZP34, 0, 0, 0, 1, {0: c0}, {}, {(0, 1): (sub, Mat(1, 1, [[3]]))})


def depf_complex():
    ring = TruncatedPadic(2, 2)
    c1 = PresentedModule.free(ring, 1)
    c0 = PresentedModule.free(ring, 1)
    return validate(ring, 0, 1, 0, 1, {0: c0, 1: c1}, {1: Mat(1, 1, [[2]])},
                    {(0, 1): (PresentedModule.free(ring, 1), Mat(1, 1, [[1]])),
                     (1, 1): (PresentedModule.zero(ring), Mat(0, 1, []))})


def test_validate_rejections():
    ring = TruncatedPadic(2, 3)
    m = PresentedModule.free(ring, 1)
    # d o d != 0
    with pytest.raises(SchemaError):
        validate(ring, 0, 2, 0, 0, {0: m, 1: m, 2: m},
                 {1: Mat(1, 1, [[1]]), 2: Mat(1, 1, [[1]])}, {})
    # filtration violated: d(e) lands outside fil^1
    with pytest.raises(SchemaError):
        validate(ring, 0, 1, 0, 1, {0: m, 1: m}, {1: Mat(1, 1, [[1]])},
                 {(0, 1): (PresentedModule.cyclic(ring, 2), Mat(1, 1, [[2]])),
                  (1, 1): (PresentedModule.free(ring, 1), Mat(1, 1, [[1]]))})
    # valid single module with zero differential
    x = validate(ring, 0, 0, 0, 0, {0: m}, {}, {})
    assert x.width == 1


def test_homology_filtered_golden():
    x = golden_complex()
    h = homology_filtered(x, 0)
    assert torsion_divisor_profile(h.h) == (2,)
    assert torsion_divisor_profile(h.gr_modules[0]) == (1,)
    assert torsion_divisor_profile(h.gr_modules[1]) == (1,)


def test_homology_acyclic():
    ring = TruncatedPadic(2, 3)
    m = PresentedModule.free(ring, 1)
    x = validate(ring, 0, 1, 0, 0, {0: m, 1: m}, {1: Mat(1, 1, [[1]])}, {})
    from truncalg.modules import is_zero_module

    assert is_zero_module(homology_filtered(x, 0).h)
    assert is_zero_module(homology_filtered(x, 1).h)


def test_degeneration_golden_trichotomy():
    x = golden_complex()
    rep = degeneration_report(x)
    assert rep.rationally_degenerate and rep.degenerate and rep.saturated
    assert not rep.split
    assert rep.length_ledger[0] == (2, [1, 1])
    assert rep.h_torsion_profiles[0] == (2,)
    assert rep.e1_torsion_profiles[0] == (1, 1)
    assert rep.witnesses["divisor_mismatch"]
    assert not rep.precision_limited
    assert oracle(x) == {"rationally_degenerate": True, "degenerate": True,
                         "saturated": True, "split": False}


def test_degeneration_direct_sum_split():
    m = direct_sum([PresentedModule.cyclic(ZP34, ZP34.from_int(9)),
                    PresentedModule.cyclic(ZP34, ZP34.from_int(3))])
    sub = PresentedModule.cyclic(ZP34, ZP34.from_int(3))
    x = validate(ZP34, 0, 0, 0, 1, {0: m}, {}, {(0, 1): (sub, Mat(1, 2, [[0, 1]]))})
    rep = degeneration_report(x)
    assert rep.split and rep.saturated and rep.degenerate
    assert rep.witnesses["sections"]


def test_degeneration_depf_gate():
    x = depf_complex()
    p1 = page(x, 1)
    assert not p1.diffs[(0, 1)].matrix.is_zero(x.ring)
    rep = degeneration_report(x)
    assert not rep.rationally_degenerate and not rep.degenerate
    assert not rep.sscrit_applicable
    assert rep.precision_limited
    assert oracle(x)["degenerate"] is False


def test_zero_complex_vacuous():
    ring = TruncatedPadic(2, 2)
    x = validate(ring, 0, 0, 0, 0, {0: PresentedModule.zero(ring)}, {}, {})
    rep = degeneration_report(x)
    assert rep.split and rep.saturated and rep.degenerate and rep.rationally_degenerate
    assert oracle(x)["split"] is True


def test_page_stabilization_and_e1():
    rng = random.Random(5)
    ring = TruncatedPadic(2, 2)
    checked = 0
    for _ in range(200):
        if checked >= 12:
            break
        x = random_filtered_complex(ring, rng, weights=3)
        if x is None:
            continue
        checked += 1
        w = x.width
        stable = page(x, w + 1)
        beyond = page(x, w + 2)
        for key in stable.entries:
            assert (torsion_divisor_profile(stable.entries[key].module)
                    == torsion_divisor_profile(beyond.entries[key].module))
        # the stable page equals the graded pieces of filtered homology
        for i in range(x.lo, x.hi + 1):
            h = homology_filtered(x, i)
            for n in range(x.wmin, x.wmax + 1):
                assert (torsion_divisor_profile(stable.entries[(n, i)].module)
                        == torsion_divisor_profile(h.gr_modules[n])), (n, i)
    assert checked >= 10


def test_euler_conservation_on_torsion_complexes():
    rng = random.Random(19)
    ring = TruncatedPadic(2, 3)
    checked = 0
    for _ in range(300):
        if checked >= 8:
            break
        x = random_filtered_complex(ring, rng, weights=2)
        if x is None:
            continue
        # only torsion instances: all entries must have free rank 0
        from truncalg.modules import free_rank

        e1 = page(x, 1)
        if any(free_rank(e.module) for e in e1.entries.values()):
            continue
        totals = []
        for r in range(1, x.width + 2):
            pg = page(x, r)
            total = 0
            for (n, i), ent in pg.entries.items():
                from truncalg.modules import torsion_length

                total += (-1) ** i * torsion_length(ent.module)
            totals.append(total)
        assert len(set(totals)) == 1
        checked += 1
    assert checked >= 5


def test_lenfil_golden():
    x = golden_complex()
    rep = degeneration_report(x)
    out = lenfil_check(x, 1, rep)
    assert out[0] == (1, 2)
    out2 = lenfil_check(x, 5, rep)
    assert out2[0][0] <= out2[0][1]
    with pytest.raises(HypothesisUnmetError):
        lenfil_check(depf_complex(), 1)


def test_lenfil_free_equality():
    ring = TruncatedPadic(2, 3)
    m = PresentedModule.free(ring, 2)
    x = validate(ring, 0, 0, 0, 0, {0: m}, {}, {})
    rep = degeneration_report(x)
    for n in (1, 2):
        lhs, rhs = lenfil_check(x, n, rep)[0]
        assert lhs == rhs == 2 * n


def test_oracle_bound():
    ring = TruncatedPadic(3, 4)
    m = PresentedModule.free(ring, 2)  # 81^2 elements
    x = validate(ring, 0, 0, 0, 0, {0: m}, {}, {})
    with pytest.raises(UnsupportedRingError):
        oracle(x)


def test_base_change_report_identity():
    x = golden_complex()
    rep, descent = base_change_report(x, BaseChangeSpec("identity"))
    assert descent["applied"] and rep.saturated and not rep.split


def test_base_change_descent_from_localized():
    zl = LocalizedIntegers((2,))
    from fractions import Fraction

    # torsion-free E1: free modules, zero differential; fil = 3 Z[1/2]
    m = PresentedModule.free(zl, 1)
    sub = PresentedModule.free(zl, 1)
    x = validate(zl, 0, 0, 0, 1, {0: m}, {},
                 {(0, 1): (sub, Mat(1, 1, [[Fraction(3)]]))})
    rep, descent = base_change_report(x, BaseChangeSpec("localized_completion", ell=3))
    assert descent["applied"] and descent.get("re_verified")
    assert rep.degenerate
    # the 3-divisible filtration stage is not split after tensoring at 3
    assert not rep.split and rep.sscritflat_checked
    # an entry killed by base change fails the injectivity hypothesis
    tors = PresentedModule.cyclic(zl, Fraction(5))
    x2 = validate(zl, 0, 0, 0, 1, {0: tors}, {},
                  {(0, 1): (PresentedModule.zero(zl), Mat(0, 1, []))})
    with pytest.raises(HypothesisUnmetError):
        base_change_report(x2, BaseChangeSpec("localized_completion", ell=3))


def test_oracle_agreement_at_higher_precision():
    """At N = 2 saturated and split coincide (all exponents are 1); rank-1
    complexes over Z/2^3 and Z/3^4 stay within the oracle bound and separate
    the tiers. Checker and oracle must agree there too."""
    from truncalg.errors import UnsupportedRingError

    rng = random.Random(61)
    hist = set()
    for ring in (TruncatedPadic(2, 3), TruncatedPadic(3, 4)):
        done = 0
        for _ in range(600):
            if done >= 25:
                break
            x = random_filtered_complex(ring, rng, max_gens=1,
                                        weights=rng.choice([2, 3]))
            if x is None:
                continue
            try:
                orc = oracle(x)
            except UnsupportedRingError:
                continue
            rep = degeneration_report(x)
            got = {"rationally_degenerate": rep.rationally_degenerate,
                   "degenerate": rep.degenerate, "saturated": rep.saturated,
                   "split": rep.split}
            assert got == orc
            hist.add((got["saturated"], got["split"]))
            done += 1
        assert done >= 20
    assert (True, False) in hist  # the saturated-but-not-split tier appears


def test_verdict_monotonicity_fuzz():
    rng = random.Random(23)
    ring = TruncatedPadic(2, 2)
    checked = 0
    for _ in range(400):
        if checked >= 40:
            break
        x = random_filtered_complex(ring, rng, weights=rng.choice([2, 3]))
        if x is None:
            continue
        rep = degeneration_report(x)
        checked += 1
        if rep.split:
            assert rep.saturated
        if rep.saturated:
            assert rep.degenerate
    assert checked >= 30
