import random

import pytest

from truncalg.bkrandom import random_mod_s1_leaf, random_tower, scramble_node
from truncalg.breuil_kisin import (
    BKModule,
    HeightCertificate,
    HeightFailure,
    bk_kernel_cokernel,
    canonical_decomposition,
    check_height,
    check_mod_s1,
    closure_check,
    connecting_maps,
    extension_node,
    gr_extension_transfer,
    gr_tower_leaf,
    leaf,
    make_bk_map,
    make_bk_module,
    make_bk_ses,
    structure_check,
    twist,
    untwist,
    verify_tower,
)
from truncalg.errors import HypothesisUnmetError, PrecisionError
from truncalg.linalg import Mat
from truncalg.modules import PresentedModule, direct_sum, is_zero_module
from truncalg.rings import TruncatedBK
from truncalg.smodules import NotElementary, gr_p

BK = TruncatedBK(3, 3, 4)


def test_height_identity_phi():
    m = PresentedModule.cyclic(BK, BK.from_int(3))
    b = make_bk_module(m, Mat(1, 1, [[BK.one]]), (0, 0))
    assert isinstance(check_height(b, 0, 0), HeightCertificate)


def test_height_mult_by_e():
    m = PresentedModule.cyclic(BK, BK.from_int(3))
    e = BK.eisenstein_element()
    b = make_bk_module(m, Mat(1, 1, [[e]]), (1, 1))
    assert isinstance(check_height(b, 1, 1), HeightCertificate)
    assert isinstance(check_height(b, 0, 0), HeightFailure)


def test_height_free_er():
    e = BK.eisenstein_element()
    for r in (0, 1):
        b = make_bk_module(PresentedModule.free(BK, 1),
                           Mat(1, 1, [[BK.pow(e, r)]]), (r, r))
        assert isinstance(check_height(b, r, r), HeightCertificate)
        if r:
            assert isinstance(check_height(b, 0, 0), HeightFailure)


def test_height_window_coherence():
    rng = random.Random(3)
    for _ in range(6):
        node = random_mod_s1_leaf(TruncatedBK(3, 2, 4), rng, r=1)
        b = node.bk
        if isinstance(check_height(b, 0, 1), HeightCertificate):
            # widening the window preserves certification
            assert isinstance(check_height(b, 0, 2), HeightCertificate)


def test_twist_coherence():
    # double twists need trusted z-precision 3, so M >= 7 at p = 3
    bk = TruncatedBK(3, 3, 7)
    m = PresentedModule.cyclic(bk, bk.from_int(3))
    b = make_bk_module(m, Mat(1, 1, [[bk.one]]), (0, 0))
    b1 = twist(b, 1)
    assert isinstance(check_height(b1, 1, 1), HeightCertificate)
    b2 = twist(b, 2)
    bb = twist(b1, 1)
    assert isinstance(check_height(b2, 2, 2), HeightCertificate)
    assert isinstance(check_height(bb, 2, 2), HeightCertificate)
    back = untwist(b1, 1)
    assert isinstance(check_height(back, 0, 0), HeightCertificate)
    with pytest.raises(HypothesisUnmetError):
        untwist(b, 1)


def test_trusted_precision_gate():
    bk = TruncatedBK(2, 2, 2)  # trusted z-precision 1
    m = PresentedModule.cyclic(bk, bk.from_int(2))
    b = make_bk_module(m, Mat(1, 1, [[bk.var_power(1)]]), (0, 1))
    with pytest.raises(PrecisionError):
        check_height(b, 0, 1)


def test_metamorphic_height_across_precision():
    # same data at M and pM: verdicts agree when the gate passes
    for m_small, m_big in ((4, 8),):
        bks = TruncatedBK(2, 3, m_small)
        bkb = TruncatedBK(2, 3, m_big)
        for phi_coeffs in ([1, 1], [1, 0], [3, 1]):
            ms = PresentedModule.cyclic(bks, bks.from_int(2))
            mb = PresentedModule.cyclic(bkb, bkb.from_int(2))
            ps = bks.from_coeffs([bks.scalar.from_int(c) for c in phi_coeffs])
            pb = bkb.from_coeffs([bkb.scalar.from_int(c) for c in phi_coeffs])
            bs = make_bk_module(ms, Mat(1, 1, [[ps]]), (0, 1))
            bb = make_bk_module(mb, Mat(1, 1, [[pb]]), (0, 1))
            vs = isinstance(check_height(bs, 0, 1), HeightCertificate)
            vb = isinstance(check_height(bb, 0, 1), HeightCertificate)
            assert vs == vb


def test_canonical_decomposition():
    m = PresentedModule.from_relation_rows(BK, 2, [[BK.from_int(9), BK.zero]])
    b = make_bk_module(m, Mat.identity(2, BK), (0, 0))
    cd = canonical_decomposition(b)
    assert cd.mbar_is_zero
    assert not is_zero_module(cd.torsion.module)
    from truncalg.smodules import decompose_over_s

    dec = decompose_over_s(cd.free.module)
    assert dec.free_rank == 1 and not dec.torsion_divisors
    # purely torsion module: free part vanishes
    mt = PresentedModule.cyclic(BK, BK.from_int(3))
    bt = make_bk_module(mt, Mat(1, 1, [[BK.one]]), (0, 0))
    cdt = canonical_decomposition(bt)
    assert is_zero_module(cdt.free.module)


def test_bk_kernel_cokernel_basic():
    q = PresentedModule.cyclic(BK, BK.from_int(3))
    b = make_bk_module(q, Mat(1, 1, [[BK.one]]), (0, 1))
    f0 = make_bk_map(b, b, Mat(1, 1, [[BK.zero]]))
    k, c, notes = bk_kernel_cokernel(f0, 1)
    assert not is_zero_module(k.module) and not is_zero_module(c.module)
    assert not notes
    fid = make_bk_map(b, b, Mat(1, 1, [[BK.one]]))
    k2, c2, _ = bk_kernel_cokernel(fid, 1)
    assert is_zero_module(k2.module) and is_zero_module(c2.module)


def test_bk_kernel_cokernel_z_mult_exploration():
    # equivariant z-multiplication forces heights beyond p-1: exploration mode
    bk = TruncatedBK(2, 2, 5)
    q = PresentedModule.cyclic(bk, bk.from_int(2))
    src = make_bk_module(q, Mat(1, 1, [[bk.var_power(2)]]), (0, 2))
    tgt = make_bk_module(q, Mat(1, 1, [[bk.var_power(1)]]), (0, 2))
    f = make_bk_map(src, tgt, Mat(1, 1, [[bk.var_power(1)]]))
    k, c, notes = bk_kernel_cokernel(f, 2)
    assert any("exploration" in n for n in notes)
    assert gr_p(k.module, 0).divisors  # z-torsion: the kernel is S/(p, z)
    assert gr_p(c.module, 0).divisors


def test_phi_equivariance_checked():
    bk = TruncatedBK(3, 2, 4)
    q = PresentedModule.cyclic(bk, bk.from_int(3))
    src = make_bk_module(q, Mat(1, 1, [[bk.one]]), (0, 1))
    with pytest.raises(HypothesisUnmetError):
        make_bk_map(src, src, Mat(1, 1, [[bk.var_power(1)]]))


def test_connecting_maps_nonsplit_and_split():
    bk2 = TruncatedBK(2, 3, 2)
    a = PresentedModule.cyclic(bk2, bk2.from_int(2))
    mid = PresentedModule.cyclic(bk2, bk2.from_int(4))
    q = PresentedModule.cyclic(bk2, bk2.from_int(2))
    ba = make_bk_module(a, Mat(1, 1, [[bk2.one]]), (0, 1))
    bb = make_bk_module(mid, Mat(1, 1, [[bk2.one]]), (0, 1))
    bc = make_bk_module(q, Mat(1, 1, [[bk2.one]]), (0, 1))
    ses = make_bk_ses(ba, bb, bc, Mat(1, 1, [[bk2.from_int(2)]]), Mat(1, 1, [[bk2.one]]))
    cjs = connecting_maps(ses)
    from truncalg.modules import is_zero_map

    assert not is_zero_map(cjs[0][0])
    ds = direct_sum([a, q])
    bds = make_bk_module(ds, Mat.identity(2, bk2), (0, 1))
    ses2 = make_bk_ses(ba, bds, bc, Mat(1, 2, [[bk2.one, bk2.zero]]),
                       Mat(2, 1, [[bk2.zero], [bk2.one]]))
    assert all(is_zero_map(cj) for cj, _ in connecting_maps(ses2))


def test_gr_extension_transfer_both_kinds():
    bk2 = TruncatedBK(2, 3, 2)
    a = PresentedModule.cyclic(bk2, bk2.from_int(2))
    ba = make_bk_module(a, Mat(1, 1, [[bk2.one]]), (0, 1))
    mid = PresentedModule.cyclic(bk2, bk2.from_int(4))
    bb = make_bk_module(mid, Mat(1, 1, [[bk2.one]]), (0, 1))
    bc = make_bk_module(a, Mat(1, 1, [[bk2.one]]), (0, 1))
    ses = make_bk_ses(ba, bb, bc, Mat(1, 1, [[bk2.from_int(2)]]), Mat(1, 1, [[bk2.one]]))
    towers = {j: gr_tower_leaf(ba, j) for j in range(3)}
    certs = gr_extension_transfer(ses, "mod_s1", towers, 1)
    assert sorted(certs) == [0, 1, 2]
    # free quotient: gr(middle) = gr(sub) + one free S1 line per slice
    fr = PresentedModule.free(bk2, 1)
    bfr = make_bk_module(fr, Mat(1, 1, [[bk2.eisenstein_element()]]), (1, 1))
    dsf = direct_sum([a, fr])
    bdsf = make_bk_module(dsf, Mat(2, 2, [[bk2.one, bk2.zero],
                                          [bk2.zero, bk2.eisenstein_element()]]), (0, 1))
    sesf = make_bk_ses(ba, bdsf, bfr, Mat(1, 2, [[bk2.one, bk2.zero]]),
                       Mat(2, 1, [[bk2.zero], [bk2.one]]))
    certsf = gr_extension_transfer(sesf, "free", towers, 1)
    assert sorted(certsf) == [0, 1, 2]
    for j in range(3):
        slb = gr_p(bdsf.module, j)
        sla = gr_p(ba.module, j)
        assert slb.rank == sla.rank + 1


def test_closure_check_tower_length_two():
    bk2 = TruncatedBK(2, 3, 2)
    a = PresentedModule.cyclic(bk2, bk2.from_int(2))
    ba = make_bk_module(a, Mat(1, 1, [[bk2.one]]), (0, 1))
    mid = PresentedModule.cyclic(bk2, bk2.from_int(4))
    bb = make_bk_module(mid, Mat(1, 1, [[bk2.one]]), (0, 1))
    ses = make_bk_ses(ba, bb, ba, Mat(1, 1, [[bk2.from_int(2)]]), Mat(1, 1, [[bk2.one]]))
    tower = extension_node(bb, leaf(ba), ses.inject, leaf(ba), ses.surject)
    ok, why = verify_tower(tower, 1, bar=True)
    assert ok, why
    # f = 0 into the tower: image 0, cokernel = N with its own tower shape
    f0 = make_bk_map(ba, bb, Mat(1, 1, [[bk2.zero]]))
    im_t, cok_t, _ = closure_check(f0, tower, 1)
    assert is_zero_module(im_t.bk.module) or im_t.kind != "extension"
    # composite inclusion S/p -> S/p^2 through the tower
    f = make_bk_map(ba, bb, Mat(1, 1, [[bk2.from_int(2)]]))
    im_t2, cok_t2, _ = closure_check(f, tower, 1)
    assert im_t2 is not None and cok_t2 is not None


def test_structure_check_and_counterexample():
    bk2 = TruncatedBK(2, 3, 2)
    spz = PresentedModule.from_relation_rows(
        bk2, 1, [[bk2.from_int(2)], [bk2.var_power(1)]])
    bspz = make_bk_module(spz, Mat(1, 1, [[bk2.one]]), (0, 1))
    res = structure_check(bspz, 1)
    assert res.elementary is None
    assert isinstance(res.counterexample, NotElementary)
    assert res.counterexample.failing_j == 0
    # free module with height <= r: rank recovered, no torsion
    b = make_bk_module(PresentedModule.free(BK, 2), Mat.identity(2, BK), (0, 0))
    res2 = structure_check(b, 1)
    assert res2.elementary.free_rank == 2 and not res2.elementary.torsion_divisors


@pytest.mark.parametrize("p", [3, 5])
def test_structure_theorem_random_towers(p):
    rng = random.Random(900 + p)
    for _ in range(8):
        tw = random_tower(p, rng, depth=rng.randint(1, 3), n=2, r=1)
        ok, why = verify_tower(tw, 1, bar=True)
        assert ok, why
        res = structure_check(tw.bk, 1, tower=tw)
        assert res.hypothesis_met
        assert res.elementary is not None
        pred_free = res.gr_ranks[-1]
        exps = []
        for j in range(1, len(res.gr_ranks)):
            exps.extend([j] * (res.gr_ranks[j - 1] - res.gr_ranks[j]))
        got = sorted(tw.bk.ring.p_valuation(d) for d in res.elementary.torsion_divisors)
        assert got == sorted(exps)
        assert res.elementary.free_rank == pred_free


def test_frobenius_compat_of_connecting_maps_random():
    # connecting_maps raises on any Frobenius-compat failure; run a few towers
    rng = random.Random(41)
    bk2 = TruncatedBK(2, 3, 3)
    a = PresentedModule.cyclic(bk2, bk2.from_int(2))
    ba = make_bk_module(a, Mat(1, 1, [[bk2.one]]), (0, 1))
    mid = PresentedModule.cyclic(bk2, bk2.from_int(4))
    bb = make_bk_module(mid, Mat(1, 1, [[bk2.one]]), (0, 1))
    ses = make_bk_ses(ba, bb, ba, Mat(1, 1, [[bk2.from_int(2)]]), Mat(1, 1, [[bk2.one]]))
    assert len(connecting_maps(ses)) == 3
