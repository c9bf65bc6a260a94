"""Frobenius-semilinear module structures over the truncated W[[z]].

The semilinear structure map is stored as a genuine linear map out of the
Frobenius-twist base change, so that every membership and equivariance
question is an ordinary linear solve.  Height certificates, the canonical
torsion/free decomposition, kernels and cokernels in the p-killed category,
the extension-closure transfer of gr_p certificates, and the low-ramification
structure checker all live here.

Precision: the Frobenius twist collapses z-degrees at and above ceil(M/p);
operations that would read collapsed degrees refuse with PrecisionError
rather than fabricate certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    HypothesisUnmetError,
    InternalInconsistencyError,
    NotElementaryError,
    PrecisionError,
    UnsupportedRingError,
)
from .linalg import Mat, solve_left_mod
from .modules import (
    BaseChangeSpec,
    ModuleMap,
    PresentedModule,
    base_change,
    cokernel,
    compose,
    decompose_elementary,
    identity_map,
    image,
    is_zero_map,
    is_zero_module,
    kernel,
    maps_equal,
    module_map,
    rows_are_zero_classes,
    verify_exact_at,
)
from .rings import TruncatedBK, TruncatedPowerSeries
from .smodules import NotElementary, decompose_over_s, gr_p


def phi_twist(m):
    """The Frobenius-twist base change of a presented module."""
    out, _ = base_change(m, BaseChangeSpec("frobenius_twist"))
    return out


def frob_matrix(mat, ring):
    return Mat(mat.rows, mat.cols,
               [[ring.frobenius(x) for x in row] for row in mat.data])


def max_z_degree(mat, ring):
    worst = -1
    for row in mat.data:
        for x in row:
            v = ring.z_valuation(x)
            if v is None:
                continue
            deg = max(j for j, c in enumerate(x) if not ring.scalar.is_zero(c))
            worst = max(worst, deg)
    return worst


@dataclass
class BKModule:
    module: PresentedModule
    phi: ModuleMap               # phi_twist(module) -> module
    height_window: tuple         # (s, r), s >= 0
    eisenstein: object = None

    @property
    def ring(self):
        return self.module.ring


def make_bk_module(module, phi_matrix, height_window=(0, 1)):
    ring = module.ring
    if not isinstance(ring, TruncatedBK):
        raise UnsupportedRingError("BK modules live over TruncatedBK rings")
    s, r = height_window
    if not (0 <= s <= r):
        raise HypothesisUnmetError("height window needs 0 <= s <= r")
    tw = phi_twist(module)
    phi = module_map(tw, module, phi_matrix)
    return BKModule(module, phi, (s, r), ring.eisenstein)


def _trusted_gate(b):
    """All z-degrees in phi must stay below the Frobenius trusted precision
    for the twisted presentation's certificates to be meaningful."""
    ring = b.ring
    t = ring.frobenius_trusted_precision
    worst = max_z_degree(b.phi.matrix, ring)
    if worst >= t:
        raise PrecisionError(
            f"z-degree {worst} in phi reaches the Frobenius trusted precision {t}")


@dataclass
class HeightCertificate:
    upper: Mat   # E^r . gen_i expressed through Im(phi)
    lower: Mat   # phi rows expressed through E^s . M


@dataclass
class HeightFailure:
    side: str      # "upper" | "lower"
    failures: list


def check_height(b, s, r):
    """Decide E^r M inside Im(phi) inside E^s M by linear solves."""
    if s > r:
        raise HypothesisUnmetError("height window needs s <= r")
    _trusted_gate(b)
    ring = b.ring
    m = b.module
    er = ring.pow(ring.eisenstein_element(), r)
    es = ring.pow(ring.eisenstein_element(), s)
    target = Mat.identity(m.gens, ring).scale(er, ring)
    sol = solve_left_mod(b.phi.matrix, target, m.relations, ring)
    if sol is None:
        return HeightFailure("upper", ["E^r of some generator escapes Im(phi)"])
    upper = sol[0]
    esmat = Mat.identity(m.gens, ring).scale(es, ring)
    sol2 = solve_left_mod(esmat, b.phi.matrix, m.relations, ring)
    if sol2 is None:
        return HeightFailure("lower", ["Im(phi) escapes E^s volume"])
    lower = sol2[0]
    got = upper.mul(b.phi.matrix, ring)
    want = target
    if not rows_are_zero_classes(m, got.sub(want, ring)):
        raise InternalInconsistencyError("height upper certificate fails to verify")
    got2 = lower.mul(esmat, ring)
    if not rows_are_zero_classes(m, got2.sub(b.phi.matrix, ring)):
        raise InternalInconsistencyError("height lower certificate fails to verify")
    return HeightCertificate(upper, lower)


def twist(b, t):
    """Multiply phi by E^t; the height window shifts by +t."""
    if t < 0:
        raise HypothesisUnmetError("use untwist for negative shifts")
    ring = b.ring
    et = ring.pow(ring.eisenstein_element(), t)
    mat = b.phi.matrix.scale(et, ring)
    s, r = b.height_window
    return make_bk_module(b.module, mat, (s + t, r + t))


def untwist(b, t):
    """Divide phi by E^t when every image witness is divisible."""
    ring = b.ring
    et = Mat.identity(b.module.gens, ring).scale(ring.pow(ring.eisenstein_element(), t), ring)
    sol = solve_left_mod(et, b.phi.matrix, b.module.relations, ring)
    if sol is None:
        raise HypothesisUnmetError("phi image witnesses are not divisible by E^t")
    s, r = b.height_window
    return make_bk_module(b.module, sol[0], (max(0, s - t), max(0, r - t)))


# ---------------------------------------------------------------------------
# Canonical decomposition (elementary case)


@dataclass
class CanonicalDecomposition:
    torsion: BKModule
    inclusion: ModuleMap
    free: BKModule
    projection: ModuleMap
    mbar_is_zero: bool


def canonical_decomposition(b):
    """The four-term sequence M_tors -> M -> M_free -> Mbar with Mbar = 0,
    available exactly in the elementary case."""
    ring = b.ring
    dec = decompose_over_s(b.module)
    if isinstance(dec, NotElementary):
        raise NotElementaryError(
            f"canonical decomposition needs an elementary module (gr slice {dec.failing_j})")
    tcount = len(dec.torsion_divisors)
    trows = dec.from_canonical.matrix.take_rows(list(range(tcount)))
    tors_mod = PresentedModule(
        ring, tcount,
        dec.canonical_module.relations.take_rows(list(range(tcount))).take_cols(
            list(range(tcount))))
    incl = module_map(tors_mod, b.module, trows)
    # phi restricts to the torsion part
    comp = frob_matrix(incl.matrix, ring).mul(b.phi.matrix, ring)
    sol = solve_left_mod(incl.matrix, comp, b.module.relations, ring)
    if sol is None:
        raise HypothesisUnmetError("phi fails to restrict to the torsion part at precision")
    phi_t = sol[0]
    tors_bk = make_bk_module(tors_mod, phi_t, b.height_window)
    free_mod, proj = cokernel(incl)
    phi_f = module_map(phi_twist(free_mod), free_mod, b.phi.matrix)
    free_bk = BKModule(free_mod, phi_f, b.height_window, ring.eisenstein)
    if not is_zero_map(compose(incl, proj)):
        raise InternalInconsistencyError("torsion part fails to die in the free quotient")
    return CanonicalDecomposition(tors_bk, incl, free_bk, proj, True)


# ---------------------------------------------------------------------------
# The p-killed category and its kernels/cokernels


def is_killed_by_p(m):
    ring = m.ring
    rows = Mat.identity(m.gens, ring).scale(ring.from_int(ring.p), ring)
    return rows_are_zero_classes(m, rows)


def s1_presentation(m):
    """A p-killed module over T as a module over S1 = F_p[z]/(z^M)."""
    ring = m.ring
    s1 = TruncatedPowerSeries(ring.p, ring.precision_m)
    rows = [[tuple(c % ring.p for c in x) for x in row] for row in m.relations.data]
    return PresentedModule(s1, m.gens, Mat(m.relations.rows, m.gens, rows))


def is_s1_free(m):
    dec = decompose_elementary(s1_presentation(m))
    return not dec.torsion_divisors


def check_mod_s1(b, r):
    """Membership in the category of p-killed, S1-free modules of height <= r."""
    if not is_killed_by_p(b.module):
        return False, "not killed by p"
    if not is_s1_free(b.module):
        return False, "not free over S1"
    cert = check_height(b, 0, r)
    if isinstance(cert, HeightFailure):
        return False, f"height not within [0, {r}] ({cert.side})"
    return True, None


def is_free_module(m):
    """Free over the full truncated ring, decided by the elementary check."""
    dec = decompose_over_s(m)
    if isinstance(dec, NotElementary):
        return False
    return not dec.torsion_divisors


def check_bar_mod_s1(b, r):
    """Mod_S1 membership, or finite free over the whole ring with height <= r."""
    ok, why = check_mod_s1(b, r)
    if ok:
        return True, "mod_s1"
    if is_free_module(b.module):
        cert = check_height(b, 0, r)
        if not isinstance(cert, HeightFailure):
            return True, "free"
    return False, why


@dataclass
class BKMap:
    source: BKModule
    target: BKModule
    map: ModuleMap


def make_bk_map(source, target, matrix):
    f = module_map(source.module, target.module, matrix)
    ring = source.ring
    tw = frob_matrix(matrix, ring)
    lhs = module_map(phi_twist(source.module), target.module,
                     tw.mul(target.phi.matrix, ring), check=False)
    rhs = module_map(phi_twist(source.module), target.module,
                     source.phi.matrix.mul(matrix, ring), check=False)
    if not maps_equal(lhs, rhs):
        raise HypothesisUnmetError("map does not commute with the Frobenius structures")
    return BKMap(source, target, f)


def _induced_phi_on_submodule(b, incl):
    """phi of the ambient restricted along a phi-stable inclusion."""
    ring = b.ring
    comp = frob_matrix(incl.matrix, ring).mul(b.phi.matrix, ring)
    sol = solve_left_mod(incl.matrix, comp, b.module.relations, ring)
    if sol is None:
        raise InternalInconsistencyError("phi fails to restrict along a stable inclusion")
    return sol[0]


def bk_kernel_cokernel(f, r, exploration=None):
    """Kernel and cokernel in the p-killed category with height recertification.

    Under e*r < p-1 failures are theorem-contradicting; otherwise the
    hypothesis violation is flagged and failures are reported, not raised."""
    src, tgt = f.source, f.target
    ring = src.ring
    e = ring.eisenstein.ramification_e
    hypothesis_met = e * r < ring.p - 1
    notes = []
    if not hypothesis_met:
        notes.append(f"exploration mode: e*r = {e * r} >= p-1 = {ring.p - 1}")
    for name, b in (("source", src), ("target", tgt)):
        ok, why = check_mod_s1(b, r)
        if not ok:
            raise HypothesisUnmetError(f"{name} not in the p-killed free category: {why}")
    kmod, kincl = kernel(f.map)
    phi_k = _induced_phi_on_submodule(src, kincl)
    kbk = BKModule(kmod, module_map(phi_twist(kmod), kmod, phi_k), (0, r), ring.eisenstein)
    cmod, cproj = cokernel(f.map)
    phi_c = module_map(phi_twist(cmod), cmod, tgt.phi.matrix)
    cbk = BKModule(cmod, phi_c, (0, r), ring.eisenstein)
    bad = []
    for nm, piece in (("kernel", kbk), ("cokernel", cbk)):
        try:
            cert = check_height(piece, 0, r)
        except PrecisionError:
            if hypothesis_met:
                raise
            notes.append(f"{nm} height recertification is precision-limited")
            continue
        if isinstance(cert, HeightFailure):
            bad.append(nm)
    if bad and hypothesis_met:
        raise InternalInconsistencyError(
            f"height recertification failed for {bad} under e*r < p-1")
    if bad:
        notes.append(f"height recertification failed for {bad} (hypothesis unmet)")
    return kbk, cbk, notes


# ---------------------------------------------------------------------------
# Towers: explicit extension-closure membership certificates


@dataclass
class TowerNode:
    bk: BKModule
    kind: str                    # "mod_s1" | "free" | "extension"
    sub: "TowerNode" = None
    incl: ModuleMap = None
    quot: "TowerNode" = None
    proj: ModuleMap = None

    def depth(self):
        return 1 if self.kind != "extension" else 1 + max(
            self.sub.depth(), self.quot.depth())


def leaf(bk, kind="mod_s1"):
    return TowerNode(bk, kind)


def extension_node(bk, sub, incl, quot, proj):
    return TowerNode(bk, "extension", sub=sub, incl=incl, quot=quot, proj=proj)


def verify_tower(node, r, bar=False, p_killed_only=False):
    """Check every layer's membership and every extension's exactness."""
    if node.kind == "mod_s1":
        ok, why = check_mod_s1(node.bk, r)
        return ok, why
    if node.kind == "free":
        if not bar:
            return False, "free layers only allowed in bar-towers"
        if not is_free_module(node.bk.module):
            return False, "claimed free layer is not free"
        cert = check_height(node.bk, 0, r)
        if isinstance(cert, HeightFailure):
            return False, "free layer height fails"
        return True, None
    ok, why = verify_tower(node.sub, r, bar=bar)
    if not ok:
        return ok, why
    ok, why = verify_tower(node.quot, r, bar=bar)
    if not ok:
        return ok, why
    kmod, kincl = kernel(node.incl)
    if not rows_are_zero_classes(node.sub.bk.module, kincl.matrix):
        return False, "tower inclusion not injective"
    cmod, _ = cokernel(node.proj)
    if not is_zero_module(cmod):
        return False, "tower projection not surjective"
    if not verify_exact_at(node.incl, node.proj):
        return False, "tower stage not exact"
    return True, None


def closure_check(f, n_tower, r):
    """Towers certifying Im(f) and Coker(f) in the extension closure.

    f: BKMap from an object of the p-killed free category into the object
    carried by n_tower; the recursion follows the snake-lemma induction on
    the tower length."""
    ring = f.source.ring
    if n_tower.kind != "extension":
        kbk, cbk, _ = bk_kernel_cokernel(f, r)
        imod, iincl, _ = image(f.map)
        phi_i = module_map(phi_twist(imod), imod, f.source.phi.matrix)
        ibk = BKModule(imod, phi_i, (0, r), ring.eisenstein)
        ok, why = check_mod_s1(ibk, r)
        if not ok:
            raise InternalInconsistencyError(f"image left the category: {why}")
        return leaf(ibk), leaf(cbk), {"image_inclusion": iincl}
    nprime = n_tower.sub
    qnode = n_tower.quot
    g_mat = f.map.matrix.mul(n_tower.proj.matrix, ring)
    g = make_bk_map(f.source, qnode.bk, g_mat)
    kbk, cok_g_bk, _ = bk_kernel_cokernel(g, r)
    kmod, kincl = kernel(g.map)
    phi_k = _induced_phi_on_submodule(f.source, kincl)
    kbk2 = BKModule(kmod, module_map(phi_twist(kmod), kmod, phi_k), (0, r), ring.eisenstein)
    # f restricted to ker(g) lands in N'
    rows = kincl.matrix.mul(f.map.matrix, ring)
    sol = solve_left_mod(n_tower.incl.matrix, rows, n_tower.bk.module.relations, ring)
    if sol is None:
        raise InternalInconsistencyError("kernel image fails to factor through the sub-object")
    fprime = make_bk_map(kbk2, nprime.bk, sol[0])
    im_sub_tower, cok_sub_tower, _ = closure_check(fprime, nprime, r)
    # image of f and cokernel of f with their structure maps
    imod, iincl, _ = image(f.map)
    phi_i = module_map(phi_twist(imod), imod, f.source.phi.matrix)
    ibk = BKModule(imod, phi_i, (0, r), ring.eisenstein)
    cmod, cproj = cokernel(f.map)
    phi_c = module_map(phi_twist(cmod), cmod, n_tower.bk.phi.matrix)
    cbk = BKModule(cmod, phi_c, (0, r), ring.eisenstein)
    # image tower: 0 -> Im(f') -> Im(f) -> Im(g) -> 0
    # Im(f') generators are ker(g) generators pushed through f; inside Im(f)
    # (generated by all source generators) the coordinates are kincl's rows.
    img_sub = im_sub_tower.bk
    sub_incl = module_map(img_sub.module, ibk.module, kincl.matrix)
    im_g_mod, _, _ = image(g.map)
    phi_img = module_map(phi_twist(im_g_mod), im_g_mod, f.source.phi.matrix)
    img_bk = BKModule(im_g_mod, phi_img, (0, r), ring.eisenstein)
    sub_proj = module_map(ibk.module, img_bk.module,
                          Mat.identity(f.source.module.gens, ring))
    im_tower = extension_node(ibk, im_sub_tower, sub_incl, leaf(img_bk), sub_proj)
    # cokernel tower: 0 -> Coker(f') -> Coker(f) -> Coker(g) -> 0
    cok_sub = cok_sub_tower.bk
    c_incl = module_map(cok_sub.module, cbk.module, n_tower.incl.matrix)
    c_proj = module_map(cbk.module, cok_g_bk.module, n_tower.proj.matrix)
    cok_tower = extension_node(cbk, cok_sub_tower, c_incl, leaf(cok_g_bk), c_proj)
    for name, node in (("image", im_tower), ("cokernel", cok_tower)):
        if not verify_exact_at(node.incl, node.proj):
            raise InternalInconsistencyError(f"snake {name} sequence failed exactness")
    return im_tower, cok_tower, {}


# ---------------------------------------------------------------------------
# gr_p certificates across extensions


@dataclass
class BKSes:
    a: BKModule
    b: BKModule
    c: BKModule
    inject: ModuleMap
    surject: ModuleMap


def make_bk_ses(a, b, c, inject_matrix, surject_matrix):
    inj = make_bk_map(a, b, inject_matrix)
    sur = make_bk_map(b, c, surject_matrix)
    kmod, kincl = kernel(inj.map)
    if not rows_are_zero_classes(a.module, kincl.matrix):
        raise HypothesisUnmetError("BK inject has a kernel")
    cmod, _ = cokernel(sur.map)
    if not is_zero_module(cmod):
        raise HypothesisUnmetError("BK surject has a cokernel")
    if not verify_exact_at(inj.map, sur.map):
        raise HypothesisUnmetError("BK sequence not exact in the middle")
    return BKSes(a, b, c, inj.map, sur.map)


def _s1_twist(m_s1):
    """Frobenius twist of an S1-presented module (z |-> z^p on relations)."""
    s1 = m_s1.ring
    rows = [[s1.frobenius(x) for x in row] for row in m_s1.relations.data]
    return PresentedModule(s1, m_s1.gens, Mat(m_s1.relations.rows, m_s1.gens, rows))


def _lift_rows(surject, targets, ring):
    """Rows of the middle lifting the given target rows through a surjection."""
    sol = solve_left_mod(surject.matrix, targets, surject.target.relations, ring)
    if sol is None:
        raise InternalInconsistencyError("lift through a verified surjection failed")
    return sol[0]


def _express_through(incl, rows, ring):
    sol = solve_left_mod(incl.matrix, rows, incl.target.relations, ring)
    if sol is None:
        raise InternalInconsistencyError("element fails to factor through the submodule")
    return sol[0]


def connecting_maps(ses):
    """The maps c_j: Q -> gr_p^j A (lift, multiply by p, project), verified
    Frobenius-compatible at the trusted z-precision."""
    ring = ses.b.ring
    n = ring.precision_n
    p = ring.p
    q = ses.c
    lifts = _lift_rows(ses.surject, Mat.identity(q.module.gens, ring), ring)
    p_lifts = lifts.scale(ring.from_int(p), ring)
    a_rows = _express_through(ses.inject, p_lifts, ring)
    out = []
    q_s1 = s1_presentation(q.module)
    s1 = q_s1.ring
    trusted = ring.frobenius_trusted_precision
    for j in range(n):
        sl = gr_p(ses.a.module, j)
        cj_rows = [[tuple(c % p for c in x) for x in row] for row in a_rows.data]
        cj = module_map(q_s1, sl.module, Mat(len(cj_rows), ses.a.module.gens, cj_rows))
        # Frobenius compatibility: c_j . phi(gr A) = phi(Q) . c_j after twisting
        phi_q_rows = [[tuple(c % p for c in x) for x in row] for row in q.phi.matrix.data]
        phi_a_rows = [[tuple(c % p for c in x) for x in row] for row in ses.a.phi.matrix.data]
        tw_q = _s1_twist(q_s1)
        tw_a = _s1_twist(sl.module)
        phi_q = module_map(tw_q, q_s1, Mat(len(phi_q_rows), q.module.gens, phi_q_rows))
        phi_a = module_map(tw_a, sl.module,
                           Mat(len(phi_a_rows), ses.a.module.gens, phi_a_rows))
        lhs = phi_q.matrix.mul(cj.matrix, s1)
        rhs = frob_s1_matrix(cj.matrix, s1).mul(phi_a.matrix, s1)
        if not _equal_at_z_precision(sl.module, lhs, rhs, trusted):
            raise InternalInconsistencyError(
                f"connecting map c_{j} is not Frobenius-compatible at trusted precision")
        out.append((cj, sl))
    return out


def frob_s1_matrix(mat, s1):
    return Mat(mat.rows, mat.cols, [[s1.frobenius(x) for x in row] for row in mat.data])


def _equal_at_z_precision(target_module, m1, m2, zprec):
    s1 = target_module.ring
    diff = m1.sub(m2, s1)
    zmat = Mat.identity(target_module.gens, s1).scale(s1.uniformizer_power(zprec), s1)
    sol = solve_left_mod(zmat, diff, target_module.relations, s1)
    return sol is not None


def gr_extension_transfer(ses, quotient_kind, sub_gr_towers, r):
    """Certify gr_p^j(middle) in the closure C1, per the two proof sequences.

    sub_gr_towers: per-j TowerNode certificates for gr_p^j(sub) over S1
    (see gr_tower_leaf).  quotient_kind: "mod_s1" (p-killed quotient, uses the
    connecting maps) or "free" (free quotient, uses the p^j-identification).
    Returns the per-j certificates for gr_p^j(middle)."""
    ring = ses.b.ring
    n = ring.precision_n
    p = ring.p
    out = {}
    if quotient_kind == "free":
        qred = s1_presentation_free_reduction(ses.c)
        for j in range(n):
            slb = gr_p(ses.b.module, j)
            sla = gr_p(ses.a.module, j)
            s1 = slb.module.ring
            arows = [[tuple(c % p for c in x) for x in row] for row in ses.inject.matrix.data]
            brows = [[tuple(c % p for c in x) for x in row] for row in ses.surject.matrix.data]
            inc = module_map(sla.module, slb.module,
                             Mat(len(arows), ses.b.module.gens, arows))
            prj = module_map(slb.module, qred,
                             Mat(len(brows), ses.c.module.gens, brows))
            if not verify_exact_at(inc, prj):
                raise InternalInconsistencyError(
                    f"free-quotient gr sequence failed exactness at slice {j}")
            out[j] = {"sequence": (inc, prj), "sub_tower": sub_gr_towers[j],
                      "quot": "free reduction of the quotient"}
        return out
    cjs = connecting_maps(ses)
    q_s1 = s1_presentation(ses.c.module)
    for j in range(n):
        cj, sla = cjs[j]
        q_bk_s1 = _as_s1_bk(ses.c)
        gr_a_bk = _gr_slice_bk(ses.a, j, sla)
        fmap = _make_s1_bk_map(q_bk_s1, gr_a_bk, cj.matrix)
        im_tower, cok_tower, _ = s1_closure_check(fmap, sub_gr_towers[j], r)
        slb = gr_p(ses.b.module, j)
        s1 = slb.module.ring
        if j == 0:
            brows = [[tuple(c % p for c in x) for x in row] for row in ses.surject.matrix.data]
            prj = module_map(slb.module, q_s1, Mat(len(brows), ses.c.module.gens, brows))
            seq_tail = prj
        else:
            # gr_j B -> gr_{j-1} A by p^j b |-> p^{j-1} (p b)
            pb_rows = Mat.identity(ses.b.module.gens, ring).scale(ring.from_int(p), ring)
            arows = _express_through(ses.inject, pb_rows, ring)
            sl_prev = gr_p(ses.a.module, j - 1)
            rows = [[tuple(c % p for c in x) for x in row] for row in arows.data]
            prj = module_map(slb.module, sl_prev.module,
                             Mat(len(rows), ses.a.module.gens, rows))
            seq_tail = prj
        out[j] = {"connecting": cj, "image_tower": im_tower,
                  "cokernel_tower": cok_tower, "tail": seq_tail}
    return out


def s1_presentation_free_reduction(bk):
    return s1_presentation_raw(bk.module)


def s1_presentation_raw(m):
    ring = m.ring
    s1 = TruncatedPowerSeries(ring.p, ring.precision_m)
    rows = [[tuple(c % ring.p for c in x) for x in row] for row in m.relations.data]
    return PresentedModule(s1, m.gens, Mat(m.relations.rows, m.gens, rows))


# S1-level BK-like structures (p-killed objects live over S1 with their own
# Frobenius-twisted structure maps)


@dataclass
class S1Module:
    module: PresentedModule
    phi: ModuleMap


def _as_s1_bk(bk):
    q_s1 = s1_presentation(bk.module)
    s1 = q_s1.ring
    p = s1.p
    rows = [[tuple(c % p for c in x) for x in row] for row in bk.phi.matrix.data]
    phi = module_map(_s1_twist(q_s1), q_s1, Mat(len(rows), bk.module.gens, rows))
    return S1Module(q_s1, phi)


def _gr_slice_bk(bk, j, sl=None):
    ring = bk.ring
    if sl is None:
        sl = gr_p(bk.module, j)
    s1 = sl.module.ring
    rows = [[tuple(c % ring.p for c in x) for x in row] for row in bk.phi.matrix.data]
    phi = module_map(_s1_twist(sl.module), sl.module,
                     Mat(len(rows), bk.module.gens, rows))
    return S1Module(sl.module, phi)


@dataclass
class S1Map:
    source: S1Module
    target: S1Module
    map: ModuleMap


def _make_s1_bk_map(src, tgt, matrix):
    f = module_map(src.module, tgt.module, matrix)
    s1 = src.module.ring
    lhs = src.phi.matrix.mul(matrix, s1)
    rhs = frob_s1_matrix(matrix, s1).mul(tgt.phi.matrix, s1)
    trusted = (s1.mlen + s1.p - 1) // s1.p
    if not _equal_at_z_precision(tgt.module, lhs, rhs, trusted):
        raise HypothesisUnmetError("S1 map fails Frobenius equivariance at trusted precision")
    return S1Map(src, tgt, f)


@dataclass
class S1TowerNode:
    obj: S1Module
    kind: str
    sub: "S1TowerNode" = None
    incl: ModuleMap = None
    quot: "S1TowerNode" = None
    proj: ModuleMap = None


def s1_leaf(obj):
    return S1TowerNode(obj, "mod_s1")


def gr_tower_leaf(bk, j):
    """Leaf certificate for gr_p^j of a module whose slice is S1-free."""
    return s1_leaf(_gr_slice_bk(bk, j))


def s1_closure_check(f, n_tower, r):
    """Extension-closure induction entirely over S1 (p-killed objects)."""
    s1 = f.source.module.ring
    if n_tower.kind != "extension":
        imod, iincl, _ = image(f.map)
        phi_i = module_map(_s1_twist(imod), imod, f.source.phi.matrix)
        cmod, _ = cokernel(f.map)
        phi_c = module_map(_s1_twist(cmod), cmod, n_tower.obj.phi.matrix)
        return s1_leaf(S1Module(imod, phi_i)), s1_leaf(S1Module(cmod, phi_c)), {}
    gmat = f.map.matrix.mul(n_tower.proj.matrix, s1)
    g = _make_s1_bk_map(f.source, n_tower.quot.obj, gmat)
    kmod, kincl = kernel(g.map)
    comp = frob_s1_matrix(kincl.matrix, s1).mul(f.source.phi.matrix, s1)
    sol = solve_left_mod(kincl.matrix, comp, f.source.module.relations, s1)
    if sol is None:
        raise InternalInconsistencyError("S1 kernel is not phi-stable")
    kobj = S1Module(kmod, module_map(_s1_twist(kmod), kmod, sol[0]))
    rows = kincl.matrix.mul(f.map.matrix, s1)
    sol2 = solve_left_mod(n_tower.incl.matrix, rows, n_tower.obj.module.relations, s1)
    if sol2 is None:
        raise InternalInconsistencyError("S1 kernel image fails to factor")
    fprime = _make_s1_bk_map(kobj, n_tower.sub.obj, sol2[0])
    im_sub, cok_sub, _ = s1_closure_check(fprime, n_tower.sub, r)
    imod, iincl, _ = image(f.map)
    phi_i = module_map(_s1_twist(imod), imod, f.source.phi.matrix)
    iobj = S1Module(imod, phi_i)
    cmod, _ = cokernel(f.map)
    phi_c = module_map(_s1_twist(cmod), cmod, n_tower.obj.phi.matrix)
    cobj = S1Module(cmod, phi_c)
    img_g, _, _ = image(g.map)
    phi_img = module_map(_s1_twist(img_g), img_g, f.source.phi.matrix)
    im_node = S1TowerNode(iobj, "extension",
                          sub=im_sub,
                          incl=module_map(im_sub.obj.module, imod, kincl.matrix),
                          quot=s1_leaf(S1Module(img_g, phi_img)),
                          proj=module_map(imod, img_g,
                                          Mat.identity(f.source.module.gens, s1)))
    cok_g, _ = cokernel(g.map)
    phi_cg = module_map(_s1_twist(cok_g), cok_g, n_tower.quot.obj.phi.matrix)
    cok_node = S1TowerNode(cobj, "extension",
                           sub=cok_sub,
                           incl=module_map(cok_sub.obj.module, cmod, n_tower.incl.matrix),
                           quot=s1_leaf(S1Module(cok_g, phi_cg)),
                           proj=module_map(cmod, cok_g, n_tower.proj.matrix))
    for name, node in (("image", im_node), ("cokernel", cok_node)):
        if not verify_exact_at(node.incl, node.proj):
            raise InternalInconsistencyError(f"S1 snake {name} failed exactness")
    return im_node, cok_node, {}


# ---------------------------------------------------------------------------
# Structure checker


@dataclass
class StructureResult:
    elementary: object           # ElementaryDecomposition or None
    counterexample: object       # NotElementary or None
    hypothesis_met: bool
    gr_ranks: list
    notes: list


def structure_check(b, r, tower=None):
    """Run the structure pipeline: certify gr slices (when a tower is given),
    then decompose.  Under e*r < p-1 a decomposition failure is
    theorem-contradicting and raised; otherwise it is reported."""
    ring = b.ring
    e = ring.eisenstein.ramification_e
    hypothesis_met = e * r < ring.p - 1
    notes = []
    if tower is not None:
        ok, why = verify_tower(tower, r, bar=True)
        if not ok:
            raise HypothesisUnmetError(f"supplied tower fails verification: {why}")
        notes.append(f"tower of depth {tower.depth()} verified")
    trace = []
    dec = decompose_over_s(b.module, _trace=trace)
    ranks = [t[2] for t in trace if t[0] == "gr_rank"]
    if isinstance(dec, NotElementary):
        if hypothesis_met and tower is not None:
            raise InternalInconsistencyError(
                "structure theorem predicts an elementary module; decomposition failed")
        notes.append("not elementary" + ("" if hypothesis_met else " (exploration mode)"))
        return StructureResult(None, dec, hypothesis_met, ranks, notes)
    return StructureResult(dec, None, hypothesis_met, ranks, notes)
