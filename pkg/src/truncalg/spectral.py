"""Filtered chain complexes, their spectral sequences, and degeneration
certifiers over the SNF-capable coefficient rings.

Conventions: degrees run over [lo, hi] with differentials d_i: C_i -> C_{i-1};
filtrations are finite decreasing chains of verified submodule inclusions,
weight wmin holding the whole module and weight wmax+1 holding zero.

The three-tier verdicts are computed by their definitions (injectivity,
length bookkeeping on the induced filtration of homology, retraction
existence) and cross-checked against the torsion-length criterion on the
E_1 page whenever rational degeneration holds; any disagreement is raised as
an internal inconsistency, never silently resolved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bruteforce import (
    FiniteModule,
    free_rank_of_multiset,
    quotient_exponent_multiset,
    torsion_length_of_multiset,
)
from .errors import (
    HypothesisUnmetError,
    InternalInconsistencyError,
    SchemaError,
    UnsupportedRingError,
)
from .linalg import Mat, kernel_left_parts, solve_left_mod
from .modules import (
    BaseChangeSpec,
    ModuleMap,
    PresentedModule,
    base_change,
    cokernel,
    compose,
    decompose_elementary,
    identity_map,
    is_zero_map,
    is_zero_module,
    kernel,
    module_map,
    retraction_test,
    rows_are_zero_classes,
    submodule_from_rows,
    subquotient_presentation,
    torsion_divisor_profile,
    torsion_length,
    zero_map,
)
from .rings import LocalizedIntegers, TruncatedPadic, TruncatedPowerSeries, is_snf_capable


@dataclass
class FilteredComplex:
    ring: object
    lo: int
    hi: int
    wmin: int
    wmax: int
    modules: dict          # i -> PresentedModule
    diffs: dict            # i -> ModuleMap C_i -> C_{i-1}, for lo < i <= hi
    fil: dict              # (i, n) -> (PresentedModule, inclusion) for wmin < n <= wmax
    induced_diffs: dict = field(default_factory=dict)   # (i, n) -> ModuleMap on fil
    nestings: dict = field(default_factory=dict)        # (i, n) -> fil^{n+1} -> fil^n

    def module(self, i):
        if self.lo <= i <= self.hi:
            return self.modules[i]
        return PresentedModule.zero(self.ring)

    def fil_pair(self, i, n):
        """(submodule, inclusion into C_i), with weight clamping."""
        mod = self.module(i)
        if n <= self.wmin:
            return mod, identity_map(mod)
        if n > self.wmax or not (self.lo <= i <= self.hi):
            z = PresentedModule.zero(self.ring)
            return z, module_map(z, mod, Mat(0, mod.gens, []), check=False)
        return self.fil[(i, n)]

    def diff(self, i):
        """d_i: C_i -> C_{i-1} (zero map outside the range)."""
        if self.lo < i <= self.hi:
            return self.diffs[i]
        return zero_map(self.module(i), self.module(i - 1))

    def fil_diff(self, i, n):
        if n <= self.wmin:
            return self.diff(i)
        if n > self.wmax or not (self.lo < i <= self.hi):
            return zero_map(self.fil_pair(i, n)[0], self.fil_pair(i - 1, n)[0])
        return self.induced_diffs[(i, n)]

    @property
    def width(self):
        return self.wmax - self.wmin + 1


def validate(ring, lo, hi, wmin, wmax, modules, diff_matrices, fil_data):
    """Certify all filtered-complex invariants or reject naming the failure.

    modules: {i: PresentedModule}; diff_matrices: {i: Mat} for lo < i <= hi;
    fil_data: {(i, n): (PresentedModule, inclusion Mat)} for wmin < n <= wmax.
    """
    if not is_snf_capable(ring):
        raise UnsupportedRingError("filtered complexes need an SNF-capable ring")
    if hi < lo or wmax < wmin:
        raise SchemaError("empty degree or weight range")
    diffs = {}
    for i in range(lo + 1, hi + 1):
        try:
            diffs[i] = module_map(modules[i], modules[i - 1], diff_matrices[i])
        except Exception as exc:
            raise SchemaError(f"differential d_{i} is not well defined: {exc}")
    for i in range(lo + 2, hi + 1):
        if not is_zero_map(compose(diffs[i], diffs[i - 1])):
            raise SchemaError(f"d o d != 0 at degree {i}")
    fil = {}
    for i in range(lo, hi + 1):
        for n in range(wmin + 1, wmax + 1):
            if (i, n) not in fil_data:
                raise SchemaError(f"missing filtration data at degree {i} weight {n}")
            sub, inc_mat = fil_data[(i, n)]
            try:
                incl = module_map(sub, modules[i], inc_mat)
            except Exception as exc:
                raise SchemaError(f"filtration inclusion ({i},{n}) not well defined: {exc}")
            kmod, kincl = kernel(incl)
            if not rows_are_zero_classes(sub, kincl.matrix):
                raise SchemaError(f"filtration map ({i},{n}) is not injective")
            fil[(i, n)] = (sub, incl)
    x = FilteredComplex(ring, lo, hi, wmin, wmax, dict(modules), diffs, fil)
    for i in range(lo, hi + 1):
        for n in range(wmin + 1, wmax + 1):
            subn, incn = x.fil_pair(i, n)
            subn1, incn1 = x.fil_pair(i, n + 1)
            sol = solve_left_mod(incn.matrix, incn1.matrix, modules[i].relations, ring)
            if sol is None:
                raise SchemaError(f"filtration not nested at degree {i} weight {n + 1}")
            x.nestings[(i, n)] = module_map(subn1, subn, sol[0])
    for i in range(lo + 1, hi + 1):
        for n in range(wmin + 1, wmax + 1):
            subn, incn = x.fil_pair(i, n)
            tgt, tinc = x.fil_pair(i - 1, n)
            pushed = incn.matrix.mul(diffs[i].matrix, ring)
            sol = solve_left_mod(tinc.matrix, pushed, modules[i - 1].relations, ring)
            if sol is None:
                raise SchemaError(f"differential violates the filtration at degree {i} weight {n}")
            x.induced_diffs[(i, n)] = module_map(subn, tgt, sol[0])
    return x


# ---------------------------------------------------------------------------
# Homology with induced filtration


@dataclass
class FilteredHomology:
    i: int
    h: PresentedModule
    cycle_rows: Mat                  # generators of H as rows of C_i
    fil_rows_in_h: dict              # n -> Mat of H-coordinates of im(H(fil^n))
    fil_modules: dict                # n -> PresentedModule (image submodule of H)
    fil_inclusions: dict             # n -> ModuleMap into h
    gr_modules: dict                 # n -> PresentedModule
    degenerate_at: dict              # n -> bool (H(fil^n) -> H injective)
    sub_h_maps: dict = field(default_factory=dict)   # n -> ModuleMap H(fil^n) -> H


def _cycles(x, i):
    """Rows of C_i generating ker(d_i)."""
    d = x.diff(i)
    if d.target.gens == 0:
        return Mat.identity(x.module(i).gens, x.ring) if x.module(i).gens else Mat(0, 0, [])
    parts = kernel_left_parts([d.matrix, d.target.relations], x.ring)
    return parts[0]


def _boundaries(x, i):
    """Rows of C_i spanning im(d_{i+1})."""
    d = x.diff(i + 1)
    return d.matrix


def homology_filtered(x, i):
    """H_i with the induced filtration F^n H_i = im(H_i(fil^n) -> H_i)."""
    ring = x.ring
    ci = x.module(i)
    zrows = _cycles(x, i)
    brows = _boundaries(x, i)
    h = subquotient_presentation(ci, zrows, brows)
    fil_rows = {}
    fil_modules = {}
    fil_incls = {}
    degenerate_at = {}
    sub_h_maps = {}
    for n in range(x.wmin, x.wmax + 2):
        subn, incn = x.fil_pair(i, n)
        dsub = x.fil_diff(i, n)
        if dsub.target.gens == 0:
            zn = Mat.identity(subn.gens, ring) if subn.gens else Mat(0, 0, [])
        else:
            zn = kernel_left_parts([dsub.matrix, dsub.target.relations], ring)[0]
        sub_h = subquotient_presentation(subn, zn, x.fil_diff(i + 1, n).matrix)
        # rows of H-coordinates for the image of H_i(fil^n)
        amb_rows = zn.mul(incn.matrix, ring) if zn.rows else Mat(0, ci.gens, [])
        coords = _express_in_h(h, zrows, brows, ci, amb_rows)
        fil_rows[n] = coords
        fmod, fincl = submodule_from_rows(h, coords)
        fil_modules[n] = fmod
        fil_incls[n] = fincl
        # injectivity of H_i(fil^n) -> H_i as the induced map from sub_h
        indmap = module_map(sub_h, h, coords)
        sub_h_maps[n] = indmap
        kmod, kincl = kernel(indmap)
        degenerate_at[n] = rows_are_zero_classes(sub_h, kincl.matrix)
    gr = {}
    for n in range(x.wmin, x.wmax + 1):
        gr[n] = subquotient_presentation(h, fil_rows[n], fil_rows[n + 1])
    return FilteredHomology(i, h, zrows, fil_rows, fil_modules, fil_incls, gr,
                            degenerate_at, sub_h_maps)


def _express_in_h(h, zrows, brows, ci, amb_rows):
    """Coordinates of cycle rows of C_i in the homology presentation."""
    ring = ci.ring
    if amb_rows.rows == 0 or h.gens == 0:
        return Mat(amb_rows.rows, h.gens, [[ring.zero] * h.gens for _ in range(amb_rows.rows)])
    sol = solve_left_mod(zrows, amb_rows, brows.vstack(ci.relations), ring)
    if sol is None:
        raise InternalInconsistencyError("cycle rows failed to express in homology")
    return sol[0]


# ---------------------------------------------------------------------------
# Spectral pages


@dataclass
class PageEntry:
    n: int
    i: int
    module: PresentedModule
    rep_rows: Mat        # generator representatives as rows of C_i
    killer_rows: Mat


@dataclass
class SpectralPage:
    r: int
    entries: dict        # (n, i) -> PageEntry
    diffs: dict          # (n, i) -> ModuleMap entry(n,i) -> entry(n+r, i-1)


def _approx_cycles(x, n, i, r):
    """Rows of C_i spanning Z_r^{n,i} = fil^n intersect d^{-1}(fil^{n+r})."""
    ring = x.ring
    subn, incn = x.fil_pair(i, n)
    if subn.gens == 0:
        return Mat(0, x.module(i).gens, [])
    if r <= 0:
        return incn.matrix
    d = x.diff(i)
    tgt_sub, tgt_inc = x.fil_pair(i - 1, n + r)
    if d.target.gens == 0:
        return incn.matrix
    pushed = incn.matrix.mul(d.matrix, ring)
    parts = kernel_left_parts(
        [pushed, tgt_inc.matrix, d.target.relations], ring)
    arows = parts[0]
    zr = arows.mul(incn.matrix, ring) if arows.rows else Mat(0, x.module(i).gens, [])
    return zr


def page(x, r):
    """The r-th page by the classical approximate-cycle construction."""
    if r < 1:
        raise SchemaError("page index must be >= 1")
    ring = x.ring
    entries = {}
    for n in range(x.wmin, x.wmax + 1):
        for i in range(x.lo, x.hi + 1):
            zr = _approx_cycles(x, n, i, r)
            zprev_up = _approx_cycles(x, n + 1, i, r - 1)
            zprev_src = _approx_cycles(x, n - r + 1, i + 1, r - 1)
            d_src = x.diff(i + 1)
            drows = zprev_src.mul(d_src.matrix, ring) if zprev_src.rows else \
                Mat(0, x.module(i).gens, [])
            killers = zprev_up.vstack(drows)
            mod = subquotient_presentation(x.module(i), zr, killers)
            entries[(n, i)] = PageEntry(n, i, mod, zr, killers)
    diffs = {}
    for (n, i), ent in entries.items():
        tgt = entries.get((n + r, i - 1))
        if tgt is None:
            continue
        d = x.diff(i)
        ring_ = ring
        if ent.module.gens == 0 or tgt.module.gens == 0:
            diffs[(n, i)] = zero_map(ent.module, tgt.module)
            continue
        pushed = ent.rep_rows.mul(d.matrix, ring_)
        sol = solve_left_mod(tgt.rep_rows, pushed,
                             tgt.killer_rows.vstack(x.module(i - 1).relations), ring_)
        if sol is None:
            raise InternalInconsistencyError(f"d_{r} image escapes the target entry at {(n, i)}")
        diffs[(n, i)] = module_map(ent.module, tgt.module, sol[0])
    pg = SpectralPage(r, entries, diffs)
    for (n, i), dmap in diffs.items():
        nxt = diffs.get((n + r, i - 1))
        if nxt is not None and not is_zero_map(compose(dmap, nxt)):
            raise InternalInconsistencyError(f"d_{r} o d_{r} != 0 at {(n, i)}")
    return pg


# ---------------------------------------------------------------------------
# Degeneration report


@dataclass
class DegenerationReport:
    rationally_degenerate: bool
    degenerate: bool
    saturated: bool
    split: bool
    sscrit_applicable: bool
    precision_limited: bool
    length_ledger: dict          # i -> (len H_tors, [per-weight E1 torsion lengths])
    h_torsion_profiles: dict     # i -> exponent multiset of H_i torsion
    e1_torsion_profiles: dict    # i -> combined multiset over weights
    witnesses: dict
    notes: list


def _entry_val_ge_one(x, ent, dmap):
    """im(d_r) inside uniformizer * target entry (canonical membership)."""
    ring = x.ring
    if isinstance(ring, LocalizedIntegers):
        return True  # untruncated domain: the free-hull condition is exact
    tgt = dmap.target
    if tgt.gens == 0 or dmap.matrix.rows == 0:
        return True
    u = ring.uniformizer_power(1)
    umat = Mat.identity(tgt.gens, ring).scale(u, ring)
    sol = solve_left_mod(umat, dmap.matrix, tgt.relations, ring)
    return sol is not None


def _free_block_vanishes(dmap):
    """free_rank(coker d) == free_rank(target): the exact d (x) K = 0 test."""
    cmod, _ = cokernel(dmap)
    return (decompose_elementary(cmod).free_rank
            == decompose_elementary(dmap.target).free_rank)


def degeneration_report(x, include_pages=True):
    ring = x.ring
    if not is_snf_capable(ring):
        raise UnsupportedRingError("degeneration_report needs an SNF-capable ring")
    notes = []
    witnesses = {"sections": {}, "obstructions": {}, "injectivity": {},
                 "divisor_mismatch": None}

    pages = []
    rationally = True
    any_nonzero_d = False
    max_r = max(1, x.width)
    for r in range(1, max_r + 1):
        pg = page(x, r)
        pages.append(pg)
        for key, dmap in pg.diffs.items():
            if not is_zero_map(dmap):
                any_nonzero_d = True
                if not _entry_val_ge_one(x, pg.entries[key], dmap):
                    rationally = False
                elif not _free_block_vanishes(dmap):
                    rationally = False
            elif not _free_block_vanishes(dmap):
                rationally = False

    homologies = {i: homology_filtered(x, i) for i in range(x.lo, x.hi + 1)}

    degenerate = True
    for i, hdata in homologies.items():
        for n, ok in hdata.degenerate_at.items():
            witnesses["injectivity"][(i, n)] = ok
            if not ok:
                degenerate = False

    # direct saturation: length bookkeeping on the induced filtration of H_i
    saturated_direct = degenerate
    for i, hdata in homologies.items():
        if not degenerate:
            break
        lt = torsion_length(hdata.h)
        gr_sum = sum(torsion_length(hdata.gr_modules[n])
                     for n in range(x.wmin, x.wmax + 1))
        if lt != gr_sum:
            saturated_direct = False

    # direct splitness: retractions for every inclusion im(H(fil^n)) into H_i
    split_direct = degenerate
    if degenerate:
        for i, hdata in homologies.items():
            for n in range(x.wmin + 1, x.wmax + 1):
                verdict = retraction_test(hdata.fil_inclusions[n])
                if verdict.split:
                    witnesses["sections"][(i, n)] = verdict.section.matrix.tolist()
                else:
                    witnesses["obstructions"][(i, n)] = verdict.obstruction
                    split_direct = False

    e1 = pages[0]
    ledger = {}
    h_prof = {}
    e1_prof = {}
    for i in range(x.lo, x.hi + 1):
        per_weight = [torsion_length(e1.entries[(n, i)].module)
                      for n in range(x.wmin, x.wmax + 1)]
        ledger[i] = (torsion_length(homologies[i].h), per_weight)
        h_prof[i] = torsion_divisor_profile(homologies[i].h)
        combined = []
        for n in range(x.wmin, x.wmax + 1):
            combined.extend(torsion_divisor_profile(e1.entries[(n, i)].module))
        e1_prof[i] = tuple(sorted(combined))

    sscrit_applicable = rationally
    if sscrit_applicable:
        ledger_balanced = all(lt == sum(per) for lt, per in ledger.values())
        if ledger_balanced != saturated_direct:
            raise InternalInconsistencyError(
                "torsion-length criterion disagrees with direct saturation checks")
        multisets_equal = all(h_prof[i] == e1_prof[i] for i in h_prof)
        if multisets_equal != split_direct:
            raise InternalInconsistencyError(
                "divisor-multiset criterion disagrees with explicit retraction search")
        if not multisets_equal:
            witnesses["divisor_mismatch"] = {
                i: {"homology": list(h_prof[i]), "graded": list(e1_prof[i])}
                for i in h_prof if h_prof[i] != e1_prof[i]}
    else:
        notes.append("rational degeneration fails; the torsion-length criterion "
                     "is reported unmet rather than evaluated")

    if split_direct and not saturated_direct:
        raise InternalInconsistencyError("split verdict without saturated verdict")
    if saturated_direct and not degenerate:
        raise InternalInconsistencyError("saturated verdict without degenerate verdict")

    precision_limited = False
    if not isinstance(ring, LocalizedIntegers) and any_nonzero_d:
        frees = [decompose_elementary(homologies[i].h).free_rank for i in homologies]
        frees += [decompose_elementary(e1.entries[(n, i)].module).free_rank
                  for n in range(x.wmin, x.wmax + 1) for i in range(x.lo, x.hi + 1)]
        precision_limited = any(f > 0 for f in frees)
        if precision_limited:
            notes.append("free-at-truncation factors coexist with nonzero differentials; "
                         "verdicts hold at the working precision")

    return DegenerationReport(
        rationally_degenerate=rationally,
        degenerate=degenerate,
        saturated=saturated_direct,
        split=split_direct,
        sscrit_applicable=sscrit_applicable,
        precision_limited=precision_limited,
        length_ledger=ledger,
        h_torsion_profiles=h_prof,
        e1_torsion_profiles=e1_prof,
        witnesses=witnesses,
        notes=notes,
    )


def lenfil_check(x, n, report=None):
    """Reduction-length inequality per degree, under the saturated hypothesis."""
    if n <= 0:
        raise SchemaError("reduction exponent must be positive")
    if report is None:
        report = degeneration_report(x)
    if not report.saturated:
        raise HypothesisUnmetError("lenfil needs the saturated verdict established")
    ring = x.ring
    e1 = page(x, 1)
    out = {}
    for i in range(x.lo, x.hi + 1):
        h = homology_filtered(x, i).h
        lhs = _reduction_length(h, n)
        rhs = sum(_reduction_length(e1.entries[(w, i)].module, n)
                  for w in range(x.wmin, x.wmax + 1))
        if lhs > rhs:
            raise InternalInconsistencyError(
                f"reduction-length inequality fails at degree {i}: {lhs} > {rhs}")
        out[i] = (lhs, rhs)
    return out


def _reduction_length(m, n):
    """len(M / u^n M) = sum min(val d, n) + free_rank * n."""
    dec = decompose_elementary(m)
    ring = m.ring
    if isinstance(ring, LocalizedIntegers):
        raise UnsupportedRingError("reduction lengths need a single uniformizer")
    total = dec.free_rank * n
    for d in dec.torsion_divisors:
        total += min(ring.val(d), n)
    return total


# ---------------------------------------------------------------------------
# Base change at the homology level, with degeneration descent
#
# The tensored notions live on homotopy/homology groups, not on the complex:
# a filtration inclusion can lose injectivity at the truncated completion
# (multiplication by ell on the Z/ell^N model) even when the true completed
# inclusion is fine, so the complex is never re-validated over the target.


def _ell_val(n, ell):
    v = 0
    n = abs(int(n))
    while n and n % ell == 0:
        n //= ell
        v += 1
    return v


def _tensored_kernel_vanishes(f, ell):
    """ker(f (x) Z_ell) = 0, decided exactly: flatness gives
    ker(f) (x) Z_ell, which vanishes iff ker(f) is prime-to-ell torsion."""
    kmod, _ = kernel(f)
    dec = decompose_elementary(kmod)
    if dec.free_rank:
        return False
    return all(_ell_val(d.numerator, ell) == 0 for d in dec.torsion_divisors)


def _retraction_solves_at(f, ell):
    """Does the retraction system solve over Z_ell? Decided from the exact
    diagonalization over the integer base: per-diagonal ell-divisibility."""
    verdict = retraction_test(f)
    if verdict.split:
        return True
    for _, _, d, c in verdict.obstruction or []:
        from fractions import Fraction

        d, c = Fraction(d), Fraction(c)
        if d == 0:
            if c != 0:
                return False
            continue
        if c == 0:
            continue
        if _ell_val(c.numerator, ell) < _ell_val(d.numerator, ell):
            return False
    return True


def _ell_profile(m, ell):
    """Torsion exponents at ell of the tensored module, exactly."""
    dec = decompose_elementary(m)
    out = [_ell_val(d.numerator, ell) for d in dec.torsion_divisors]
    return tuple(sorted(v for v in out if v > 0))


def _entry_injects_into_completion(m, ell):
    """M -> M (x) Z_ell is injective iff the torsion is pure ell-power."""
    from sympy import factorint

    dec = decompose_elementary(m)
    for d in dec.torsion_divisors:
        n = abs(int(d.numerator))
        if set(factorint(n)) - {ell}:
            return False, f"torsion divisor {n} has primes other than {ell}"
    return True, None


@dataclass
class TensoredReport:
    degenerate: bool            # every H_i(fil^n) (x) A -> H_i (x) A injective
    split: bool                 # every such map split injective over A
    per_entry: dict             # (i, n) -> {"injective": bool, "split": bool}
    h_profiles: dict            # i -> ell-torsion profile of H_i (x) Z_ell
    e1_profiles: dict           # i -> combined tensored E1 torsion profile
    sscritflat_checked: bool
    notes: list


def base_change_report(x, spec):
    """Verdicts for X tensored along the spec, plus the descent conclusion.

    The completion case is decided exactly over the localized integers:
    flatness of Z[1/S] -> Z_ell turns injectivity into a kernel-divisor
    condition and splitness into ell-adic divisibility of the diagonalized
    retraction system, so no truncated surrogate is involved."""
    if spec.kind == "identity":
        rep = degeneration_report(x)
        return rep, {"applied": True, "reason": "identity base change"}
    if spec.kind != "localized_completion":
        raise UnsupportedRingError(
            "base_change_report supports identity and localized completions")
    if not isinstance(x.ring, LocalizedIntegers):
        raise UnsupportedRingError("completion descent starts over LocalizedIntegers")
    ell = spec.ell
    notes = []
    homologies = {i: homology_filtered(x, i) for i in range(x.lo, x.hi + 1)}
    e1 = page(x, 1)
    per_entry = {}
    degenerate = True
    split = True
    for i, hdata in homologies.items():
        for n in range(x.wmin + 1, x.wmax + 1):
            f = hdata.sub_h_maps[n]
            inj = _tensored_kernel_vanishes(f, ell)
            sp = inj and _retraction_solves_at(f, ell)
            per_entry[(i, n)] = {"injective": inj, "split": sp}
            degenerate = degenerate and inj
            split = split and sp
    h_prof = {}
    e1_prof = {}
    for i in range(x.lo, x.hi + 1):
        h_prof[i] = _ell_profile(homologies[i].h, ell)
        combined = []
        for n in range(x.wmin, x.wmax + 1):
            combined.extend(_ell_profile(e1.entries[(n, i)].module, ell))
        e1_prof[i] = tuple(sorted(combined))
    rep_r = degeneration_report(x)
    checked = False
    if rep_r.rationally_degenerate:
        multisets_equal = all(h_prof[i] == e1_prof[i] for i in h_prof)
        if multisets_equal != split:
            raise InternalInconsistencyError(
                "tensored divisor-multiset criterion disagrees with split solves")
        checked = True
    tensored = TensoredReport(degenerate, split, per_entry, h_prof, e1_prof,
                              checked, notes)
    # Lemma degdetect: certified E1 injectivity + tensored degeneration
    for (n, i), ent in e1.entries.items():
        ok, why = _entry_injects_into_completion(ent.module, ell)
        if not ok:
            raise HypothesisUnmetError(
                f"E1 entry at weight {n} degree {i} fails injectivity: {why}")
    if tensored.degenerate:
        if not rep_r.degenerate:
            raise InternalInconsistencyError(
                "descent asserts degeneration but the direct check fails")
        descent = {"applied": True, "original_degenerate": True, "re_verified": True}
    else:
        descent = {"applied": True, "original_degenerate": None,
                   "reason": "not degenerate after tensoring"}
    return tensored, descent


# ---------------------------------------------------------------------------
# Exhaustive element-level oracle


def oracle(x, cancel=None):
    """Recompute the three verdict tiers (and the rational-degeneration
    surrogate) by exhaustive element enumeration. Ground truth in tests."""
    ring = x.ring
    if not isinstance(ring, (TruncatedPadic, TruncatedPowerSeries)):
        raise UnsupportedRingError("oracle needs a finite chain ring")
    fms = {i: FiniteModule(x.module(i), cancel=cancel) for i in range(x.lo, x.hi + 1)}
    prec = ring.precision

    def fm(i):
        if x.lo <= i <= x.hi:
            return fms[i]
        return None

    def fil_set(i, n):
        f = fm(i)
        if f is None:
            return set()
        sub, incl = x.fil_pair(i, n)
        if sub.gens == 0:
            return {f.zero}
        rows = [f.rep(tuple(r)) for r in incl.matrix.data]
        return f.subgroup(rows)

    def d_image(i, elems):
        """d_i applied pointwise; empty target -> zeros dropped."""
        f = fm(i)
        tgt = fm(i - 1)
        if tgt is None:
            return set()
        d = x.diff(i)
        return {f.apply_matrix(e, d.matrix, tgt) for e in elems}

    def d_of(i, e):
        tgt = fm(i - 1)
        if tgt is None:
            return None
        return fm(i).apply_matrix(e, x.diff(i).matrix, tgt)

    ker = {}
    bnd = {}
    for i in range(x.lo, x.hi + 1):
        f = fms[i]
        if fm(i - 1) is None:
            ker[i] = set(f.elements)
        else:
            ker[i] = {e for e in f.elements if d_of(i, e) == fms[i - 1].zero}
        if fm(i + 1) is None:
            bnd[i] = {f.zero}
        else:
            bnd[i] = fms[i].subgroup(d_image(i + 1, fms[i + 1].elements))

    degenerate = True
    for i in range(x.lo, x.hi + 1):
        f = fms[i]
        for n in range(x.wmin + 1, x.wmax + 1):
            fs = fil_set(i, n)
            zn = {e for e in fs if (fm(i - 1) is None or d_of(i, e) == fms[i - 1].zero)}
            fil_up = fil_set(i + 1, n)
            dsub = f.subgroup(d_image(i + 1, fil_up)) if fm(i + 1) else {f.zero}
            for e in zn:
                if e in bnd[i] and e not in dsub:
                    degenerate = False

    saturated = degenerate
    if degenerate:
        for i in range(x.lo, x.hi + 1):
            f = fms[i]
            h_mult = quotient_exponent_multiset(f, ker[i], bnd[i])
            lt = torsion_length_of_multiset(h_mult, prec)
            gr_sum = 0
            for n in range(x.wmin, x.wmax + 1):
                a_n = f.subgroup(
                    {e for e in fil_set(i, n)
                     if (fm(i - 1) is None or d_of(i, e) == fms[i - 1].zero)} | bnd[i])
                a_n1 = f.subgroup(
                    {e for e in fil_set(i, n + 1)
                     if (fm(i - 1) is None or d_of(i, e) == fms[i - 1].zero)} | bnd[i])
                mult = quotient_exponent_multiset(f, a_n, a_n1)
                gr_sum += torsion_length_of_multiset(mult, prec)
            if lt != gr_sum:
                saturated = False

    split = degenerate
    if degenerate:
        for i in range(x.lo, x.hi + 1):
            if not split:
                break
            f = fms[i]
            submods = _all_submodules_of_quotient(f, ker[i], bnd[i])
            hsize = len(f.subgroup(ker[i])) // len(f.subgroup(bnd[i]))
            for n in range(x.wmin + 1, x.wmax + 1):
                a_set = f.subgroup(
                    {e for e in fil_set(i, n)
                     if (fm(i - 1) is None or d_of(i, e) == fms[i - 1].zero)} | bnd[i])
                asize = len(a_set) // len(f.subgroup(bnd[i]))
                found = False
                for b_set in submods:
                    inter = a_set & b_set
                    if len(inter) == len(f.subgroup(bnd[i])):
                        ssum = f.subgroup(a_set | b_set)
                        if len(ssum) // len(f.subgroup(bnd[i])) == hsize and \
                                (len(b_set) // len(f.subgroup(bnd[i]))) * asize == hsize:
                            found = True
                            break
                if not found:
                    split = False
                    break

    # rational degeneration surrogate at element level
    rationally = True
    u = ring.uniformizer_power(1)
    for r in range(1, max(1, x.width) + 1):
        for n in range(x.wmin, x.wmax + 1):
            for i in range(x.lo, x.hi + 1):
                f = fms[i]
                ftgt = fm(i - 1)
                zr = _oracle_zr(x, fms, fil_set, d_of, n, i, r)
                if ftgt is None:
                    continue
                ztgt = _oracle_zr(x, fms, fil_set, d_of, n + r, i - 1, r)
                btgt = _oracle_boundary(x, fms, fil_set, d_of, n + r, i - 1, r)
                img = {d_of(i, e) for e in zr}
                if all(e in btgt for e in img):
                    continue
                scaled = ftgt.subgroup({ftgt.scale(u, e) for e in ztgt} | btgt)
                if not all(e in scaled for e in img):
                    rationally = False
                    continue
                tgt_mult = quotient_exponent_multiset(ftgt, ztgt, btgt)
                cok_mult = quotient_exponent_multiset(
                    ftgt, ztgt, ftgt.subgroup(set(img) | btgt))
                if free_rank_of_multiset(cok_mult, prec) != free_rank_of_multiset(tgt_mult, prec):
                    rationally = False

    return {"rationally_degenerate": rationally, "degenerate": degenerate,
            "saturated": saturated, "split": split}


def _oracle_zr(x, fms, fil_set, d_of, n, i, r):
    if not (x.lo <= i <= x.hi):
        return set()
    fs = fil_set(i, n)
    if not (x.lo <= i - 1 <= x.hi):
        return fs
    tgt_sub = fms[i - 1].subgroup(fil_set(i - 1, n + r))
    return {e for e in fs if d_of(i, e) in tgt_sub}


def _oracle_boundary(x, fms, fil_set, d_of, n, i, r):
    """Z_{r-1}(n+1, i) + d(Z_{r-1}(n-r+1, i+1)) as a subgroup."""
    f = fms[i]
    z_up = _oracle_zr(x, fms, fil_set, d_of, n + 1, i, r - 1) if r >= 1 else set()
    seeds = set(z_up) | {f.zero}
    if x.lo <= i + 1 <= x.hi:
        z_src = _oracle_zr(x, fms, fil_set, d_of, n - r + 1, i + 1, r - 1)
        seeds |= {d_of(i + 1, e) for e in z_src}
    return f.subgroup(seeds)


def _all_submodules_of_quotient(f, big, small):
    """All submodules of big/small, represented as saturated subsets of big."""
    base = f.subgroup(small)
    subs = {frozenset(base)}
    frontier = [frozenset(base)]
    big_set = f.subgroup(big)
    while frontier:
        nxt = []
        for s in frontier:
            for e in big_set:
                if e in s:
                    continue
                grown = frozenset(f.subgroup(set(s) | {e}))
                if grown not in subs:
                    subs.add(grown)
                    nxt.append(grown)
        frontier = nxt
    return [set(s) for s in subs]
