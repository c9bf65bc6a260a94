"""Finitely presented modules and morphisms over the coefficient rings.

A PresentedModule is R^g modulo the row span of a relation matrix; module
maps act on generators from the right (x |-> x . matrix) and carry a
certificate matrix expressing the image of every source relation as a
combination of target relations, so well-definedness is checked rather than
assumed.

Over TruncatedBK and TruncatedLambda all solving happens by restriction of
scalars to the base chain ring (see linalg); the extra variable's action is
carried by the coefficient-vector representation itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from sympy import factorint, primerange

from .errors import (
    HypothesisUnmetError,
    InternalInconsistencyError,
    NotWellDefinedError,
    PrecisionError,
    SchemaError,
    UnsupportedRingError,
)
from .linalg import Mat, kernel_left, kernel_left_parts, solve_left, solve_left_info, solve_left_mod
from .rings import (
    LocalizedIntegers,
    TruncatedBK,
    TruncatedLambda,
    TruncatedPadic,
    TruncatedPowerSeries,
    default_eisenstein,
    is_snf_capable,
)
from . import linalg


@dataclass(frozen=True)
class PresentedModule:
    ring: object
    gens: int
    relations: Mat

    def __post_init__(self):
        assert self.relations.cols == self.gens

    @staticmethod
    def free(ring, n):
        return PresentedModule(ring, n, Mat(0, n, []))

    @staticmethod
    def zero(ring):
        return PresentedModule.free(ring, 0)

    @staticmethod
    def from_relation_rows(ring, gens, rows):
        return PresentedModule(ring, gens, Mat(len(rows), gens, rows))

    @staticmethod
    def cyclic(ring, divisor):
        return PresentedModule(ring, 1, Mat(1, 1, [[divisor]]))


def direct_sum(mods):
    ring = mods[0].ring
    gens = sum(m.gens for m in mods)
    rows = []
    at = 0
    for m in mods:
        for r in m.relations.data:
            rows.append([ring.zero] * at + list(r) + [ring.zero] * (gens - at - m.gens))
        at += m.gens
    return PresentedModule(ring, gens, Mat(len(rows), gens, rows))


def module_from_divisors(ring, torsion_divisors, free_rank):
    """Canonical elementary module: sum of R/(d) plus a free part."""
    mods = [PresentedModule.cyclic(ring, d) for d in torsion_divisors]
    mods.append(PresentedModule.free(ring, free_rank))
    return direct_sum(mods)


def is_zero_module(m):
    if m.gens == 0:
        return True
    return solve_left(m.relations, Mat.identity(m.gens, m.ring), m.ring) is not None


def rows_are_zero_classes(m, rows):
    """Do the given rows of R^gens all lie in the relation span?"""
    if rows.rows == 0:
        return True
    return solve_left(m.relations, rows, m.ring) is not None


@dataclass(frozen=True)
class ModuleMap:
    source: PresentedModule
    target: PresentedModule
    matrix: Mat
    certificate: Mat = field(compare=False, default=None)

    def __post_init__(self):
        assert self.matrix.rows == self.source.gens
        assert self.matrix.cols == self.target.gens


def module_map(source, target, matrix, check=True):
    """Build a verified ModuleMap; raises NotWellDefined if relations break."""
    if source.ring is not target.ring and source.ring != target.ring:
        raise SchemaError("module map endpoints live over different rings")
    cert = None
    if check:
        pushed = source.relations.mul(matrix, source.ring)
        cert = solve_left(target.relations, pushed, source.ring)
        if cert is None:
            raise NotWellDefinedError(
                "matrix does not send source relations into target relations")
    return ModuleMap(source, target, matrix, cert)


def identity_map(m):
    return ModuleMap(m, m, Mat.identity(m.gens, m.ring), None)


def zero_map(source, target):
    return ModuleMap(source, target, Mat.zero(source.gens, target.gens, source.ring), None)


def compose(f, g):
    assert f.target.gens == g.source.gens
    return module_map(f.source, g.target, f.matrix.mul(g.matrix, f.source.ring), check=False)


def maps_equal(f, g):
    """Equality as maps: difference lands in the target relation span."""
    if f.source.gens != g.source.gens or f.target.gens != g.target.gens:
        return False
    diff = f.matrix.sub(g.matrix, f.source.ring)
    return rows_are_zero_classes(f.target, diff)


def is_zero_map(f):
    return rows_are_zero_classes(f.target, f.matrix)


def prune_spanning_rows(rows, extra, ring):
    """Drop rows lying in the span of the previously kept rows plus extra."""
    kept = []
    for r in rows.data:
        if all(ring.is_zero(v) for v in r):
            continue
        rm = Mat(1, rows.cols, [list(r)])
        base_rows = kept + [list(e) for e in extra.data]
        if base_rows:
            base = Mat(len(base_rows), rows.cols, base_rows)
            if solve_left(base, rm, ring) is not None:
                continue
        kept.append(list(r))
    return Mat(len(kept), rows.cols, kept)


def kernel(f):
    """(kernel module, inclusion into source). Redundant generators pruned."""
    ring = f.source.ring
    parts = kernel_left_parts([f.matrix, f.target.relations], ring)
    krows = prune_spanning_rows(parts[0], f.source.relations, ring)
    relparts = kernel_left_parts([krows, f.source.relations], ring) if krows.rows else [Mat(0, 0, [])]
    kmod = PresentedModule(ring, krows.rows, relparts[0])
    incl = module_map(kmod, f.source, krows, check=False)
    return kmod, incl


def image(f):
    """(image module, inclusion into target, projection from source)."""
    ring = f.source.ring
    relrows = kernel_left_parts([f.matrix, f.target.relations], ring)[0]
    imod = PresentedModule(ring, f.source.gens, relrows)
    incl = module_map(imod, f.target, f.matrix, check=False)
    proj = module_map(f.source, imod, Mat.identity(f.source.gens, ring), check=False)
    return imod, incl, proj


def cokernel(f):
    """(cokernel module, projection from target)."""
    ring = f.source.ring
    cmod = PresentedModule(ring, f.target.gens, f.matrix.vstack(f.target.relations))
    proj = module_map(f.target, cmod, Mat.identity(f.target.gens, ring), check=False)
    return cmod, proj


@dataclass
class Subquotient:
    kernel: PresentedModule
    kernel_inclusion: ModuleMap
    image: PresentedModule
    image_inclusion: ModuleMap
    image_projection: ModuleMap
    cokernel: PresentedModule
    cokernel_projection: ModuleMap


def verify_exact_at(incl, proj):
    """im(incl) == ker(proj) inside the shared middle module."""
    if not is_zero_map(compose(incl, proj)):
        return False
    kmod, kincl = kernel(proj)
    if kincl.matrix.rows == 0:
        return True
    sol = solve_left_mod(incl.matrix, kincl.matrix, incl.target.relations, incl.source.ring)
    return sol is not None


def subquotient(f):
    """Kernel, image, cokernel with structure maps; exactness is verified."""
    kmod, kincl = kernel(f)
    imod, iincl, iproj = image(f)
    cmod, cproj = cokernel(f)
    if not is_zero_map(compose(kincl, f)):
        raise InternalInconsistencyError("kernel fails to die under the map")
    if not is_zero_map(compose(iincl, cproj)):
        raise InternalInconsistencyError("image fails to die in the cokernel")
    if not verify_exact_at(iincl, cproj):
        raise InternalInconsistencyError("image != kernel of cokernel projection")
    if not maps_equal(compose(iproj, iincl), f):
        raise InternalInconsistencyError("source->image->target does not recover the map")
    return Subquotient(kmod, kincl, imod, iincl, iproj, cmod, cproj)


def submodule_from_rows(ambient, rows):
    """(module generated by the given classes, inclusion into ambient)."""
    ring = ambient.ring
    mat = rows if isinstance(rows, Mat) else Mat.from_rows(rows, ambient.gens)
    relrows = kernel_left_parts([mat, ambient.relations], ring)[0] if mat.rows else Mat(0, 0, [])
    smod = PresentedModule(ring, mat.rows, relrows)
    return smod, module_map(smod, ambient, mat, check=False)


def subquotient_presentation(ambient, gens_rows, killer_rows):
    """Present span(gens)/(span(killers)) inside ambient; killers must lie in
    span(gens) + relations for this to be the honest subquotient."""
    ring = ambient.ring
    if gens_rows.rows == 0:
        return PresentedModule.zero(ring)
    rel = kernel_left_parts([gens_rows, killer_rows, ambient.relations], ring)[0]
    return PresentedModule(ring, gens_rows.rows, rel)


def quotient_by_rows(ambient, rows):
    """(ambient / span(rows), projection)."""
    ring = ambient.ring
    qmod = PresentedModule(ring, ambient.gens, rows.vstack(ambient.relations))
    return qmod, module_map(ambient, qmod, Mat.identity(ambient.gens, ring), check=False)


# ---------------------------------------------------------------------------
# Smith-normal-form backed structure operations


@dataclass
class ElementaryDecomposition:
    """M = R^free_rank (+) sum of R/(d) with a two-sided invertible witness."""

    free_rank: int
    torsion_divisors: list
    to_canonical: ModuleMap
    from_canonical: ModuleMap
    canonical_module: PresentedModule

    def exponents(self):
        """Uniformizer exponents of the torsion divisors (chain-ring families)."""
        ring = self.canonical_module.ring
        return sorted(ring.val(d) for d in self.torsion_divisors)

    def verify(self):
        m = self.to_canonical.source
        return (maps_equal(compose(self.to_canonical, self.from_canonical), identity_map(m))
                and maps_equal(compose(self.from_canonical, self.to_canonical),
                               identity_map(self.canonical_module)))


def smith_normal_form(mat, ring):
    """Spec surface: SNF over the SNF-capable families (see linalg)."""
    return linalg.smith_normal_form(mat, ring)


def decompose_elementary(m):
    """Structure theorem over an SNF-capable ring, with verified witness."""
    ring = m.ring
    if not is_snf_capable(ring):
        raise UnsupportedRingError(
            f"decompose_elementary needs an SNF-capable ring, got {type(ring).__name__}")
    snf = linalg.smith_normal_form(m.relations, ring)
    kept = []
    divisors = []
    for j in range(m.gens):
        d = snf.divisors[j] if j < len(snf.divisors) else ring.zero
        if not ring.is_zero(d) and ring.is_unit(d):
            continue
        kept.append(j)
        divisors.append(d)
    torsion = [d for d in divisors if not ring.is_zero(d)]
    free_rank = sum(1 for d in divisors if ring.is_zero(d))
    order = sorted(range(len(kept)), key=lambda t: ring.is_zero(divisors[t]))
    kept = [kept[t] for t in order]
    divisors = [divisors[t] for t in order]
    rel_rows = []
    for t, d in enumerate(divisors):
        if not ring.is_zero(d):
            row = [ring.zero] * len(kept)
            row[t] = d
            rel_rows.append(row)
    canonical = PresentedModule(ring, len(kept), Mat(len(rel_rows), len(kept), rel_rows))
    to_can = module_map(m, canonical, snf.right.take_cols(kept), check=False)
    from_can = module_map(canonical, m, snf.right_inv.take_rows(kept), check=False)
    dec = ElementaryDecomposition(free_rank, torsion, to_can, from_can, canonical)
    if not dec.verify():
        raise InternalInconsistencyError("elementary decomposition witness failed to verify")
    return dec


def _decompose_any(m):
    if is_snf_capable(m.ring):
        return decompose_elementary(m)
    if isinstance(m.ring, TruncatedBK):
        from .smodules import decompose_over_s

        res = decompose_over_s(m)
        if isinstance(res, ElementaryDecomposition):
            return res
        raise UnsupportedRingError("module over truncated BK ring is not elementary")
    raise UnsupportedRingError(f"no decomposition over {type(m.ring).__name__}")


def torsion_part(m):
    """(torsion module, inclusion, torsion-free quotient).

    Torsion means: elementary divisors that are nonzero at the working
    truncation (LocalizedIntegers: nonunit divisors).  The submodule returned
    is the canonical-witness one; its divisor multiset is witness-free.
    """
    if isinstance(m.ring, TruncatedLambda):
        raise UnsupportedRingError("torsion_part over the Lambda family is not supported")
    dec = _decompose_any(m)
    ring = m.ring
    tcount = len(dec.torsion_divisors)
    rows = dec.from_canonical.matrix.take_rows(list(range(tcount)))
    tors = module_from_divisors(ring, dec.torsion_divisors, 0)
    incl = module_map(tors, m, rows, check=False)
    quot, _ = cokernel(incl)
    comp = compose(incl, module_map(m, quot, Mat.identity(m.gens, ring), check=False))
    if not is_zero_map(comp):
        raise InternalInconsistencyError("torsion part does not die in the quotient")
    return tors, incl, quot


def torsion_length(m):
    """Sum of valuations (resp. prime multiplicities) of torsion divisors."""
    ring = m.ring
    if not is_snf_capable(ring):
        raise UnsupportedRingError("torsion_length needs an SNF-capable ring")
    dec = decompose_elementary(m)
    total = 0
    for d in dec.torsion_divisors:
        if isinstance(ring, LocalizedIntegers):
            n = abs(int(Fraction(d)))
            total += sum(factorint(n).values()) if n > 1 else 0
        else:
            total += ring.val(d)
    return total


def torsion_divisor_profile(m):
    """Canonical multiset describing torsion: chain rings give exponent
    tuples, LocalizedIntegers gives prime-power tuples."""
    ring = m.ring
    dec = _decompose_any(m)
    if isinstance(ring, LocalizedIntegers):
        out = []
        for d in dec.torsion_divisors:
            for q, e in sorted(factorint(abs(int(Fraction(d)))).items()):
                out.append((q, e))
        return tuple(sorted(out))
    return tuple(sorted(ring.val(d) for d in dec.torsion_divisors))


def free_rank(m):
    return _decompose_any(m).free_rank


# ---------------------------------------------------------------------------
# Short exact sequences, splitting, gluing


@dataclass(frozen=True)
class ShortExactSequence:
    a: PresentedModule
    b: PresentedModule
    c: PresentedModule
    inject: ModuleMap
    surject: ModuleMap


def build_ses(a, b, c, inject_matrix, surject_matrix, verify=True):
    inj = module_map(a, b, inject_matrix)
    sur = module_map(b, c, surject_matrix)
    ses = ShortExactSequence(a, b, c, inj, sur)
    if verify:
        err = validate_ses(ses)
        if err:
            raise SchemaError(f"not a short exact sequence: {err}")
    return ses


def validate_ses(ses):
    kmod, kincl = kernel(ses.inject)
    if not rows_are_zero_classes(ses.a, kincl.matrix):
        return "inject has nonzero kernel"
    cmod, _ = cokernel(ses.surject)
    if not is_zero_module(cmod):
        return "surject has nonzero cokernel"
    if not verify_exact_at(ses.inject, ses.surject):
        return "image(inject) != kernel(surject)"
    return None


@dataclass
class SplitVerdict:
    split: bool
    section: ModuleMap = None
    obstruction: list = None


def _hom_solve(source, target, post=None, pre=None):
    """Find X: source -> target with
         Rel_source . X = 0        in target      (well-definedness)
         X . P = Q                 in module U    (post, optional)
         P2 . X = Q2               in target      (pre, optional)
    Returns (Mat | None, failures)."""
    ring = source.ring
    gs, gt = source.gens, target.gens
    ks, kt = source.relations.rows, target.relations.rows
    unknown_blocks = [("x", gs * gt)]
    eqs = []

    def x_index(i, j):
        return i * gt + j

    nvars = gs * gt
    aux_offsets = {}
    cols = []
    rhs = []

    def new_aux(name, count):
        nonlocal nvars
        aux_offsets[name] = nvars
        nvars += count
        unknown_blocks.append((name, count))

    new_aux("wd", ks * kt)
    eq_wd = []
    for r in range(ks):
        for j in range(gt):
            col = {}
            for i in range(gs):
                coeff = source.relations.data[r][i]
                if not ring.is_zero(coeff):
                    col[x_index(i, j)] = ring.add(col.get(x_index(i, j), ring.zero), coeff)
            for t in range(kt):
                coeff = ring.neg(target.relations.data[t][j])
                if not ring.is_zero(coeff):
                    idx = aux_offsets["wd"] + r * kt + t
                    col[idx] = ring.add(col.get(idx, ring.zero), coeff)
            cols.append(col)
            rhs.append(ring.zero)

    if post is not None:
        pmat, qmat, umod = post
        ku = umod.relations.rows
        new_aux("post", gs * ku)
        for a in range(gs):
            for ccol in range(umod.gens):
                col = {}
                for j in range(gt):
                    coeff = pmat.data[j][ccol]
                    if not ring.is_zero(coeff):
                        col[x_index(a, j)] = ring.add(col.get(x_index(a, j), ring.zero), coeff)
                for s in range(ku):
                    coeff = ring.neg(umod.relations.data[s][ccol])
                    if not ring.is_zero(coeff):
                        idx = aux_offsets["post"] + a * ku + s
                        col[idx] = ring.add(col.get(idx, ring.zero), coeff)
                cols.append(col)
                rhs.append(qmat.data[a][ccol])

    if pre is not None:
        p2, q2 = pre
        m = p2.rows
        new_aux("pre", m * kt)
        for a in range(m):
            for j in range(gt):
                col = {}
                for i in range(gs):
                    coeff = p2.data[a][i]
                    if not ring.is_zero(coeff):
                        col[x_index(i, j)] = ring.add(col.get(x_index(i, j), ring.zero), coeff)
                for t in range(kt):
                    coeff = ring.neg(target.relations.data[t][j])
                    if not ring.is_zero(coeff):
                        idx = aux_offsets["pre"] + a * kt + t
                        col[idx] = ring.add(col.get(idx, ring.zero), coeff)
                cols.append(col)
                rhs.append(q2.data[a][j])

    neq = len(cols)
    big = [[ring.zero] * neq for _ in range(nvars)]
    for e, col in enumerate(cols):
        for v, coeff in col.items():
            big[v][e] = coeff
    bigmat = Mat(nvars, neq, big)
    bvec = Mat(1, neq, [rhs])
    sol, failures = solve_left_info(bigmat, bvec, ring)
    if sol is None:
        return None, failures
    xmat = Mat(gs, gt, [[sol.data[0][x_index(i, j)] for j in range(gt)] for i in range(gs)])
    return xmat, []


def split_test(ses):
    """Section sigma with sigma . surject = id_C, or the obstruction record."""
    xmat, failures = _hom_solve(
        ses.c, ses.b,
        post=(ses.surject.matrix, Mat.identity(ses.c.gens, ses.c.ring), ses.c))
    if xmat is None:
        return SplitVerdict(False, obstruction=failures)
    section = module_map(ses.c, ses.b, xmat)
    if not maps_equal(compose(section, ses.surject), identity_map(ses.c)):
        raise InternalInconsistencyError("solved section fails to verify")
    return SplitVerdict(True, section=section)


def retraction_test(incl):
    """Retraction rho with incl . rho = id on the submodule, or obstruction."""
    xmat, failures = _hom_solve(
        incl.target, incl.source,
        pre=(incl.matrix, Mat.identity(incl.source.gens, incl.source.ring)))
    if xmat is None:
        return SplitVerdict(False, obstruction=failures)
    rho = module_map(incl.target, incl.source, xmat)
    if not maps_equal(compose(incl, rho), identity_map(incl.source)):
        raise InternalInconsistencyError("solved retraction fails to verify")
    return SplitVerdict(True, section=rho)


def glue_splitting(ses, torsion_section, free_witness):
    """Assemble a section of surject from a torsion section and a free lift.

    torsion_section: C_tors -> B with (torsion_section ; surject) equal to the
    torsion inclusion into C.  free_witness: ElementaryDecomposition of C whose
    free part witnesses C_tf free.  Returns the verified section
    s(x, y) = s_tors(x) + lift(y) assembled through the witness.
    """
    ring = ses.c.ring
    dec = free_witness
    tcount = len(dec.torsion_divisors)
    tors_incl_rows = dec.from_canonical.matrix.take_rows(list(range(tcount)))
    comp = torsion_section.matrix.mul(ses.surject.matrix, ring)
    if not rows_are_zero_classes(ses.c, comp.sub(tors_incl_rows, ring)):
        raise HypothesisUnmetError("torsion_section does not split the torsion rows")
    free_idx = list(range(tcount, dec.canonical_module.gens))
    free_rows = dec.from_canonical.matrix.take_rows(free_idx)
    lift = solve_left_mod(ses.surject.matrix, free_rows, ses.c.relations, ring)
    if lift is None:
        raise InternalInconsistencyError("free rows fail to lift through a verified surjection")
    lift_rows = lift[0]
    stacked = torsion_section.matrix.vstack(lift_rows)
    smat = dec.to_canonical.matrix.mul(stacked, ring)
    section = module_map(ses.c, ses.b, smat)
    if not maps_equal(compose(section, ses.surject), identity_map(ses.c)):
        raise InternalInconsistencyError("glued section fails beta . s = id")
    return section


# ---------------------------------------------------------------------------
# Base change


@dataclass(frozen=True)
class BaseChangeSpec:
    kind: str  # z_to_zero | z_to_unit | frobenius_twist | lambda_completion | localized_completion | identity
    unit: int = None
    ell: int = None
    precision_n: int = None


def _adaptive_matrix_precision(mat, ell):
    worst = 0
    for row in mat.data:
        for x in row:
            vals = x if isinstance(x, tuple) else (x,)
            for c in vals:
                n = abs(int(Fraction(c).numerator)) if not isinstance(c, int) else abs(c)
                v = 0
                while n and n % ell == 0:
                    n //= ell
                    v += 1
                worst = max(worst, v)
    return max(4, worst + 2)


def _adaptive_precision(m, ell):
    return _adaptive_matrix_precision(m.relations, ell)


def base_change_rings(m, spec):
    """(target ring, entry map, precision trail) for a base-change spec."""
    ring = m.ring
    trail = []
    if spec.kind == "identity":
        return ring, (lambda x: x), trail
    if spec.kind == "z_to_zero":
        if not isinstance(ring, TruncatedBK):
            raise UnsupportedRingError("z_to_zero needs a TruncatedBK source")
        tgt = TruncatedPadic(ring.p, spec.precision_n or ring.precision_n)
        return tgt, (lambda x: tgt.from_int(x[0])), trail
    if spec.kind == "z_to_unit":
        if not isinstance(ring, TruncatedBK):
            raise UnsupportedRingError("z_to_unit needs a TruncatedBK source")
        tgt = TruncatedPadic(ring.p, spec.precision_n or ring.precision_n)
        u = tgt.from_int(spec.unit)
        if not tgt.is_unit(u):
            raise SchemaError(f"{spec.unit} is not a unit mod {tgt.modulus}")

        def entry(x):
            acc = tgt.zero
            for j in range(len(x) - 1, -1, -1):
                acc = tgt.add(tgt.mul(acc, u), tgt.from_int(x[j]))
            return acc

        trail.append("z_to_unit evaluation models the untruncated ring map; "
                     "faithful on presentations with z-degrees below the truncation")
        return tgt, entry, trail
    if spec.kind == "frobenius_twist":
        if not isinstance(ring, TruncatedBK):
            raise UnsupportedRingError("frobenius_twist needs a TruncatedBK source")
        trail.append(f"frobenius twist: trusted z-precision {ring.frobenius_trusted_precision}")
        return ring, ring.frobenius, trail
    if spec.kind == "lambda_completion":
        if not isinstance(ring, TruncatedLambda):
            raise UnsupportedRingError("lambda_completion needs a TruncatedLambda source")
        if spec.ell in ring.inverted_primes:
            raise SchemaError(f"{spec.ell} is inverted in the base ring")
        n = spec.precision_n or _adaptive_precision(m, spec.ell)
        tgt = TruncatedBK(spec.ell, n, ring.precision_m, default_eisenstein(spec.ell))
        base = tgt.scalar

        def entry(x):
            out = []
            for c in x:
                fr = Fraction(c)
                out.append(base.mul(base.from_int(fr.numerator),
                                    base.inv(base.from_int(fr.denominator))))
            return tuple(out)

        trail.append(f"lambda completion at {spec.ell} modeled at p-precision {n}")
        return tgt, entry, trail
    if spec.kind == "localized_completion":
        if not isinstance(ring, LocalizedIntegers):
            raise UnsupportedRingError("localized_completion needs a LocalizedIntegers source")
        if spec.ell in ring.inverted_primes:
            raise SchemaError(f"{spec.ell} is inverted in the base ring")
        n = spec.precision_n or _adaptive_precision(m, spec.ell)
        tgt = TruncatedPadic(spec.ell, n)

        def entry(x):
            fr = Fraction(x)
            return tgt.mul(tgt.from_int(fr.numerator), tgt.inv(tgt.from_int(fr.denominator)))

        trail.append(f"completion at {spec.ell} modeled at precision {n}")
        return tgt, entry, trail
    raise SchemaError(f"unknown base change kind {spec.kind}")


def base_change(m, spec):
    """Push the presentation through the ring map; tensoring is right exact."""
    tgt_ring, entry, trail = base_change_rings(m, spec)
    rows = [[entry(x) for x in row] for row in m.relations.data]
    return PresentedModule(tgt_ring, m.gens, Mat(m.relations.rows, m.gens, rows)), trail


def base_change_map(f, spec):
    if spec.precision_n is None and spec.kind in ("lambda_completion", "localized_completion"):
        n = max(_adaptive_matrix_precision(mx, spec.ell)
                for mx in (f.source.relations, f.target.relations, f.matrix))
        spec = BaseChangeSpec(spec.kind, unit=spec.unit, ell=spec.ell, precision_n=n)
    src, _ = base_change(f.source, spec)
    tgt, trail = base_change(f.target, spec)
    _, entry, _ = base_change_rings(f.source, spec)
    mat = Mat(f.matrix.rows, f.matrix.cols,
              [[entry(x) for x in row] for row in f.matrix.data])
    return module_map(src, tgt, mat), trail


# ---------------------------------------------------------------------------
# Lambda-family support and zero detection


@dataclass
class SupportResult:
    everywhere: bool
    primes: list
    content: int
    certificate: dict


def _constant_term_fraction_matrix(m):
    return [[Fraction(x[0]) for x in row] for row in m.relations.data]


def _fraction_rank(rows, cols, data):
    """Rank over Q by fraction-free Gauss elimination."""
    a = [row[:] for row in data]
    rank = 0
    for col in range(cols):
        piv = None
        for i in range(rank, rows):
            if a[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        for i in range(rank + 1, rows):
            if a[i][col] != 0:
                f = a[i][col] / a[rank][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


def _minor_gcd(data, rows, cols, size):
    from itertools import combinations
    from math import gcd

    def det(ridx, cidx):
        if not ridx:
            return Fraction(1)
        acc = Fraction(0)
        sign = 1
        for t, j in enumerate(cidx):
            acc += sign * data[ridx[0]][j] * det(ridx[1:], cidx[:t] + cidx[t + 1:])
            sign = -sign
        return acc

    g = 0
    for ridx in combinations(range(rows), size):
        for cidx in combinations(range(cols), size):
            d = det(list(ridx), list(cidx))
            g = gcd(g, abs(d.numerator))
    return g


def support_primes(m, bound=None):
    """Primes ell outside S with M/(ell, q-1)M nonzero.

    Complete by Fitting-content factorization: if the constant-term relation
    matrix has full rank over Q, the support is exactly the primes dividing
    the gcd of its maximal minors (S-part stripped); otherwise the support is
    every non-inverted prime, reported with everywhere=True.
    """
    ring = m.ring
    if not isinstance(ring, TruncatedLambda):
        raise UnsupportedRingError("support_primes needs a TruncatedLambda module")
    sset = ring.inverted_primes
    if bound is not None and bound < 2:
        raise SchemaError("prime bound must be >= 2")
    if m.gens == 0:
        return SupportResult(False, [], 1, {"reason": "zero module"})
    data = _constant_term_fraction_matrix(m)
    rank = _fraction_rank(m.relations.rows, m.gens, data)
    if rank < m.gens:
        primes = [q for q in primerange(2, (bound or 2) + 1) if q not in sset] if bound else []
        return SupportResult(True, primes, 0,
                             {"reason": "constant-term matrix rank-deficient over Q"})
    content = _minor_gcd(data, m.relations.rows, m.gens, m.gens)
    stripped = LocalizedIntegers(sset).strip_s(content)
    fact = {int(q): int(e) for q, e in factorint(stripped).items()} if stripped > 1 else {}
    primes = sorted(fact)
    if bound is not None:
        primes = [q for q in primes if q <= bound]
    return SupportResult(False, primes, int(stripped),
                         {"content": int(stripped), "factorization": fact})


@dataclass
class ZeroDetectResult:
    is_zero: bool
    witness_prime: int = None
    local_nonzero_verified: bool = False


def zero_detect(f, completion_precision=None):
    """Direct zero test over Lambda plus a certified witness prime when nonzero."""
    ring = f.source.ring
    if not isinstance(ring, TruncatedLambda):
        raise UnsupportedRingError("zero_detect needs a TruncatedLambda map")
    if is_zero_map(f):
        return ZeroDetectResult(True)
    imod, _, _ = image(f)
    supp = support_primes(imod)
    if supp.everywhere:
        witness = next(q for q in primerange(2, 1000) if q not in ring.inverted_primes)
    else:
        if not supp.primes:
            raise InternalInconsistencyError(
                "nonzero map with empty certified support contradicts prime-local detection")
        witness = supp.primes[0]
    spec = BaseChangeSpec("lambda_completion", ell=witness, precision_n=completion_precision)
    floc, _ = base_change_map(f, spec)
    if is_zero_map(floc):
        raise InternalInconsistencyError(
            f"support analysis produced {witness} but the completed map vanishes")
    return ZeroDetectResult(False, witness_prime=witness, local_nonzero_verified=True)
