"""Structure algorithms for modules over the bivariate truncation of W[[z]].

gr_p slices are modules over S1 = F_p[z]/(z^M); their simultaneous freeness
characterizes the elementary modules (finite sums of S/p^a and free parts),
and the decomposition is recovered constructively: an adapted basis of the
gr_p chain is built top-down through the multiplication-by-p surjections,
lifted, corrected so p^a kills the torsion generators exactly, and the
assembled map is verified to be an isomorphism slice-by-slice and globally.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InternalInconsistencyError, PrecisionError, UnsupportedRingError
from .linalg import Mat, invert, kernel_left_parts, solve_left, solve_left_mod
from .modules import (
    ElementaryDecomposition,
    PresentedModule,
    cokernel,
    compose,
    decompose_elementary,
    identity_map,
    is_zero_module,
    kernel,
    maps_equal,
    module_from_divisors,
    module_map,
    rows_are_zero_classes,
)
from .rings import TruncatedBK, TruncatedPowerSeries


@dataclass
class GrSlice:
    j: int
    module: PresentedModule  # over S1
    free: bool
    rank: int
    divisors: list
    decomposition: ElementaryDecomposition = None


@dataclass
class NotElementary:
    failing_j: int
    certificate: dict


def _s1_of(ring):
    return TruncatedPowerSeries(ring.p, ring.precision_m)


def _reduce_mod_p(rows_t, s1):
    out = []
    for row in rows_t.data:
        out.append([tuple(c % s1.p for c in x) for x in row])
    return Mat(rows_t.rows, rows_t.cols, out)


def _lift_to_t(rows_s1, ring):
    out = []
    for row in rows_s1.data:
        out.append([tuple(int(c) for c in x) for x in row])
    return Mat(rows_s1.rows, rows_s1.cols, out)


def gr_p(m, j):
    """p^j M / p^{j+1} M as a presented module over S1, with a freeness flag."""
    ring = m.ring
    if not isinstance(ring, TruncatedBK):
        raise UnsupportedRingError("gr_p needs a TruncatedBK module")
    n = ring.precision_n
    if j >= n:
        raise PrecisionError(f"gr_p slice {j} is beyond the p-precision {n}")
    s1 = _s1_of(ring)
    g = m.gens
    if g == 0:
        mod = PresentedModule.zero(s1)
        return GrSlice(j, mod, True, 0, [], decompose_elementary(mod))
    pj = Mat.identity(g, ring).scale(ring.from_int(ring.p ** j), ring)
    pj1 = Mat.identity(g, ring).scale(ring.from_int(ring.p ** (j + 1)), ring)
    parts = kernel_left_parts([pj, m.relations, pj1], ring)
    rel_s1 = _reduce_mod_p(parts[0], s1)
    mod = PresentedModule(s1, g, rel_s1)
    dec = decompose_elementary(mod)
    bad = [d for d in dec.torsion_divisors]
    free = not bad
    return GrSlice(j, mod, free, dec.free_rank, list(dec.torsion_divisors), dec)


def decompose_over_s(m, _trace=None):
    """Constructive elementary decomposition over truncated W[[z]].

    Returns an ElementaryDecomposition (torsion generators first in the
    canonical module, matching torsion_part's convention) or NotElementary
    with the first failing gr_p slice.
    """
    ring = m.ring
    if not isinstance(ring, TruncatedBK):
        raise UnsupportedRingError("decompose_over_s needs a TruncatedBK module")
    n = ring.precision_n
    s1 = _s1_of(ring)
    slices = []
    for j in range(n):
        sl = gr_p(m, j)
        if not sl.free:
            return NotElementary(j, {
                "z_torsion_divisors": [s1.element_str(d) for d in sl.divisors],
                "gr_relations": sl.module.relations.tolist(),
            })
        slices.append(sl)
        if _trace is not None:
            _trace.append(("gr_rank", j, sl.rank))
    ranks = [sl.rank for sl in slices]
    for j in range(n - 1):
        if ranks[j] < ranks[j + 1]:
            raise InternalInconsistencyError("gr ranks increased along multiplication by p")

    # mu_j in the canonical coordinates of consecutive slices
    mu = []
    for j in range(n - 1):
        a = slices[j].decomposition.from_canonical.matrix.mul(
            slices[j + 1].decomposition.to_canonical.matrix, s1)
        mu.append(a)

    # adapted basis, top level downwards; tags record the chain length
    basis = Mat.identity(ranks[n - 1], s1)
    tags = [n] * ranks[n - 1]
    for j in range(n - 2, -1, -1):
        a = mu[j]
        lifts = solve_left(a, basis, s1) if basis.rows else Mat(0, ranks[j], [])
        if lifts is None:
            raise InternalInconsistencyError("multiplication-by-p failed to be surjective")
        parts = kernel_left_parts([a], s1)
        krows = [row for row in parts[0].data
                 if any(not s1.is_zero(x) for x in row)]
        comp = []
        for row in krows:
            cand = Mat.from_rows([list(r) for r in lifts.data] + [list(r) for r in comp] + [list(row)],
                                 ranks[j])
            if cand.rows <= ranks[j] and _rows_unimodular(cand, s1):
                comp.append(list(row))
        if lifts.rows + len(comp) != ranks[j]:
            raise InternalInconsistencyError("adapted basis has wrong size")
        basis = Mat.from_rows([list(r) for r in lifts.data] + comp, ranks[j])
        if invert(basis, s1) is None:
            raise InternalInconsistencyError("adapted basis is not unimodular")
        tags = tags + [j + 1] * len(comp)

    # back to generator coordinates of gr_0 = M/pM, then lift to the ring
    rows_s1 = basis.mul(slices[0].decomposition.from_canonical.matrix, s1) \
        if basis.rows else Mat(0, m.gens, [])
    rows_t = _lift_to_t(rows_s1, ring)

    order = sorted(range(len(tags)), key=lambda t: (tags[t] == n, tags[t]))
    gens_rows = []
    exps = []
    free_count = 0
    for t in order:
        row = list(rows_t.data[t])
        a = tags[t]
        if a == n:
            free_count += 1
        else:
            row = _correct_torsion_generator(m, row, a)
            exps.append(a)
        gens_rows.append(row)

    divisors = [ring.from_int(ring.p ** a) for a in exps]
    canonical = module_from_divisors(ring, divisors, free_count)
    eta_mat = Mat.from_rows(gens_rows, m.gens) if gens_rows else Mat(0, m.gens, [])
    eta = module_map(canonical, m, eta_mat)

    cmod, _ = cokernel(eta)
    if not is_zero_module(cmod):
        raise InternalInconsistencyError(
            "assembled elementary map is not surjective (reported, never silently accepted)")
    kmod, kincl = kernel(eta)
    if not rows_are_zero_classes(canonical, kincl.matrix):
        raise InternalInconsistencyError("assembled elementary map has a kernel")
    inv = solve_left_mod(eta.matrix, Mat.identity(m.gens, ring), m.relations, ring)
    if inv is None:
        raise InternalInconsistencyError("surjective elementary map failed to invert")
    to_can = module_map(m, canonical, inv[0])
    if not maps_equal(compose(eta, to_can), identity_map(canonical)):
        raise InternalInconsistencyError("elementary witness does not compose to identity")
    if not maps_equal(compose(to_can, eta), identity_map(m)):
        raise InternalInconsistencyError("elementary witness does not compose to identity")

    expected = [free_count + sum(1 for a in exps if a > j) for j in range(n)]
    if expected != ranks:
        raise InternalInconsistencyError(
            f"gr ranks {ranks} disagree with recovered exponents {sorted(exps)} + free {free_count}")
    if _trace is not None:
        _trace.append(("recovered", free_count, sorted(exps)))
    return ElementaryDecomposition(free_count, divisors, to_can, eta, canonical)


def _rows_unimodular(mat, s1):
    """Do the rows extend to/(form part of) a basis? Check surjectivity of the
    induced map onto S1^rows via SNF unit-divisors."""
    if mat.rows == 0:
        return True
    from .linalg import smith_normal_form

    snf = smith_normal_form(mat, s1)
    units = sum(1 for d in snf.divisors if not s1.is_zero(d) and s1.is_unit(d))
    return units == mat.rows


def _correct_torsion_generator(m, row, a):
    """Adjust row by p*y so that p^a . row = 0 holds exactly in m."""
    ring = m.ring
    p = ring.p
    pa = ring.from_int(p ** a)
    target = Mat(1, m.gens, [[ring.mul(pa, x) for x in row]])
    if a + 1 >= ring.precision_n:
        if not rows_are_zero_classes(m, target):
            raise PrecisionError(
                "torsion correction impossible: exponent reaches the p-precision")
        return row
    pa1 = Mat.identity(m.gens, ring).scale(ring.from_int(p ** (a + 1)), ring)
    sol = solve_left_mod(pa1, target, m.relations, ring)
    if sol is None:
        raise PrecisionError("torsion correction system unsolvable at working precision")
    y = sol[0]
    pelt = ring.from_int(p)
    corrected = [ring.sub(x, ring.mul(pelt, y.data[0][i])) for i, x in enumerate(row)]
    check = Mat(1, m.gens, [[ring.mul(pa, x) for x in corrected]])
    if not rows_are_zero_classes(m, check):
        raise InternalInconsistencyError("torsion correction failed to kill the generator")
    return corrected
