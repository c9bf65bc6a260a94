"""Random generators for structure-theorem and degeneration experiments.

Towers are grown by structured extension steps (a new p-killed free layer on
top, with a solved Frobenius mixing block, falling back to more divisible
correction terms) interleaved with invertible generator scrambles; free
layers enter as split extensions, which is the only kind a projective
quotient admits.  Every produced tower verifies by construction."""

from __future__ import annotations

from .breuil_kisin import (
    BKModule,
    extension_node,
    frob_matrix,
    leaf,
    make_bk_module,
    phi_twist,
)
from .linalg import Mat, invert, solve_left_mod
from .modules import PresentedModule, module_map
from .rings import TruncatedBK


def _rand_constant_invertible(ring, g, rng):
    while True:
        m = Mat(g, g, [[ring.from_int(rng.randrange(ring.scalar.modulus))
                        for _ in range(g)] for _ in range(g)])
        if invert(m, ring) is not None:
            return m


def random_mod_s1_leaf(ring, rng, max_rank=2, r=1):
    """A p-killed S1-free object with phi = U . diag(E^{t_i}), height in [0, r]."""
    g = rng.randint(1, max_rank)
    p = ring.p
    rel = Mat.identity(g, ring).scale(ring.from_int(p), ring)
    mod = PresentedModule(ring, g, rel)
    e = ring.eisenstein_element()
    diag = Mat(g, g, [[ring.pow(e, rng.randint(0, r)) if i == j else ring.zero
                       for j in range(g)] for i in range(g)])
    u = _rand_constant_invertible(ring, g, rng)
    phi = u.mul(diag, ring)
    bk = make_bk_module(mod, phi, (0, r))
    return leaf(bk, "mod_s1")


def random_free_leaf(ring, rng, r=1):
    g = 1
    mod = PresentedModule.free(ring, g)
    e = ring.eisenstein_element()
    t = rng.randint(0, r)
    phi = Mat(1, 1, [[ring.mul(ring.pow(e, t),
                               ring.from_int(rng.randrange(1, ring.p)))]])
    bk = make_bk_module(mod, phi, (0, r))
    return leaf(bk, "free")


def scramble_node(node, rng):
    """Reparametrize the node's generators by a constant invertible matrix."""
    bk = node.bk
    ring = bk.ring
    g = bk.module.gens
    if g == 0:
        return node
    w = _rand_constant_invertible(ring, g, rng)
    winv = invert(w, ring)
    mod2 = PresentedModule(ring, g, bk.module.relations.mul(winv, ring))
    phi2 = frob_matrix(w, ring).mul(bk.phi.matrix, ring).mul(winv, ring)
    bk2 = make_bk_module(mod2, phi2, bk.height_window)
    if node.kind != "extension":
        return leaf(bk2, node.kind)
    incl2 = module_map(node.sub.bk.module, mod2,
                       node.incl.matrix.mul(winv, ring))
    proj2 = module_map(mod2, node.quot.bk.module,
                       w.mul(node.proj.matrix, ring))
    return extension_node(bk2, node.sub, incl2, node.quot, proj2)


def extend_by_mod_s1(base_node, q_leaf, rng, attempts=8):
    """Extension of the base by a p-killed layer on top, with solved phi mixing."""
    b = base_node.bk
    q = q_leaf.bk
    ring = b.ring
    p = ring.p
    ga, gq = b.module.gens, q.module.gens
    for attempt in range(attempts):
        if attempt == attempts - 1:
            cmat = Mat.zero(gq, ga, ring)
        else:
            style = rng.choice(["constant", "divisible", "zero"])
            if style == "zero":
                cmat = Mat.zero(gq, ga, ring)
            elif style == "divisible":
                cmat = Mat(gq, ga, [[ring.from_int(p * rng.randrange(ring.scalar.modulus // p or 1))
                                     for _ in range(ga)] for _ in range(gq)])
            else:
                cmat = Mat(gq, ga, [[ring.from_int(rng.randrange(ring.scalar.modulus))
                                     for _ in range(ga)] for _ in range(gq)])
        rel_rows = []
        for row in b.module.relations.data:
            rel_rows.append(list(row) + [ring.zero] * gq)
        for i in range(gq):
            qrel = [ring.zero] * gq
            qrel[i] = ring.from_int(p)
            rel_rows.append(list(cmat.data[i]) + qrel)
        mod = PresentedModule(ring, ga + gq, Mat(len(rel_rows), ga + gq, rel_rows))
        # phi block [[phi_b, 0], [X, phi_q]] with X solved for well-definedness:
        # p X = phi_q . C - frob(C) . phi_b  modulo the base relations
        rhs = q.phi.matrix.mul(cmat, ring).sub(
            frob_matrix(cmat, ring).mul(b.phi.matrix, ring), ring)
        pid = Mat.identity(ga, ring).scale(ring.from_int(p), ring)
        extra = b.module.relations
        sol = solve_left_mod(pid, rhs, extra, ring)
        if sol is None:
            continue
        x = sol[0]
        phi_rows = []
        for i in range(ga):
            phi_rows.append(list(b.phi.matrix.data[i]) + [ring.zero] * gq)
        for i in range(gq):
            phi_rows.append(list(x.data[i]) + list(q.phi.matrix.data[i]))
        try:
            bk = make_bk_module(mod, Mat(ga + gq, ga + gq, phi_rows), b.height_window)
        except Exception:
            continue
        inc_rows = [[ring.one if j == i else ring.zero for j in range(ga + gq)]
                    for i in range(ga)]
        prj_rows = [[ring.zero] * gq for _ in range(ga)] + \
                   [[ring.one if j == i else ring.zero for j in range(gq)]
                    for i in range(gq)]
        try:
            incl = module_map(b.module, mod, Mat(ga, ga + gq, inc_rows))
            proj = module_map(mod, q.module, Mat(ga + gq, gq, prj_rows))
        except Exception:
            continue
        return extension_node(bk, base_node, incl, q_leaf, proj)
    raise RuntimeError("extension construction failed to converge")


def extend_by_free(base_node, f_leaf, rng):
    """Split extension by a free layer (projective quotients only split)."""
    b = base_node.bk
    f = f_leaf.bk
    ring = b.ring
    ga, gf = b.module.gens, f.module.gens
    rel_rows = [list(row) + [ring.zero] * gf for row in b.module.relations.data]
    mod = PresentedModule(ring, ga + gf, Mat(len(rel_rows), ga + gf, rel_rows))
    phi_rows = [list(b.phi.matrix.data[i]) + [ring.zero] * gf for i in range(ga)]
    phi_rows += [[ring.zero] * ga + list(f.phi.matrix.data[i]) for i in range(gf)]
    bk = make_bk_module(mod, Mat(ga + gf, ga + gf, phi_rows), b.height_window)
    incl = module_map(b.module, mod,
                      Mat(ga, ga + gf,
                          [[ring.one if j == i else ring.zero for j in range(ga + gf)]
                           for i in range(ga)]))
    proj = module_map(mod, f.module,
                      Mat(ga + gf, gf,
                          [[ring.zero] * gf for _ in range(ga)] +
                          [[ring.one if j == i else ring.zero for j in range(gf)]
                           for i in range(gf)]))
    return extension_node(bk, base_node, incl, f_leaf, proj)


def random_tower(p, rng, depth=2, n=2, r=1, allow_free=True):
    """Grow a random bar-tower at ramification e = 1, with M = p + 1 so the
    Frobenius trusted precision admits degree-one phi entries."""
    ring = TruncatedBK(p, n, p + 1)
    node = random_mod_s1_leaf(ring, rng, r=r)
    for _ in range(depth - 1):
        if allow_free and rng.random() < 0.25:
            node = extend_by_free(node, random_free_leaf(ring, rng, r=r), rng)
        else:
            node = extend_by_mod_s1(node, random_mod_s1_leaf(ring, rng, r=r), rng)
        if rng.random() < 0.7:
            node = scramble_node(node, rng)
    return node


def scrambled_elementary(ring, rng, max_rank=2, max_torsion=2):
    """A hidden elementary module scrambled by invertible generator changes
    and redundant relation rows; returns (module, hidden free rank, exps)."""
    n = ring.precision_n
    m_rank = rng.randint(0, max_rank)
    tcount = rng.randint(0, max_torsion)
    exps = sorted(rng.randint(1, n - 1) for _ in range(tcount))
    g = m_rank + tcount
    if g == 0:
        return PresentedModule.zero(ring), 0, []
    rel_rows = []
    for i, a in enumerate(exps):
        row = [ring.zero] * g
        row[i] = ring.from_int(ring.p ** a)
        rel_rows.append(row)
    rel = Mat(len(rel_rows), g, rel_rows)

    def rand_elt():
        return ring.from_coeffs([ring.scalar.from_int(rng.randrange(ring.scalar.modulus))
                                 for _ in range(ring.mlen)])

    while True:
        w = Mat(g, g, [[rand_elt() for _ in range(g)] for _ in range(g)])
        if invert(w, ring) is not None:
            break
    scr = rel.mul(w, ring)
    rows = [list(r) for r in scr.data]
    for _ in range(rng.randint(0, 2)):
        if not rows:
            break
        combo = [ring.zero] * g
        for r in rows:
            c = rand_elt()
            combo = [ring.add(x, ring.mul(c, y)) for x, y in zip(combo, r)]
        rows.append(combo)
    rng.shuffle(rows)
    return PresentedModule(ring, g, Mat(len(rows), g, rows)), m_rank, exps
