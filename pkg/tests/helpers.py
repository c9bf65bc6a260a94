"""Shared random-instance generators for the test suite."""

import random

from truncalg.linalg import Mat, invert
from truncalg.modules import PresentedModule, direct_sum, module_map, submodule_from_rows
from truncalg.spectral import validate
from truncalg.errors import SchemaError


def random_filtered_complex(ring, rng, max_gens=2, weights=2, degrees=2):
    """A random valid filtered complex: modules, a well-defined differential,
    and descending filtrations built compatibly (fil of the target absorbs
    the differential images)."""
    def rand_mod():
        g = rng.randint(0, max_gens)
        rows = [[ring.from_int(rng.randint(0, ring.modulus - 1)) for _ in range(g)]
                for _ in range(rng.randint(0, 2))]
        return PresentedModule(ring, g, Mat(len(rows), g, rows))

    mods = {i: rand_mod() for i in range(degrees)}
    dmats = {}
    ok = True
    for i in range(1, degrees):
        for _ in range(60):
            d = Mat(mods[i].gens, mods[i - 1].gens,
                    [[ring.from_int(rng.randint(0, ring.modulus - 1))
                      for _ in range(mods[i - 1].gens)] for _ in range(mods[i].gens)])
            try:
                dm = module_map(mods[i], mods[i - 1], d)
            except Exception:
                continue
            if i >= 2 and not d.mul(dmats[i - 1], ring).is_zero(ring):
                # require d o d = 0 on the nose for chains longer than 2
                composed = dmats[i - 1]
                try:
                    from truncalg.modules import compose, is_zero_map

                    if not is_zero_map(compose(dm, module_map(mods[i - 1], mods[i - 2],
                                                              dmats[i - 1]))):
                        continue
                except Exception:
                    continue
            dmats[i] = d
            break
        else:
            return None

    fil = {}
    prev_rows = {i: Mat.identity(mods[i].gens, ring).tolist() for i in range(degrees)}
    for n in range(1, weights):
        new_rows = {}
        for i in range(degrees - 1, -1, -1):
            rows = []
            for _ in range(rng.randint(0, 2)):
                c = [ring.from_int(rng.randint(0, ring.modulus - 1))
                     for _ in range(len(prev_rows[i]))]
                rows.append([ring.sum(ring.mul(ci, prev_rows[i][k][j])
                                      for k, ci in enumerate(c))
                             for j in range(mods[i].gens)])
            if i + 1 < degrees and (i + 1) in dmats and new_rows.get(i + 1):
                pushed = Mat(len(new_rows[i + 1]), mods[i + 1].gens,
                             new_rows[i + 1]).mul(dmats[i + 1], ring)
                rows.extend(pushed.tolist())
            new_rows[i] = rows
            sub, incl = submodule_from_rows(mods[i], Mat(len(rows), mods[i].gens, rows))
            fil[(i, n)] = (sub, incl.matrix)
        prev_rows = new_rows
    try:
        return validate(ring, 0, degrees - 1, 0, weights - 1, mods, dmats, fil)
    except SchemaError:
        return None


def random_invertible(ring, g, rng, rand_elt):
    while True:
        m = Mat(g, g, [[rand_elt() for _ in range(g)] for _ in range(g)])
        if invert(m, ring) is not None:
            return m


def scrambled_split_lambda_ses(lam, rng):
    """A split SES over the Lambda ring hidden by a generator change."""
    from truncalg.local_global import make_lambda_ses

    def rand_piece():
        style = rng.choice(["int", "free", "qtors"])
        if style == "free":
            return PresentedModule.free(lam, 1)
        if style == "int":
            n = rng.choice([3, 5, 9])
            return PresentedModule.cyclic(lam, lam.from_int(n))
        return PresentedModule.cyclic(lam, lam.q_minus_one())

    a, c = rand_piece(), rand_piece()
    ds = direct_sum([a, c])

    def rand_elt():
        return lam.from_coeffs([rng.randint(-3, 3) for _ in range(lam.mlen)])

    w = random_invertible(lam, 2, rng, rand_elt)
    winv = invert(w, lam)
    mid = PresentedModule(lam, 2, ds.relations.mul(winv, lam))
    inj = Mat(1, 2, [[lam.one, lam.zero]]).mul(winv, lam)
    sur = w.mul(Mat(2, 1, [[lam.zero], [lam.one]]), lam)
    return make_lambda_ses(a, mid, c, inj, sur)


def random_lambda_map(lam, rng):
    """A random well-defined map between small Lambda modules."""
    def rand_mod():
        g = rng.randint(1, 2)
        rows = []
        for _ in range(rng.randint(0, 2)):
            rows.append([lam.from_coeffs([rng.choice([0, 0, 1, 2, 3, 5, -1])
                                          for _ in range(lam.mlen)])
                         for _ in range(g)])
        return PresentedModule(lam, g, Mat(len(rows), g, rows))

    src, tgt = rand_mod(), rand_mod()
    for _ in range(40):
        mat = Mat(src.gens, tgt.gens,
                  [[lam.from_coeffs([rng.choice([0, 0, 0, 1, 2, -1])
                                     for _ in range(lam.mlen)])
                    for _ in range(tgt.gens)] for _ in range(src.gens)])
        try:
            return module_map(src, tgt, mat)
        except Exception:
            continue
    return None
