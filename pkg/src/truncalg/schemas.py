"""JSON parsing and serialization for all domain objects.

Element encodings are canonical coefficient data only (no expression
strings): integers for the p-adic family, reduced fraction strings for the
localized integers, fixed-length coefficient arrays for the z / (q-1)
families.  Non-canonical input is rejected with a normalization hint and a
JSON-pointer-style location."""

from __future__ import annotations

from fractions import Fraction

from .errors import SchemaError
from .linalg import Mat
from .modules import PresentedModule, ShortExactSequence, module_map
from .rings import (
    EisensteinSpec,
    LocalizedIntegers,
    TruncatedBK,
    TruncatedLambda,
    TruncatedPadic,
    TruncatedPowerSeries,
    default_eisenstein,
)


def _want(obj, key, loc, types=None):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"missing field '{key}'", loc)
    v = obj[key]
    if types and not isinstance(v, types):
        raise SchemaError(f"field '{key}' has the wrong type", f"{loc}/{key}")
    return v


def parse_ring(data, loc="/ring"):
    fam = _want(data, "family", loc, str)
    try:
        if fam == "LocalizedIntegers":
            return LocalizedIntegers(tuple(_want(data, "inverted_primes", loc, list)))
        if fam == "TruncatedPadic":
            return TruncatedPadic(_want(data, "p", loc, int), _want(data, "N", loc, int))
        if fam == "TruncatedPowerSeries":
            return TruncatedPowerSeries(_want(data, "p", loc, int), _want(data, "M", loc, int))
        if fam == "TruncatedBK":
            eis = None
            if "eisenstein" in data and data["eisenstein"] is not None:
                e = data["eisenstein"]
                eis = EisensteinSpec(tuple(_want(e, "coefficients", loc + "/eisenstein", list)),
                                     _want(e, "ramification_e", loc + "/eisenstein", int))
            return TruncatedBK(_want(data, "p", loc, int), _want(data, "N", loc, int),
                               _want(data, "M", loc, int), eis)
        if fam == "TruncatedLambda":
            return TruncatedLambda(tuple(_want(data, "inverted_primes", loc, list)),
                                   _want(data, "M", loc, int))
    except SchemaError:
        raise
    except Exception as exc:
        raise SchemaError(str(exc), loc)
    raise SchemaError(f"unknown ring family '{fam}'", loc)


def ring_to_json(ring):
    if isinstance(ring, LocalizedIntegers):
        return {"family": "LocalizedIntegers", "inverted_primes": list(ring.inverted_primes)}
    if isinstance(ring, TruncatedPadic):
        return {"family": "TruncatedPadic", "p": ring.p, "N": ring.precision_n}
    if isinstance(ring, TruncatedPowerSeries):
        return {"family": "TruncatedPowerSeries", "p": ring.p, "M": ring.precision_m}
    if isinstance(ring, TruncatedBK):
        return {"family": "TruncatedBK", "p": ring.p, "N": ring.precision_n,
                "M": ring.precision_m,
                "eisenstein": {"coefficients": list(ring.eisenstein.coefficients),
                               "ramification_e": ring.eisenstein.ramification_e}}
    if isinstance(ring, TruncatedLambda):
        return {"family": "TruncatedLambda", "inverted_primes": list(ring.inverted_primes),
                "M": ring.precision_m}
    raise SchemaError(f"unserializable ring {type(ring).__name__}")


def _parse_fraction(v, loc):
    if isinstance(v, bool):
        raise SchemaError("booleans are not ring elements", loc)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            fr = Fraction(v)
        except Exception:
            raise SchemaError(f"'{v}' is not a fraction string", loc)
        if "/" in v:
            num, den = v.split("/")
            if Fraction(int(num), int(den)) != fr or int(den) <= 0 \
                    or abs(Fraction(int(num), int(den)).numerator) != abs(int(num)):
                raise SchemaError(
                    f"'{v}' is not reduced; write '{fr.numerator}/{fr.denominator}'", loc)
        return fr
    raise SchemaError("expected an integer or fraction string", loc)


def parse_element(v, ring, loc):
    if isinstance(ring, LocalizedIntegers):
        fr = _parse_fraction(v, loc)
        if ring.strip_s(fr.denominator) != 1:
            raise SchemaError(
                f"denominator {fr.denominator} is not supported on the inverted primes", loc)
        return fr
    if isinstance(ring, TruncatedPadic):
        if not isinstance(v, int) or isinstance(v, bool):
            raise SchemaError("expected an integer", loc)
        if not (0 <= v < ring.modulus):
            raise SchemaError(
                f"{v} is not canonical mod {ring.modulus}; write {v % ring.modulus}", loc)
        return v
    if isinstance(ring, (TruncatedPowerSeries, TruncatedBK, TruncatedLambda)):
        if not isinstance(v, list):
            raise SchemaError(f"expected a coefficient array of length {ring.mlen}", loc)
        if len(v) != ring.mlen:
            raise SchemaError(
                f"coefficient array must have exactly length {ring.mlen}", loc)
        if isinstance(ring, TruncatedLambda):
            return tuple(parse_element(c, ring.scalar, f"{loc}/{i}") for i, c in enumerate(v))
        return tuple(parse_element(c, ring.scalar, f"{loc}/{i}") for i, c in enumerate(v))
    raise SchemaError("unknown ring for element", loc)


def element_to_json(x, ring):
    if isinstance(ring, LocalizedIntegers):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(ring, TruncatedPadic):
        return int(x)
    if isinstance(ring, TruncatedLambda):
        return [element_to_json(c, ring.scalar) for c in x]
    if isinstance(ring, (TruncatedPowerSeries, TruncatedBK)):
        return [int(c) for c in x]
    raise SchemaError("unserializable element")


def parse_matrix(rows, ring, cols, loc):
    if not isinstance(rows, list):
        raise SchemaError("expected a row-major array of rows", loc)
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != cols:
            raise SchemaError(f"row {i} must have length {cols}", f"{loc}/{i}")
        out.append([parse_element(v, ring, f"{loc}/{i}/{j}") for j, v in enumerate(row)])
    return Mat(len(out), cols, out)


def matrix_to_json(mat, ring):
    return [[element_to_json(v, ring) for v in row] for row in mat.data]


def parse_module(data, loc="/module", ring=None):
    if ring is None:
        ring = parse_ring(_want(data, "ring", loc), loc + "/ring")
    gens = _want(data, "generators", loc, int)
    if gens < 0:
        raise SchemaError("generator count must be nonnegative", loc)
    rel = parse_matrix(_want(data, "relations", loc, list), ring, gens, loc + "/relations")
    return PresentedModule(ring, gens, rel)


def module_to_json(m):
    return {"ring": ring_to_json(m.ring), "generators": m.gens,
            "relations": matrix_to_json(m.relations, m.ring)}


def parse_map(data, loc="/map"):
    src = parse_module(_want(data, "source", loc), loc + "/source")
    tgt = parse_module(_want(data, "target", loc), loc + "/target", ring=src.ring)
    mat = parse_matrix(_want(data, "matrix", loc, list), src.ring, tgt.gens, loc + "/matrix")
    if mat.rows != src.gens:
        raise SchemaError(f"matrix needs {src.gens} rows", loc + "/matrix")
    return module_map(src, tgt, mat)


def map_to_json(f):
    return {"source": module_to_json(f.source), "target": module_to_json(f.target),
            "matrix": matrix_to_json(f.matrix, f.source.ring)}


def parse_ses(data, loc="/ses"):
    a = parse_module(_want(data, "a", loc), loc + "/a")
    b = parse_module(_want(data, "b", loc), loc + "/b", ring=a.ring)
    c = parse_module(_want(data, "c", loc), loc + "/c", ring=a.ring)
    inj = parse_matrix(_want(data, "inject", loc, list), a.ring, b.gens, loc + "/inject")
    sur = parse_matrix(_want(data, "surject", loc, list), a.ring, c.gens, loc + "/surject")
    from .modules import build_ses

    return build_ses(a, b, c, inj, sur)


def parse_filtered_complex(data, loc="/complex"):
    from .spectral import validate

    ring = parse_ring(_want(data, "ring", loc), loc + "/ring")
    lo = _want(data, "lo", loc, int)
    hi = _want(data, "hi", loc, int)
    wmin = _want(data, "wmin", loc, int)
    wmax = _want(data, "wmax", loc, int)
    mods_json = _want(data, "modules", loc, list)
    if len(mods_json) != hi - lo + 1:
        raise SchemaError(f"need {hi - lo + 1} modules for degrees {lo}..{hi}",
                          loc + "/modules")
    modules = {}
    for k, mj in enumerate(mods_json):
        modules[lo + k] = parse_module(mj, f"{loc}/modules/{k}", ring=ring)
    diffs_json = data.get("differentials", [])
    if len(diffs_json) != max(0, hi - lo):
        raise SchemaError(f"need {max(0, hi - lo)} differentials", loc + "/differentials")
    dmats = {}
    for k, rows in enumerate(diffs_json):
        i = lo + k + 1
        dmats[i] = parse_matrix(rows, ring, modules[i - 1].gens,
                                f"{loc}/differentials/{k}")
        if dmats[i].rows != modules[i].gens:
            raise SchemaError(f"differential {i} needs {modules[i].gens} rows",
                              f"{loc}/differentials/{k}")
    fil_data = {}
    for k, fj in enumerate(data.get("filtration", [])):
        floc = f"{loc}/filtration/{k}"
        i = _want(fj, "degree", floc, int)
        n = _want(fj, "weight", floc, int)
        sub = parse_module(_want(fj, "module", floc), floc + "/module", ring=ring)
        inc = parse_matrix(_want(fj, "inclusion", floc, list), ring,
                           modules[i].gens, floc + "/inclusion")
        fil_data[(i, n)] = (sub, inc)
    return validate(ring, lo, hi, wmin, wmax, modules, dmats, fil_data)


def parse_bk_module(data, loc="/bk"):
    from .breuil_kisin import make_bk_module

    mod = parse_module(_want(data, "module", loc), loc + "/module")
    if not isinstance(mod.ring, TruncatedBK):
        raise SchemaError("BK modules need a TruncatedBK ring", loc + "/module/ring")
    window = data.get("height_window", [0, 1])
    phi_rows = _want(data, "phi", loc, list)
    # the phi matrix maps the twisted presentation (same generator count)
    phi = parse_matrix(phi_rows, mod.ring, mod.gens, loc + "/phi")
    if phi.rows != mod.gens:
        raise SchemaError(f"phi needs {mod.gens} rows", loc + "/phi")
    return make_bk_module(mod, phi, tuple(window))


def parse_tower(data, loc="/tower"):
    """Recursive tower certificate: leaves carry a kind tag, extension nodes
    carry sub/quot towers with inclusion and projection matrices."""
    from .breuil_kisin import extension_node, leaf

    kind = _want(data, "kind", loc, str)
    bk = parse_bk_module(_want(data, "bk", loc), loc + "/bk")
    if kind in ("mod_s1", "free"):
        return leaf(bk, kind)
    if kind != "extension":
        raise SchemaError(f"unknown tower kind '{kind}'", loc)
    sub = parse_tower(_want(data, "sub", loc), loc + "/sub")
    quot = parse_tower(_want(data, "quot", loc), loc + "/quot")
    ring = bk.ring
    inc = parse_matrix(_want(data, "incl", loc, list), ring,
                       bk.module.gens, loc + "/incl")
    prj = parse_matrix(_want(data, "proj", loc, list), ring,
                       quot.bk.module.gens, loc + "/proj")
    incl = module_map(sub.bk.module, bk.module, inc)
    proj = module_map(bk.module, quot.bk.module, prj)
    return extension_node(bk, sub, incl, quot, proj)


def parse_cw(data, loc="/cw"):
    from .cw import make_cw

    cells = _want(data, "cells", loc, list)
    boundaries = data.get("boundaries", [])
    return make_cw(cells, boundaries)


def cw_to_json(x):
    return {"cells": list(x.cells),
            "boundaries": [[[int(v) for v in row] for row in b.data] for b in x.boundaries]}


def jsonable(x):
    """Best-effort canonical JSON conversion for report payloads."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, Mat):
        return [[jsonable(v) for v in row] for row in x.data]
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in sorted(x.items(), key=lambda kv: str(kv[0]))}
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    if hasattr(x, "__dict__"):
        return {k: jsonable(v) for k, v in sorted(vars(x).items())}
    return str(x)
