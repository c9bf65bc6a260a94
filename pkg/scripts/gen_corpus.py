#!/usr/bin/env python3
"""Regenerate the shipped job corpus (corpus/*.json).

Deterministic: file contents depend only on this script."""

import json
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
CORPUS = os.path.join(HERE, "..", "corpus")


def bk_ring(p, n, m):
    return {"family": "TruncatedBK", "p": p, "N": n, "M": m,
            "eisenstein": {"coefficients": [-p, 1], "ramification_e": 1}}


def zp_ring(p, n):
    return {"family": "TruncatedPadic", "p": p, "N": n}


def lam_ring(s, m):
    return {"family": "TruncatedLambda", "inverted_primes": s, "M": m}


def vec(m, *coeffs):
    out = list(coeffs) + [0] * (m - len(coeffs))
    return out[:m]


def jobs():
    out = {}

    # golden degeneration trichotomy: Z/p^2 with fil^1 = p Z/p^2, p = 3, N = 4
    zp34 = zp_ring(3, 4)
    out["ss_golden_trichotomy.json"] = {
        "command": "ss-report",
        "input": {"complex": {
            "ring": zp34, "lo": 0, "hi": 0, "wmin": 0, "wmax": 1,
            "modules": [{"generators": 1, "relations": [[9]]}],
            "differentials": [],
            "filtration": [{"degree": 0, "weight": 1,
                            "module": {"generators": 1, "relations": [[3]]},
                            "inclusion": [[3]]}]}},
        "options": {"oracle": True}}

    # direct-sum filtration: split
    out["ss_direct_sum_split.json"] = {
        "command": "ss-report",
        "input": {"complex": {
            "ring": zp34, "lo": 0, "hi": 0, "wmin": 0, "wmax": 1,
            "modules": [{"generators": 2, "relations": [[9, 0], [0, 3]]}],
            "differentials": [],
            "filtration": [{"degree": 0, "weight": 1,
                            "module": {"generators": 1, "relations": [[3]]},
                            "inclusion": [[0, 1]]}]}},
        "options": {}}

    # identity base change of the golden case
    out["ss_basechange_identity.json"] = {
        "command": "ss-basechange",
        "input": {"complex": out["ss_golden_trichotomy.json"]["input"]["complex"],
                  "spec": {"kind": "identity"}},
        "options": {}}

    # SNF golden
    out["snf_2468.json"] = {
        "command": "snf",
        "input": {"ring": zp_ring(2, 6), "matrix": [[2, 4], [6, 8]]},
        "options": {}}

    # ext1 golden with oracle (p = 2, N = 4, M = 3)
    bk243 = bk_ring(2, 4, 3)
    out["ext_golden_p2.json"] = {
        "command": "ext1",
        "input": {"c": {"ring": bk243, "generators": 1, "relations": [[vec(3, 4)]]},
                  "a": {"ring": bk243, "generators": 1, "relations": [[vec(3, 8)]]}},
        "options": {"oracle": True}}

    # split test: genuinely p^2-cyclic middle is nonsplit
    zp23 = zp_ring(2, 3)
    out["split_nonsplit_zp2.json"] = {
        "command": "split",
        "input": {"ses": {
            "a": {"ring": zp23, "generators": 1, "relations": [[2]]},
            "b": {"ring": zp23, "generators": 1, "relations": [[4]]},
            "c": {"ring": zp23, "generators": 1, "relations": [[2]]},
            "inject": [[2]], "surject": [[1]]}},
        "options": {}}

    # decompose: scrambled elementary module over truncated W[[z]]
    bk332 = bk_ring(3, 3, 2)
    out["decompose_scrambled.json"] = {
        "command": "decompose",
        "input": {"module": {"ring": bk332, "generators": 2,
                             "relations": [[vec(2, 9), vec(2, 9)],
                                           [vec(2, 0), vec(2, 0)]]}},
        "options": {}}

    # decompose rejection: S/(p, z) with the slice-0 certificate
    out["decompose_spz.json"] = {
        "command": "decompose",
        "input": {"module": {"ring": bk332, "generators": 1,
                             "relations": [[vec(2, 3)], [vec(2, 0, 1)]]}},
        "options": {}}

    # cw goldens
    out["cw_s2.json"] = {"command": "cw-ktheory",
                         "input": {"cw": {"cells": [1, 0, 1],
                                          "boundaries": [[], [[]]]}},
                         "options": {}}
    out["cw_rp2.json"] = {"command": "cw-ktheory",
                          "input": {"cw": {"cells": [1, 1, 1],
                                           "boundaries": [[[0]], [[2]]]}},
                          "options": {}}
    out["cw_cp2.json"] = {"command": "cw-ktheory",
                          "input": {"cw": {"cells": [1, 0, 1, 0, 1],
                                           "boundaries": [[], [[]], [], [[]]]}},
                          "options": {}}
    out["cw_verify_rp2.json"] = {"command": "cw-verify",
                                 "input": out["cw_rp2.json"]["input"], "options": {}}

    # lambda: the nonsplit /9 family over S = {2}
    lam = lam_ring([2], 2)
    out["lambda_survey_nonsplit9.json"] = {
        "command": "lambda-survey",
        "input": {"ses": {
            "a": {"ring": lam, "generators": 1, "relations": [[[3, 0]]]},
            "b": {"ring": lam, "generators": 1, "relations": [[[9, 0]]]},
            "c": {"ring": lam, "generators": 1, "relations": [[[3, 0]]]},
            "inject": [[[3, 0]]], "surject": [[[1, 0]]]}},
        "options": {}}

    # lambda zero-detection: multiplication by (q-1) on Lambda/(q-1)^2 at M = 3
    lam3 = lam_ring([2], 3)
    out["lambda_zero_qminus1.json"] = {
        "command": "lambda-zero",
        "input": {"map": {
            "source": {"ring": lam3, "generators": 1, "relations": [[[0, 0, 1]]]},
            "target": {"ring": lam3, "generators": 1, "relations": [[[0, 0, 1]]]},
            "matrix": [[[0, 1, 0]]]}},
        "options": {}}

    # bk heights
    bk334 = bk_ring(3, 3, 4)
    out["bk_height_identity.json"] = {
        "command": "bk-height",
        "input": {"bk": {"module": {"ring": bk334, "generators": 1,
                                    "relations": [[vec(4, 3)]]},
                         "phi": [[vec(4, 1)]], "height_window": [0, 0]},
                  "s": 0, "r": 0},
        "options": {}}

    # crossing the Frobenius trusted-precision boundary must exit 3
    bk222 = bk_ring(2, 2, 2)
    out["bk_height_precision_cross.json"] = {
        "command": "bk-height",
        "input": {"bk": {"module": {"ring": bk222, "generators": 1,
                                    "relations": [[vec(2, 2)]]},
                         "phi": [[vec(2, 0, 1)]], "height_window": [0, 1]},
                  "s": 0, "r": 1},
        "options": {}}

    # bk structure with an explicit tower: S/p^2 as an extension of S/p by S/p
    bk232 = bk_ring(2, 3, 2)
    sp1 = {"module": {"ring": bk232, "generators": 1, "relations": [[vec(2, 2)]]},
           "phi": [[vec(2, 1)]], "height_window": [0, 1]}
    sp2 = {"module": {"ring": bk232, "generators": 1, "relations": [[vec(2, 4)]]},
           "phi": [[vec(2, 1)]], "height_window": [0, 1]}
    out["bk_structure_tower.json"] = {
        "command": "bk-structure",
        "input": {"bk": sp2, "r": 1,
                  "tower": {"kind": "extension", "bk": sp2,
                            "sub": {"kind": "mod_s1", "bk": sp1},
                            "quot": {"kind": "mod_s1", "bk": sp1},
                            "incl": [[vec(2, 2)]], "proj": [[vec(2, 1)]]}},
        "options": {}}

    # exploration mode: e*r >= p-1 at p = 2
    out["bk_structure_exploration.json"] = {
        "command": "bk-structure",
        "input": {"bk": sp2, "r": 1},
        "options": {}}
    return out


def main():
    os.makedirs(CORPUS, exist_ok=True)
    for name, job in jobs().items():
        path = os.path.join(CORPUS, name)
        with open(path, "w") as fh:
            json.dump(job, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print("wrote", os.path.relpath(path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
