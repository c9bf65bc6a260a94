"""Batch front end: input parsing, command dispatch, report emission.

Exit codes: 0 completed, 2 hypothesis gate unmet, 3 precision-limited,
4 internal inconsistency (a checked theorem came out false -- a bug or a
precision artifact, never a mathematical discovery claim).  Input and schema
problems exit 1 before dispatch.

Reports are byte-deterministic for fixed input and version: keys are sorted
and the timing field stays null unless --timing is passed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

from . import VERSION_STAMP
from .errors import (
    HypothesisUnmetError,
    InternalInconsistencyError,
    NotElementaryError,
    NotWellDefinedError,
    PrecisionError,
    SchemaError,
    TruncalgError,
    UnsupportedRingError,
)
from .linalg import Mat
from .schemas import (
    cw_to_json,
    jsonable,
    map_to_json,
    matrix_to_json,
    module_to_json,
    parse_bk_module,
    parse_cw,
    parse_filtered_complex,
    parse_map,
    parse_matrix,
    parse_module,
    parse_ring,
    parse_ses,
    parse_tower,
    ring_to_json,
)

COMMANDS = ("snf", "decompose", "ext1", "split", "ss-report", "ss-basechange",
            "bk-height", "bk-structure", "cw-ktheory", "cw-verify",
            "lambda-survey", "lambda-zero", "oracle")


def _want(obj, key, types=None):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"job input is missing '{key}'", "/input")
    return obj[key]


def _apply_precision_overrides(data, options):
    """Rewrite declared ring precisions before parsing, where requested."""
    pn, pm = options.get("precision_n"), options.get("precision_m")
    if pn is None and pm is None:
        return data

    def walk(node):
        if isinstance(node, dict):
            if node.get("family") in ("TruncatedPadic", "TruncatedBK") and pn is not None:
                node = dict(node, N=pn)
            if node.get("family") in ("TruncatedPowerSeries", "TruncatedBK",
                                      "TruncatedLambda") and pm is not None:
                node = dict(node, M=pm)
            return {k: walk(v) for k, v in node.items()}
        if isinstance(node, list):
            return [walk(v) for v in node]
        return node

    return walk(data)


def run_command(command, input_data, options):
    """Dispatch to the owning module; returns the verdict payload."""
    from . import breuil_kisin as bkm
    from . import cw as cwm
    from . import ext as extm
    from . import local_global as lgm
    from . import modules as mods
    from . import spectral as spec
    from .smodules import NotElementary, decompose_over_s

    oracle_on = bool(options.get("oracle"))

    if command == "snf":
        ring = parse_ring(_want(input_data, "ring"))
        rows = _want(input_data, "matrix")
        cols = len(rows[0]) if rows else int(input_data.get("cols", 0))
        mat = parse_matrix(rows, ring, cols, "/input/matrix")
        res = mods.smith_normal_form(mat, ring)
        if not res.verify(mat, ring):
            raise InternalInconsistencyError("SNF witnesses failed to verify")
        return {"verdicts": {"divisors": [jsonable_elt(d, ring) for d in res.divisors]},
                "witnesses": {"left": matrix_to_json(res.left, ring),
                              "right": matrix_to_json(res.right, ring)},
                "ledgers": {}}

    if command == "decompose":
        from .rings import TruncatedBK

        m = parse_module(_want(input_data, "module"), "/input/module")
        if isinstance(m.ring, TruncatedBK):
            dec = decompose_over_s(m)
            if isinstance(dec, NotElementary):
                return {"verdicts": {"elementary": False,
                                     "failing_gr_slice": dec.failing_j},
                        "witnesses": {"certificate": jsonable(dec.certificate)},
                        "ledgers": {}}
        else:
            dec = mods.decompose_elementary(m)
        return {"verdicts": {"elementary": True, "free_rank": dec.free_rank,
                             "torsion_divisors": [jsonable_elt(d, m.ring)
                                                  for d in dec.torsion_divisors]},
                "witnesses": {"to_canonical": matrix_to_json(dec.to_canonical.matrix, m.ring),
                              "from_canonical": matrix_to_json(dec.from_canonical.matrix, m.ring),
                              "witness_verified": dec.verify()},
                "ledgers": {}}

    if command == "ext1":
        c = parse_module(_want(input_data, "c"), "/input/c")
        a = parse_module(_want(input_data, "a"), "/input/a", ring=c.ring)
        exps, free = extm.ext1_divisor_exponents(c, a)
        payload = {"verdicts": {"torsion_exponents": exps, "free_rank": free},
                   "witnesses": {"module": module_to_json(extm.ext1(c, a))},
                   "ledgers": {}}
        if oracle_on:
            cexp, cfree = extm._elementary_exponents(c)
            aexp, afree = extm._elementary_exponents(a)
            if len(cexp) == 1 and len(aexp) == 1 and not cfree and not afree:
                orc = extm.ext1_cocycle_oracle(cexp[0], aexp[0], c.ring)
                agree = (orc.abelian_exponent_multiset
                         == sorted(exps * getattr(c.ring, "mlen", 1)))
                payload["verdicts"]["oracle_agrees"] = bool(
                    agree and orc.split_set_is_coboundaries)
                payload["witnesses"]["oracle"] = jsonable(orc)
        return payload

    if command == "split":
        ses = parse_ses(_want(input_data, "ses"), "/input/ses")
        v = mods.split_test(ses)
        out = {"verdicts": {"split": v.split}, "witnesses": {}, "ledgers": {}}
        if v.split:
            out["witnesses"]["section"] = matrix_to_json(v.section.matrix, ses.a.ring)
        else:
            out["witnesses"]["obstruction"] = jsonable(v.obstruction)
        return out

    if command in ("ss-report", "oracle"):
        x = parse_filtered_complex(_want(input_data, "complex"), "/input/complex")
        if command == "oracle":
            verdicts = spec.oracle(x)
            return {"verdicts": jsonable(verdicts), "witnesses": {}, "ledgers": {}}
        rep = spec.degeneration_report(x)
        payload = report_payload(rep)
        if oracle_on:
            try:
                orc = spec.oracle(x)
            except UnsupportedRingError as exc:
                payload["verdicts"]["oracle"] = f"skipped: {exc}"
            else:
                agree = all(orc[k] == payload["verdicts"][k] for k in orc)
                if not agree:
                    raise InternalInconsistencyError("oracle disagrees with the checker")
                payload["verdicts"]["oracle_agrees"] = True
        if rep.precision_limited:
            payload["exit_code_override"] = 3
        return payload

    if command == "ss-basechange":
        x = parse_filtered_complex(_want(input_data, "complex"), "/input/complex")
        spec_json = _want(input_data, "spec")
        bspec = mods.BaseChangeSpec(
            kind=spec_json.get("kind"), unit=spec_json.get("unit"),
            ell=spec_json.get("ell"), precision_n=spec_json.get("precision_n"))
        rep, descent = spec.base_change_report(x, bspec)
        if isinstance(rep, spec.TensoredReport):
            payload = {"verdicts": {"degenerate_after_tensoring": rep.degenerate,
                                    "split_after_tensoring": rep.split,
                                    "sscritflat_checked": rep.sscritflat_checked},
                       "witnesses": {"per_entry": jsonable(
                           {f"{i},{n}": v for (i, n), v in rep.per_entry.items()})},
                       "ledgers": {"tensored_h_profiles": jsonable(rep.h_profiles),
                                   "tensored_e1_profiles": jsonable(rep.e1_profiles)}}
        else:
            payload = report_payload(rep)
        payload["verdicts"]["descent"] = jsonable(descent)
        return payload

    if command == "bk-height":
        b = parse_bk_module(_want(input_data, "bk"), "/input/bk")
        s, r = int(_want(input_data, "s")), int(_want(input_data, "r"))
        trail = [f"frobenius trusted z-precision: {b.ring.frobenius_trusted_precision}"]
        cert = bkm.check_height(b, s, r)
        if isinstance(cert, bkm.HeightFailure):
            return {"verdicts": {"height_in_window": False, "failed_side": cert.side},
                    "witnesses": {"failures": jsonable(cert.failures)}, "ledgers": {},
                    "precision_trail": trail}
        return {"verdicts": {"height_in_window": True},
                "witnesses": {"upper": matrix_to_json(cert.upper, b.ring),
                              "lower": matrix_to_json(cert.lower, b.ring)},
                "ledgers": {}, "precision_trail": trail}

    if command == "bk-structure":
        b = parse_bk_module(_want(input_data, "bk"), "/input/bk")
        r = int(input_data.get("r", b.height_window[1]))
        tower = None
        if input_data.get("tower"):
            tower = parse_tower(input_data["tower"], "/input/tower")
        res = bkm.structure_check(b, r, tower=tower)
        verdicts = {"hypothesis_met": res.hypothesis_met,
                    "elementary": res.elementary is not None,
                    "gr_ranks": res.gr_ranks}
        witnesses = {"notes": res.notes}
        if res.elementary is not None:
            verdicts["free_rank"] = res.elementary.free_rank
            verdicts["torsion_exponents"] = sorted(
                b.ring.p_valuation(d) for d in res.elementary.torsion_divisors)
        else:
            witnesses["counterexample"] = jsonable(res.counterexample.certificate)
            verdicts["failing_gr_slice"] = res.counterexample.failing_j
        return {"verdicts": verdicts, "witnesses": witnesses, "ledgers": {},
                "hypothesis_flag": not res.hypothesis_met}

    if command == "cw-ktheory":
        x = parse_cw(_want(input_data, "cw"), "/input/cw")
        k = cwm.ktheory(x)
        return {"verdicts": {
                    "dimension": k.d, "denominator_index": k.m_index,
                    "denominator_factorial": k.m_factorial,
                    "inverted_primes": list(k.inverted),
                    "k0": {"rank": k.k0.rank, "torsion": list(k.k0.torsion_divisors)},
                    "k1": {"rank": k.k1.rank, "torsion": list(k.k1.torsion_divisors)}},
                "witnesses": {"even_odd_identity": True},
                "ledgers": {"reduced_cohomology": {
                    str(j): {"rank": g.rank, "torsion": list(g.torsion_divisors)}
                    for j, g in cwm.reduced_cohomology(x, k.inverted).items()}}}

    if command == "cw-verify":
        x = parse_cw(_want(input_data, "cw"), "/input/cw")
        trace = cwm.skeletal_verification(x)
        all_exact = all(n["exact"] for step in trace for n in step["nodes"])
        return {"verdicts": {"all_nodes_exact": all_exact,
                             "steps": len(trace)},
                "witnesses": {"trace": jsonable(trace)}, "ledgers": {}}

    if command == "lambda-survey":
        ses = parse_ses(_want(input_data, "ses"), "/input/ses")
        ls = lgm.LambdaSES(ses)
        primes = input_data.get("primes")
        bound = options.get("prime_bound")
        if primes is None and bound is not None:
            from sympy import primerange

            primes = [q for q in primerange(2, bound + 1)
                      if q not in ses.a.ring.inverted_primes]
        survey = lgm.local_split_survey(ls, primes=primes,
                                        precision_n=options.get("precision_n_local"))
        payload = {"verdicts": {"per_prime": {str(k): v for k, v in survey.verdicts.items()},
                                "globally_split": survey.globally_split,
                                "obstruction_primes": survey.obstruction_primes,
                                "covered": survey.covered},
                   "witnesses": {}, "ledgers": {}}
        if survey.globally_split and survey.covered and \
                all(survey.verdicts.get(q, True) for q in survey.obstruction_primes):
            section = lgm.global_split_conclude(ls, survey)
            payload["witnesses"]["global_section"] = matrix_to_json(
                section.matrix, ses.a.ring)
        return payload

    if command == "lambda-zero":
        f = parse_map(_want(input_data, "map"), "/input/map")
        rep = lgm.zero_local_global(f)
        return {"verdicts": {"is_zero": rep.direct_zero,
                             "witness_prime": rep.witness_prime,
                             "support_everywhere": rep.support_everywhere,
                             "agreement": rep.agreement},
                "witnesses": {"certified_primes": rep.certified_primes,
                              "per_prime_zero": {str(k): v for k, v in rep.local_zero.items()}},
                "ledgers": {}}

    raise SchemaError(f"unknown command '{command}'")


def jsonable_elt(x, ring):
    from .schemas import element_to_json

    return element_to_json(x, ring)


def report_payload(rep):
    return {"verdicts": {"rationally_degenerate": rep.rationally_degenerate,
                         "degenerate": rep.degenerate,
                         "saturated": rep.saturated,
                         "split": rep.split,
                         "sscrit_applicable": rep.sscrit_applicable,
                         "precision_limited": rep.precision_limited},
            "witnesses": jsonable(rep.witnesses),
            "ledgers": {"torsion_lengths": {
                str(i): {"homology": lt, "graded": per}
                for i, (lt, per) in sorted(rep.length_ledger.items())},
                "homology_profiles": {str(i): list(v)
                                      for i, v in sorted(rep.h_torsion_profiles.items())},
                "e1_profiles": {str(i): list(v)
                                for i, v in sorted(rep.e1_torsion_profiles.items())}},
            "notes": rep.notes}


def run_job(job, timing=False):
    """Execute one job dict; returns (report dict, exit code)."""
    started = time.time()
    exit_code = 0
    payload = {}
    hypothesis_flag = False
    try:
        command = job.get("command")
        if command not in COMMANDS:
            raise SchemaError(f"unknown command '{command}'", "/command")
        options = job.get("options", {}) or {}
        input_data = _apply_precision_overrides(job.get("input", {}), options)
        payload = run_command(command, input_data, options)
        hypothesis_flag = payload.pop("hypothesis_flag", False)
        exit_code = payload.pop("exit_code_override", 0)
    except SchemaError as exc:
        payload = {"error": str(exc), "error_kind": "schema"}
        exit_code = 1
    except (HypothesisUnmetError, UnsupportedRingError, NotWellDefinedError,
            NotElementaryError) as exc:
        payload = {"error": str(exc), "error_kind": "hypothesis_gate"}
        exit_code = 2
    except PrecisionError as exc:
        payload = {"error": str(exc), "error_kind": "precision_limited"}
        exit_code = 3
    except InternalInconsistencyError as exc:
        payload = {"error": str(exc), "error_kind": "internal_inconsistency"}
        exit_code = 4
    elapsed_ms = int((time.time() - started) * 1000)
    report = {
        "version": VERSION_STAMP,
        "command": job.get("command"),
        "job": job,
        "exit_code": exit_code,
        "hypothesis_flag": hypothesis_flag,
        "timing_ms": elapsed_ms if timing else None,
    }
    report.update({k: payload.get(k) for k in ("verdicts", "witnesses", "ledgers", "notes")
                   if k in payload})
    if "error" in payload:
        report["error"] = payload["error"]
        report["error_kind"] = payload["error_kind"]
    precision_trail = payload.get("precision_trail", [])
    report["precision_trail"] = precision_trail
    return report, exit_code


def emit(report, fmt="json"):
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"
    lines = [f"truncalg report ({report['version']})",
             f"command: {report['command']}  exit: {report['exit_code']}"]
    if report.get("error"):
        lines.append(f"error [{report['error_kind']}]: {report['error']}")
    verdicts = report.get("verdicts") or {}
    for k, v in sorted(verdicts.items()):
        lines.append(f"  {k}: {v}")
    ledgers = report.get("ledgers") or {}
    tl = ledgers.get("torsion_lengths")
    if tl:
        lines.append("  torsion-length ledger:")
        lines.append("    degree | len(H_tors) | per-weight graded lengths")
        for i, row in sorted(tl.items(), key=lambda kv: int(kv[0])):
            lines.append(f"    {i:>6} | {row['homology']:>11} | {row['graded']}")
    if report.get("timing_ms") is not None:
        lines.append(f"  wall time: {report['timing_ms']} ms")
    return "\n".join(lines) + "\n"


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".truncalg-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="truncalg",
        description="exact desk-scale algebra over truncated local rings")
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="command to run (omit with --corpus-dir)")
    ap.add_argument("--input", help="path to a JSON input document")
    ap.add_argument("--output", help="path to write the report (default stdout)")
    ap.add_argument("--format", choices=("json", "text"), default="json")
    ap.add_argument("--oracle", action="store_true",
                    help="run the element-level oracle when in bounds")
    ap.add_argument("--prime-bound", type=int, default=None)
    ap.add_argument("--precision-N", type=int, default=None, dest="precision_n")
    ap.add_argument("--precision-M", type=int, default=None, dest="precision_m")
    ap.add_argument("--workers", type=int, default=max(1, (os.cpu_count() or 2) // 2))
    ap.add_argument("--corpus-dir", help="process every .json job in a directory")
    ap.add_argument("--timing", action="store_true",
                    help="include wall time in the JSON report (breaks byte stability)")
    args = ap.parse_args(argv)

    if args.corpus_dir:
        paths = sorted(p for p in os.listdir(args.corpus_dir)
                       if p.endswith(".json") and not p.endswith(".report.json"))
        codes = {}

        def work(name):
            full = os.path.join(args.corpus_dir, name)
            with open(full) as fh:
                job = json.load(fh)
            job = _merge_cli_options(job, args)
            report, code = run_job(job, timing=args.timing)
            out = full[:-5] + ".report.json"
            _atomic_write(out, emit(report, "json"))
            return name, code

        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            for name, code in pool.map(work, paths):
                codes[name] = code
                print(f"{name}: exit {code}")
        return max(codes.values()) if codes else 0

    if not args.command:
        ap.error("a command or --corpus-dir is required")
    if args.input:
        with open(args.input) as fh:
            doc = json.load(fh)
    else:
        doc = json.load(sys.stdin)
    config_path = os.environ.get("TRUNCALG_CONFIG")
    if config_path and os.path.exists(config_path):
        with open(config_path) as fh:
            defaults = json.load(fh).get("options", {})
        if isinstance(doc, dict) and "command" in doc:
            doc = dict(doc, options={**defaults, **(doc.get("options") or {})})
    if "command" in doc:
        job = doc
        if job.get("command") != args.command:
            print(f"warning: job file command {job.get('command')!r} "
                  f"overridden by CLI {args.command!r}", file=sys.stderr)
            job = dict(job, command=args.command)
    else:
        job = {"command": args.command, "input": doc, "options": {}}
    job = _merge_cli_options(job, args)
    report, code = run_job(job, timing=args.timing)
    text = emit(report, args.format)
    if args.output:
        _atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    return code


def _merge_cli_options(job, args):
    options = dict(job.get("options", {}) or {})
    if args.oracle:
        options["oracle"] = True
    if args.prime_bound is not None:
        options["prime_bound"] = args.prime_bound
    if args.precision_n is not None:
        options["precision_n"] = args.precision_n
    if args.precision_m is not None:
        options["precision_m"] = args.precision_m
    return dict(job, options=options)


if __name__ == "__main__":
    sys.exit(main())
