import json
import os
import subprocess
import sys

import pytest

from truncalg.cli import emit, run_job

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus")


def load(name):
    with open(os.path.join(CORPUS, name)) as fh:
        return json.load(fh)


def test_exit_codes_on_corpus():
    """Taxonomy is total and code 4 never occurs on the shipped corpus."""
    codes = {}
    for name in sorted(os.listdir(CORPUS)):
        if not name.endswith(".json") or name.endswith(".report.json"):
            continue
        report, code = run_job(load(name))
        codes[name] = code
        assert code in (0, 2, 3), (name, code, report.get("error"))
        assert code != 4
    assert codes["bk_height_precision_cross.json"] == 3
    assert codes["ss_golden_trichotomy.json"] == 0


def test_golden_trichotomy_verdicts():
    report, code = run_job(load("ss_golden_trichotomy.json"))
    v = report["verdicts"]
    assert (v["degenerate"], v["saturated"], v["split"]) == (True, True, False)
    assert v["oracle_agrees"]
    assert report["ledgers"]["torsion_lengths"]["0"] == {"homology": 2, "graded": [1, 1]}


def test_byte_determinism():
    job = load("ss_golden_trichotomy.json")
    r1, _ = run_job(job)
    r2, _ = run_job(job)
    assert emit(r1) == emit(r2)
    assert r1["timing_ms"] is None


def test_round_trip_parse_emit():
    report, _ = run_job(load("cw_rp2.json"))
    text = emit(report)
    back = json.loads(text)
    assert back["verdicts"] == json.loads(emit(report))["verdicts"]
    assert back["version"] == report["version"]


def test_schema_error_exit_1():
    report, code = run_job({"command": "snf",
                            "input": {"ring": {"family": "Bogus"}, "matrix": []}})
    assert code == 1 and report["error_kind"] == "schema"
    report2, code2 = run_job({"command": "nope", "input": {}})
    assert code2 == 1


def test_noncanonical_element_rejected_with_hint():
    job = {"command": "snf",
           "input": {"ring": {"family": "TruncatedPadic", "p": 2, "N": 2},
                     "matrix": [[5]]},
           "options": {}}
    report, code = run_job(job)
    assert code == 1
    assert "canonical" in report["error"] and "1" in report["error"]


def test_fraction_denominator_rejected():
    job = {"command": "snf",
           "input": {"ring": {"family": "LocalizedIntegers", "inverted_primes": [2]},
                     "matrix": [["1/3"]]},
           "options": {}}
    report, code = run_job(job)
    assert code == 1 and "/input/matrix/0/0" in report["error"]


def test_precision_override_option():
    job = load("ext_golden_p2.json")
    job = dict(job, options={"precision_n": 5})
    report, code = run_job(job)
    assert code == 0
    assert report["job"]["options"]["precision_n"] == 5


def test_text_format_renders_ledger():
    report, _ = run_job(load("ss_golden_trichotomy.json"))
    text = emit(report, "text")
    assert "torsion-length ledger" in text
    assert "degree | len(H_tors)" in text


def test_cli_process_end_to_end(tmp_path):
    out = tmp_path / "report.json"
    proc = subprocess.run(
        [sys.executable, "-m", "truncalg.cli", "cw-ktheory",
         "--input", os.path.join(CORPUS, "cw_rp2.json"),
         "--output", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    data = json.loads(out.read_text())
    assert data["verdicts"]["k0"] == {"rank": 0, "torsion": [2]}


def test_cli_batch_mode(tmp_path):
    import shutil

    for name in ("cw_s2.json", "snf_2468.json"):
        shutil.copy(os.path.join(CORPUS, name), tmp_path / name)
    proc = subprocess.run(
        [sys.executable, "-m", "truncalg.cli", "--corpus-dir", str(tmp_path),
         "--workers", "2"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "cw_s2.report.json").exists()
    assert (tmp_path / "snf_2468.report.json").exists()


def test_exploration_mode_flag():
    report, code = run_job(load("bk_structure_exploration.json"))
    assert code == 0
    assert report["hypothesis_flag"] is True
    assert report["verdicts"]["elementary"] is True


def test_tower_job():
    report, code = run_job(load("bk_structure_tower.json"))
    assert code == 0
    assert report["verdicts"]["torsion_exponents"] == [2]
    assert any("tower" in n for n in report["witnesses"]["notes"])
