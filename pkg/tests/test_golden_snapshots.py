"""Byte-level golden comparison against the frozen corpus reports.

Regenerate the frozen snapshots with:
    python3 -m truncalg.cli --corpus-dir corpus
"""

import json
import os

import pytest

from truncalg.cli import emit, run_job

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus")

JOBS = sorted(p for p in os.listdir(CORPUS)
              if p.endswith(".json") and not p.endswith(".report.json"))


@pytest.mark.parametrize("name", JOBS)
def test_byte_stable_against_snapshot(name):
    with open(os.path.join(CORPUS, name)) as fh:
        job = json.load(fh)
    report, _ = run_job(job)
    frozen_path = os.path.join(CORPUS, name[:-5] + ".report.json")
    assert os.path.exists(frozen_path), "snapshot missing; regenerate the corpus reports"
    with open(frozen_path) as fh:
        frozen = fh.read()
    assert emit(report, "json") == frozen
