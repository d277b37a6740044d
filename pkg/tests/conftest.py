import time
from pathlib import Path

import pytest

from curvlab.corpus import corpus_list, get_case
from curvlab.dsl import parse_metric_file
from curvlab.reports import SamplePlan

ROOT = Path(__file__).resolve().parents[1]
CASES_DIR = ROOT / "cases"
SUITE_BUDGET_S = 300.0

# one line per acceptance criterion, filled by test_acceptance and printed after the run
ACCEPTANCE: dict[int, str] = {}
_STARTED = time.perf_counter()


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _STARTED
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        tr.write_line(ACCEPTANCE[n])
    ok = elapsed < SUITE_BUDGET_S
    tr.write_line(f"suite runtime: {'PASS' if ok else 'FAIL'}  {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)")


def corpus_metric_files():
    """(name, MetricFile) for every corpus file that carries a metric."""
    out = []
    for case in corpus_list():
        for fname, text in get_case(case).files.items():
            mf = parse_metric_file(text)
            if mf.metric is not None:
                out.append((fname, mf))
    return out


def plan_of(mf, n_points=None) -> SamplePlan:
    plan = SamplePlan.from_mapping(mf.plan, mf.params)
    if n_points is not None:
        plan = SamplePlan(plan.boxes, n_points, plan.seed, plan.exclusions, plan.params)
    return plan


@pytest.fixture(scope="session")
def metric_files():
    return corpus_metric_files()
