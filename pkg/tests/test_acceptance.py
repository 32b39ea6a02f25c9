"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary
(see ``conftest.py``).  Run this file directly to print the lines without
pytest.
"""

import time

import pytest

from cqtraj import checks

# criterion number -> (check name, runtime budget in seconds)
CRITERIA = {
    1: ("1_born_equivalence", 10),
    2: ("2_invariant_constancy", 30),
    3: ("3_classification", 60),
    4: ("4_continuity", 120),
    5: ("5_source_identity", 60),
    6: ("6_net_source", 60),
    7: ("7_fraction_inside", 600),
    8: ("8_separatrix_widths", 60),
    9: ("9_classical_widths", 1),
    10: ("10_path_density", 60),
}

RESULTS: list[str] = []


def _line(k, name, rep, runtime, budget):
    failed = [c["name"] for c in rep.conditions if not checks.evaluate(c)]
    verdict = "PASS" if rep.passed and runtime <= budget else "FAIL"
    extra = f"; failing: {', '.join(failed)}" if failed else ""
    slow = f"; over budget {budget} s" if runtime > budget else ""
    return f"{verdict} criterion {k} ({name}): value={rep.computed_value!r} in {runtime:.2f} s{extra}{slow}"


def run_criterion(k):
    name, budget = CRITERIA[k]
    t0 = time.perf_counter()
    rep = checks.ACCEPTANCE[name]()
    runtime = time.perf_counter() - t0
    line = _line(k, name, rep, runtime, budget)
    RESULTS.append(line)
    return rep, runtime, budget, line


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    rep, runtime, budget, line = run_criterion(k)
    print(line)
    assert rep.passed, line
    assert runtime <= budget, line


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        print(run_criterion(k)[3], flush=True)
