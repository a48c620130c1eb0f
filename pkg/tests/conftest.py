"""Shared fixtures and the acceptance-summary report hook."""

import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jpac.formulation import normalize
from jpac.network import generate_instance, sample_gains

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def inst3():
    return generate_instance(3, rng_seed=7)


@pytest.fixture(scope="session")
def samples3(inst3):
    return sample_gains(inst3, 6, rng_seed=8)


@pytest.fixture(scope="session")
def prob3(inst3, samples3):
    return normalize(inst3, samples3)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260816)


_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)(?:_(\w+))?")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, printed after the run."""
    status = {}
    for outcome in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m is None:
                continue
            num = int(m.group(1))
            label = (m.group(2) or "").replace("_", " ")
            mark = "PASS" if outcome == "passed" else outcome.upper()
            # parametrized criteria collapse to FAIL if any case failed
            if num not in status or mark != "PASS":
                status[num] = (mark, label)
    if not status:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(status):
        mark, label = status[num]
        terminalreporter.write_line(f"criterion {num:>2}  {mark:<6} {label}")
