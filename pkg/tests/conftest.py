import json
import os

import numpy as np
import pytest

from levykern import logstable, mixed, relativistic, stable

os.environ.setdefault("LEVYKERN_THREADS", "1")

ORACLE_PATH = os.path.join(os.path.dirname(__file__), "oracles", "oracles.json")

# oracle family keys, as written by tests/oracles/make_oracles.py
FAMILIES = {
    "stable_0.5": stable(0.5), "stable_1": stable(1.0), "stable_1.5": stable(1.5),
    "stable_0.8": stable(0.8),
    "relativistic_1_1": relativistic(1.0, 1.0), "relativistic_0.5_2": relativistic(0.5, 2.0),
    "mixed_1.5_0.5": mixed(1.5, 0.5),
    "logstable_1_0.25": logstable(1.0, 0.25), "logstable_1_-0.4": logstable(1.0, -0.4),
    "logstable_1.5_0.25": logstable(1.5, 0.25),
}

ALL_FAMILIES = [FAMILIES[k] for k in ("stable_0.5", "stable_1", "stable_1.5",
                                      "relativistic_1_1", "relativistic_0.5_2",
                                      "mixed_1.5_0.5", "logstable_1_0.25",
                                      "logstable_1_-0.4", "logstable_1.5_0.25")]


def doubling_tuples(rng, n):
    """Tuples (a, b, c) with each member at most 4 times the larger of the other two.

    These are the only relations a 1-Lipschitz distance and Phi(2s) <= 4 Phi(s)
    impose on (Phi(delta(x)), Phi(delta(y)), Phi(|x - y|)).
    """
    out = []
    while len(out) < n:
        a, b, c = np.exp(rng.uniform(-6, 6, (3, 4 * n)))
        ok = (b <= 4 * np.maximum(a, c)) & (a <= 4 * np.maximum(b, c)) & (c <= 4 * np.maximum(a, b))
        out.extend(zip(a[ok], b[ok], c[ok]))
    return out[:n]


@pytest.fixture(scope="session")
def oracles():
    with open(ORACLE_PATH) as fh:
        return json.load(fh)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo runs")


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
