import re
import time

import numpy as np
import pytest

from tiltrotor.config import load_config
from tiltrotor.vehicle import VehicleParams

ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def gains(config):
    return config.gains()


class ScenarioRuns:
    """Default scenarios simulated on first use and shared across test modules."""

    def __init__(self, config):
        self.config = config
        self._logs = {}
        self._elapsed = {}

    def run(self, name):
        """Fresh, uncached run of a default scenario."""
        from tiltrotor.sim.scenarios import run_scenario

        cfg = self.config
        return run_scenario(cfg.scenario(name), cfg.gains(), cfg.params(), cfg.controller_config(),
                            fz_min=cfg.controller.fz_min, log_every=cfg.simulation.log_every)

    def __call__(self, name):
        if name not in self._logs:
            start = time.perf_counter()
            self._logs[name] = self.run(name)
            self._elapsed[name] = time.perf_counter() - start
        return self._logs[name]

    def elapsed(self, name):
        self(name)
        return self._elapsed[name]


@pytest.fixture(scope="session")
def runs(config):
    return ScenarioRuns(config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """Record ``(number, title, passed, detail)`` for the end-of-run criteria table."""

    def record(number, title, passed, detail=""):
        ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    results = dict(ACCEPTANCE_RESULTS)
    # criteria whose test raised before recording still get a line
    for report in terminalreporter.stats.get("failed", []) + terminalreporter.stats.get("error", []):
        match = re.search(r"test_acceptance\.py::test_(\d+)_(\w+)", report.nodeid)
        if match and int(match.group(1)) not in results:
            message = str(getattr(report.longrepr, "reprcrash", None) and report.longrepr.reprcrash.message)
            results[int(match.group(1))] = (match.group(2).replace("_", " "), False, message)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, detail = results[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}: {detail}")
