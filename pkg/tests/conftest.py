from __future__ import annotations

from pathlib import Path

import pytest

from harmonic.coding import GroundTruth
from harmonic.knowledge import default_knowledge
from harmonic.runner import ontoagent_factory, run_trial

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def kb():
    return default_knowledge()


@pytest.fixture(scope="session")
def truth():
    return GroundTruth.default()


@pytest.fixture(scope="session")
def reference_trial():
    return run_trial(ontoagent_factory(), seed=0)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)
