import json
from pathlib import Path

import numpy as np
import pytest

from gatecast import dag
from gatecast.dag import DagNetwork

SCENARIOS = Path(__file__).parent / "scenarios"


def net(n, edges, sink_dims=None):
    topology = DagNetwork(n, tuple(edges))
    sinks = dag.sinks(topology)
    return dag.assign_dims(topology, sink_dims or {v: 2 for v in sinks})


@pytest.fixture
def star():
    return net(3, [(0, 1), (0, 2)])


@pytest.fixture
def diamond():
    # u=0, a=1, b=2, v=3
    return net(4, [(0, 1), (0, 2), (1, 3), (2, 3)])


@pytest.fixture
def tree():
    # r=0; a=1, b=2; a->3, a->4, b->5
    return net(6, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, size):
    v = rng.normal(size=size) + 1j * rng.normal(size=size)
    return v / np.linalg.norm(v)


@pytest.fixture
def scenario_path(tmp_path):
    def write(doc, name="scenario.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return write


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    log = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(label, ok, detail):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})"
        log.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)
