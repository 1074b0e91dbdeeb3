import random
from pathlib import Path

import pytest

from freetorus.classify import load_automorphism, load_graph_map
from freetorus.flaring import Dynamics
from freetorus.words import FreeAutomorphism, inverse, reduce

DATA = Path(__file__).resolve().parent.parent / "src" / "freetorus" / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n = mark.args[0]
    prev = _criteria.get(n, True)
    _criteria[n] = prev and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if _criteria[n] else 'FAIL'}")


def random_automorphism(rank, rng, moves=8):
    """Composition of up to ``moves`` elementary Nielsen moves, built without the library's inverter."""
    imgs = [(i,) for i in range(1, rank + 1)]
    for _ in range(rng.randint(0, moves)):
        i, j = rng.randrange(rank), rng.randrange(rank)
        kind = rng.randrange(3)
        if kind == 0 and i != j:
            x = imgs[j] if rng.random() < 0.5 else inverse(imgs[j])
            imgs[i] = reduce(imgs[i] + x) if rng.random() < 0.5 else reduce(x + imgs[i])
        elif kind == 1:
            imgs[i] = inverse(imgs[i])
        else:
            imgs[i], imgs[j] = imgs[j], imgs[i]
    return FreeAutomorphism(tuple(imgs))


def random_word(rank, length, rng):
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]
    return tuple(rng.choice(letters) for _ in range(length))


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def e1():
    return load_automorphism(str(DATA / "e1.aut"))


@pytest.fixture(scope="session")
def e1_map():
    return load_graph_map(str(DATA / "e1.json"))


@pytest.fixture(scope="session")
def e1_dynamics(e1):
    return Dynamics(e1, load_graph_map(str(DATA / "e1.json")), 2,
                    load_graph_map(str(DATA / "e1_inverse.json")), 2)


@pytest.fixture(scope="session")
def fibonacci():
    return load_automorphism(str(DATA / "fibonacci.aut"))


@pytest.fixture(scope="session")
def plastic_pair():
    phi = load_automorphism(str(DATA / "plastic.aut"))
    psi = load_automorphism(str(DATA / "plastic_swapped.aut"))
    dphi = Dynamics(phi, load_graph_map(str(DATA / "plastic.json")), 1,
                    load_graph_map(str(DATA / "plastic_inverse.json")), 1)
    dpsi = Dynamics(psi, load_graph_map(str(DATA / "plastic_swapped.json")), 1,
                    load_graph_map(str(DATA / "plastic_swapped_inverse.json")), 1)
    return dphi, dpsi


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def one_worker(monkeypatch):
    monkeypatch.setenv("FREETORUS_WORKERS", "1")
