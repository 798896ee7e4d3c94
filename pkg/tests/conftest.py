import math
import os
from pathlib import Path

import numpy as np
import pytest

from mdvrp import load, make_instance

DATA = Path(__file__).parent / "data"
CORDEAU = DATA / "cordeau"
CORDEAU_ENV = "MDVRP_CORDEAU_DIR"


def cordeau_path(name: str) -> Path | None:
    """A Cordeau file from the bundled test data or from ``$MDVRP_CORDEAU_DIR``."""
    candidates = [CORDEAU / name]
    root = os.environ.get(CORDEAU_ENV)
    if root:
        candidates += [Path(root) / name, Path(root) / f"{name}.txt"]
    return next((p for p in candidates if p.is_file()), None)


def o1(q_max=2.0):
    """Two depots on a line with two customers near each."""
    return make_instance([(0, 0), (10, 0)], [(1, 0, 1), (2, 0, 1), (8, 0, 1), (9, 0, 1)],
                         q_max=q_max, vehicles=1, name="O1")


def random_tiny(rng: np.random.Generator, n=None, name="tiny"):
    """N <= 8 customers, two depots, mixed fleet size, load and duration limits."""
    n = int(rng.integers(3, 9)) if n is None else n
    depots = [tuple(rng.uniform(0, 100, 2)) for _ in range(2)]
    customers = [(*rng.uniform(0, 100, 2), float(rng.integers(1, 10)), float(rng.integers(0, 3))) for _ in range(n)]
    total = sum(c[2] for c in customers)
    k = int(rng.integers(1, 4))
    q = float(max(max(c[2] for c in customers), math.ceil(total / rng.uniform(1.5, 4.0))))
    r = math.inf if rng.random() < 0.5 else float(rng.uniform(150, 400))
    return make_instance(depots, customers, q_max=q, r_max=r, vehicles=k, name=name)


@pytest.fixture
def o1_instance():
    return o1()


@pytest.fixture(scope="session")
def p01():
    return load(CORDEAU / "p01")


@pytest.fixture(scope="session")
def p02():
    return load(CORDEAU / "p02")


ORACLE_SEED = 20240601


def oracle_corpus(size: int = 20):
    """``size`` solvable random tiny instances plus O1, each with its exhaustive optimum."""
    from mdvrp import InfeasibleError, brute_force

    rng = np.random.default_rng(ORACLE_SEED)
    out = []
    while len(out) < size:
        inst = random_tiny(rng, name=f"tiny{len(out):02d}")
        try:
            out.append((inst, brute_force(inst).total_cost))
        except InfeasibleError:
            continue
    out.append((o1(), brute_force(o1()).total_cost))
    return out


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
