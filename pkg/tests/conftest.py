import numpy as np
import pytest

from datalyap.geometry import Polytope
from datalyap.lyapunov import LearnOptions, algorithm1_learn, algorithm3_learn_roa
from datalyap.program import NO_BOUNDARY, ProgramConfig
from datalyap.verify import generate_dataset, get_oracle


@pytest.fixture(scope="session")
def linear_data():
    ds, info = generate_dataset(get_oracle("linear"), Polytope.cube(0.4), 400, seed=1)
    return ds


@pytest.fixture(scope="session")
def linear_certified(linear_data):
    """Certified with-boundary run on the linear stable field."""
    res = algorithm1_learn(Polytope.cube(0.4), Polytope.cube(0.1), linear_data, ProgramConfig(), budget=5, opts=LearnOptions(seeds=16, rng_seed=0))
    assert res.certified, res.certificate.to_dict()
    return res


@pytest.fixture(scope="session")
def linear_roa(linear_data):
    """Certified no-boundary run with its sublevel set."""
    res = algorithm3_learn_roa(Polytope.cube(0.4), Polytope.cube(0.1), linear_data, ProgramConfig(mode=NO_BOUNDARY), budget=5, opts=LearnOptions(seeds=16, rng_seed=0))
    assert res.certified, res.certificate.to_dict()
    return res


def facet_points(tess, n, seed):
    """Random points in the relative interior of shared facets, with their two cells."""
    rng = np.random.default_rng(seed)
    shared = [(f, ks) for f, ks in tess.facets().items() if len(ks) == 2]
    out = []
    for i in rng.choice(len(shared), size=n):
        f, ks = shared[i]
        w = rng.dirichlet(np.ones(len(f)))
        out.append((w @ tess.points[list(f)], ks))
    return out


# one (criterion, passed, detail) entry per acceptance check, printed at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
