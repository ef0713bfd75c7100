import numpy as np
import pytest

from gnnqs.ansatz import Ansatz, ArchConfig, Graph
from gnnqs.hamiltonian import HeisenbergModel
from gnnqs.lattice import assign_sublattice, preset


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(items):
    # the acceptance legs take hours; run the unit tests first
    items.sort(key=lambda item: item.get_closest_marker("acceptance") is not None)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("GNNQS_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "ed-cache"))


def make_ansatz(name="chain8", j2=0.0, pattern="neel", variant="gnn", coupling=False, **arch):
    cluster = preset(name)
    model = HeisenbergModel(cluster, j2)
    codes = assign_sublattice(cluster, pattern).codes
    cfg = ArchConfig.small(variant=variant, include_coupling_edge_feature=coupling, **arch)
    return model, Ansatz(cfg, Graph.from_model(model), codes)


def perturbed(ansatz, seed=0, scale=0.05):
    """Random init plus noise so biases and heads are all nonzero."""
    rng = np.random.default_rng(seed)
    flat = ansatz.init_params(seed).flat
    return flat + scale * rng.normal(size=flat.size)


def central_differences(f, params, coords, h=1e-5):
    """Central differences of scalar ``f`` along the coordinates ``coords``."""
    out = np.empty(len(coords))
    for k, i in enumerate(coords):
        up, down = params.copy(), params.copy()
        up[i] += h
        down[i] -= h
        out[k] = (f(up) - f(down)) / (2 * h)
    return out


def norm_relative_error(approx, reference):
    """``||approx - reference|| / ||reference||`` over the checked coordinates."""
    return float(np.linalg.norm(approx - reference) / np.linalg.norm(reference))
