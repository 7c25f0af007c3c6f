import numpy as np
import pytest

from natsearch.arch import MacroSpec
from natsearch.encoding import SchemeKind, make_scheme
from natsearch.evaluator import SyntheticOracle

ALL_SCHEMES = [make_scheme(k) for k in SchemeKind]


@pytest.fixture(params=list(SchemeKind), ids=lambda k: k.value)
def scheme(request):
    return make_scheme(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ORACLES = {}


def oracle_for(scheme, seed=0, noise=1.0):
    # computing the MAC scale samples 1000 genomes, so share instances
    key = (scheme, seed, noise)
    if key not in _ORACLES:
        _ORACLES[key] = SyntheticOracle(scheme, MacroSpec(), seed=seed, noise=noise)
    return _ORACLES[key]


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
