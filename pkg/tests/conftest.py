import sys

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from gridtest.grid import GridDomain, GridFunction

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def functions(draw, ns=(2, 3, 4), ds=(1, 2, 3), even=False):
    n = draw(st.sampled_from([n for n in ns if not even or n % 2 == 0]))
    d = draw(st.sampled_from(ds))
    dom = GridDomain(n, d)
    bits = draw(st.lists(st.integers(0, 1), min_size=dom.size, max_size=dom.size))
    return GridFunction(dom, np.array(bits, dtype=np.uint8))


def from_bits(bits, n, d=1):
    return GridFunction(GridDomain(n, d), [int(c) for c in bits])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
