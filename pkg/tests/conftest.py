import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from usu.grid import SegmentPartition, block_partition

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def layouts(draw, max_coarse=5, max_block=5, max_segments=5):
    """A block neighbourhood system plus a random scored partition of its grid."""
    ch = draw(st.integers(1, max_coarse))
    cw = draw(st.integers(1, max_coarse))
    h = ch * draw(st.integers(1, max_block)) + draw(st.integers(0, 2))
    w = cw * draw(st.integers(1, max_block)) + draw(st.integers(0, 2))
    N = block_partition(h, w, ch, cw)
    raw = draw(hnp.arrays(np.int64, (h, w), elements=st.integers(0, max_segments - 1)))
    seg = SegmentPartition.from_labels(raw)
    scores = draw(hnp.arrays(np.float64, seg.count, elements=st.floats(0.0, 1.0)))
    return N, seg.with_scores(scores)


finite = st.floats(-100.0, 100.0, allow_nan=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store the verdict for the terminal summary and echo it."""
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
