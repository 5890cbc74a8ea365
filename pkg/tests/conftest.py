import os
import tempfile

import numpy as np
import pytest

# keep calibration caches out of the user's home directory
os.environ.setdefault("DEP_LAB_CACHE_DIR", tempfile.mkdtemp(prefix="deplab-cache-"))

from deplab.sample import RankData, ranks_of_uniforms  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_ranks(gen, n):
    return ranks_of_uniforms(gen.random(n), gen.random(n))


def ranks_from_r(r):
    return RankData.from_chatterjee_seq(np.asarray(r))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
