import sys
import warnings
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from dptraj.model import LocationUniverse, TrajectoryDb, load_db  # noqa: E402

# Small transit-style database used as a hand-checked oracle throughout the
# suite; expected values in tests were counted directly from these lines.
SAMPLE_LINES = [
    "L1 L2 L3",
    "L1 L2",
    "L3 L2 L1",
    "L1 L2 L4",
    "L1 L2 L3",
    "L3 L2",
    "L1 L2 L4 L1",
    "L3 L1",
]


@pytest.fixture()
def sample_file(tmp_path):
    path = tmp_path / "sample.txt"
    path.write_text("\n".join(SAMPLE_LINES) + "\n", encoding="utf-8")
    return path


@pytest.fixture()
def sample_db(sample_file):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        db, universe = load_db(str(sample_file))
    return db, universe


def make_db(rows):
    """Build a database straight from id tuples."""
    return TrajectoryDb(tuple(tuple(r) for r in rows))


def make_universe(size):
    return LocationUniverse(tuple(f"L{i}" for i in range(size)))
