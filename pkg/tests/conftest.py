import json
from pathlib import Path

import pytest

from cider_eval.corpus import build_df
from cider_eval.textproc import tokenize

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def micro():
    return load_fixture("micro_scores.json")


@pytest.fixture(scope="session")
def micro_table(micro):
    # the 2-image corpus every micro value was derived against
    return build_df([[tokenize(s)] for s in micro["corpus"]], 4)


@pytest.fixture(scope="session")
def golden_expected():
    return load_fixture("golden_expected.json")


@pytest.fixture(scope="session")
def triplet_expected():
    return load_fixture("triplet_expected.json")


@pytest.fixture(scope="session")
def stats_expected():
    return load_fixture("stats_expected.json")
