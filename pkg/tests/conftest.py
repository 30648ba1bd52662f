import json
from pathlib import Path

import pytest

from hclp.models import CostTable, PreferenceStatement
from hclp.oracle import OracleSettings
from hclp.problem import load_problem

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"


@pytest.fixture
def example_data():
    with (DATA_DIR / "example.json").open("r") as f:
        yield json.load(f)


@pytest.fixture
def example_problem():
    return load_problem(DATA_DIR / "example.json")


@pytest.fixture
def example_table(example_problem) -> CostTable:
    return example_problem.table


@pytest.fixture
def unsupported_table() -> CostTable:
    return load_problem(DATA_DIR / "unsupported.json").table


@pytest.fixture
def unsupported_gamma() -> list[PreferenceStatement]:
    return list(load_problem(DATA_DIR / "unsupported.json").statements)


@pytest.fixture
def oracle_settings() -> OracleSettings:
    return OracleSettings(max_evaluations=8, max_statements=12)


@pytest.fixture
def data_path():
    def resolve(name: str) -> Path:
        return DATA_DIR / name

    return resolve
