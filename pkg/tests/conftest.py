from __future__ import annotations

import json
from pathlib import Path

import pytest

from oipsce import load_dialogue, parse_catalog

DATA = Path(__file__).parent / "data"


def read_data(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


def read_json(name: str) -> dict | list:
    return json.loads(read_data(name))


@pytest.fixture(scope="session")
def catalog_b():
    return parse_catalog(read_data("catalog_case_b.json"))


@pytest.fixture(scope="session")
def dialogue_b():
    return load_dialogue(read_data("dialogue_case_b.json"))


@pytest.fixture(scope="session")
def catalog_a():
    return parse_catalog(read_data("catalog_case_a.json"))


@pytest.fixture(scope="session")
def dialogue_a_slice():
    return load_dialogue(read_data("dialogue_case_a_slice.json"))


@pytest.fixture(scope="session")
def dialogue_a_full():
    return load_dialogue(read_data("dialogue_case_a_full.json"))
