import pathlib

import pytest

from kindle.cfa import build_cfa
from kindle.lang import parse
from kindle.normalize import to_single_loop

PROGRAMS = pathlib.Path(__file__).resolve().parent.parent / "programs"


def load_cfa(name: str):
    return build_cfa(parse((PROGRAMS / name).read_text()))


@pytest.fixture(scope="session")
def safe_cfa():
    return load_cfa("example-safe_true.c")


@pytest.fixture(scope="session")
def unsafe_cfa():
    return load_cfa("example-unsafe_false.c")


@pytest.fixture(scope="session")
def safe_ncfa(safe_cfa):
    return to_single_loop(safe_cfa)


@pytest.fixture(scope="session")
def unsafe_ncfa(unsafe_cfa):
    return to_single_loop(unsafe_cfa)
