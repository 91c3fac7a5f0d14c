import pathlib

import pytest

CORPUS = pathlib.Path(__file__).parent / "corpus"


def corpus_names():
    return sorted(p.stem for p in CORPUS.glob("*.effs"))


def corpus_source(name: str) -> str:
    return (CORPUS / f"{name}.effs").read_text()


def corpus_expected(name: str):
    """(trace, value) golden lines for a corpus program."""
    lines = (CORPUS / f"{name}.expected").read_text().split("\n")
    return lines[0], lines[1]


@pytest.fixture
def corpus_dir():
    return CORPUS
