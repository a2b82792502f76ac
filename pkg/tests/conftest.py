from pathlib import Path

import pytest

from relcheck.relsem import Atom, Pair, RelTerm

CASES = Path(__file__).resolve().parent.parent / "cases"


@pytest.fixture(scope="session")
def cases_dir() -> Path:
    return CASES


def rename_atoms(t: RelTerm, mapping: dict) -> RelTerm:
    if isinstance(t, Atom):
        return Atom(mapping.get(t.name, t.name))
    if isinstance(t, Pair):
        return Pair(rename_atoms(t.fst, mapping), rename_atoms(t.snd, mapping))
    return t
