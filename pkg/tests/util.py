"""Shared helpers for the test suite: fixture loading and set-based oracles.

The oracle implementations here deliberately use plain dicts/sets of atom
name strings, independent of the package's bitmask representation.
"""

from __future__ import annotations

import functools
from pathlib import Path

from chainreact.lang import DomainDefinition, parse_domain, parse_problem

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "chainreact" / "data"


def kitchen_path() -> Path:
    return DATA_DIR / "kitchen.dpdl"


def problem_path(name: str) -> Path:
    return DATA_DIR / "problems" / f"{name}.dprob"


def scenario_path(name: str) -> Path:
    return DATA_DIR / "scenarios" / f"{name}.json"


def kitchen_source() -> str:
    return kitchen_path().read_text(encoding="utf-8")


def problem_source(name: str) -> str:
    return problem_path(name).read_text(encoding="utf-8")


@functools.lru_cache(maxsize=1)
def kitchen_domain() -> DomainDefinition:
    result = parse_domain(kitchen_source())
    assert result.ok, result.diagnostics
    return result.value


def kitchen_problem(name: str):
    result = parse_problem(problem_source(name), kitchen_domain())
    assert result.ok, result.diagnostics
    return result.value
