from __future__ import annotations

import time

import pytest

from nkpoly.identities import run_grid


@pytest.fixture(scope="session")
def full_report():
    """The default suite over every identity, run once per session with its wall time."""
    start = time.perf_counter()
    report = run_grid({"name": "default", "identities": "all"})
    return report, time.perf_counter() - start
