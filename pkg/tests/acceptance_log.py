"""Collects one result line per acceptance criterion for the terminal summary."""

from __future__ import annotations

import time
from contextlib import contextmanager

LINES: dict[int, str] = {}


@contextmanager
def criterion(k: int, title: str):
    """Record ``CRITERION k: PASS|FAIL`` with whatever details the body stored."""
    details: dict = {}
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield details
        status = "PASS"
    finally:
        details.setdefault("seconds", round(time.perf_counter() - start, 2))
        extra = ", ".join(f"{key}={val}" for key, val in details.items())
        LINES[k] = f"CRITERION {k}: {status} {title} ({extra})"
        print(LINES[k])
