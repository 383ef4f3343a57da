"""Small shared helpers: bounded parallel maps and slope fitting."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DataError

THREADS_ENV = "ELLSTAB_THREADS"


def thread_count(requested: int | None = None) -> int:
    """Worker count capped by the ELLSTAB_THREADS environment variable."""
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap is not None:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def parallel_map(fn, items, workers: int | None = None) -> list:
    """Map preserving input order; work items must be independent."""
    items = list(items)
    w = min(thread_count(workers), len(items))
    if w <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of log(y) against log(x) and its residual RMS.

    Points with nonpositive x or y are dropped; fewer than 3 usable points
    is a data error.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    good = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if int(np.count_nonzero(good)) < 3:
        raise DataError("need at least 3 positive points for a log-log fit")
    lx = np.log(x[good])
    ly = np.log(y[good])
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return float(coef[0]), rms
