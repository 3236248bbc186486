"""Hot numeric kernels with selectable backends.

Two implementations of every kernel: a numba ``@njit`` version and a pure
numpy one.  Selection is by the ``STORMUC_KERNELS`` environment variable:

* ``auto``  (default) -- numba when importable, numpy otherwise
* ``numba`` -- require numba, fail loudly if missing
* ``numpy`` -- force the numpy path (useful for debugging and benchmarking)

``benchmarks/bench_kernels.py`` times both paths side by side.
"""

from __future__ import annotations

import os

import numpy as np

_CHOICE = os.environ.get("STORMUC_KERNELS", "auto").strip().lower()
if _CHOICE not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"STORMUC_KERNELS must be auto|numba|numpy, got {_CHOICE!r}")

USE_NUMBA = False
if _CHOICE != "numpy":
    try:
        from numba import njit
        USE_NUMBA = True
    except ImportError:
        if _CHOICE == "numba":
            raise
        USE_NUMBA = False


# -- product-form eta transforms (revised simplex) -------------------------
#
# After a pivot with entering direction w = B^-1 a_q and leaving row r the
# basis inverse updates as B'^-1 = F^-1 B^-1 with F = I + (w - e_r) e_r^T.
# FTRAN applies the stored F^-1 factors in creation order, BTRAN applies the
# transposes in reverse order.

def _ftran_etas_numpy(W: np.ndarray, rows: np.ndarray, count: int, v: np.ndarray) -> None:
    for k in range(count):
        r = rows[k]
        piv = W[k, r]
        t = v[r] / piv
        if t != 0.0:
            v -= t * W[k]
        v[r] = t


def _btran_etas_numpy(W: np.ndarray, rows: np.ndarray, count: int, v: np.ndarray) -> None:
    for k in range(count - 1, -1, -1):
        r = rows[k]
        piv = W[k, r]
        dot = float(W[k] @ v)
        v[r] = (v[r] * (1.0 + piv) - dot) / piv


def _ftran_etas_loop(W, rows, count, v):
    m = v.shape[0]
    for k in range(count):
        r = rows[k]
        t = v[r] / W[k, r]
        if t != 0.0:
            for i in range(m):
                v[i] -= t * W[k, i]
        v[r] = t


def _btran_etas_loop(W, rows, count, v):
    m = v.shape[0]
    for k in range(count - 1, -1, -1):
        r = rows[k]
        piv = W[k, r]
        dot = 0.0
        for i in range(m):
            dot += W[k, i] * v[i]
        v[r] = (v[r] * (1.0 + piv) - dot) / piv


# -- cumulative failure-probability recurrence ------------------------------
#
# p_t = (1 - p_{t-1}) * (1 - exp(-rate_t * dt)) + p_{t-1}, p_0 = 0, applied
# per row.  The numpy twin uses the equivalent closed form
# 1 - exp(-dt * cumsum(rates)).

def _cumulative_failure_numpy(rates: np.ndarray, dt: float) -> np.ndarray:
    return 1.0 - np.exp(-dt * np.cumsum(rates, axis=-1))


def _cumulative_failure_loop(rates, dt):
    out = np.empty_like(rates)
    n, t_len = rates.shape
    for i in range(n):
        prev = 0.0
        for t in range(t_len):
            prev = (1.0 - prev) * (1.0 - np.exp(-rates[i, t] * dt)) + prev
            out[i, t] = prev
    return out


if USE_NUMBA:
    ftran_etas = njit(cache=True)(_ftran_etas_loop)
    btran_etas = njit(cache=True)(_btran_etas_loop)
    cumulative_failure = njit(cache=True)(_cumulative_failure_loop)
    KERNEL_PATH = "numba"
else:
    ftran_etas = _ftran_etas_numpy
    btran_etas = _btran_etas_numpy
    cumulative_failure = _cumulative_failure_numpy
    KERNEL_PATH = "numpy"
