"""Gradient verification against central finite differences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tape import Tape


@dataclass
class FiniteDiffReport:
    passed: bool
    max_rel_error: float
    rel_tol: float
    entries: list = field(default_factory=list)  # (index, analytic, numeric, rel err)

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"finite-diff check: {status} (max rel err {self.max_rel_error:.3e}, tol {self.rel_tol:.1e})"


def rel_error(a: float, b: float, floor: float = 1e-12) -> float:
    scale = max(abs(a), abs(b))
    if scale < floor:
        return 0.0
    return abs(a - b) / scale


def finite_diff_check(f, x, rel_tol=1e-6, h=1e-6) -> FiniteDiffReport:
    """Compare tape gradients of f against central differences.

    f maps a 1-D array (given as a leaf Var in tape mode, plain array in
    numeric mode) to a scalar; it must be deterministic and smooth at x.
    Report-only: never raises on mismatch.
    """
    x = np.asarray(x, dtype=np.float64)

    tape = Tape()
    vx = tape.leaf(x.copy())
    out = f(vx)
    analytic = tape.backward(out)[vx.index]

    entries = []
    max_err = 0.0
    flat = x.ravel()
    aflat = np.asarray(analytic).ravel()
    for i in range(flat.size):
        step = h * max(1.0, abs(flat[i]))
        xp = flat.copy()
        xp[i] += step
        xm = flat.copy()
        xm[i] -= step
        fp = np.asarray(f(xp.reshape(x.shape))).item()
        fm = np.asarray(f(xm.reshape(x.shape))).item()
        numeric = (fp - fm) / (2.0 * step)
        err = rel_error(float(aflat[i]), numeric)
        max_err = max(max_err, err)
        entries.append((i, float(aflat[i]), numeric, err))

    return FiniteDiffReport(passed=max_err <= rel_tol, max_rel_error=max_err,
                            rel_tol=rel_tol, entries=entries)
