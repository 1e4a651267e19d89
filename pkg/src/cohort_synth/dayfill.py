"""Weighted length adjustment that stretches or shrinks a draft schedule to
exactly 1440 minutes.

Non-fixed lengths are rescaled multiplicatively (preserving their ratios),
clamped to their per-activity bounds, and the loop repeats until the total
lands within one minute of the target. Fixed lengths (travel) never move.
Any integer residual goes to the longest adjustable activity; bounds are
waived, with a flag, only when they make the target unreachable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diary import MINUTES_PER_DAY

MAX_RESCALE_ITERS = 20


@dataclass(frozen=True)
class FillResult:
    lengths: np.ndarray  # int minutes, aligned with the input order
    bound_waived: bool


def fit_lengths(
    lengths: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    fixed: np.ndarray,
    target: int = MINUTES_PER_DAY,
) -> FillResult:
    """Adjust ``lengths`` so the total is exactly ``target`` minutes.

    ``fixed`` marks entries exempt from rescaling. Bounds apply to the
    adjustable entries only; each final length is at least 1 minute.
    """
    lengths = np.asarray(lengths, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    fixed = np.asarray(fixed, dtype=bool)
    n = lengths.size
    if n == 0:
        raise ValueError("cannot fill a day from zero activities")

    out = np.rint(lengths).astype(int)
    out[out < 1] = 1
    free = ~fixed
    if not free.any():
        # Degenerate all-fixed schedule: spread the residual anyway and flag it.
        res = target - int(out.sum())
        out = _apply_residual(out, np.ones(n, dtype=bool), res)
        return FillResult(out, bound_waived=res != 0)

    fixed_total = int(out[fixed].sum()) if fixed.any() else 0
    sub_target = target - fixed_total

    lo = np.maximum(1.0, np.ceil(lower[free] - 1e-9))
    hi = np.maximum(lo, np.floor(upper[free] + 1e-9))
    vals = np.clip(lengths[free].astype(float), 1.0, None)

    waived = sub_target < lo.sum() or sub_target > hi.sum() or sub_target < free.sum()
    for _ in range(MAX_RESCALE_ITERS):
        total = vals.sum()
        if abs(total - sub_target) <= 1.0:
            break
        vals = np.clip(vals * (sub_target / total), lo, hi)

    ints = _integerize(vals, lo, hi, sub_target)
    residual = sub_target - int(ints.sum())
    if residual != 0:
        ints = _apply_residual(ints, np.ones(ints.size, dtype=bool), residual)
    out[free] = ints
    return FillResult(out, bound_waived=bool(waived))


def _integerize(vals: np.ndarray, lo: np.ndarray, hi: np.ndarray, target: int) -> np.ndarray:
    """Largest-remainder rounding: each entry stays within 1 minute of its
    float value and the sum hits ``target`` when the bounds allow it."""
    base = np.floor(vals).astype(int)
    base = np.maximum(base, 1)
    need = target - int(base.sum())
    if 0 <= need <= vals.size:
        frac = vals - np.floor(vals)
        order = np.lexsort((np.arange(vals.size), -frac))
        base[order[:need]] += 1
        return base
    return np.maximum(np.rint(vals).astype(int), 1)


def _apply_residual(ints: np.ndarray, eligible: np.ndarray, residual: int) -> np.ndarray:
    """Give the residual to the longest eligible activity, cascading to the
    next-longest whenever the 1-minute floor clips the adjustment."""
    ints = ints.copy()
    order = np.lexsort((np.arange(ints.size), -ints))
    for j in order:
        if residual == 0:
            break
        if not eligible[j]:
            continue
        new = max(1, int(ints[j]) + residual)
        residual -= new - int(ints[j])
        ints[j] = new
    return ints
