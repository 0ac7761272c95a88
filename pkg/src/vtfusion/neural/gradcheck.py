"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

DEFAULT_STEP = 1e-5


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a) + abs(b), 1e-8)


def grad_check(loss_fn, params: dict, analytic: dict, step: float = DEFAULT_STEP,
               max_entries: int | None = None, rng: np.random.Generator | None = None) -> dict:
    """Compare analytic gradients against central finite differences.

    loss_fn() must recompute the scalar loss from the current (mutated)
    parameter values and be deterministic (dropout off, fixed batch-norm
    statistics or a fixed training batch).  Large blocks can be
    subsampled via max_entries.  Returns max relative error per block.
    """
    report = {}
    for name, param in params.items():
        flat = param.reshape(-1)
        g_flat = analytic[name].reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            if rng is None:
                rng = np.random.default_rng(0)
            indices = rng.choice(flat.size, size=max_entries, replace=False)
        worst = 0.0
        for idx in indices:
            orig = flat[idx]
            flat[idx] = orig + step
            loss_plus = loss_fn()
            flat[idx] = orig - step
            loss_minus = loss_fn()
            flat[idx] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            worst = max(worst, relative_error(float(g_flat[idx]), numeric))
        report[name] = worst
    return report
