"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import Parameter, Tensor, no_grad

__all__ = ["GradCheckReport", "grad_check"]


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    n_checked: int
    per_param: dict[str, float] = field(default_factory=dict)

    def ok(self, tolerance: float) -> bool:
        return self.max_rel_error < tolerance


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    eps: float = 1e-5,
    max_entries_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic gradients of loss_fn against central differences.

    loss_fn must rebuild the graph from the given parameters on every call
    and be deterministic (disable dropout and fix any sampling). Run it in
    64-bit mode; the step 1e-5 is too coarse for float32. Relative error is
    |a - n| / max(|a|, |n|, 1e-8) per scalar. Set max_entries_per_param to
    probe a random subset of each parameter instead of every scalar.
    """
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {
        p.name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for p in params
    }
    for p in params:
        p.grad = None

    max_err = 0.0
    worst = ""
    checked = 0
    per_param: dict[str, float] = {}
    for p in params:
        flat = p.data.reshape(-1)
        n_entries = flat.size
        if max_entries_per_param is not None and n_entries > max_entries_per_param:
            if rng is None:
                rng = np.random.default_rng(0)
            idxs = rng.choice(n_entries, size=max_entries_per_param, replace=False)
        else:
            idxs = range(n_entries)
        a_flat = analytic[p.name].reshape(-1)
        p_err = 0.0
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            with no_grad():
                f_plus = float(loss_fn().data)
            flat[i] = orig - eps
            with no_grad():
                f_minus = float(loss_fn().data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(a_flat[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            checked += 1
            if err > p_err:
                p_err = err
            if err > max_err:
                max_err = err
                worst = p.name
        per_param[p.name] = p_err
    return GradCheckReport(max_err, worst, checked, per_param)
