"""Shared fixtures and numeric helpers for the test suite."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import pytest

from d2sattn import backend


@pytest.fixture(params=backend.available_backends())
def kernel_backend(request):
    """Run the decorated test once per installed kernel backend."""
    previous = backend.active_name()
    backend.set_backend(request.param)
    yield request.param
    backend.set_backend(previous)


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|), defined as 0 when both are (near) zero."""
    denom = max(abs(analytic), abs(numeric))
    if denom < 1e-10:
        return 0.0
    return abs(analytic - numeric) / denom


def finite_difference_max_error(
    loss_fn: Callable[[], float],
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    step: float = 1e-5,
) -> float:
    """Worst relative error between analytic gradients and central differences.

    `pairs` holds (parameter, analytic_gradient) arrays; each parameter
    coordinate is perturbed in place by ±step and restored.
    """
    worst = 0.0
    for param, grad in pairs:
        flat = param.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            upper = loss_fn()
            flat[i] = original - step
            lower = loss_fn()
            flat[i] = original
            numeric = (upper - lower) / (2.0 * step)
            worst = max(worst, relative_error(float(gflat[i]), float(numeric)))
    return worst
