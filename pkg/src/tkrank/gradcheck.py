"""Central finite-difference verification of analytic gradients."""

from dataclasses import dataclass

import numpy as np


class NondeterministicLossError(RuntimeError):
    pass


@dataclass
class GradCheckResult:
    errors: dict  # parameter name -> worst relative error over its entries
    tol: float

    @property
    def worst(self):
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self):
        return self.worst < self.tol


def relative_error(analytic, numeric, floor=1e-6):
    """``|a - n| / max(|a|, |n|, floor)``; the floor keeps near-zero entries from dominating."""
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)


def gradient_check(loss_fn, params, delta=1e-5, tol=1e-4, floor=1e-6):
    """Compare backprop gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` takes no arguments, reads the current values of ``params`` and
    returns a scalar :class:`~tkrank.tensor.Tensor`. Every entry of every
    parameter is perturbed by ``+-delta``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    params = list(params)
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    again = loss_fn()
    if loss.data.size != 1:
        raise ValueError("loss_fn must return a scalar")
    if not np.array_equal(loss.data, again.data):
        raise NondeterministicLossError(
            f"loss_fn returned {loss.item()!r} then {again.item()!r} for identical parameters"
        )
    loss.backward()
    analytic = {p.name: p.grad.copy() for p in params}

    errors = {}
    for p in params:
        flat = p.data.reshape(-1)
        numeric = np.empty(flat.shape)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + delta
            up = loss_fn().item()
            flat[idx] = orig - delta
            down = loss_fn().item()
            flat[idx] = orig
            numeric[idx] = (up - down) / (2.0 * delta)
        err = relative_error(analytic[p.name].reshape(-1), numeric, floor)
        errors[p.name] = float(err.max()) if err.size else 0.0
    for p in params:
        p.zero_grad()
    return GradCheckResult(errors, tol)
