"""Adam with two fixed learning-rate groups."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """Moment estimates for one parameter; ``t`` counts completed steps."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, param, **kwargs):
        return cls(np.zeros_like(param.data), np.zeros_like(param.data), **kwargs)


def adam_step(param, state, lr):
    """Apply one bias-corrected Adam update in place and clear the gradient."""
    g = param.grad
    if g is None or g.shape != param.data.shape:
        raise ValueError(
            f"gradient shape {None if g is None else g.shape} does not match "
            f"parameter shape {param.data.shape} for {getattr(param, 'name', '?')}"
        )
    if state.m.shape != param.data.shape or state.v.shape != param.data.shape:
        raise ValueError(f"Adam moment shape does not match parameter {getattr(param, 'name', '?')}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    param.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    param.grad[...] = 0.0
    return param, state


@dataclass
class Adam:
    """Adam over a list of :class:`~tkrank.tensor.Parameter`, rate chosen by group."""

    params: list
    lr_a: float = 1e-4
    lr_b: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: dict = field(default_factory=dict)

    def __post_init__(self):
        for p in self.params:
            self.states[p.name] = AdamState.zeros_like(
                p, beta1=self.beta1, beta2=self.beta2, eps=self.eps
            )

    def lr_for(self, param):
        return self.lr_a if param.group == "A" else self.lr_b

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        for p in self.params:
            adam_step(p, self.states[p.name], self.lr_for(p))
