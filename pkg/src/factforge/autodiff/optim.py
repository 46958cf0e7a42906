"""Gradient-descent optimizers with global-norm clipping."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .tensor import Parameter

__all__ = ["SGD", "Adam", "clip_global_norm"]


def clip_global_norm(params: Sequence[Parameter], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    norm = math.sqrt(total)
    if norm > max_norm > 0:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm


class _Optimizer:
    kind = "base"

    def __init__(self, params: Sequence[Parameter], lr: float, clip_norm: float | None):
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique within an optimizer")
        self.lr = lr
        self.clip_norm = clip_norm
        self.step_count = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def _pre_step(self) -> None:
        if all(p.grad is None for p in self.params):
            raise RuntimeError("optimizer step with no populated gradients")
        if self.clip_norm is not None:
            clip_global_norm(self.params, self.clip_norm)

    def step(self) -> None:
        raise NotImplementedError


class SGD(_Optimizer):
    """Plain stochastic gradient descent."""

    kind = "sgd"

    def __init__(self, params, lr: float = 0.001, clip_norm: float | None = 5.0):
        super().__init__(params, lr, clip_norm)

    def step(self) -> None:
        self._pre_step()
        for p in self.params:
            if p.grad is None:
                continue
            p.data -= self.lr * p.grad
        self.step_count += 1
        self.zero_grad()

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lr": self.lr,
            "clip_norm": self.clip_norm,
            "step_count": self.step_count,
        }

    def load_state_dict(self, state: dict) -> None:
        self.lr = state["lr"]
        self.clip_norm = state["clip_norm"]
        self.step_count = state["step_count"]


class Adam(_Optimizer):
    """Adam with bias-corrected first and second moments."""

    kind = "adam"

    def __init__(
        self,
        params,
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        clip_norm: float | None = 5.0,
    ):
        super().__init__(params, lr, clip_norm)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {p.name: np.zeros_like(p.data) for p in self.params}
        self.v = {p.name: np.zeros_like(p.data) for p in self.params}

    def step(self) -> None:
        self._pre_step()
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for p in self.params:
            if p.grad is None:
                continue
            g = p.grad
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        self.zero_grad()

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "clip_norm": self.clip_norm,
            "step_count": self.step_count,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        self.lr = state["lr"]
        self.beta1 = state["beta1"]
        self.beta2 = state["beta2"]
        self.eps = state["eps"]
        self.clip_norm = state["clip_norm"]
        self.step_count = state["step_count"]
        for name in self.m:
            self.m[name] = np.asarray(state["m"][name]).copy()
            self.v[name] = np.asarray(state["v"][name]).copy()
