"""Leaky integrate-and-fire neurons: hard rate, smoothed rate, and spiking step."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class LifParams:
    tau_rc: float = 0.02
    tau_ref: float = 0.002
    v_th: float = 1.0
    gamma: float = 0.1
    dt: float = 0.001
    # small amplitude keeps hidden rates near unit scale so they can drive the
    # next layer through ordinary weights
    amplitude: float = 0.01
    # first-order synapse between spiking layers; 0 passes raw spikes
    tau_syn: float = 0.005

    def __post_init__(self):
        for name in ("tau_rc", "tau_ref", "v_th", "gamma", "dt", "amplitude"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.tau_syn < 0:
            raise ValueError("tau_syn must be non-negative")
        if self.dt >= self.tau_ref:
            raise ValueError("dt must be shorter than tau_ref")

    def with_gamma(self, gamma: float) -> "LifParams":
        return replace(self, gamma=gamma)

    @property
    def refractory_steps(self) -> int:
        return int(round(self.tau_ref / self.dt))

    @property
    def synapse_alpha(self) -> float:
        """Per-step smoothing factor of the exponential synapse."""
        return 1.0 if self.tau_syn == 0 else float(-np.expm1(-self.dt / self.tau_syn))


def lif_rate(j, p: LifParams) -> np.ndarray:
    """Steady-state firing rate of the hard LIF neuron (zero at or below threshold)."""
    j = np.asarray(j, dtype=np.float64)
    out = np.zeros_like(j)
    above = j > p.v_th
    out[above] = p.amplitude / (
        p.tau_ref + p.tau_rc * np.log1p(p.v_th / (j[above] - p.v_th))
    )
    return out


def soft_lif_rate(j, p: LifParams) -> np.ndarray:
    """LIF rate with the threshold nonlinearity smoothed by a softplus of width gamma."""
    return soft_lif_rate_and_grad(j, p)[0]


def soft_lif_rate_and_grad(j, p: LifParams) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed rate and its derivative with respect to the input current."""
    z = (np.asarray(j, dtype=np.float64) - p.v_th) / p.gamma
    tail = np.exp(-np.abs(z))
    softplus = np.log1p(tail)
    softplus += np.maximum(z, 0.0)
    # logistic(z) == 1 - exp(-softplus(z))
    sig = -np.expm1(-softplus)
    rho = p.gamma * softplus
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        denom = p.tau_ref + p.tau_rc * np.log1p(p.v_th / rho)
        rate = p.amplitude / denom
        # sig / rho -> 1 / gamma once the softplus underflows
        ratio = np.where(rho > 0, sig / rho, 1.0 / p.gamma)
    rate = np.where(rho > 0, rate, 0.0)
    grad = rate * rate
    grad *= (p.tau_rc * p.v_th / p.amplitude) * ratio / (rho + p.v_th)
    return rate, grad


class LifState:
    """Membrane state of a population simulated with forward-Euler steps.

    Each step: refractory neurons hold at 0; others integrate
    ``v += dt/tau_rc * (j - v)``. A neuron reaching ``v_th`` emits a spike of
    height ``amplitude/dt`` (unit area times amplitude), resets to 0 and stays
    refractory for ``tau_ref``.
    """

    def __init__(self, shape, p: LifParams):
        self.p = p
        self.v = np.zeros(shape)
        self.refractory = np.zeros(shape, dtype=np.int64)

    def step(self, j: np.ndarray) -> np.ndarray:
        p = self.p
        active = self.refractory == 0
        self.refractory[~active] -= 1
        self.v = np.where(active, self.v + (p.dt / p.tau_rc) * (j - self.v), 0.0)
        spiked = self.v >= p.v_th
        self.v[spiked] = 0.0
        self.refractory[spiked] = p.refractory_steps
        return spiked * (p.amplitude / p.dt)
