"""Imperfections layered onto the ideal protocol.

Which-way dephasing acts on the pulse-configuration label.  In a full gate
run it is realised by writing a record of the path into a register that is
counted as part of the pulse field (the scattered photon stays with the
light); tracing that register out gives exactly :func:`dephase_path`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DensityMatrix, PureState, State, apply_ops, check_kraus, embed, to_density

STAGES = ("post-route", "post-interact")


@dataclass(frozen=True)
class EpsilonDist:
    kind: str = "none"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "fixed", "uniform"):
            raise ValueError(f"unknown epsilon distribution {self.kind!r}")
        if self.kind == "none" and self.value != 0.0:
            raise ValueError("epsilon distribution 'none' takes no value")
        if not 0.0 <= self.value < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {self.value}")

    @classmethod
    def fixed(cls, eps: float) -> "EpsilonDist":
        return cls("fixed", float(eps))

    @classmethod
    def uniform(cls, eps_max: float) -> "EpsilonDist":
        return cls("uniform", float(eps_max))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class NoiseModel:
    """Noise parameters for one gate run.

    p_dephase is the which-way dephasing probability per traversal.  For the
    dual-pulse gate it is scaled by ``kappa``, the distinguishability of the
    two pulses (0 means the paths cannot be told apart).  ``eta`` is the
    routing loss 1 - R, applied on the forward pass and, when
    ``return_loss`` is set, again on the return pass.
    """

    p_dephase: float = 0.0
    epsilon: EpsilonDist = field(default_factory=EpsilonDist)
    eta: float = 0.0
    kappa: float = 0.0
    return_loss: bool = True

    def __post_init__(self):
        if not 0.0 <= self.p_dephase <= 1.0:
            raise ValueError(f"p_dephase must lie in [0, 1], got {self.p_dephase}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")

    @property
    def seed_consumed(self) -> bool:
        return self.epsilon.kind == "uniform"

    @property
    def is_ideal(self) -> bool:
        return self.p_dephase == 0 and self.eta == 0 and self.epsilon.kind == "none"

    def dephasing_for(self, dual: bool) -> float:
        return self.p_dephase * self.kappa if dual else self.p_dephase

    def to_dict(self) -> dict:
        return {
            "p_dephase": self.p_dephase,
            "epsilon": self.epsilon.to_dict(),
            "eta": self.eta,
            "kappa": self.kappa,
            "return_loss": self.return_loss,
        }


IDEAL = NoiseModel()


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dephasing probability must lie in [0, 1], got {p}")


def dephase_kraus(dims, p: float, label_index: int = 0) -> list[np.ndarray]:
    """Kraus operators sqrt(1-p) I and sqrt(p) P_k for each pulse label k."""
    _check_p(p)
    n = dims[label_index]
    d = int(np.prod(dims))
    ops = [np.sqrt(1 - p) * np.eye(d, dtype=np.complex128)]
    if p > 0:
        for k in range(n):
            proj = np.zeros((n, n), dtype=np.complex128)
            proj[k, k] = 1.0
            ops.append(np.sqrt(p) * embed(proj, [label_index], dims))
    check_kraus(ops)
    return ops


def dephase_path(rho: State, p: float) -> DensityMatrix:
    """Scale coherences between distinct pulse labels by (1 - p)."""
    rho = to_density(rho)
    return apply_ops(rho, dephase_kraus(rho.dims, p))


def record_unitary(n_labels: int, p: float) -> np.ndarray:
    """Controlled marking of a record register of size n_labels + 1.

    For label k the record rotates |0> -> sqrt(1-p)|0> + sqrt(p)|k+1>, so
    records of different labels overlap by exactly 1 - p.
    """
    _check_p(p)
    r = n_labels + 1
    u = np.zeros((n_labels * r, n_labels * r), dtype=np.complex128)
    c, s = np.sqrt(1 - p), np.sqrt(p)
    for k in range(n_labels):
        block = np.eye(r, dtype=np.complex128)
        block[0, 0] = block[k + 1, k + 1] = c
        block[k + 1, 0] = s
        block[0, k + 1] = -s
        u[k * r:(k + 1) * r, k * r:(k + 1) * r] = block
    return u


def sample_epsilon(dist: EpsilonDist, rng: np.random.Generator) -> float:
    if dist.kind == "none":
        return 0.0
    if dist.kind == "fixed":
        return dist.value
    return float(rng.uniform(0.0, dist.value))


def hook_ops(stage: str, dims, nm: NoiseModel, rng: np.random.Generator,
             dual: bool = False) -> tuple[list[np.ndarray], dict]:
    """Operators and stochastic draws for the noise hook at ``stage``.

    Pulse-area deficits consumed by the interaction are drawn at
    ``post-route``.  When the state carries record registers (subsystems
    between the label and the two qubits) dephasing is a unitary marking of
    register 1 (post-route) or 2 (post-interact); otherwise it is the Kraus
    channel of :func:`dephase_path`.
    """
    if stage not in STAGES:
        raise ValueError(f"unknown noise stage {stage!r}")
    draws = {}
    if stage == "post-route":
        draws["eps_pi"] = sample_epsilon(nm.epsilon, rng)
        if dual:
            draws["eps_2pi"] = sample_epsilon(nm.epsilon, rng)
    p = nm.dephasing_for(dual)
    d = int(np.prod(dims))
    if p == 0:
        return [np.eye(d, dtype=np.complex128)], draws
    record = STAGES.index(stage) + 1
    if len(dims) > 3 and record < len(dims) - 2:
        n = dims[0]
        if dims[record] != n + 1:
            raise ValueError(f"record register {record} has dimension {dims[record]}, need {n + 1}")
        return [embed(record_unitary(n, p), [0, record], dims)], draws
    return dephase_kraus(dims, p), draws


def apply_noise_hooks(stage: str, state: State, nm: NoiseModel, rng: np.random.Generator,
                      dual: bool = False) -> tuple[State, dict]:
    """Apply the noise bound to ``stage``; returns (new state, draws)."""
    ops, draws = hook_ops(stage, state.dims, nm, rng, dual)
    return apply_ops(state, ops), draws
