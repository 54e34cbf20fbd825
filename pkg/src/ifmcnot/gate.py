"""Interaction-free-measurement CNOT: routing, target interaction, un-routing.

The pulse is described by a discrete configuration label, not by quantized
field modes.  Four labels per scheme::

    index  single pulse   dual pulse
    0      pi@1           (pi@1, 2pi@4)    emitted, before the cavity
    1      pi@2           (pi@2, 2pi@3)    control |1>: pi pulse reflected to the target
    2      pi@3           (pi@3, 2pi@2)    control |0>: pi pulse transmitted
    3      LOST           LOST             leaked out (absorbing)

Full state order: (label, [record registers...], control, target).  The
target is written in its own (|+>, |->) basis, so the pi pulse acts as X
there.  Record registers only exist when which-way dephasing is active;
they are part of the pulse field.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import prod
from typing import Optional, Sequence

import numpy as np

from .core import (DensityMatrix, PureState, State, apply_ops, check_kraus, embed,
                   partial_trace, purity, tensor_all, to_density)
from .metrics import (CNOT, GateReport, apply_channel, avg_gate_fidelity, concurrence,
                      design_average_fidelity, state_fidelity, truth_rows)
from .noise import IDEAL, NoiseModel, hook_ops
from .pulses import PhaseConvention, PulseArea, perturb_area, rabi_unitary

PRE, ARM2, ARM3, LOST = 0, 1, 2, 3
N_LABELS = 4
RECORD_DIM = N_LABELS + 1
MAX_CHAIN_QUBITS = 8
TOL = 1e-12


class Variant(enum.Enum):
    SINGLE = "single"
    DUAL = "dual"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        for v in cls:
            if value in (v.value, v.name, v.name.lower()):
                return v
        raise ValueError(f"unknown scheme variant {value!r}")


LABELS = {
    Variant.SINGLE: ("pi@1", "pi@2", "pi@3", "LOST"),
    Variant.DUAL: ("pi@1,2pi@4", "pi@2,2pi@3", "pi@3,2pi@2", "LOST"),
}


@dataclass(frozen=True)
class Scheme:
    """Gate variant and conventions.

    ``n`` selects the pulse pair: a (2n-1)pi pulse and, for the dual
    scheme, a 2n*pi pulse.  ``arm_phases`` are mirror phases (radians) of
    arms 1-4, picked up once per traversal of that arm.
    """

    variant: Variant = Variant.SINGLE
    conv: PhaseConvention = PhaseConvention.IDEAL_PAPER
    arm_phases: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    n: int = 1
    couple_target: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "conv", PhaseConvention.parse(self.conv))
        phases = tuple(float(x) for x in self.arm_phases)
        if len(phases) != 4:
            raise ValueError("arm_phases needs one phase per arm (4)")
        object.__setattr__(self, "arm_phases", phases)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"pulse order n must be a positive integer, got {self.n}")

    @property
    def dual(self) -> bool:
        return self.variant is Variant.DUAL

    @property
    def pi_pulse(self) -> PulseArea:
        return PulseArea.nominal(2 * self.n - 1)

    @property
    def two_pi_pulse(self) -> PulseArea:
        return PulseArea.nominal(2 * self.n)

    @property
    def labels(self) -> tuple[str, ...]:
        return LABELS[self.variant]

    def to_dict(self) -> dict:
        return {"variant": self.variant.value, "conv": self.conv.value,
                "arm_phases": list(self.arm_phases), "n": self.n,
                "couple_target": self.couple_target}


@dataclass(frozen=True)
class GateInput:
    """Control alpha|0> + beta|1>, target gamma|+> + delta|->."""

    control: tuple[complex, complex]
    target: tuple[complex, complex]

    def __post_init__(self):
        for name in ("control", "target"):
            pair = tuple(complex(x) for x in getattr(self, name))
            if len(pair) != 2 or not all(np.isfinite(x) for x in pair):
                raise ValueError(f"{name} needs two finite amplitudes")
            if abs(abs(pair[0]) ** 2 + abs(pair[1]) ** 2 - 1) > TOL:
                raise ValueError(f"{name} amplitudes are not normalized")
            object.__setattr__(self, name, pair)

    @classmethod
    def basis(cls, c: int, t: int) -> "GateInput":
        return cls((1 - c, c), (1 - t, t))

    @classmethod
    def bell(cls) -> "GateInput":
        s = 1 / np.sqrt(2)
        return cls((s, s), (1, 0))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "GateInput":
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        c = v[:2] / np.linalg.norm(v[:2])
        t = v[2:] / np.linalg.norm(v[2:])
        return cls(tuple(c), tuple(t))

    @property
    def vector(self) -> np.ndarray:
        return np.kron(np.array(self.control), np.array(self.target))

    def to_dict(self) -> dict:
        return {k: [[z.real, z.imag] for z in getattr(self, k)] for k in ("control", "target")}


def _record_count(dims) -> int:
    return len(dims) - 3


def _check_gate_dims(dims) -> None:
    if len(dims) < 3 or dims[0] != N_LABELS or dims[-1] != 2 or dims[-2] != 2:
        raise ValueError(f"not a gate state layout: dims {dims}")
    if any(d != RECORD_DIM for d in dims[1:-2]):
        raise ValueError(f"record registers must have dimension {RECORD_DIM}: dims {dims}")


def gate_dims(records: int = 0) -> tuple[int, ...]:
    return (N_LABELS,) + (RECORD_DIM,) * records + (2, 2)


def label_weights(state: State) -> np.ndarray:
    """Probability of each pulse label (trace-decaying states give sum < 1)."""
    if isinstance(state, PureState):
        w = np.abs(state.amplitudes.reshape(state.dims[0], -1)) ** 2
        return w.sum(axis=1)
    return partial_trace(state, [0]).matrix.diagonal().real.copy()


def initial_state(s: Scheme, inp: GateInput, records: int = 0) -> PureState:
    """Pulse(s) emitted into arm 1 (and arm 4), control and target as given."""
    parts = [PureState.basis((N_LABELS,), (PRE,))]
    parts += [PureState.basis((RECORD_DIM,), (0,))] * records
    parts += [PureState.qubit(*inp.control), PureState.qubit(*inp.target)]
    return tensor_all(parts)


def routing_permutation() -> np.ndarray:
    """Control-conditioned relabelling on (label, control).

    Control |0>: PRE <-> ARM3 (transmitted).  Control |1>: PRE <-> ARM2
    (reflected).  For the dual scheme the same swap moves the 2pi pulse to
    the complementary arm, since both pulses share one joint label.
    """
    perm = np.zeros((2 * N_LABELS, 2 * N_LABELS))
    swaps = {0: {PRE: ARM3, ARM3: PRE}, 1: {PRE: ARM2, ARM2: PRE}}
    for lab in range(N_LABELS):
        for c in range(2):
            out = swaps[c].get(lab, lab)
            perm[out * 2 + c, lab * 2 + c] = 1.0
    return perm


def _control_index(dims) -> int:
    return len(dims) - 2


def _require(state: State, allowed: Sequence[int], what: str) -> None:
    w = label_weights(state)
    bad = sum(w[k] for k in range(N_LABELS) if k not in allowed)
    if bad > 1e-10:
        raise ValueError(f"malformed pulse configuration: {what}")


def route_ops(s: Scheme, dims, eta: float = 0.0) -> list[np.ndarray]:
    """Forward pass through the cavity as a single isometry.

    A fraction eta of the probability of the emitted pulse leaks to LOST;
    the rest is routed.  Only defined on states with the pulse at PRE.
    """
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"routing error must lie in [0, 1), got {eta}")
    _check_gate_dims(dims)
    u = embed(routing_permutation(), [0, _control_index(dims)], dims)
    if eta == 0:
        return [u]
    leak = np.zeros((N_LABELS, N_LABELS))
    leak[LOST, PRE] = 1.0
    k = np.sqrt(1 - eta) * u + np.sqrt(eta) * embed(leak, [0], dims)
    return [k]


def route(s: Scheme, psi: State, eta: float = 0.0) -> State:
    _require(psi, (PRE,), "route needs the pulse before the cavity")
    return apply_ops(psi, route_ops(s, psi.dims, eta))


def interaction_areas(s: Scheme, eps_pi: float = 0.0, eps_2pi: float = 0.0) -> tuple[PulseArea, PulseArea]:
    return perturb_area(s.pi_pulse, eps_pi), perturb_area(s.two_pi_pulse, eps_2pi)


def interaction_op(s: Scheme, dims, areas: Optional[tuple[PulseArea, PulseArea]] = None) -> np.ndarray:
    """Label-conditioned rotation of the target.

    The pulse in arm 2 hits the target: the pi pulse for label ARM2, and in
    the dual scheme the 2pi pulse for label ARM3.
    """
    _check_gate_dims(dims)
    pi_area, two_pi_area = areas if areas is not None else (s.pi_pulse, s.two_pi_pulse)
    eye = np.eye(2, dtype=np.complex128)
    per_label = [eye] * N_LABELS
    if s.couple_target:
        per_label[ARM2] = rabi_unitary(pi_area, s.conv)
        if s.dual:
            per_label[ARM3] = rabi_unitary(two_pi_area, s.conv)
    d_mid = prod(dims[1:-1])
    op = np.zeros((prod(dims),) * 2, dtype=np.complex128)
    for lab, u in enumerate(per_label):
        proj = np.zeros((N_LABELS, N_LABELS))
        proj[lab, lab] = 1.0
        op += np.kron(np.kron(proj, np.eye(d_mid)), u)
    return op


def interact(s: Scheme, psi: State, areas: Optional[tuple[PulseArea, PulseArea]] = None) -> State:
    _require(psi, (ARM2, ARM3, LOST), "interact needs a routed pulse")
    return apply_ops(psi, [interaction_op(s, psi.dims, areas)])


def mirror_phases(s: Scheme) -> np.ndarray:
    """Phase per label acquired from the end mirrors of the arms visited."""
    p1, p2, p3, p4 = s.arm_phases
    common = p1 + (p4 if s.dual else 0.0)
    ph = np.zeros(N_LABELS)
    if s.dual:
        ph[ARM2] = ph[ARM3] = p2 + p3
    else:
        ph[ARM2], ph[ARM3] = p2, p3
    ph[[PRE, ARM2, ARM3]] += common
    return np.exp(1j * ph)


def unroute_op(s: Scheme, dims) -> np.ndarray:
    _check_gate_dims(dims)
    ph = embed(np.diag(mirror_phases(s)), [0], dims)
    return embed(routing_permutation(), [0, _control_index(dims)], dims) @ ph


def return_loss_kraus(dims, eta: float) -> list[np.ndarray]:
    """Leakage on the return pass; LOST already holds weight, so this is a channel."""
    _check_gate_dims(dims)
    keep = np.diag([np.sqrt(1 - eta)] * 3 + [1.0]).astype(np.complex128)
    ops = [embed(keep, [0], dims)]
    if eta > 0:
        for lab in (PRE, ARM2, ARM3):
            m = np.zeros((N_LABELS, N_LABELS), dtype=np.complex128)
            m[LOST, lab] = np.sqrt(eta)
            ops.append(embed(m, [0], dims))
    check_kraus(ops)
    return ops


def unroute(s: Scheme, psi: State, eta: float = 0.0) -> State:
    """Return pass: inverse relabelling, plus optional return-pass loss."""
    _require(psi, (ARM2, ARM3, LOST), "unroute needs a routed pulse")
    if eta > 0:
        psi = apply_ops(psi, return_loss_kraus(psi.dims, eta))
    return apply_ops(psi, [unroute_op(s, psi.dims)])


@dataclass
class _Plan:
    dims: tuple[int, ...]
    stages: list[tuple[str, list[np.ndarray]]]
    draws: dict


def _plan(s: Scheme, nm: NoiseModel, rng: np.random.Generator) -> _Plan:
    records = 2 if nm.dephasing_for(s.dual) > 0 else 0
    dims = gate_dims(records)
    hook1, draws = hook_ops("post-route", dims, nm, rng, s.dual)
    hook2, more = hook_ops("post-interact", dims, nm, rng, s.dual)
    draws.update(more)
    areas = interaction_areas(s, draws.get("eps_pi", 0.0), draws.get("eps_2pi", 0.0))
    ret = return_loss_kraus(dims, nm.eta if nm.return_loss else 0.0)
    back = unroute_op(s, dims)
    stages = [
        ("routed", [h @ k for h in hook1 for k in route_ops(s, dims, nm.eta)]),
        ("interacted", [h @ interaction_op(s, dims, areas) for h in hook2]),
        ("unrouted", [back @ k for k in ret]),
    ]
    return _Plan(dims, stages, draws)


def _compress(kraus: list[np.ndarray], tol: float = 1e-14) -> list[np.ndarray]:
    kraus = [k for k in kraus if np.abs(k).max() > tol]
    if len(kraus) <= 16:
        return kraus
    vecs = np.array([k.reshape(-1) for k in kraus])
    choi = vecs.T @ vecs.conj()
    w, v = np.linalg.eigh(choi)
    return [np.sqrt(wi) * v[:, i].reshape(4, 4) for i, wi in enumerate(w) if wi > tol]


def _reduce(plan: _Plan) -> list[np.ndarray]:
    """Two-qubit Kraus operators on the non-lost sector."""
    d = prod(plan.dims)
    branches = [np.eye(d, dtype=np.complex128)[:, :4]]  # |PRE, records 0> (x) |ct>
    for _, ops in plan.stages:
        branches = [k @ b for b in branches for k in ops]
    n_pulse = d // 4
    lost = np.arange(n_pulse) // (n_pulse // N_LABELS) == LOST
    out = []
    for b in branches:
        blocks = b.reshape(n_pulse, 4, 4)
        out.extend(blocks[i] for i in range(n_pulse) if not lost[i])
    return _compress(out)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gate_channel(s: Scheme, nm: NoiseModel = IDEAL, seed=0) -> tuple[list[np.ndarray], dict]:
    """Reduced (control, target) channel of one gate run and its noise draws.

    The channel is trace decreasing when loss is present; its trace is the
    success probability.
    """
    plan = _plan(s, nm, _rng(seed))
    return _reduce(plan), plan.draws


def gate_unitary(s: Scheme, nm: NoiseModel = IDEAL, seed=0) -> np.ndarray:
    kraus, _ = gate_channel(s, nm, seed)
    if len(kraus) != 1:
        raise ValueError("gate channel is not unitary under this noise model")
    u = kraus[0]
    if np.abs(u.conj().T @ u - np.eye(4)).max() > 1e-10:
        raise ValueError("gate channel is not unitary under this noise model")
    return u


def pulse_subsystems(dims) -> list[int]:
    return list(range(len(dims) - 2))


def run_gate(s: Scheme, inp: GateInput, nm: NoiseModel = IDEAL, seed=0) -> GateReport:
    """Execute emit -> route -> hook -> interact -> hook -> unroute."""
    rng = _rng(seed)
    plan = _plan(s, nm, rng)
    state: State = initial_state(s, inp, _record_count(plan.dims))
    snapshots = [("emitted", state)]
    for name, ops in plan.stages:
        state = apply_ops(state, ops)
        snapshots.append((name, state))

    kraus = _reduce(plan)
    final = to_density(state)
    pulse = partial_trace(final, pulse_subsystems(final.dims))
    rho_in = to_density(PureState((2, 2), inp.vector))
    out_raw = apply_channel(kraus, rho_in)
    success = min(out_raw.trace, 1.0)
    output = out_raw.normalized()
    ideal_out = PureState((2, 2), CNOT @ inp.vector)

    fids = {}
    for row_c in range(2):
        for row_t in range(2):
            b = GateInput.basis(row_c, row_t)
            o = apply_channel(kraus, to_density(PureState((2, 2), b.vector))).normalized()
            fids[f"{row_c}{'+-'[row_t]}"] = state_fidelity(o, PureState((2, 2), CNOT @ b.vector))
    bell = apply_channel(kraus, to_density(PureState((2, 2), GateInput.bell().vector))).normalized()

    log = {"seed": seed if not isinstance(seed, np.random.Generator) else None}
    log.update(plan.draws)
    return GateReport(
        truth_table=truth_rows(kraus),
        state_fidelities=fids,
        avg_gate_fidelity=avg_gate_fidelity(kraus),
        postselected_fidelity=design_average_fidelity(kraus, postselect=True),
        concurrence=concurrence(bell),
        success_prob=success,
        pulse_purity=purity(pulse),
        output=output,
        output_fidelity=state_fidelity(output, ideal_out),
        snapshots=snapshots,
        noise_log=log,
        kraus=kraus,
    )


@dataclass
class ChainReport:
    """Result of a sequence of gates on an N-qubit register."""

    state: DensityMatrix
    success_prob: float
    fidelity: float
    ideal: PureState
    gate_logs: list[dict] = field(default_factory=list)
    snapshots: list[DensityMatrix] = field(default_factory=list, repr=False)


def _embed_two(op: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    return embed(op, [c, t], (2,) * n)


def chain(qubits: int, gates: Sequence[tuple[int, int]], s: Scheme = Scheme(), nm: NoiseModel = IDEAL,
          seed=0, initial: Optional[PureState] = None) -> ChainReport:
    """Apply IFM CNOTs (control, target) in sequence on ``qubits`` qubits.

    Qubit indices are 0-based.  A fresh pulse is used for every gate, i.e.
    the probe is ideally reset between gates.  Each gate draws its own noise
    from the run generator.
    """
    if not 1 <= qubits <= MAX_CHAIN_QUBITS:
        raise ValueError(f"chain supports 1..{MAX_CHAIN_QUBITS} qubits, got {qubits}")
    for c, t in gates:
        if not (0 <= c < qubits and 0 <= t < qubits) or c == t:
            raise ValueError(f"invalid gate ({c}, {t}) on {qubits} qubits")
    rng = _rng(seed)
    dims = (2,) * qubits
    if initial is None:
        initial = PureState.basis(dims, (0,) * qubits)
    if initial.dims != dims:
        raise ValueError(f"initial state dims {initial.dims} do not match {qubits} qubits")

    rho = initial.amplitudes[:, None] * initial.amplitudes.conj()[None, :]
    ideal = initial.amplitudes
    logs, snaps = [], []
    for c, t in gates:
        kraus, draws = gate_channel(s, nm, rng)
        logs.append({"gate": [c, t], **draws})
        big = [_embed_two(k, c, t, qubits) for k in kraus]
        rho = sum(k @ rho @ k.conj().T for k in big)
        rho = 0.5 * (rho + rho.conj().T)
        ideal = _embed_two(CNOT, c, t, qubits) @ ideal
        snaps.append(DensityMatrix(dims, rho))
    raw = DensityMatrix(dims, rho)
    success = min(raw.trace, 1.0)
    final = raw.normalized()
    ideal_state = PureState(dims, ideal)
    return ChainReport(final, success, state_fidelity(final, ideal_state), ideal_state, logs, snaps)
