"""Figures of merit comparing a realized two-qubit channel with CNOT.

Two-qubit channels are passed around as lists of 4x4 Kraus operators in
the (control, target) basis, where the target basis is (|+>, |->).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import DensityMatrix, PureState, State, to_density

CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=np.complex128)

# Bell "magic" basis
MAGIC = np.array([[1, 0, 0, 1j],
                  [0, 1j, 1, 0],
                  [0, 1j, -1, 0],
                  [1, 0, 0, -1j]], dtype=np.complex128) / np.sqrt(2)

_SY = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SY, _SY)

TARGET_LABELS = ("+", "-")
CONTROL_LABELS = ("0", "1")


def _as_kraus(channel) -> list[np.ndarray]:
    if isinstance(channel, np.ndarray) and channel.ndim == 2:
        return [channel]
    return [np.asarray(k, dtype=np.complex128) for k in channel]


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def state_fidelity(rho: State, sigma: State) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 of normalized states."""
    if rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch {rho.dims} vs {sigma.dims}")
    if isinstance(rho, PureState) or isinstance(sigma, PureState):
        if isinstance(rho, PureState):
            rho, sigma = sigma, rho
        m = to_density(rho)
        f = np.vdot(sigma.amplitudes, m.matrix @ sigma.amplitudes).real / m.trace
        return float(np.clip(f, 0.0, 1.0))
    a = rho.matrix / rho.trace
    b = sigma.matrix / sigma.trace
    sa = _psd_sqrt(a)
    w = np.linalg.eigvalsh(sa @ b @ sa)
    f = np.sum(np.sqrt(np.clip(w, 0, None))) ** 2
    return float(np.clip(f, 0.0, 1.0))


def avg_gate_fidelity(channel, ideal: np.ndarray = CNOT) -> float:
    """Haar-averaged <psi|U^dag E(psi) U|psi> in closed form.

    For a trace-decreasing channel (loss) this is the success-weighted
    fidelity: discarded runs count as fidelity 0.
    """
    ops = _as_kraus(channel)
    d = ideal.shape[0]
    overlap = sum(abs(np.trace(ideal.conj().T @ k)) ** 2 for k in ops)
    norm = sum(np.trace(k.conj().T @ k).real for k in ops)
    return float((overlap + norm) / (d * (d + 1)))


def success_probability(channel) -> float:
    """Average retained trace over input states."""
    ops = _as_kraus(channel)
    d = ops[0].shape[1]
    return float(sum(np.trace(k.conj().T @ k).real for k in ops) / d)


def _pauli_mub_states() -> list[np.ndarray]:
    i2 = np.eye(2)
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0, -1.0])
    p = {"I": i2, "X": x, "Y": y, "Z": z}
    groups = [("ZI", "IZ"), ("XI", "IX"), ("YI", "IY"), ("XY", "YZ"), ("YX", "ZY")]
    states = []
    for a, b in groups:
        pa = np.kron(p[a[0]], p[a[1]])
        pb = np.kron(p[b[0]], p[b[1]])
        # eigenvalues +-1 +-2 are distinct, so the eigenbasis is the common one
        _, vecs = np.linalg.eigh(pa + 2 * pb)
        states.extend(vecs.T)
    return states


MUB_STATES = _pauli_mub_states()


def design_average_fidelity(channel, ideal: np.ndarray = CNOT, postselect: bool = False,
                            states: Optional[Sequence[np.ndarray]] = None) -> float:
    """Average output fidelity over a state set (default: the 20 two-qubit MUB states).

    The MUB set is a 2-design, so with ``postselect=False`` this equals
    :func:`avg_gate_fidelity` exactly.
    """
    ops = _as_kraus(channel)
    states = MUB_STATES if states is None else states
    vals = []
    for psi in states:
        phi = ideal @ psi
        amps = [k @ psi for k in ops]
        f = sum(abs(np.vdot(phi, a)) ** 2 for a in amps)
        if postselect:
            f /= sum(np.vdot(a, a).real for a in amps)
        vals.append(f)
    return float(np.mean(vals))


def apply_channel(channel, rho: State) -> DensityMatrix:
    ops = _as_kraus(channel)
    m = to_density(rho).matrix
    out = sum(k @ m @ k.conj().T for k in ops)
    return DensityMatrix(rho.dims, 0.5 * (out + out.conj().T))


def concurrence(rho: State) -> float:
    """Wootters concurrence of a two-qubit state."""
    if tuple(rho.dims) != (2, 2):
        raise ValueError(f"concurrence needs a two-qubit state, got dims {rho.dims}")
    m = to_density(rho).matrix
    m = m / np.trace(m).real
    tilde = _YY @ m.conj() @ _YY
    s = _psd_sqrt(m)
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(s @ tilde @ s), 0, None))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def makhlin_invariants(u: np.ndarray) -> tuple[float, float, float]:
    """Local invariants (Re G1, Im G1, G2) of a two-qubit unitary."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (4, 4):
        raise ValueError("makhlin_invariants needs a 4x4 unitary")
    ub = MAGIC.conj().T @ u @ MAGIC
    det = np.linalg.det(ub)
    m = ub.T @ ub
    tr = np.trace(m)
    g1 = tr ** 2 / (16 * det)
    g2 = (tr ** 2 - np.trace(m @ m)) / (4 * det)
    return float(g1.real), float(g1.imag), float(g2.real)


def control_phase(u: np.ndarray, ideal: np.ndarray = CNOT, tol: float = 1e-10) -> tuple[complex, float]:
    """Decompose ``u = g * (diag(1, e^{i phi}) (x) I) @ ideal``.

    Returns (g, phi).  Raises ValueError if ``u`` has no such form.
    """
    d = u @ ideal.conj().T
    diag = np.diag(d)
    off = d - np.diag(diag)
    if np.abs(off).max() > tol or abs(diag[0] - diag[1]) > tol or abs(diag[2] - diag[3]) > tol:
        raise ValueError("gate is not a control-phase dressing of the ideal gate")
    g = diag[0]
    return complex(g), float(np.angle(diag[2] / diag[0]))


def local_dressing(phi: float) -> np.ndarray:
    return np.kron(np.diag([1.0, np.exp(1j * phi)]), np.eye(2))


@dataclass
class TruthRow:
    control_in: str
    target_in: str
    control_out: str
    target_out: str
    probability: float

    def as_tuple(self) -> tuple:
        return (self.control_in, self.target_in, self.control_out, self.target_out)


def truth_rows(channel) -> list[TruthRow]:
    """Dominant output (and its post-selected probability) for each basis input."""
    ops = _as_kraus(channel)
    rows = []
    for idx, (c, t) in enumerate(itertools.product(range(2), range(2))):
        probs = sum(np.abs(k[:, idx]) ** 2 for k in ops)
        probs = probs / probs.sum()
        out = int(np.argmax(probs))
        rows.append(TruthRow(CONTROL_LABELS[c], TARGET_LABELS[t],
                             CONTROL_LABELS[out // 2], TARGET_LABELS[out % 2], float(probs[out])))
    return rows


def truth_table(scheme=None, nm=None, seed=0) -> list[TruthRow]:
    """Truth table of the gate realized by ``scheme`` under noise ``nm``."""
    from .gate import Scheme, gate_channel
    from .noise import IDEAL
    import numpy.random as npr

    scheme = Scheme() if scheme is None else scheme
    kraus, _ = gate_channel(scheme, IDEAL if nm is None else nm, npr.default_rng(seed))
    return truth_rows(kraus)


@dataclass
class GateReport:
    """Everything measured in one gate run."""

    truth_table: list[TruthRow]
    state_fidelities: dict[str, float]
    avg_gate_fidelity: float
    postselected_fidelity: float
    concurrence: float
    success_prob: float
    pulse_purity: float
    output: DensityMatrix
    output_fidelity: float
    snapshots: list[tuple[str, State]] = field(repr=False)
    noise_log: dict = field(default_factory=dict)
    kraus: list[np.ndarray] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "avg_gate_fidelity": self.avg_gate_fidelity,
            "postselected_fidelity": self.postselected_fidelity,
            "concurrence": self.concurrence,
            "success_prob": self.success_prob,
            "pulse_purity": self.pulse_purity,
            "output_fidelity": self.output_fidelity,
        }
