"""Dense state-vector and density-matrix primitives.

Subsystems are stored in a fixed global order: the pulse configuration
(plus any which-way record registers) first, then the control qubit, then
the target qubit, then any extra qubits.  All values are immutable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

MAX_AMPLITUDES = 2 ** 20
UNITARY_TOL = 1e-12
CHANNEL_TOL = 1e-10
PSD_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _check_dims(dims: Sequence[int], max_size: int = MAX_AMPLITUDES) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid subsystem dimensions {dims}")
    if prod(dims) > max_size:
        raise ValueError(f"dimension {prod(dims)} exceeds maximum {max_size}")
    return dims


@dataclass(frozen=True)
class PureState:
    """Unit-norm amplitude vector over a composite space."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amp = _frozen(np.ravel(self.amplitudes))
        if amp.size != prod(dims):
            raise ValueError(f"{amp.size} amplitudes do not match dims {dims}")
        if not np.all(np.isfinite(amp)):
            raise ValueError("non-finite amplitude")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > UNITARY_TOL:
            raise ValueError(f"state norm {norm!r} is not 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amplitudes.reshape(self.dims)

    @classmethod
    def basis(cls, dims: Sequence[int], index: Sequence[int]) -> "PureState":
        dims = _check_dims(dims)
        amp = np.zeros(dims, dtype=np.complex128)
        amp[tuple(index)] = 1.0
        return cls(dims, amp.ravel())

    @classmethod
    def qubit(cls, a: complex, b: complex) -> "PureState":
        return cls((2,), np.array([a, b]))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian positive operator.

    The trace is 1 for a normalized state.  A trace below one is allowed and
    means the remaining weight was discarded (trace-decaying view).
    """

    dims: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _check_dims(self.dims, MAX_AMPLITUDES)
        m = _frozen(self.matrix)
        d = prod(dims)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite matrix entry")
        if np.abs(m - m.conj().T).max() > CHANNEL_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if tr > 1.0 + CHANNEL_TOL or tr < -CHANNEL_TOL:
            raise ValueError(f"trace {tr!r} outside [0, 1]")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityMatrix":
        tr = self.trace
        if tr <= 0:
            raise ValueError("cannot normalize a zero operator")
        return DensityMatrix(self.dims, self.matrix / tr)


State = PureState | DensityMatrix


def tensor(a: PureState, b: PureState, max_size: int = MAX_AMPLITUDES) -> PureState:
    dims = _check_dims(a.dims + b.dims, max_size)
    return PureState(dims, np.kron(a.amplitudes, b.amplitudes))


def tensor_all(states: Sequence[PureState]) -> PureState:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def to_density(psi: State) -> DensityMatrix:
    if isinstance(psi, DensityMatrix):
        return psi
    v = psi.amplitudes
    return DensityMatrix(psi.dims, np.outer(v, v.conj()))


def normalize(vec, dims: Sequence[int] | None = None) -> tuple[PureState, float]:
    """Rescale an arbitrary vector to unit norm.

    Returns the normalized state and the original norm; the squared norm is
    the success probability when amplitude has been removed by leakage.
    """
    v = np.ravel(np.asarray(vec, dtype=np.complex128))
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return PureState(tuple(dims) if dims is not None else (v.size,), v / norm), norm


def partial_trace(rho: State, keep: Sequence[int]) -> DensityMatrix:
    rho = to_density(rho)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep-set must not be empty")
    n = len(rho.dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"subsystem index out of range for dims {rho.dims}")
    drop = [i for i in range(n) if i not in keep]
    t = rho.matrix.reshape(rho.dims + rho.dims)
    # move kept row axes, dropped axes, kept column axes, dropped axes into einsum form
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for i in drop:
        cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    dk = prod(rho.dims[i] for i in keep)
    return DensityMatrix(tuple(rho.dims[i] for i in keep), red.reshape(dk, dk))


def purity(rho: State) -> float:
    """Tr(rho^2) of the normalized state."""
    if isinstance(rho, PureState):
        return 1.0
    m = rho.matrix / rho.trace
    return float(np.einsum("ij,ji->", m, m).real)


def embed(op: np.ndarray, subsystems: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Lift an operator on ``subsystems`` (in the given order) to the full space."""
    dims = list(dims)
    n = len(dims)
    subsystems = list(subsystems)
    others = [i for i in range(n) if i not in subsystems]
    order = subsystems + others
    d_other = prod(dims[i] for i in others)
    big = np.kron(op, np.eye(d_other))
    shape = [dims[i] for i in order]
    big = big.reshape(shape + shape)
    inv = list(np.argsort(order))
    big = big.transpose(inv + [n + i for i in inv])
    d = prod(dims)
    return big.reshape(d, d)


def apply_ops(state: State, ops: Sequence[np.ndarray]) -> State:
    """Apply a Kraus list.  A single operator keeps a pure state pure."""
    if isinstance(state, PureState) and len(ops) == 1:
        return PureState(state.dims, ops[0] @ state.amplitudes)
    rho = to_density(state).matrix
    out = sum(k @ rho @ k.conj().T for k in ops)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(state.dims, out)


def check_kraus(ops: Sequence[np.ndarray], tol: float = CHANNEL_TOL) -> None:
    d = ops[0].shape[1]
    s = sum(k.conj().T @ k for k in ops)
    if np.abs(s - np.eye(d)).max() > tol:
        raise ValueError("Kraus operators are not trace preserving")
