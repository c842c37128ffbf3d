"""Dense state-vector algebra and Born-rule measurement for small Hilbert spaces.

Index layout: the first tensor factor is the most significant digit of the
flat index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

ATOL = 1e-12
SUM_ATOL = 1e-9

__all__ = [
    "ATOL",
    "SUM_ATOL",
    "StateVector",
    "UnitaryOp",
    "ProjectorSet",
    "ket",
    "tensor",
    "apply",
    "fidelity",
    "exact_probs",
    "measure",
    "sample",
]


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state with complex amplitudes ``amps`` of length ``dim``."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError(f"amplitudes must be a non-empty 1-d array, got shape {amps.shape}")
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> StateVector:
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amps / n)

    def __len__(self) -> int:
        return self.dim


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Square unitary matrix. Unitarity is checked on construction."""

    entries: np.ndarray
    check: bool = True

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if self.check:
            err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
            if err > 1e-10:
                raise ValueError(f"matrix is not unitary (max deviation {err:.3e})")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other: UnitaryOp) -> UnitaryOp:
        if not isinstance(other, UnitaryOp):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return UnitaryOp(self.entries @ other.entries, check=False)

    @property
    def dagger(self) -> UnitaryOp:
        return UnitaryOp(self.entries.conj().T, check=False)

    def __call__(self, state: StateVector) -> StateVector:
        if state.dim != self.dim:
            raise ValueError(f"dimension mismatch: operator {self.dim}, state {state.dim}")
        return StateVector(self.entries @ state.amps)


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """Complete set of orthogonal projectors with one label per outcome."""

    projectors: tuple
    labels: tuple

    def __post_init__(self):
        projs = tuple(_frozen(p) for p in self.projectors)
        labels = tuple(self.labels)
        if not projs:
            raise ValueError("projector set is empty")
        if len(projs) != len(labels):
            raise ValueError("need exactly one label per projector")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels: {labels}")
        dim = projs[0].shape[0]
        total = np.zeros((dim, dim), dtype=np.complex128)
        for label, p in zip(labels, projs):
            if p.shape != (dim, dim):
                raise ValueError(f"projector {label!r} has shape {p.shape}, expected {(dim, dim)}")
            if np.max(np.abs(p - p.conj().T)) > ATOL:
                raise ValueError(f"projector {label!r} is not Hermitian")
            if np.max(np.abs(p @ p - p)) > ATOL:
                raise ValueError(f"projector {label!r} is not idempotent")
            total += p
        if np.max(np.abs(total - np.eye(dim))) > ATOL:
            raise ValueError("projectors do not sum to the identity")
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_basis(cls, vectors: Sequence, labels: Sequence) -> ProjectorSet:
        """Rank-1 projectors onto the given orthonormal vectors."""
        projs = []
        for v in vectors:
            v = np.asarray(v, dtype=np.complex128)
            projs.append(np.outer(v, v.conj()))
        return cls(tuple(projs), tuple(labels))

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self) -> int:
        return len(self.projectors)

    def index(self, label) -> int:
        return self.labels.index(label)


def ket(dim: int, index: int) -> StateVector:
    """Computational basis vector ``|index>`` of dimension ``dim``."""
    if not 0 <= index < dim:
        raise ValueError(f"index {index} out of range for dim {dim}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def tensor(factors: Sequence[StateVector]) -> StateVector:
    """Kronecker product of states, first factor most significant."""
    factors = list(factors)
    if not factors:
        raise ValueError("tensor() needs at least one factor")
    return StateVector(reduce(np.kron, (f.amps for f in factors)))


def _dims_of(register) -> tuple:
    dims = getattr(register, "dims", register)
    return tuple(int(d) for d in dims)


def apply(op: UnitaryOp, state: StateVector, targets: Sequence[int], register) -> StateVector:
    """Apply ``op`` to the subsystems ``targets`` of ``state``.

    ``register`` is anything with a ``dims`` attribute (a PhotonRegister) or a
    plain sequence of subsystem dimensions. When several targets are given,
    ``op`` acts on them in the order listed, first target most significant.
    """
    dims = _dims_of(register)
    targets = [int(t) for t in targets]
    if not targets:
        raise ValueError("no target subsystems given")
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets must be distinct, got {targets}")
    for t in targets:
        if not 0 <= t < len(dims):
            raise ValueError(f"target {t} out of range for {len(dims)} subsystems")
    if state.dim != int(np.prod(dims)):
        raise ValueError(f"state dim {state.dim} does not match register dims {dims}")
    tdims = [dims[t] for t in targets]
    if op.dim != int(np.prod(tdims)):
        raise ValueError(f"operator dim {op.dim} != product of target dims {tdims}")

    psi = state.amps.reshape(dims)
    psi = np.moveaxis(psi, targets, range(len(targets)))
    rest = psi.shape[len(targets):]
    psi = op.entries @ psi.reshape(op.dim, -1)
    psi = psi.reshape(tuple(tdims) + rest)
    psi = np.moveaxis(psi, range(len(targets)), targets)
    return StateVector(psi.reshape(-1))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for two normalized pure states."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    f = abs(np.vdot(a.amps, b.amps)) ** 2
    return float(min(max(f, 0.0), 1.0))


def exact_probs(state: StateVector, ps: ProjectorSet) -> np.ndarray:
    """Born probabilities <psi|P_i|psi> for every projector in ``ps``."""
    if state.dim != ps.dim:
        raise ValueError(f"dimension mismatch: state {state.dim}, projectors {ps.dim}")
    psi = state.amps
    probs = np.array([np.vdot(psi, p @ psi).real for p in ps.projectors])
    if np.any(probs < -ATOL):
        raise ValueError(f"negative Born probability {probs.min():.3e}")
    probs = np.clip(probs, 0.0, 1.0)
    if abs(probs.sum() - 1.0) > SUM_ATOL:
        raise ValueError(f"probabilities sum to {probs.sum():.12f}; is the state normalized?")
    return probs


def measure(state: StateVector, ps: ProjectorSet, rng: np.random.Generator):
    """Sample one outcome and return ``(label, collapsed_state)``."""
    probs = exact_probs(state, ps)
    total = probs.sum()
    if total <= 0.0:
        raise ValueError("all outcome probabilities are zero")
    k = int(rng.choice(len(probs), p=probs / total))
    collapsed = StateVector(ps.projectors[k] @ state.amps).normalize()
    return ps.labels[k], collapsed


def sample(state: StateVector, ps: ProjectorSet, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` independent outcome indices with Born probabilities."""
    probs = exact_probs(state, ps)
    return rng.choice(len(probs), size=size, p=probs / probs.sum())
