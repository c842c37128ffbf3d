"""Photon/degree-of-freedom registers and their flat index layout."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import StateVector, UnitaryOp

POLARIZATION = "polarization"
OAM_PARITY = "oam_parity"
OAM_QUTRIT = "oam_qutrit"

DEFAULT_LABELS = {
    POLARIZATION: ("H", "V"),
    OAM_PARITY: ("E", "O"),
    # j = 0, 1, 2 <-> OAM 0, +1, -1
    OAM_QUTRIT: ("0", "+1", "-1"),
}

# polarization sorts before OAM within a photon
_KIND_ORDER = {POLARIZATION: 0, OAM_PARITY: 1, OAM_QUTRIT: 1}


@dataclass(frozen=True)
class DofSpec:
    photon_id: int
    dof_kind: str
    basis_labels: tuple = ()

    def __post_init__(self):
        if self.dof_kind not in DEFAULT_LABELS:
            raise ValueError(f"unsupported dof kind {self.dof_kind!r}")
        labels = tuple(self.basis_labels) or DEFAULT_LABELS[self.dof_kind]
        if len(labels) != len(DEFAULT_LABELS[self.dof_kind]):
            raise ValueError(
                f"{self.dof_kind} needs {len(DEFAULT_LABELS[self.dof_kind])} labels, got {labels}"
            )
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate basis labels {labels}")
        object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return len(self.basis_labels)

    @property
    def key(self) -> tuple:
        return (self.photon_id, self.dof_kind)

    @property
    def is_oam(self) -> bool:
        return self.dof_kind != POLARIZATION


@dataclass(frozen=True)
class PhotonRegister:
    subsystems: tuple

    @property
    def dims(self) -> tuple:
        return tuple(s.dim for s in self.subsystems)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.subsystems)

    def subsystem(self, photon_id: int, dof: str) -> int:
        """Position of a subsystem. ``dof`` may be "pol"/"oam" shorthands."""
        for i, s in enumerate(self.subsystems):
            if s.photon_id != photon_id:
                continue
            if s.dof_kind == dof or (dof == "pol" and not s.is_oam) or (dof == "oam" and s.is_oam):
                return i
        raise KeyError(f"photon {photon_id} has no {dof} subsystem")

    def has(self, photon_id: int, dof: str) -> bool:
        try:
            self.subsystem(photon_id, dof)
        except KeyError:
            return False
        return True

    def index_of(self, labels: Sequence[str]) -> int:
        return index_of(self, labels)

    def labels_of(self, index: int) -> tuple:
        return labels_of(self, index)

    def basis_state(self, labels: Sequence[str]) -> StateVector:
        amps = np.zeros(self.total_dim, dtype=np.complex128)
        amps[index_of(self, labels)] = 1.0
        return StateVector(amps)


def build_register(specs: Sequence[DofSpec]) -> PhotonRegister:
    specs = list(specs)
    if not specs:
        raise ValueError("register needs at least one subsystem")
    keys = [s.key for s in specs]
    if len(set(keys)) != len(keys):
        raise ValueError(f"duplicate subsystem in {keys}")
    photons_oam = {}
    for s in specs:
        if s.is_oam:
            if s.photon_id in photons_oam:
                raise ValueError(f"photon {s.photon_id} has two OAM subsystems")
            photons_oam[s.photon_id] = s.dof_kind
    ordered = sorted(specs, key=lambda s: (s.photon_id, _KIND_ORDER[s.dof_kind]))
    return PhotonRegister(tuple(ordered))


def hyper_register(photon_ids: Sequence[int], oam_kind: str = OAM_PARITY) -> PhotonRegister:
    """Register where every listed photon carries polarization and OAM."""
    specs = []
    for pid in photon_ids:
        specs.append(DofSpec(pid, POLARIZATION))
        specs.append(DofSpec(pid, oam_kind))
    return build_register(specs)


def index_of(register: PhotonRegister, labels: Sequence[str]) -> int:
    labels = tuple(labels)
    if len(labels) != len(register):
        raise ValueError(f"expected {len(register)} labels, got {len(labels)}")
    idx = 0
    for spec, label in zip(register.subsystems, labels):
        try:
            digit = spec.basis_labels.index(label)
        except ValueError:
            raise ValueError(
                f"unknown label {label!r} for photon {spec.photon_id} {spec.dof_kind}"
            ) from None
        idx = idx * spec.dim + digit
    return idx


def labels_of(register: PhotonRegister, index: int) -> tuple:
    if not 0 <= index < register.total_dim:
        raise ValueError(f"index {index} out of range")
    out = []
    for spec in reversed(register.subsystems):
        index, digit = divmod(index, spec.dim)
        out.append(spec.basis_labels[digit])
    return tuple(reversed(out))


def embed(register: PhotonRegister, op: UnitaryOp, targets: Sequence[int]) -> UnitaryOp:
    """Lift ``op`` on ``targets`` to the full register, identity elsewhere.

    Built entry-by-entry from the mixed-radix digits, independently of
    :func:`hyperent.hilbert.apply`, so the two can cross-check each other.
    """
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets must be distinct, got {targets}")
    for t in targets:
        if not 0 <= t < len(register):
            raise ValueError(f"target {t} out of range")
    dims = register.dims
    tdims = [dims[t] for t in targets]
    if op.dim != int(np.prod(tdims)):
        raise ValueError(f"operator dim {op.dim} != product of target dims {tdims}")

    n = register.total_dim
    digits = list(itertools.product(*(range(d) for d in dims)))
    sub = {}
    for i, dig in enumerate(digits):
        rest = tuple(d for k, d in enumerate(dig) if k not in targets)
        local = int(np.ravel_multi_index([dig[t] for t in targets], tdims))
        sub[(rest, local)] = i
    full = np.zeros((n, n), dtype=np.complex128)
    for (rest, col_local), col in sub.items():
        for row_local in range(op.dim):
            amp = op.entries[row_local, col_local]
            if amp != 0:
                full[sub[(rest, row_local)], col] = amp
    return UnitaryOp(full, check=False)
