"""Gate catalog: wave plates, CNOT variants, DOF swap, OAM sorters and analyzers.

Every interferometer arm is treated as phase balanced, so the gates are the
ideal unitaries with no stray global or relative phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import ProjectorSet, UnitaryOp
from .photonreg import PhotonRegister, embed

I2 = np.eye(2, dtype=np.complex128)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)

# Correction alphabet in lexicographic order (used to break ties).
PAULI_ALPHABET = {
    "I": I2,
    "s1": SIGMA_1,
    "is2": 1j * SIGMA_2,
    "s3": SIGMA_3,
}
PAULI_NAMES = tuple(PAULI_ALPHABET)


def pauli(name: str) -> UnitaryOp:
    try:
        return UnitaryOp(PAULI_ALPHABET[name])
    except KeyError:
        raise ValueError(f"unknown Pauli name {name!r}; expected one of {PAULI_NAMES}") from None


def hadamard() -> UnitaryOp:
    return UnitaryOp(HADAMARD)


def hwp(theta: float) -> UnitaryOp:
    """Half-wave plate with fast axis at ``theta`` radians, in the (H, V) basis."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return UnitaryOp(np.array([[c, s], [s, -c]], dtype=np.complex128))


def _rz(phi):
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def _ry(phi):
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def su2(alpha: float, beta: float, gamma: float) -> UnitaryOp:
    """SU(2) element Rz(alpha) Ry(beta) Rz(gamma).

    Stands in for the three-plate polarization gadget; any SU(2) element has
    such a decomposition, so the parameterization is surjective.
    """
    return UnitaryOp(_rz(alpha) @ _ry(beta) @ _rz(gamma))


def su2_inverse(alpha: float, beta: float, gamma: float) -> UnitaryOp:
    return su2(-gamma, -beta, -alpha)


def su2_angles_for(a: complex, b: complex) -> tuple:
    """Angles such that ``su2(*angles)`` maps |H> exactly onto a|H> + b|V>."""
    norm = math.hypot(abs(a), abs(b))
    if not math.isclose(norm, 1.0, abs_tol=1e-12):
        raise ValueError(f"target state is not normalized (norm {norm})")
    beta = 2 * math.atan2(abs(b), abs(a))
    pa = np.angle(a) if abs(a) > 0 else 0.0
    pb = np.angle(b) if abs(b) > 0 else pa
    alpha = float(pb - pa)
    # Rz(alpha) Ry(beta) Rz(gamma)|H> = exp(-i(alpha+gamma)/2) (cos, exp(i alpha) sin)
    gamma = float(-2 * pa - alpha)
    return float(alpha), beta, gamma


@dataclass(frozen=True)
class CnotSpec:
    """CNOT between two subsystems of a register.

    ``control_value`` is the control label that triggers the flip; there is
    no default because different preparation stages need different polarity.
    """

    control: int
    target: int
    control_value: str

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("control and target must differ")


def cnot(spec: CnotSpec, register: PhotonRegister) -> UnitaryOp:
    dims = register.dims
    for t in (spec.control, spec.target):
        if not 0 <= t < len(dims):
            raise ValueError(f"subsystem {t} out of range")
    if dims[spec.target] != 2:
        raise ValueError(f"CNOT target must be two-dimensional, got dim {dims[spec.target]}")
    labels = register.subsystems[spec.control].basis_labels
    if spec.control_value not in labels:
        raise ValueError(f"control value {spec.control_value!r} not in {labels}")
    dc = dims[spec.control]
    trigger = labels.index(spec.control_value)
    local = np.zeros((2 * dc, 2 * dc), dtype=np.complex128)
    for c in range(dc):
        block = SIGMA_1 if c == trigger else I2
        local[2 * c:2 * c + 2, 2 * c:2 * c + 2] = block
    return embed(register, UnitaryOp(local), [spec.control, spec.target])


def spp() -> UnitaryOp:
    """Order-1 spiral phase plate on the parity qubit: E <-> O."""
    return UnitaryOp(SIGMA_1)


def _photon_dofs(register: PhotonRegister, photon_id: int) -> tuple:
    try:
        pol = register.subsystem(photon_id, "polarization")
        oam = register.subsystem(photon_id, "oam_parity")
    except KeyError as exc:
        raise ValueError(f"photon {photon_id} needs polarization and OAM parity: {exc}") from None
    return pol, oam


def pc_o(register: PhotonRegister, photon_id: int) -> UnitaryOp:
    """Polarization-controlled OAM flip: SPP sits in the V (reflected) arm."""
    pol, oam = _photon_dofs(register, photon_id)
    return cnot(CnotSpec(pol, oam, "V"), register)


def oc_p(register: PhotonRegister, photon_id: int) -> UnitaryOp:
    """OAM-controlled polarization flip: HWP at 45 degrees in the odd arm."""
    pol, oam = _photon_dofs(register, photon_id)
    return cnot(CnotSpec(oam, pol, "O"), register)


def swap_dofs(register: PhotonRegister, photon_id: int) -> UnitaryOp:
    """Exchange a photon's polarization and parity qubits (H<->E, V<->O)."""
    pol, oam = _photon_dofs(register, photon_id)
    # local basis (pol, oam): HE, HO, VE, VO; swap exchanges HO <-> VE
    local = np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
    )
    return embed(register, UnitaryOp(local), [pol, oam])


def fourier_vectors(d: int, offset: float, conjugate: bool = False) -> list:
    """Vectors (1/sqrt d) sum_j exp(+-2 pi i j (k + offset) / d) |j>, k = 0..d-1."""
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    sign = -1.0 if conjugate else 1.0
    j = np.arange(d)
    return [
        np.exp(sign * 2j * np.pi * j * (k + offset) / d) / math.sqrt(d) for k in range(d)
    ]


def fourier_basis(d: int, offset: float, conjugate: bool = False) -> ProjectorSet:
    """Hologram-plus-sorter analyzer: projectors onto a shifted Fourier basis.

    Outcome labels are the integers ``0..d-1``. ``conjugate`` flips the phase
    winding, which is how an analyzer looks from a party whose OAM index is
    negated.
    """
    return ProjectorSet.from_basis(fourier_vectors(d, offset, conjugate), tuple(range(d)))


def computational_basis(d: int) -> ProjectorSet:
    return ProjectorSet.from_basis(list(np.eye(d, dtype=np.complex128)), tuple(range(d)))


def sorter_projectors(register: PhotonRegister, photon_id: int) -> ProjectorSet:
    """Even/odd OAM sorter on one photon, lifted to the full register."""
    try:
        oam = register.subsystem(photon_id, "oam_parity")
    except KeyError as exc:
        raise ValueError(str(exc)) from None
    projs = []
    for k in range(2):
        local = np.zeros((2, 2), dtype=np.complex128)
        local[k, k] = 1.0
        projs.append(_embed_matrix(register, local, [oam]))
    return ProjectorSet(tuple(projs), register.subsystems[oam].basis_labels)


def _embed_matrix(register: PhotonRegister, local: np.ndarray, targets) -> np.ndarray:
    # embed() only needs a square matrix; projectors are not unitary
    return embed(register, UnitaryOp(local, check=False), targets).entries
