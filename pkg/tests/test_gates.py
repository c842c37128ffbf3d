import math

import numpy as np
import pytest

from hyperent import gates
from hyperent.gates import CnotSpec
from hyperent.hilbert import StateVector, fidelity, ket
from hyperent.photonreg import hyper_register

from .conftest import S2

REG1 = hyper_register([1])  # (pol, parity): HE, HO, VE, VO
REG3 = hyper_register([1, 2, 3])
H, V = ket(2, 0), ket(2, 1)


def _basis(reg, labels):
    return reg.basis_state(labels).amps


def test_hwp_examples():
    assert np.allclose(gates.hwp(0).entries, gates.SIGMA_3)
    assert np.allclose(gates.hwp(math.pi / 4).entries, gates.SIGMA_1)
    out = gates.hwp(math.pi / 8)(H).amps
    assert np.allclose(out, [S2, S2])


def test_pauli_alphabet_and_errors():
    assert np.allclose(gates.pauli("is2").entries, [[0, 1], [-1, 0]])
    with pytest.raises(ValueError):
        gates.pauli("s2")


def test_su2_solve_example():
    a, b = 0.6, 0.8j
    out = gates.su2(*gates.su2_angles_for(a, b))(H)
    assert np.allclose(out.amps, [a, b], atol=1e-12)


def test_su2_surjective_on_random_targets():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        z /= np.linalg.norm(z)
        out = gates.su2(*gates.su2_angles_for(*z))(H)
        assert np.max(np.abs(out.amps - z)) < 1e-12


def test_su2_inverse():
    u = gates.su2(0.3, 1.1, -0.7)
    assert np.allclose((gates.su2_inverse(0.3, 1.1, -0.7) @ u).entries, np.eye(2))


def test_su2_rejects_unnormalized():
    with pytest.raises(ValueError):
        gates.su2_angles_for(1.0, 1.0)


def test_cnot_examples():
    p2, p3 = REG3.subsystem(2, "pol"), REG3.subsystem(3, "pol")
    u = gates.cnot(CnotSpec(p2, p3, "H"), REG3)
    src = REG3.basis_state(["H", "E", "H", "E", "H", "E"])
    assert np.allclose(u(src).amps, _basis(REG3, ["H", "E", "H", "E", "V", "E"]))
    src = REG3.basis_state(["H", "E", "V", "E", "H", "E"])
    assert np.allclose(u(src).amps, src.amps)


def test_cnot_control_value_matters():
    u = gates.cnot(CnotSpec(0, 1, "V"), REG1)
    assert np.allclose(u(REG1.basis_state(["H", "E"])).amps, _basis(REG1, ["H", "E"]))
    assert np.allclose(u(REG1.basis_state(["V", "E"])).amps, _basis(REG1, ["V", "O"]))


def test_cnot_errors():
    with pytest.raises(ValueError):
        CnotSpec(1, 1, "H")
    with pytest.raises(ValueError):
        gates.cnot(CnotSpec(0, 1, "E"), REG1)


def test_spp_and_controlled_flips():
    assert np.allclose(gates.spp()(H).amps, V.amps)
    pc = gates.pc_o(REG1, 1)
    oc = gates.oc_p(REG1, 1)
    cases_pc = {("H", "E"): ("H", "E"), ("V", "E"): ("V", "O"), ("V", "O"): ("V", "E")}
    cases_oc = {("H", "E"): ("H", "E"), ("H", "O"): ("V", "O"), ("V", "O"): ("H", "O")}
    for src, dst in cases_pc.items():
        assert np.allclose(pc(REG1.basis_state(src)).amps, _basis(REG1, dst))
    for src, dst in cases_oc.items():
        assert np.allclose(oc(REG1.basis_state(src)).amps, _basis(REG1, dst))


def test_swap_decomposition():
    pc, oc = gates.pc_o(REG3, 2), gates.oc_p(REG3, 2)
    assert np.allclose(gates.swap_dofs(REG3, 2).entries, (pc @ oc @ pc).entries, atol=1e-12)


def test_swap_exchanges_qubits():
    sw = gates.swap_dofs(REG1, 1)
    psi = StateVector(np.kron([0.6, 0.8j], [1, 0]))  # (0.6 H + 0.8i V) E
    out = sw(psi).amps
    assert np.allclose(out, np.kron([1, 0], [0.6, 0.8j]))


def test_fourier_bases_orthonormal_and_complete():
    for d in (2, 3):
        for off in (0.0, 0.25, 0.5, -0.25):
            for conj in (False, True):
                vecs = np.array(gates.fourier_vectors(d, off, conj))
                assert np.allclose(vecs.conj() @ vecs.T, np.eye(d), atol=1e-12)
                ps = gates.fourier_basis(d, off, conj)
                assert np.allclose(sum(ps.projectors), np.eye(d), atol=1e-12)
    with pytest.raises(ValueError):
        gates.fourier_vectors(4, 0)


def test_fourier_qutrit_zero_offset_vector():
    v0 = gates.fourier_vectors(3, 0.0)[0]
    assert np.allclose(v0, np.ones(3) / math.sqrt(3))


def test_sorter_projectors():
    ps = gates.sorter_projectors(REG3, 2)
    assert ps.labels == ("E", "O")
    assert np.allclose(sum(ps.projectors), np.eye(64))
    psi = REG3.basis_state(["H", "E", "V", "O", "H", "E"])
    probs = [np.vdot(psi.amps, p @ psi.amps).real for p in ps.projectors]
    assert probs == pytest.approx([0.0, 1.0])


def test_catalog_gates_unitary():
    ops = [gates.hadamard(), gates.hwp(0.37), gates.su2(0.1, 0.2, 0.3), gates.spp()]
    ops += [gates.pc_o(REG3, 1), gates.oc_p(REG3, 3), gates.swap_dofs(REG3, 2)]
    for op in ops:
        assert np.allclose(op.entries.conj().T @ op.entries, np.eye(op.dim), atol=1e-12)


def test_hwp_analyzer_probability():
    # H through hwp(theta) then PBS: P(H) = cos^2(2 theta)
    for deg in (0, 10, 22.5, 45):
        th = math.radians(deg)
        out = gates.hwp(th)(H)
        assert fidelity(out, H) == pytest.approx(math.cos(2 * th) ** 2, abs=1e-12)
