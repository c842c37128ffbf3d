import itertools

import numpy as np
import pytest

from hyperent.gates import CnotSpec, cnot
from hyperent.hilbert import UnitaryOp, apply
from hyperent.photonreg import (
    OAM_PARITY,
    OAM_QUTRIT,
    POLARIZATION,
    DofSpec,
    build_register,
    embed,
    hyper_register,
    index_of,
    labels_of,
)

from .conftest import random_state, random_unitary

REG3 = hyper_register([1, 2, 3])


def test_total_dims():
    assert REG3.total_dim == 64
    qkd = build_register(
        [
            DofSpec(1, OAM_QUTRIT),
            DofSpec(2, POLARIZATION),
            DofSpec(2, OAM_QUTRIT),
            DofSpec(3, POLARIZATION),
        ]
    )
    assert qkd.dims == (3, 2, 3, 2)
    assert qkd.total_dim == 36
    assert hyper_register([2]).total_dim == 4


def test_canonical_order_pol_before_oam():
    reg = build_register([DofSpec(2, OAM_PARITY), DofSpec(1, OAM_PARITY), DofSpec(1, POLARIZATION)])
    keys = [s.key for s in reg.subsystems]
    assert keys == [(1, POLARIZATION), (1, OAM_PARITY), (2, OAM_PARITY)]


def test_index_examples():
    assert index_of(REG3, ["H", "E", "H", "E", "H", "E"]) == 0
    assert index_of(REG3, ["V", "O", "V", "O", "V", "O"]) == 63
    assert index_of(REG3, ["V", "E", "H", "E", "H", "E"]) == 32
    assert index_of(REG3, ["H", "E", "H", "E", "H", "O"]) == 1
    assert labels_of(REG3, 5) == ("H", "E", "H", "O", "H", "O")


def test_index_round_trip_exhaustive():
    for i in range(REG3.total_dim):
        assert index_of(REG3, labels_of(REG3, i)) == i
    labels = [s.basis_labels for s in REG3.subsystems]
    for combo in itertools.product(*labels):
        assert labels_of(REG3, index_of(REG3, combo)) == combo


def test_subsystem_lookup():
    assert REG3.subsystem(2, "pol") == 2
    assert REG3.subsystem(3, "oam") == 5
    with pytest.raises(KeyError):
        REG3.subsystem(4, "pol")


def test_register_errors():
    with pytest.raises(ValueError):
        build_register([DofSpec(1, POLARIZATION), DofSpec(1, POLARIZATION)])
    with pytest.raises(ValueError):
        build_register([])
    with pytest.raises(ValueError):
        DofSpec(1, "spin")
    with pytest.raises(ValueError):
        index_of(REG3, ["H", "E"])
    with pytest.raises(ValueError):
        index_of(REG3, ["X", "E", "H", "E", "H", "E"])
    with pytest.raises(ValueError):
        labels_of(REG3, 64)


def test_embed_matches_apply_random_states():
    rng = np.random.default_rng(11)
    p2, p3 = REG3.subsystem(2, "pol"), REG3.subsystem(3, "pol")
    full = cnot(CnotSpec(p2, p3, "H"), REG3)
    local = UnitaryOp(np.kron(np.diag([1, 0]), np.array([[0, 1], [1, 0]])) + np.kron(np.diag([0, 1]), np.eye(2)))
    for _ in range(1000):
        psi = random_state(rng, 64)
        a = full(psi).amps
        b = apply(local, psi, [p2, p3], REG3).amps
        assert np.max(np.abs(a - b)) < 1e-12


def test_embed_homomorphism(rng):
    a, b = random_unitary(rng, 2), random_unitary(rng, 2)
    ea, eb = embed(REG3, UnitaryOp(a), [3]), embed(REG3, UnitaryOp(b), [3])
    eab = embed(REG3, UnitaryOp(a @ b), [3])
    assert np.allclose((ea @ eb).entries, eab.entries, atol=1e-12)


def test_disjoint_embeddings_commute(rng):
    a = embed(REG3, UnitaryOp(random_unitary(rng, 4)), [0, 5])
    b = embed(REG3, UnitaryOp(random_unitary(rng, 4)), [2, 1])
    assert np.allclose((a @ b).entries, (b @ a).entries, atol=1e-12)


def test_embed_mixed_radix_matches_kron(rng):
    reg = build_register([DofSpec(1, OAM_QUTRIT), DofSpec(2, POLARIZATION)])
    u = random_unitary(rng, 2)
    assert np.allclose(embed(reg, UnitaryOp(u), [1]).entries, np.kron(np.eye(3), u))
    w = random_unitary(rng, 3)
    assert np.allclose(embed(reg, UnitaryOp(w), [0]).entries, np.kron(w, np.eye(2)))
