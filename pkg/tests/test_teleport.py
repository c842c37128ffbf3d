import math
from collections import Counter

import numpy as np
import pytest

from hyperent import teleport as tp
from hyperent.hilbert import StateVector, fidelity
from hyperent.teleport import InputQubits, SpdcProfile

REG = tp.REGISTER


def _support(state):
    return {REG.labels_of(i): complex(a) for i, a in enumerate(state.amps) if abs(a) > 1e-12}


def _random_inputs(seed, n):
    rng = np.random.default_rng(seed)
    return [InputQubits.random(rng) for _ in range(n)]


def test_circuit_preparation_example():
    s = tp.prepare_circuit(InputQubits(1, 0, 1, 0))
    expected = {
        ("H", "E", "H", "O", "V", "E"),
        ("H", "E", "V", "O", "H", "E"),
        ("H", "O", "H", "E", "V", "E"),
        ("H", "O", "V", "E", "H", "E"),
    }
    sup = _support(s)
    assert set(sup) == expected
    assert all(abs(a - 0.5) < 1e-12 for a in sup.values())


def test_spdc_preparation_example_vertical_input():
    s = tp.prepare_spdc(tp.BALANCED_PROFILE, InputQubits(0, 1, 1, 0))
    sup = _support(s)
    assert set(sup) == {
        ("V", "E", "H", "O", "V", "E"),
        ("V", "E", "V", "O", "H", "E"),
        ("V", "O", "H", "E", "V", "E"),
        ("V", "O", "V", "E", "H", "E"),
    }
    assert all(abs(a - 0.5) < 1e-12 for a in sup.values())


def test_paths_agree_on_random_inputs():
    for inp in _random_inputs(5, 100):
        a, b = tp.prepare(inp, "circuit"), tp.prepare(inp, "spdc")
        assert fidelity(a, b) > 1 - 1e-12
        assert a.norm == pytest.approx(1.0, abs=1e-12)


def test_prepare_unknown_mode():
    with pytest.raises(ValueError):
        tp.prepare(InputQubits(1, 0, 1, 0), "magic")


def test_parity_weights():
    assert tp.parity_weights(tp.BALANCED_PROFILE) == pytest.approx((0.5, 0.5))
    skew = SpdcProfile({0: math.sqrt(0.7), 1: math.sqrt(0.3)})
    assert tp.parity_weights(skew) == pytest.approx((0.7, 0.3), abs=1e-12)
    pair = tp.parity_pair(skew)
    assert pair[0, 0] == 0 and pair[1, 1] == 0


def test_profile_validation():
    with pytest.raises(ValueError):
        SpdcProfile({0: 1.0, 1: 1.0})
    with pytest.raises(ValueError):
        SpdcProfile({})
    with pytest.raises(ValueError):
        InputQubits(1, 1, 1, 0)


def test_soba_projectors_match_circuit_construction():
    for photon, flavor in tp.DEFAULT_FLAVOR.items():
        direct = tp.soba_projectors(REG, photon)
        circuit = tp.soba_circuit_projectors(REG, photon, flavor)
        for p, q in zip(direct.projectors, circuit.projectors):
            assert np.max(np.abs(p - q)) < 1e-12


def test_soba_projector_set_is_complete():
    ps = tp.joint_soba_projectors()
    assert len(ps) == 16
    assert np.allclose(sum(ps.projectors), np.eye(64), atol=1e-12)


def test_outcome_probabilities_uniform():
    for inp in list(tp.CANONICAL_INPUTS) + _random_inputs(8, 20):
        probs = tp.outcome_probabilities(tp.prepare(inp))
        assert all(abs(p - 1 / 16) < 1e-12 for p in probs.values())


def test_information_lands_swapped_on_bob():
    # before correction Bob's polarization carries (alpha, beta) and OAM carries (a, b)
    for inp in _random_inputs(9, 10):
        bob = tp.bob_state(tp.prepare(inp), ("psi+", "psi+"))
        swapped = StateVector(np.kron(inp.oam, inp.pol))
        assert fidelity(bob, swapped) > 1 - 1e-12


def test_every_recipe_is_unitary_and_alphabet_closed():
    assert len(tp.ALL_RECIPES) == 16
    for r in tp.ALL_RECIPES:
        u = r.unitary().entries
        assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    with pytest.raises(ValueError):
        tp.CorrectionRecipe("s2", "I")


def test_every_outcome_has_a_recipe():
    table = tp.derive_corrections()
    assert set(table) == set(tp.OUTCOMES)


@pytest.mark.parametrize(
    "outcome, pre, post",
    [
        (("psi+", "psi+"), "I", "I"),
        (("phi+", "phi+"), "s1", "s1"),
        (("psi-", "phi+"), "s1", "s3"),
    ],
)
def test_derived_recipe_examples(outcome, pre, post):
    r = tp.derive_corrections()[outcome].recipe
    assert (r.pre_pol, r.post_pol) == (pre, post)


def test_reference_table_audit():
    audit = tp.verify_table1()
    assert audit["state_matches"] == 16
    assert audit["recipe_matches"] == 15
    assert audit["mismatched_rows"] == ["psi- phi+"]
    bad = next(r for r in audit["rows"] if r["outcome"] == "psi- phi+")
    assert not bad["reference_recipe_works"]


def test_audit_deterministic_and_mode_independent():
    assert tp.verify_table1("circuit") == tp.verify_table1("circuit")
    assert tp.verify_table1("circuit") == tp.verify_table1("spdc")


def test_template_parse_round_trip():
    for text, _, _ in tp.REFERENCE_TABLE.values():
        t = tp.parse_template(text)
        assert tp.parse_template(t.render()).same_as(t)


def test_forced_sweep_fidelity_one():
    inputs = list(tp.CANONICAL_INPUTS) + _random_inputs(13, 25)
    for mode in ("circuit", "spdc"):
        for outcome in tp.OUTCOMES:
            for inp in inputs:
                tr = tp.run_teleport(inp, mode, forced_outcome=outcome)
                assert tr.fidelity_to_target >= 1 - tp.FIDELITY_TOL


def test_sampled_runs_uniform_and_faithful():
    rng = np.random.default_rng(2025)
    n = 1600
    counts = Counter()
    for _ in range(n):
        tr = tp.run_teleport(InputQubits.random(rng), "circuit", rng)
        counts[tr.outcome] += 1
        assert tr.fidelity_to_target >= 1 - tp.FIDELITY_TOL
    # per-cell binomial sd is sqrt(1600 * 1/16 * 15/16) ~ 9.7; allow 5 sd
    for o in tp.OUTCOMES:
        assert abs(counts[o] - n / 16) < 5 * math.sqrt(n * (1 / 16) * (15 / 16))


def test_run_requires_rng_or_forced_outcome():
    with pytest.raises(ValueError):
        tp.run_teleport(InputQubits(1, 0, 1, 0))
    with pytest.raises(ValueError):
        tp.run_teleport(InputQubits(1, 0, 1, 0), forced_outcome=("psi+", "xx"))


def test_sampled_runs_reproducible():
    def go():
        rng = np.random.default_rng(4)
        return [tp.run_teleport(InputQubits.random(rng), "spdc", rng).outcome for _ in range(30)]

    assert go() == go()
