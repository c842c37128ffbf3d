"""Two-qubit spin-orbit teleportation over a three-photon hyper-entangled state.

Photon 1 carries the unknown polarization qubit (a, b), photon 3 the unknown
OAM-parity qubit (alpha, beta). Alice runs a spin-orbit Bell analysis (SOBA)
on photons 1 and 3; Bob fixes photon 2 with a polarization Pauli, a
polarization/OAM swap, and a second polarization Pauli.

The protocol side (SOBA, correction lookup) only ever touches the prepared
state vector. The input amplitudes are read during preparation and when the
final fidelity is checked, nowhere else.
"""

from __future__ import annotations

import functools
import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import gates
from .hilbert import ProjectorSet, StateVector, UnitaryOp, apply, fidelity, measure, tensor
from .photonreg import PhotonRegister, embed, hyper_register

REGISTER = hyper_register([1, 2, 3])
BOB_REGISTER = hyper_register([2])

# subsystem positions in REGISTER
P1_POL, P1_OAM, P2_POL, P2_OAM, P3_POL, P3_OAM = range(6)

BELL_LABELS = ("psi+", "psi-", "phi+", "phi-")
OUTCOMES = tuple(itertools.product(BELL_LABELS, BELL_LABELS))

FIDELITY_TOL = 1e-10

_S2 = 1 / math.sqrt(2)
# single-photon (pol, oam) basis order: HE, HO, VE, VO
BELL_VECTORS = {
    "psi+": np.array([_S2, 0, 0, _S2], dtype=np.complex128),
    "psi-": np.array([_S2, 0, 0, -_S2], dtype=np.complex128),
    "phi+": np.array([0, _S2, _S2, 0], dtype=np.complex128),
    "phi-": np.array([0, _S2, -_S2, 0], dtype=np.complex128),
}

# Detector (pol, oam) that fires for each Bell state once the analyzer has
# disentangled it. Photon 1 uses the polarization-controlled analyzer
# (pC_o then polarization Hadamard); photon 3 the OAM-controlled one
# (oC_p then OAM Hadamard).
SOBA_DETECTORS = {
    "pol-controlled": {"psi+": ("H", "E"), "psi-": ("V", "E"), "phi+": ("H", "O"), "phi-": ("V", "O")},
    "oam-controlled": {"psi+": ("H", "E"), "psi-": ("H", "O"), "phi+": ("V", "E"), "phi-": ("V", "O")},
}
DEFAULT_FLAVOR = {1: "pol-controlled", 3: "oam-controlled"}


@dataclass(frozen=True)
class InputQubits:
    """Unknown two-qubit product state: (a|H> + b|V>)_1 (alpha|E> + beta|O>)_3."""

    a: complex
    b: complex
    alpha: complex
    beta: complex

    def __post_init__(self):
        for name, (x, y) in (("(a, b)", (self.a, self.b)), ("(alpha, beta)", (self.alpha, self.beta))):
            n = abs(x) ** 2 + abs(y) ** 2
            if abs(n - 1.0) > 1e-12:
                raise ValueError(f"{name} is not normalized: |.|^2 sums to {n!r}")

    @classmethod
    def random(cls, rng: np.random.Generator) -> InputQubits:
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        p = z[:2] / np.linalg.norm(z[:2])
        q = z[2:] / np.linalg.norm(z[2:])
        return cls(complex(p[0]), complex(p[1]), complex(q[0]), complex(q[1]))

    @property
    def pol(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=np.complex128)

    @property
    def oam(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=np.complex128)

    def target(self) -> StateVector:
        """The state Bob should hold: (a|H> + b|V>)(alpha|E> + beta|O>)."""
        return StateVector(np.kron(self.pol, self.oam))


CANONICAL_INPUTS = (
    InputQubits(1, 0, 1, 0),
    InputQubits(1, 0, 0, 1),
    InputQubits(0, 1, 1, 0),
    InputQubits(0, 1, 0, 1),
)


@dataclass(frozen=True)
class SpdcProfile:
    """OAM spectrum c_m of a down-converted pair |m>_1 |1 - m>_2."""

    coeffs: dict

    def __post_init__(self):
        coeffs = {int(m): complex(c) for m, c in dict(self.coeffs).items()}
        if not coeffs:
            raise ValueError("SPDC profile has empty support")
        total = sum(abs(c) ** 2 for c in coeffs.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"SPDC profile is not normalized: sum |c_m|^2 = {total!r}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def uniform(cls, support) -> SpdcProfile:
        support = list(support)
        c = 1 / math.sqrt(len(support))
        return cls({m: c for m in support})

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))


BALANCED_PROFILE = SpdcProfile.uniform([-2, -1, 0, 1])


def parity_weights(profile: SpdcProfile) -> tuple:
    """(sum of |c_m|^2 over even m, same over odd m)."""
    even = sum(abs(c) ** 2 for m, c in profile.coeffs.items() if m % 2 == 0)
    odd = sum(abs(c) ** 2 for m, c in profile.coeffs.items() if m % 2 != 0)
    return float(even), float(odd)


def parity_pair(profile: SpdcProfile) -> np.ndarray:
    """Two-photon OAM state after grouping modes by parity, as a 2x2 array.

    Entry [p1, p2] is the amplitude of parity p1 on photon 1 and p2 on photon
    2 (0 = even, 1 = odd). Partner OAM is 1 - m, so parities are always
    opposite; each parity class keeps its total weight.
    """
    even, odd = parity_weights(profile)
    pair = np.zeros((2, 2), dtype=np.complex128)
    pair[0, 1] = math.sqrt(even)
    pair[1, 0] = math.sqrt(odd)
    return pair


@functools.cache
def _cnot(control: int, target: int, value: str) -> UnitaryOp:
    return gates.cnot(gates.CnotSpec(control, target, value), REGISTER)


def prepare_circuit(inp: InputQubits) -> StateVector:
    """Gate-model preparation from product inputs.

    Photon 1 starts (a, b) x |E>, photon 2 |H>|E>, photon 3 |H> x (alpha, beta).
    OAM Hadamard on photon 1, OAM CNOT 1 -> 2 flipping on E, polarization
    Hadamard on photon 2, polarization CNOT 2 -> 3 flipping on H.
    """
    e = np.array([1, 0], dtype=np.complex128)
    h = np.array([1, 0], dtype=np.complex128)
    psi = tensor([
        StateVector(inp.pol), StateVector(e),
        StateVector(h), StateVector(e),
        StateVector(h), StateVector(inp.oam),
    ])
    psi = apply(gates.hadamard(), psi, [P1_OAM], REGISTER)
    psi = _cnot(P1_OAM, P2_OAM, "E")(psi)
    psi = apply(gates.hadamard(), psi, [P2_POL], REGISTER)
    psi = _cnot(P2_POL, P3_POL, "H")(psi)
    return psi


def prepare_spdc(profile: SpdcProfile, inp: InputQubits) -> StateVector:
    """Down-conversion preparation.

    The pair comes out |H>_1 |H>_2 with OAM grouped into parity classes. If the
    two classes carry unequal weight the pair is post-selected onto the
    balanced (|E,O> + |O,E>)/sqrt2. Photon 1's polarization is then set with the
    SU(2) gadget, photon 2 passes a HWP at pi/8, and a polarization CNOT
    (flipping on V) entangles photon 2 with photon 3 = (alpha, beta) x |V>.
    """
    even, odd = parity_weights(profile)
    if even <= 0.0 or odd <= 0.0:
        raise ValueError(f"degenerate SPDC profile: parity weights ({even}, {odd})")
    pair = parity_pair(profile)
    # balancing filter: equalize the two parity classes, then renormalize
    pair = np.where(np.abs(pair) > 0, 1.0, 0.0).astype(np.complex128) * _S2

    h = np.array([1, 0], dtype=np.complex128)
    v = np.array([0, 1], dtype=np.complex128)
    # axes: p1 pol, p1 oam, p2 pol, p2 oam, p3 pol, p3 oam
    amps = np.einsum("a,bd,c,e,f->abcdef", h, pair, h, v, inp.oam)
    psi = StateVector(amps.reshape(-1))
    psi = apply(gates.su2(*gates.su2_angles_for(inp.a, inp.b)), psi, [P1_POL], REGISTER)
    psi = apply(gates.hwp(math.pi / 8), psi, [P2_POL], REGISTER)
    psi = _cnot(P2_POL, P3_POL, "V")(psi)
    return psi


def prepare(inp: InputQubits, mode: str = "circuit", profile: SpdcProfile = BALANCED_PROFILE) -> StateVector:
    if mode == "circuit":
        return prepare_circuit(inp)
    if mode == "spdc":
        return prepare_spdc(profile, inp)
    raise ValueError(f"unknown preparation mode {mode!r}")


# -- spin-orbit Bell analysis -------------------------------------------------


def _photon_targets(register: PhotonRegister, photon_id: int) -> list:
    try:
        return [register.subsystem(photon_id, "polarization"), register.subsystem(photon_id, "oam_parity")]
    except KeyError as exc:
        raise ValueError(f"photon {photon_id} needs polarization and OAM parity: {exc}") from None


def soba_projectors(register: PhotonRegister, photon_id: int) -> ProjectorSet:
    """Projectors onto the four single-photon Bell states, lifted to ``register``."""
    targets = _photon_targets(register, photon_id)
    projs = []
    for label in BELL_LABELS:
        v = BELL_VECTORS[label]
        local = UnitaryOp(np.outer(v, v.conj()), check=False)
        projs.append(embed(register, local, targets).entries)
    return ProjectorSet(tuple(projs), BELL_LABELS)


def soba_circuit_projectors(register: PhotonRegister, photon_id: int, flavor: str) -> ProjectorSet:
    """The same measurement built from its gates: U^dag P_detector U.

    ``pol-controlled``: pC_o then polarization Hadamard.
    ``oam-controlled``: oC_p then OAM Hadamard.
    """
    pol, oam = _photon_targets(register, photon_id)
    if flavor == "pol-controlled":
        u = embed(register, gates.hadamard(), [pol]) @ gates.pc_o(register, photon_id)
    elif flavor == "oam-controlled":
        u = embed(register, gates.hadamard(), [oam]) @ gates.oc_p(register, photon_id)
    else:
        raise ValueError(f"unknown SOBA flavor {flavor!r}")
    pol_labels = register.subsystems[pol].basis_labels
    oam_labels = register.subsystems[oam].basis_labels
    projs = []
    for label in BELL_LABELS:
        p_lab, o_lab = SOBA_DETECTORS[flavor][label]
        local = np.zeros((4, 4), dtype=np.complex128)
        k = 2 * pol_labels.index(p_lab) + oam_labels.index(o_lab)
        local[k, k] = 1.0
        det = embed(register, UnitaryOp(local, check=False), [pol, oam]).entries
        projs.append(u.entries.conj().T @ det @ u.entries)
    return ProjectorSet(tuple(projs), BELL_LABELS)


@functools.cache
def joint_soba_projectors() -> ProjectorSet:
    """16 joint outcomes (photon-1 label, photon-3 label) on the 64-dim register."""
    p1 = soba_projectors(REGISTER, 1)
    p3 = soba_projectors(REGISTER, 3)
    projs, labels = [], []
    for l1, l3 in OUTCOMES:
        projs.append(p1.projectors[p1.index(l1)] @ p3.projectors[p3.index(l3)])
        labels.append((l1, l3))
    return ProjectorSet(tuple(projs), tuple(labels))


# Both shared pairs are anti-correlated (|E,O> + |O,E>, |HV> + |VH>). Bob
# reads photon 2 in the complemented labeling (H<->V, E<->O: a fixed HWP at
# 45 degrees plus an SPP) so the pairs look correlated from his side. This
# fixed frame is what makes Bob's states and recipes line up with the
# reference correction table.
BOB_FRAME = UnitaryOp(np.kron(gates.SIGMA_1, gates.SIGMA_1))


def bob_state(state: StateVector, outcome: tuple, normalize: bool = True) -> StateVector:
    """Photon 2's (pol, oam) state, in Bob's frame, given Alice's SOBA ``outcome``."""
    l1, l3 = outcome
    psi = state.amps.reshape(4, 4, 4)
    amps = np.einsum("i,ijk,k->j", BELL_VECTORS[l1].conj(), psi, BELL_VECTORS[l3].conj())
    out = StateVector(BOB_FRAME.entries @ amps)
    return out.normalize() if normalize else out


# -- corrections ----------------------------------------------------------------


@dataclass(frozen=True)
class CorrectionRecipe:
    """Bob's fix-up: polarization Pauli, pol/OAM swap, polarization Pauli."""

    pre_pol: str
    post_pol: str
    then_swap: bool = True

    def __post_init__(self):
        for name in (self.pre_pol, self.post_pol):
            if name not in gates.PAULI_NAMES:
                raise ValueError(f"unknown Pauli {name!r}")
        if not self.then_swap:
            raise ValueError("every recipe includes the swap")

    def unitary(self) -> UnitaryOp:
        pol = BOB_REGISTER.subsystem(2, "polarization")
        pre = embed(BOB_REGISTER, gates.pauli(self.pre_pol), [pol])
        post = embed(BOB_REGISTER, gates.pauli(self.post_pol), [pol])
        return post @ gates.swap_dofs(BOB_REGISTER, 2) @ pre

    def __str__(self):
        return f"[{self.post_pol} (pol)] * SWAP * [{self.pre_pol} (pol)]"

    @property
    def sort_key(self) -> tuple:
        return (gates.PAULI_NAMES.index(self.pre_pol), gates.PAULI_NAMES.index(self.post_pol))


ALL_RECIPES = tuple(
    CorrectionRecipe(pre, post) for pre in gates.PAULI_NAMES for post in gates.PAULI_NAMES
)


@dataclass(frozen=True, eq=False)
class BobTemplate:
    """Bob's pre-correction state as linear maps of the unknowns.

    ``pol[i, k]`` is the coefficient of (alpha, beta)[k] on polarization i;
    ``oam[j, l]`` the coefficient of (a, b)[l] on OAM parity j. The state is
    (pol @ (alpha, beta)) x (oam @ (a, b)), up to a global phase.
    """

    pol: np.ndarray
    oam: np.ndarray

    def tensor(self) -> np.ndarray:
        # index order (pol i, oam j, alpha/beta k, a/b l)
        return np.einsum("ik,jl->ijkl", self.pol, self.oam)

    def same_as(self, other: BobTemplate, tol: float = 1e-9) -> bool:
        x, y = self.tensor().ravel(), other.tensor().ravel()
        overlap = abs(np.vdot(x, y)) / (np.linalg.norm(x) * np.linalg.norm(y))
        return abs(overlap - 1.0) < tol

    def render(self) -> str:
        return "(" + _render_factor(self.pol, "αβ", "HV") + ")(" + _render_factor(self.oam, "ab", "EO") + ")"


def _render_factor(m: np.ndarray, coeffs: str, kets: str) -> str:
    parts = []
    for k, c in enumerate(coeffs):
        for i, ket_label in enumerate(kets):
            z = m[i, k]
            if abs(z) < 1e-9:
                continue
            if abs(z - 1) < 1e-9:
                sign = "+"
            elif abs(z + 1) < 1e-9:
                sign = "-"
            elif abs(z - 1j) < 1e-9:
                sign = "+i"
            elif abs(z + 1j) < 1e-9:
                sign = "-i"
            else:
                sign = f"+({z.real:.3g}{z.imag:+.3g}j)"
            parts.append(f"{sign}{c}{ket_label}")
    text = "".join(parts)
    return text[1:] if text.startswith("+") else text


_TERM = re.compile(r"([+-]?)\s*(α|β|a|b)\s*(H|V|E|O)")


def parse_template(text: str) -> BobTemplate:
    """Parse a template such as "(αV-βH)(aO+bE)" into a BobTemplate."""
    factors = re.findall(r"\(([^()]*)\)", text.replace("−", "-"))
    if len(factors) != 2:
        raise ValueError(f"expected two parenthesized factors in {text!r}")
    mats = []
    for factor, coeffs, kets in ((factors[0], "αβ", "HV"), (factors[1], "ab", "EO")):
        m = np.zeros((2, 2), dtype=np.complex128)
        terms = _TERM.findall(factor)
        if not terms or "".join(s + c + k for s, c, k in terms) != factor.replace(" ", ""):
            raise ValueError(f"cannot parse factor {factor!r}")
        for sign, c, k in terms:
            if c not in coeffs or k not in kets:
                raise ValueError(f"term {c}{k} does not belong in factor {factor!r}")
            m[kets.index(k), coeffs.index(c)] = -1.0 if sign == "-" else 1.0
        mats.append(m)
    return BobTemplate(mats[0], mats[1])


def _bob_tensor(outcome: tuple, mode: str) -> np.ndarray:
    """Unnormalized Bob amplitudes for the canonical inputs, shape (pol, oam, k, l)."""
    t = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    for inp in CANONICAL_INPUTS:
        k = 0 if inp.alpha == 1 else 1
        l = 0 if inp.a == 1 else 1
        amps = bob_state(prepare(inp, mode), outcome, normalize=False).amps
        t[:, :, k, l] = amps.reshape(2, 2)
    return t


def _factor_template(t: np.ndarray) -> BobTemplate:
    m = t.transpose(0, 2, 1, 3).reshape(4, 4)  # rows (i, k), cols (j, l)
    u, s, vh = np.linalg.svd(m)
    if s[1] > 1e-9 * s[0]:
        raise ValueError("Bob's conditional state is not a pol x OAM product")
    pol = u[:, 0].reshape(2, 2)
    oam = vh[0].reshape(2, 2)
    # scale each factor so its largest entry has modulus 1, with the first
    # nonzero OAM entry (in column order) real positive
    pol = pol / np.max(np.abs(pol))
    oam = oam / np.max(np.abs(oam))
    first = next(z for z in oam.T.ravel() if abs(z) > 1e-9)
    phase = first / abs(first)
    oam = oam / phase
    first_pol = next(z for z in pol.T.ravel() if abs(z) > 1e-9)
    pol = pol / (first_pol / abs(first_pol))
    # after normalization the template still has to reproduce t up to phase
    pol, oam = _snap(pol), _snap(oam)
    tmpl = BobTemplate(pol, oam)
    x = tmpl.tensor().ravel()
    y = t.ravel()
    if abs(abs(np.vdot(x, y)) / (np.linalg.norm(x) * np.linalg.norm(y)) - 1) > 1e-9:
        raise ValueError("template factorization lost information")
    return tmpl


def _snap(m: np.ndarray) -> np.ndarray:
    out = m.copy()
    for target in (0, 1, -1, 1j, -1j):
        out[np.abs(out - target) < 1e-9] = target
    return out


def _recipe_ok(recipe: CorrectionRecipe, outcome: tuple, inputs, mode: str) -> bool:
    u = recipe.unitary()
    for inp in inputs:
        bob = bob_state(prepare(inp, mode), outcome)
        if fidelity(u(bob), inp.target()) < 1 - FIDELITY_TOL:
            return False
    return True


@dataclass(frozen=True)
class DerivedRow:
    outcome: tuple
    template: BobTemplate = field(compare=False)
    recipe: CorrectionRecipe
    alternatives: tuple = ()


VERIFY_SEED = 20240613


@functools.cache
def _verify_inputs() -> tuple:
    # basis inputs alone cannot see relative-phase errors, hence the random ones
    rng = np.random.default_rng(VERIFY_SEED)
    return CANONICAL_INPUTS + tuple(InputQubits.random(rng) for _ in range(20))


@functools.cache
def derive_corrections(mode: str = "circuit") -> dict:
    """For every SOBA outcome, Bob's conditional state and the recipe that fixes it.

    Candidates are the 16 products {I, s1, is2, s3} . SWAP . {I, s1, is2, s3};
    a candidate is accepted if it restores the target with fidelity 1 on the
    four canonical inputs and 20 seeded random inputs. When several pass
    (equal up to global phase) the lexicographically first is kept and the
    rest are listed as alternatives.
    """
    inputs = _verify_inputs()
    table = {}
    for outcome in OUTCOMES:
        template = _factor_template(_bob_tensor(outcome, mode))
        good = [r for r in ALL_RECIPES if _recipe_ok(r, outcome, inputs, mode)]
        if not good:
            raise RuntimeError(f"no correction recipe found for outcome {outcome}")
        good.sort(key=lambda r: r.sort_key)
        table[outcome] = DerivedRow(outcome, template, good[0], tuple(good[1:]))
    return table


# -- reference correction table ----------------------------------------------------

# (photon 1, photon 3): (Bob's state, pre-swap Pauli, post-swap Pauli).
REFERENCE_TABLE = {
    ("phi+", "phi+"): ("(αV+βH)(aO+bE)", "s1", "s1"),
    ("phi+", "phi-"): ("(αV-βH)(aO+bE)", "is2", "s1"),
    ("phi-", "phi+"): ("(αV+βH)(aO-bE)", "s1", "is2"),
    ("phi-", "phi-"): ("(αV-βH)(aO-bE)", "is2", "is2"),
    ("psi+", "psi+"): ("(αH+βV)(aE+bO)", "I", "I"),
    ("psi+", "psi-"): ("(-αH+βV)(aE+bO)", "s3", "I"),
    ("psi-", "psi+"): ("(αH+βV)(aE-bO)", "I", "s3"),
    ("psi-", "psi-"): ("(-αH+βV)(aE-bO)", "s3", "s3"),
    ("phi+", "psi+"): ("(αH+βV)(aO+bE)", "I", "s1"),
    ("phi+", "psi-"): ("(-αH+βV)(aO+bE)", "s3", "s1"),
    ("phi-", "psi+"): ("(αH+βV)(aO-bE)", "I", "is2"),
    ("phi-", "psi-"): ("(-αH+βV)(aO-bE)", "s3", "is2"),
    ("psi+", "phi+"): ("(αV+βH)(aE+bO)", "s1", "I"),
    ("psi+", "phi-"): ("(αV-βH)(aE+bO)", "is2", "I"),
    ("psi-", "phi+"): ("(αV+βH)(aE-bO)", "is2", "I"),
    ("psi-", "phi-"): ("(αV-βH)(aE-bO)", "is2", "s3"),
}


def outcome_name(outcome: tuple) -> str:
    return f"{outcome[0]} {outcome[1]}"


def _same_unitary_up_to_phase(u: UnitaryOp, v: UnitaryOp) -> bool:
    overlap = abs(np.trace(u.entries.conj().T @ v.entries)) / u.dim
    return abs(overlap - 1.0) < 1e-10


def verify_table1(mode: str = "circuit") -> dict:
    """Row-by-row audit of the reference correction table against the derivation."""
    derived = derive_corrections(mode)
    rows = []
    for outcome in OUTCOMES:
        text, pre, post = REFERENCE_TABLE[outcome]
        reference_recipe = CorrectionRecipe(pre, post)
        d = derived[outcome]
        state_match = parse_template(text).same_as(d.template)
        accepted = (d.recipe,) + d.alternatives
        recipe_match = any(
            _same_unitary_up_to_phase(reference_recipe.unitary(), r.unitary()) for r in accepted
        )
        reference_works = _recipe_ok(reference_recipe, outcome, _verify_inputs(), mode)
        rows.append({
            "outcome": outcome_name(outcome),
            "reference_state": text,
            "derived_state": d.template.render(),
            "state_match": bool(state_match),
            "reference_recipe": {"pre": pre, "post": post},
            "derived_recipe": {"pre": d.recipe.pre_pol, "post": d.recipe.post_pol},
            "recipe_match": bool(recipe_match),
            "reference_recipe_works": bool(reference_works),
        })
    return {
        "rows": rows,
        "state_matches": sum(r["state_match"] for r in rows),
        "recipe_matches": sum(r["recipe_match"] for r in rows),
        "mismatched_rows": [r["outcome"] for r in rows if not (r["state_match"] and r["recipe_match"])],
    }


# -- protocol run ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TeleportTrace:
    outcome: tuple
    bob_pre_correction: StateVector
    recipe: CorrectionRecipe
    bob_final: StateVector
    fidelity_to_target: float


def outcome_probabilities(state: StateVector) -> dict:
    from .hilbert import exact_probs

    ps = joint_soba_projectors()
    return dict(zip(ps.labels, exact_probs(state, ps)))


def _alice_measures(state: StateVector, rng: np.random.Generator) -> tuple:
    first, state = measure(state, soba_projectors_cached(1), rng)
    second, state = measure(state, soba_projectors_cached(3), rng)
    return (first, second), state


@functools.cache
def soba_projectors_cached(photon_id: int) -> ProjectorSet:
    return soba_projectors(REGISTER, photon_id)


def run_teleport(
    inp: InputQubits,
    mode: str = "circuit",
    rng: np.random.Generator | None = None,
    forced_outcome: tuple | None = None,
) -> TeleportTrace:
    """Prepare, let Alice measure, let Bob correct, and score the result.

    With ``forced_outcome`` the SOBA result is post-selected instead of
    sampled, which allows sweeping all 16 branches deterministically.
    """
    state = prepare(inp, mode)
    if forced_outcome is not None:
        outcome = tuple(forced_outcome)
        if outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {forced_outcome!r}")
    else:
        if rng is None:
            raise ValueError("a seeded rng is required unless the outcome is forced")
        outcome, state = _alice_measures(state, rng)
    bob = bob_state(state, outcome)
    recipe = derive_corrections(mode)[outcome].recipe
    final = recipe.unitary()(bob)
    # verification is the only place the unknown amplitudes are read back
    return TeleportTrace(outcome, bob, recipe, final, fidelity(final, inp.target()))

