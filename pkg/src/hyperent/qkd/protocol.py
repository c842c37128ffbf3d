"""Entanglement-based key distribution on the OAM-qutrit x polarization state.

Alice holds photon 2 (polarization and OAM). Bob holds photon 1 (OAM) and
photon 3 (polarization). The shared state is

    (|0,0> + |+1,-1> + |-1,+1>)_12 / sqrt3  x  (|HH> + |VV>)_23 / sqrt2.

Bob's OAM index is negated internally (+1 <-> -1) so the qutrit pair reads
sum_j |j, j> / sqrt3 and the key rule becomes "Alice j == Bob j".
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cache

import numpy as np

from .. import gates
from ..hilbert import ProjectorSet, StateVector, exact_probs
from ..photonreg import OAM_QUTRIT, POLARIZATION, DofSpec, build_register

REGISTER = build_register([
    DofSpec(1, OAM_QUTRIT),
    DofSpec(2, POLARIZATION),
    DofSpec(2, OAM_QUTRIT),
    DofSpec(3, POLARIZATION),
])
BOB_OAM, ALICE_POL, ALICE_OAM, BOB_POL = range(4)

ALICE_ANGLES = (0.0, 22.5, 45.0, 67.5)
BOB_ANGLES = (22.5, 45.0, 67.5, 180.0)

# Hologram offsets for settings 1 and 2; setting 3 is the computational
# (key) basis. Bob's analyzers use the conjugate phase winding.
ALICE_OFFSETS = (0.0, 0.5)
BOB_OFFSETS = (-0.25, 0.25)
KEY_BASIS = 2  # zero-based index of A3 / B3

# Bob's relabeling: physical OAM label index -> index of the negated value
_NEGATE = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=np.complex128)

RNG_NAME = "numpy.PCG64 via SeedSequence(seed, spawn_key=(block,))"
BLOCK_SIZE = 1 << 16


@dataclass(frozen=True, eq=False)
class QkdState:
    register: object
    vector: StateVector


def build_state() -> QkdState:
    amps = np.zeros(REGISTER.total_dim, dtype=np.complex128)
    norm = 1 / math.sqrt(6)
    for l1, l2 in (("0", "0"), ("+1", "-1"), ("-1", "+1")):
        for p in ("H", "V"):
            # register order: photon-1 OAM, photon-2 pol, photon-2 OAM, photon-3 pol
            amps[REGISTER.index_of((l1, p, l2, p))] = norm
    return QkdState(REGISTER, StateVector(amps))


def pol_projectors(angle: float) -> ProjectorSet:
    """Linear analyzer at ``angle`` degrees: HWP at angle/2, then a PBS.

    Outcome 0 is the transmitted port, 1 the reflected one.
    """
    u = gates.hwp(math.radians(angle) / 2).entries
    projs = []
    for k in range(2):
        det = np.zeros((2, 2), dtype=np.complex128)
        det[k, k] = 1.0
        projs.append(u.conj().T @ det @ u)
    return ProjectorSet(tuple(projs), (0, 1))


def oam_bases(
    alice_offsets: tuple = ALICE_OFFSETS, bob_offsets: tuple = BOB_OFFSETS
) -> dict:
    """Three analyzers per party, each a ProjectorSet over the party's OAM qutrit.

    Bob's sets are written in the physical label order (0, +1, -1) of
    photon 1; their outcome labels are the relabeled (negated) indices.
    """
    alice = [gates.fourier_basis(3, off) for off in alice_offsets]
    alice.append(gates.computational_basis(3))
    bob = [gates.fourier_basis(3, off, conjugate=True) for off in bob_offsets]
    bob.append(gates.computational_basis(3))
    bob = [
        ProjectorSet(tuple(_NEGATE @ p @ _NEGATE for p in ps.projectors), ps.labels)
        for ps in bob
    ]
    return {"alice": alice, "bob": bob}


def _kron_sets(sets: list) -> ProjectorSet:
    """Joint projectors from one local set per subsystem, in register order."""
    projs, labels = [np.ones((1, 1), dtype=np.complex128)], [()]
    for ps in sets:
        projs = [np.kron(p, q) for p in projs for q in ps.projectors]
        labels = [lab + (l,) for lab in labels for l in ps.labels]
    return ProjectorSet(tuple(projs), tuple(labels))


def local_projectors(subsystem: int, ps: ProjectorSet) -> ProjectorSet:
    """Lift a single-subsystem measurement to the whole register."""
    sets = []
    for i, d in enumerate(REGISTER.dims):
        if i == subsystem:
            sets.append(ps)
        else:
            sets.append(ProjectorSet((np.eye(d),), ("*",)))
    joint = _kron_sets(sets)
    return ProjectorSet(joint.projectors, ps.labels)


# -- eavesdropping -------------------------------------------------------------

EVE_KINDS = ("none", "pol", "oam", "both")


@dataclass(frozen=True)
class EveModel:
    """Intercept-resend on Bob's photons.

    ``pol`` measures photon 3 with a linear analyzer at ``pol_angle`` degrees.
    ``oam`` measures photon 1 in Bob's basis ``oam_basis`` (1..3, 3 = key).
    Eve forwards the eigenstate she found.
    """

    kind: str = "none"
    pol_angle: float = 0.0
    oam_basis: int = 3

    def __post_init__(self):
        if self.kind not in EVE_KINDS:
            raise ValueError(f"unknown eve model {self.kind!r}; expected one of {EVE_KINDS}")
        if self.oam_basis not in (1, 2, 3):
            raise ValueError(f"oam_basis must be 1, 2 or 3, got {self.oam_basis}")

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("pol", "both"):
            out["pol_angle_deg"] = self.pol_angle
        if self.kind in ("oam", "both"):
            out["oam_basis"] = self.oam_basis
        return out


NO_EVE = EveModel()


@dataclass(frozen=True, eq=False)
class EvePipeline:
    """Eve's outcome distribution and the state she forwards for each outcome."""

    model: EveModel
    probs: np.ndarray
    states: tuple


def _eve_measurements(model: EveModel) -> list:
    out = []
    if model.kind in ("pol", "both"):
        out.append(local_projectors(BOB_POL, pol_projectors(model.pol_angle)))
    if model.kind in ("oam", "both"):
        out.append(local_projectors(BOB_OAM, oam_bases()["bob"][model.oam_basis - 1]))
    return out


def apply_eve(state: QkdState, model: EveModel = NO_EVE) -> EvePipeline:
    branches = [(1.0, state.vector)]
    for ps in _eve_measurements(model):
        nxt = []
        for p, psi in branches:
            for q, proj in zip(exact_probs(psi, ps), ps.projectors):
                if p * q > 1e-15:
                    nxt.append((p * q, StateVector(proj @ psi.amps).normalize()))
        branches = nxt
    probs = np.array([p for p, _ in branches])
    return EvePipeline(model, probs / probs.sum(), tuple(s for _, s in branches))


# -- outcome tables -------------------------------------------------------------


@cache
def setting_projectors(g: int, d: int, a: int, b: int) -> ProjectorSet:
    """Joint measurement for one round's settings (zero-based indices).

    Labels are (alice_bit, bob_bit, alice_trit, bob_trit).
    """
    bases = oam_bases()
    local = [None] * 4
    local[BOB_OAM] = bases["bob"][b]
    local[ALICE_POL] = pol_projectors(ALICE_ANGLES[g])
    local[ALICE_OAM] = bases["alice"][a]
    local[BOB_POL] = pol_projectors(BOB_ANGLES[d])
    joint = _kron_sets(local)
    # reorder labels from register order to (alice_bit, bob_bit, alice_trit, bob_trit)
    labels = tuple((lab[ALICE_POL], lab[BOB_POL], lab[ALICE_OAM], lab[BOB_OAM]) for lab in joint.labels)
    return ProjectorSet(joint.projectors, labels)


OUTCOME_LABELS = tuple(
    (ab, bb, at, bt) for ab in range(2) for bb in range(2) for at in range(3) for bt in range(3)
)


def outcome_table(vector: StateVector) -> np.ndarray:
    """Born probabilities, shape (4, 4, 3, 3, 36), over OUTCOME_LABELS."""
    table = np.zeros((4, 4, 3, 3, len(OUTCOME_LABELS)))
    for g in range(4):
        for d in range(4):
            for a in range(3):
                for b in range(3):
                    ps = setting_projectors(g, d, a, b)
                    probs = exact_probs(vector, ps)
                    order = [ps.index(lab) for lab in OUTCOME_LABELS]
                    table[g, d, a, b] = probs[order]
    return table


# -- simulation -----------------------------------------------------------------


@dataclass
class TallyTable:
    pol: np.ndarray  # (gamma, delta, alice bit, bob bit)
    oam: np.ndarray  # (A, B, alice trit, bob trit)

    @classmethod
    def empty(cls) -> TallyTable:
        return cls(np.zeros((4, 4, 2, 2), dtype=np.int64), np.zeros((3, 3, 3, 3), dtype=np.int64))

    def __add__(self, other: TallyTable) -> TallyTable:
        return TallyTable(self.pol + other.pol, self.oam + other.oam)

    @property
    def rounds(self) -> int:
        return int(self.pol.sum())

    def __eq__(self, other):
        return (
            isinstance(other, TallyTable)
            and np.array_equal(self.pol, other.pol)
            and np.array_equal(self.oam, other.oam)
        )


RECORD_FIELDS = ("round_id", "gamma", "delta", "a", "b", "alice_bit", "bob_bit", "alice_trit", "bob_trit")


@dataclass
class RoundRecords:
    """Column-wise per-round records. Setting columns hold zero-based indices."""

    columns: dict

    def __len__(self) -> int:
        return len(self.columns["round_id"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @classmethod
    def concat(cls, parts: list) -> RoundRecords:
        return cls({f: np.concatenate([p.columns[f] for p in parts]) for f in RECORD_FIELDS})


@dataclass
class SimulationResult:
    tallies: TallyTable
    records: RoundRecords
    seed: int
    rounds: int
    shards: int
    eve: EveModel

    @property
    def rng(self) -> str:
        return RNG_NAME


@cache
def _sampling_tables(model: EveModel) -> tuple:
    pipeline = apply_eve(build_state(), model)
    tables = np.stack([outcome_table(v) for v in pipeline.states])
    cdf = np.cumsum(tables, axis=-1)
    cdf[..., -1] = 1.0
    eve_cdf = np.cumsum(pipeline.probs)
    eve_cdf[-1] = 1.0
    return eve_cdf, cdf


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(seed: int, block: int, start: int, n: int, model: EveModel):
    eve_cdf, cdf = _sampling_tables(model)
    rng = block_generator(seed, block)
    g = rng.integers(0, 4, size=n)
    d = rng.integers(0, 4, size=n)
    a = rng.integers(0, 3, size=n)
    b = rng.integers(0, 3, size=n)
    e = np.searchsorted(eve_cdf, rng.random(n), side="right")
    e = np.minimum(e, len(eve_cdf) - 1)
    rows = cdf[e, g, d, a, b]
    u = rng.random(n)
    k = np.minimum((u[:, None] >= rows).sum(axis=1), rows.shape[1] - 1)
    labels = np.array(OUTCOME_LABELS)[k]
    cols = {
        "round_id": np.arange(start, start + n, dtype=np.int64),
        "gamma": g.astype(np.int8),
        "delta": d.astype(np.int8),
        "a": a.astype(np.int8),
        "b": b.astype(np.int8),
        "alice_bit": labels[:, 0].astype(np.int8),
        "bob_bit": labels[:, 1].astype(np.int8),
        "alice_trit": labels[:, 2].astype(np.int8),
        "bob_trit": labels[:, 3].astype(np.int8),
    }
    tallies = TallyTable.empty()
    np.add.at(tallies.pol, (g, d, cols["alice_bit"], cols["bob_bit"]), 1)
    np.add.at(tallies.oam, (a, b, cols["alice_trit"], cols["bob_trit"]), 1)
    return tallies, RoundRecords(cols)


def _run_shard(seed: int, blocks: list, rounds: int, model: EveModel):
    tallies = TallyTable.empty()
    parts = []
    for blk in blocks:
        start = blk * BLOCK_SIZE
        n = min(BLOCK_SIZE, rounds - start)
        t, r = _simulate_block(seed, blk, start, n, model)
        tallies = tallies + t
        parts.append(r)
    return tallies, parts


def simulate(
    rounds: int,
    seed: int,
    eve: EveModel = NO_EVE,
    shards: int = 1,
    parallel: bool = False,
) -> SimulationResult:
    """Sample ``rounds`` protocol rounds by the Born rule.

    Rounds are cut into fixed blocks of BLOCK_SIZE, each with its own
    generator derived from (seed, block index). Shards are contiguous groups
    of blocks, so the result does not depend on the shard count or on
    whether shards run in parallel.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if shards < 1:
        raise ValueError(f"shards must be >= 1, got {shards}")
    _sampling_tables(eve)  # build once before threads start
    n_blocks = -(-rounds // BLOCK_SIZE)
    plan = [list(chunk) for chunk in np.array_split(np.arange(n_blocks), min(shards, n_blocks))]
    if parallel and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=len(plan)) as pool:
            results = list(pool.map(lambda blks: _run_shard(seed, blks, rounds, eve), plan))
    else:
        results = [_run_shard(seed, blks, rounds, eve) for blks in plan]
    tallies = TallyTable.empty()
    parts = []
    for t, p in results:
        tallies = tallies + t
        parts.extend(p)
    return SimulationResult(tallies, RoundRecords.concat(parts), seed, rounds, shards, eve)
