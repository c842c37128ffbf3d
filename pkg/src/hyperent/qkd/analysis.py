"""Sifting, Bell-test estimators and their exact counterparts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..hilbert import ProjectorSet, exact_probs
from .protocol import (
    ALICE_ANGLES,
    ALICE_OAM,
    ALICE_OFFSETS,
    ALICE_POL,
    BOB_ANGLES,
    BOB_OAM,
    BOB_OFFSETS,
    BOB_POL,
    KEY_BASIS,
    NO_EVE,
    EveModel,
    QkdState,
    RoundRecords,
    TallyTable,
    apply_eve,
    _kron_sets,
    build_state,
    oam_bases,
    setting_projectors,
)

CLASSICAL_BOUND = 2.0
TSIRELSON = 2 * math.sqrt(2)
CGLMP_QUANTUM_MAX = 4 / (6 * math.sqrt(3) - 9)

# Role of each polarization cell, indexed [delta][gamma] as in the usage table.
KEY, S_CELL, S_PRIME_CELL, DISCARD = "key", "S", "S'", "discard"
POL_ROLES = (
    (S_CELL, KEY, S_CELL, DISCARD),
    (DISCARD, S_PRIME_CELL, KEY, S_PRIME_CELL),
    (S_CELL, DISCARD, S_CELL, KEY),
    (KEY, S_PRIME_CELL, DISCARD, S_PRIME_CELL),
)

# (sign, gamma index, delta index)
S_TERMS = ((+1, 0, 0), (-1, 0, 2), (+1, 2, 0), (+1, 2, 2))
S_PRIME_TERMS = ((+1, 1, 1), (+1, 1, 3), (+1, 3, 1), (-1, 3, 3))

# (sign, A index, B index, k) for P(A_a = B_b + k); the last two terms
# carry a minus sign, as in the standard qutrit inequality.
CGLMP_TERMS = (
    (+1, 0, 0, 0),
    (+1, 1, 0, -1),
    (+1, 1, 1, 0),
    (+1, 0, 1, 0),
    (-1, 0, 0, -1),
    (-1, 1, 0, 0),
    (-1, 1, 1, -1),
    (-1, 0, 1, +1),
)

EKERT_PHOTONS_PER_BIT = 8.0
CLAIMED_PHOTONS_PER_BIT = 6.0
PHOTONS_PER_ROUND = 3

# Interpretive mapping of our (party, channel, outcome) onto detector names.
DETECTOR_MAP = {
    ("alice", "pol", 0): "D11",
    ("alice", "pol", 1): "D10",
    ("bob", "pol", 0): "D7+D8+D9",
    ("bob", "pol", 1): "D4+D5+D6",
    ("alice", "oam", 0): "D1",
    ("alice", "oam", 1): "D2",
    ("alice", "oam", 2): "D3",
    ("bob", "oam", 0): "D4+D7",
    ("bob", "oam", 1): "D5+D8",
    ("bob", "oam", 2): "D6+D9",
}


def pol_role(g: int, d: int) -> str:
    return POL_ROLES[d][g]


def oam_role(a: int, b: int) -> str:
    if a == KEY_BASIS and b == KEY_BASIS:
        return KEY
    if a < KEY_BASIS and b < KEY_BASIS:
        return "bell"
    return "redundant"


def _angle_index(angles: tuple, value: float, who: str) -> int:
    for i, ang in enumerate(angles):
        if math.isclose(ang, value):
            return i
    raise ValueError(f"{who} angle {value} not in {angles}")


# -- estimators -----------------------------------------------------------------


def correlation_E(tallies: TallyTable, gamma: float, delta: float) -> float:
    g = _angle_index(ALICE_ANGLES, gamma, "Alice")
    d = _angle_index(BOB_ANGLES, delta, "Bob")
    return _cell_E(tallies, g, d)[0]


def _cell_E(tallies: TallyTable, g: int, d: int) -> tuple:
    c = tallies.pol[g, d]
    n = c.sum()
    if n <= 0:
        raise ValueError(f"no rounds at gamma={ALICE_ANGLES[g]}, delta={BOB_ANGLES[d]}")
    e = (c[0, 0] + c[1, 1] - c[0, 1] - c[1, 0]) / n
    return float(e), float(math.sqrt(max(1 - e * e, 0.0) / n))


def _signed_sum(tallies: TallyTable, terms) -> tuple:
    total, var = 0.0, 0.0
    for sign, g, d in terms:
        e, se = _cell_E(tallies, g, d)
        total += sign * e
        var += se * se
    return total, math.sqrt(var)


def chsh(tallies: TallyTable) -> dict:
    s, s_err = _signed_sum(tallies, S_TERMS)
    sp, sp_err = _signed_sum(tallies, S_PRIME_TERMS)
    return {"S": s, "S_err": s_err, "S_prime": sp, "S_prime_err": sp_err}


def match_probability(counts: np.ndarray, k: int) -> float:
    """P(A = B + k mod 3) from a 3x3 count (or probability) matrix [alice, bob]."""
    total = counts.sum()
    hits = sum(counts[(j + k) % 3, j] for j in range(3))
    return float(hits / total)


def cglmp(tallies: TallyTable) -> tuple:
    """Qutrit inequality value and its standard error."""
    per_cell = {}
    for sign, a, b, k in CGLMP_TERMS:
        per_cell.setdefault((a, b), []).append((sign, k))
    total, var = 0.0, 0.0
    for (a, b), terms in per_cell.items():
        c = tallies.oam[a, b]
        n = c.sum()
        if n <= 0:
            raise ValueError(f"no rounds at A{a + 1}, B{b + 1}")
        # per-round score f in {-1, 0, +1}; the cell contributes its mean
        diff = {}
        for sign, k in terms:
            diff[k % 3] = diff.get(k % 3, 0) + sign
        mean = sum(w * match_probability(c, k) for k, w in diff.items())
        mean_sq = sum(w * w * match_probability(c, k) for k, w in diff.items())
        total += mean
        var += max(mean_sq - mean * mean, 0.0) / n
    return total, math.sqrt(var)


@dataclass
class BellReport:
    S: float
    S_err: float
    S_prime: float
    S_prime_err: float
    S3: float
    S3_err: float
    S_violated: bool = field(init=False)
    S_prime_violated: bool = field(init=False)
    S3_violated: bool = field(init=False)

    def __post_init__(self):
        self.S_violated = self.S > CLASSICAL_BOUND
        self.S_prime_violated = self.S_prime > CLASSICAL_BOUND
        self.S3_violated = self.S3 > CLASSICAL_BOUND

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def bell_report(tallies: TallyTable) -> BellReport:
    c = chsh(tallies)
    s3, s3_err = cglmp(tallies)
    return BellReport(c["S"], c["S_err"], c["S_prime"], c["S_prime_err"], s3, s3_err)


def verdict(S: float, S_prime: float, S3: float) -> dict:
    pol = S > CLASSICAL_BOUND or S_prime > CLASSICAL_BOUND
    oam = S3 > CLASSICAL_BOUND
    return {
        "pol_channel": "secure" if pol else "insecure",
        "oam_channel": "secure" if oam else "insecure",
        "overall": "secure" if pol and oam else "insecure",
    }


# -- sifting --------------------------------------------------------------------


@dataclass
class SiftReport:
    rounds: int
    pol_fractions: dict
    oam_fractions: dict
    alice_key_bits: np.ndarray
    bob_key_bits: np.ndarray
    alice_key_trits: np.ndarray
    bob_key_trits: np.ndarray

    @property
    def pol_qber(self) -> float:
        n = len(self.alice_key_bits)
        return float(np.count_nonzero(self.alice_key_bits != self.bob_key_bits) / n) if n else float("nan")

    @property
    def oam_ser(self) -> float:
        n = len(self.alice_key_trits)
        return float(np.count_nonzero(self.alice_key_trits != self.bob_key_trits) / n) if n else float("nan")

    @property
    def pol_key_fraction(self) -> float:
        return self.pol_fractions[KEY]

    @property
    def oam_key_fraction(self) -> float:
        return self.oam_fractions[KEY]


def sift(tallies: TallyTable, records: RoundRecords) -> SiftReport:
    n = len(records)
    if tallies.rounds != n:
        raise ValueError(f"tallies cover {tallies.rounds} rounds, records {n}")
    g, d = records["gamma"], records["delta"]
    a, b = records["a"], records["b"]

    pol_role_grid = np.array(POL_ROLES)  # [delta, gamma]
    roles = pol_role_grid[d, g]
    pol_fractions = {r: float(np.count_nonzero(roles == r) / n) for r in (KEY, S_CELL, S_PRIME_CELL, DISCARD)}
    pol_key = roles == KEY

    oam_key = (a == KEY_BASIS) & (b == KEY_BASIS)
    oam_bell = (a < KEY_BASIS) & (b < KEY_BASIS)
    oam_fractions = {
        KEY: float(np.count_nonzero(oam_key) / n),
        "bell": float(np.count_nonzero(oam_bell) / n),
        "redundant": float(np.count_nonzero(~oam_key & ~oam_bell) / n),
    }
    return SiftReport(
        rounds=n,
        pol_fractions=pol_fractions,
        oam_fractions=oam_fractions,
        alice_key_bits=records["alice_bit"][pol_key],
        bob_key_bits=records["bob_bit"][pol_key],
        alice_key_trits=records["alice_trit"][oam_key],
        bob_key_trits=records["bob_trit"][oam_key],
    )


def pack_bits(bits: np.ndarray) -> str:
    return np.packbits(bits.astype(np.uint8)).tobytes().hex()


def pack_trits(trits: np.ndarray) -> str:
    """Hex of the key trits packed five per byte (3**5 = 243 <= 256)."""
    t = trits.astype(np.int64)
    pad = (-len(t)) % 5
    t = np.concatenate([t, np.zeros(pad, dtype=np.int64)]).reshape(-1, 5)
    packed = (t * (3 ** np.arange(5))).sum(axis=1).astype(np.uint8)
    return packed.tobytes().hex()


def key_stats(report: SiftReport, rounds: int) -> dict:
    bits = len(report.alice_key_bits)
    trits = len(report.alice_key_trits)
    photons = PHOTONS_PER_ROUND * rounds
    info_bits = bits + trits * math.log2(3)
    return {
        "photons_consumed": photons,
        "sifted_pol_bits": bits,
        "sifted_oam_trits": trits,
        "sifted_symbols_per_round": (bits + trits) / rounds,
        "photons_per_sifted_symbol": photons / (bits + trits) if bits + trits else float("inf"),
        "photons_per_sifted_bit": photons / info_bits if info_bits else float("inf"),
        "expected_photons_per_sifted_symbol": PHOTONS_PER_ROUND / (1 / 4 + 1 / 9),
        "expected_photons_per_sifted_bit": PHOTONS_PER_ROUND / (1 / 4 + math.log2(3) / 9),
        "ekert_photons_per_bit": EKERT_PHOTONS_PER_BIT,
        "claimed_photons_per_bit": CLAIMED_PHOTONS_PER_BIT,
        "claim_reproduced": False,
    }


def no_signaling_pvalues(records: RoundRecords) -> dict:
    """Chi-square p-values: each party's marginal vs the other's setting choice."""
    def pvalue(outcome, setting, n_out, n_set):
        table = np.zeros((n_set, n_out), dtype=np.int64)
        np.add.at(table, (setting, outcome), 1)
        return float(stats.chi2_contingency(table)[1])

    return {
        "alice_pol_vs_delta": pvalue(records["alice_bit"], records["delta"], 2, 4),
        "bob_pol_vs_gamma": pvalue(records["bob_bit"], records["gamma"], 2, 4),
        "alice_oam_vs_B": pvalue(records["alice_trit"], records["b"], 3, 3),
        "bob_oam_vs_A": pvalue(records["bob_trit"], records["a"], 3, 3),
    }


# -- exact values ---------------------------------------------------------------


def exact_joint(state: QkdState | None = None, eve: EveModel = NO_EVE) -> np.ndarray:
    """Exact outcome probabilities per setting, mixed over Eve's branches.

    Returns pol (4, 4, 2, 2) and oam (3, 3, 3, 3) arrays packed in a TallyTable
    of floats, so the same estimator code runs on exact and sampled data.
    """
    state = state or build_state()
    pipeline = apply_eve(state, eve)
    pol = np.zeros((4, 4, 2, 2))
    oam = np.zeros((3, 3, 3, 3))
    for weight, vec in zip(pipeline.probs, pipeline.states):
        for g in range(4):
            for d in range(4):
                for a in range(3):
                    for b in range(3):
                        ps = setting_projectors(g, d, a, b)
                        for p, (ab, bb, at, bt) in zip(exact_probs(vec, ps), ps.labels):
                            # each (g, d) cell is visited once per (a, b) pair
                            pol[g, d, ab, bb] += weight * p / 9
                            oam[a, b, at, bt] += weight * p / 16
    return TallyTable(pol, oam)


def exact_expectations(state: QkdState | None = None, eve: EveModel = NO_EVE) -> dict:
    """Noise-free E values, match probabilities, S, S', S3, QBER and symbol error."""
    joint = exact_joint(state, eve)
    e_table = {
        (ALICE_ANGLES[g], BOB_ANGLES[d]): _cell_E(joint, g, d)[0] for g in range(4) for d in range(4)
    }
    match = {
        (a + 1, b + 1, k): match_probability(joint.oam[a, b], k)
        for a in range(3)
        for b in range(3)
        for k in range(3)
    }
    s = sum(sign * e_table[(ALICE_ANGLES[g], BOB_ANGLES[d])] for sign, g, d in S_TERMS)
    sp = sum(sign * e_table[(ALICE_ANGLES[g], BOB_ANGLES[d])] for sign, g, d in S_PRIME_TERMS)
    s3 = sum(sign * match[(a + 1, b + 1, k % 3)] for sign, a, b, k in CGLMP_TERMS)
    key_cells = [(g, d) for g in range(4) for d in range(4) if pol_role(g, d) == KEY]
    qber = float(np.mean([
        (joint.pol[g, d, 0, 1] + joint.pol[g, d, 1, 0]) / joint.pol[g, d].sum() for g, d in key_cells
    ]))
    ser = 1.0 - match[(KEY_BASIS + 1, KEY_BASIS + 1, 0)]
    return {"E": e_table, "match": match, "S": s, "S_prime": sp, "S3": s3, "pol_qber": qber, "oam_ser": ser}


def cglmp_exact(
    alice_offsets: tuple = ALICE_OFFSETS,
    bob_offsets: tuple = BOB_OFFSETS,
    state: QkdState | None = None,
) -> float:
    """Exact qutrit inequality value for arbitrary hologram offsets."""
    state = state or build_state()
    bases = oam_bases(tuple(alice_offsets), tuple(bob_offsets))
    counts = np.zeros((3, 3, 3, 3))
    for a in range(2):
        for b in range(2):
            local = [None] * 4
            local[BOB_OAM] = bases["bob"][b]
            local[ALICE_OAM] = bases["alice"][a]
            local[ALICE_POL] = local[BOB_POL] = ProjectorSet((np.eye(2),), ("*",))
            ps = _kron_sets(local)
            for p, lab in zip(exact_probs(state.vector, ps), ps.labels):
                counts[a, b, lab[ALICE_OAM], lab[BOB_OAM]] += p
    return sum(sign * match_probability(counts[a, b], k % 3) for sign, a, b, k in CGLMP_TERMS)
