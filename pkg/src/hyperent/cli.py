"""Command-line front end.

    hyperent teleport verify [--trials N] [--seed S]
    hyperent teleport run --trials N --seed S [--input ... | --random] [--mode circuit|spdc]
    hyperent qkd run --rounds N --seed S --eve none|pol|oam|both [--eve-angle DEG] [--format json|csv]
    hyperent qkd exact [--eve ...]

Reports are JSON with keys {version, command, config, results, duration_ms}.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from collections import Counter

import numpy as np

from . import __version__, qkd, teleport
from .qkd import analysis, protocol

TSIRELSON_SLACK_SIGMAS = 5


def _amp(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _report(command: str, config: dict, results: dict, started: float, timing: bool) -> dict:
    return {
        "version": __version__,
        "command": command,
        "config": config,
        "results": results,
        "duration_ms": round((time.perf_counter() - started) * 1000, 3) if timing else None,
    }


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise SystemExit(f"cannot write report to {out}: {exc}")


def _dump(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# -- teleport -------------------------------------------------------------------


def _parse_input(text: str) -> teleport.InputQubits:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 8:
        raise argparse.ArgumentTypeError("--input needs 8 comma-separated numbers")
    a, b, al, be = (complex(vals[i], vals[i + 1]) for i in range(0, 8, 2))
    return teleport.InputQubits(a, b, al, be)


def cmd_teleport_verify(args) -> int:
    started = time.perf_counter()
    audit = teleport.verify_table1(args.mode)
    rng = np.random.default_rng(args.seed)
    inputs = list(teleport.CANONICAL_INPUTS) + [teleport.InputQubits.random(rng) for _ in range(args.trials)]
    fidelities = []
    failed = []
    for outcome in teleport.OUTCOMES:
        worst = min(
            teleport.run_teleport(inp, args.mode, forced_outcome=outcome).fidelity_to_target for inp in inputs
        )
        fidelities.append({"outcome": teleport.outcome_name(outcome), "min_fidelity": worst})
        if worst < 1 - teleport.FIDELITY_TOL:
            failed.append(f"teleport_fidelity[{teleport.outcome_name(outcome)}]")
    config = {"seed": args.seed, "trials": args.trials, "mode": args.mode}
    results = {
        "correction_table_audit": audit,
        "fidelity": fidelities,
        "failed_invariants": failed,
    }
    _write(_dump(_report("teleport verify", config, results, started, not args.no_timing)), args.out)
    return 1 if failed else 0


def cmd_teleport_run(args) -> int:
    started = time.perf_counter()
    rng = np.random.default_rng(args.seed)
    traces = []
    for _ in range(args.trials):
        inp = args.input if args.input is not None else teleport.InputQubits.random(rng)
        tr = teleport.run_teleport(inp, args.mode, rng)
        traces.append((inp, tr))
    counts = Counter(teleport.outcome_name(tr.outcome) for _, tr in traces)
    fids = [tr.fidelity_to_target for _, tr in traces]
    failed = [] if min(fids) >= 1 - teleport.FIDELITY_TOL else ["teleport_fidelity"]
    config = {
        "seed": args.seed,
        "trials": args.trials,
        "mode": args.mode,
        "input": "random" if args.input is None else [_amp(z) for z in (args.input.a, args.input.b, args.input.alpha, args.input.beta)],
    }
    results = {
        "outcome_counts": {teleport.outcome_name(o): counts.get(teleport.outcome_name(o), 0) for o in teleport.OUTCOMES},
        "min_fidelity": min(fids),
        "trials": [
            {
                "outcome": teleport.outcome_name(tr.outcome),
                "recipe": {"pre": tr.recipe.pre_pol, "post": tr.recipe.post_pol},
                "fidelity": tr.fidelity_to_target,
                "bob_final": [_amp(z) for z in tr.bob_final.amps],
            }
            for _, tr in traces
        ],
        "failed_invariants": failed,
    }
    _write(_dump(_report("teleport run", config, results, started, not args.no_timing)), args.out)
    return 1 if failed else 0


# -- qkd ------------------------------------------------------------------------


def _eve_model(args) -> protocol.EveModel:
    try:
        return protocol.EveModel(args.eve, pol_angle=args.eve_angle, oam_basis=args.eve_basis)
    except ValueError as exc:
        raise SystemExit(str(exc))


def tally_rows(tallies: protocol.TallyTable) -> list:
    """Non-empty tally cells as flat rows for plotting."""
    rows = []
    for (g, d, x, y), n in np.ndenumerate(tallies.pol):
        if n:
            rows.append(["pol", protocol.ALICE_ANGLES[g], protocol.BOB_ANGLES[d], x, y, int(n)])
    for (a, b, x, y), n in np.ndenumerate(tallies.oam):
        if n:
            rows.append(["oam", f"A{a + 1}", f"B{b + 1}", x, y, int(n)])
    return rows


def cmd_qkd_run(args) -> int:
    started = time.perf_counter()
    eve = _eve_model(args)
    sim = qkd.simulate(args.rounds, args.seed, eve, shards=args.shards, parallel=args.shards > 1)
    config = {
        "seed": args.seed,
        "rng": protocol.RNG_NAME,
        "rounds": args.rounds,
        "shards": args.shards,
        "eve": eve.describe(),
        "format": args.format,
    }
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["channel", "alice_setting", "bob_setting", "alice_outcome", "bob_outcome", "count"])
        w.writerows(tally_rows(sim.tallies))
        _write(buf.getvalue(), args.out)
        return 0

    bell = qkd.bell_report(sim.tallies)
    sifted = qkd.sift(sim.tallies, sim.records)
    failed = []
    if sim.tallies.rounds != args.rounds or int(sim.tallies.oam.sum()) != args.rounds:
        failed.append("tally_total")
    if eve.kind == "none":
        if sifted.pol_qber != 0:
            failed.append("pol_key_agreement")
        if sifted.oam_ser != 0:
            failed.append("oam_key_agreement")
    for name in ("S", "S_prime"):
        val, err = getattr(bell, name), getattr(bell, name + "_err")
        if abs(val) > analysis.TSIRELSON + TSIRELSON_SLACK_SIGMAS * err:
            failed.append(f"tsirelson_bound[{name}]")
    results = {
        "bell": bell.as_dict(),
        "verdict": qkd.verdict(bell.S, bell.S_prime, bell.S3),
        "sift": {
            "pol_fractions": sifted.pol_fractions,
            "oam_fractions": sifted.oam_fractions,
            "pol_qber": _finite(sifted.pol_qber),
            "oam_symbol_error": _finite(sifted.oam_ser),
        },
        "keys": {
            "alice_pol_hex": analysis.pack_bits(sifted.alice_key_bits),
            "bob_pol_hex": analysis.pack_bits(sifted.bob_key_bits),
            "alice_oam_hex": analysis.pack_trits(sifted.alice_key_trits),
            "bob_oam_hex": analysis.pack_trits(sifted.bob_key_trits),
        },
        "efficiency": {k: _finite(v) for k, v in qkd.key_stats(sifted, args.rounds).items()},
        "no_signaling_pvalues": qkd.no_signaling_pvalues(sim.records),
        "failed_invariants": failed,
    }
    _write(_dump(_report("qkd run", config, results, started, not args.no_timing)), args.out)
    return 1 if failed else 0


def cmd_qkd_exact(args) -> int:
    started = time.perf_counter()
    eve = _eve_model(args)
    ex = qkd.exact_expectations(eve=eve)
    results = {
        "S": ex["S"],
        "S_prime": ex["S_prime"],
        "S3": ex["S3"],
        "E": [{"gamma": g, "delta": d, "E": e} for (g, d), e in ex["E"].items()],
        "match": [{"A": a, "B": b, "k": k, "P": p} for (a, b, k), p in ex["match"].items()],
        "pol_qber": ex["pol_qber"],
        "oam_symbol_error": ex["oam_ser"],
        "verdict": qkd.verdict(ex["S"], ex["S_prime"], ex["S3"]),
        "classical_bound": analysis.CLASSICAL_BOUND,
    }
    config = {"eve": eve.describe()}
    _write(_dump(_report("qkd exact", config, results, started, not args.no_timing)), args.out)
    return 0


# -- parser -----------------------------------------------------------------------


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a count >= 1, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperent", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hyperent {__version__}")
    top = p.add_subparsers(dest="group", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--no-timing", action="store_true", help="emit duration_ms as null (byte-stable output)")

    tp = top.add_parser("teleport", help="teleportation protocol").add_subparsers(dest="cmd", required=True)
    v = tp.add_parser("verify", parents=[common], help="audit the correction table and sweep all outcomes")
    v.add_argument("--trials", type=_positive, default=100, help="random inputs per outcome")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--mode", choices=("circuit", "spdc"), default="circuit")
    v.set_defaults(func=cmd_teleport_verify)

    r = tp.add_parser("run", parents=[common], help="sampled teleportation runs")
    r.add_argument("--trials", type=_positive, required=True)
    r.add_argument("--seed", type=int, required=True)
    src = r.add_mutually_exclusive_group()
    src.add_argument("--input", type=_parse_input, help="a_re,a_im,b_re,b_im,alpha_re,alpha_im,beta_re,beta_im")
    src.add_argument("--random", action="store_true", help="fresh random input per trial (default)")
    r.add_argument("--mode", choices=("circuit", "spdc"), default="circuit")
    r.set_defaults(func=cmd_teleport_run)

    qp = top.add_parser("qkd", help="key distribution protocol").add_subparsers(dest="cmd", required=True)
    eve = argparse.ArgumentParser(add_help=False)
    eve.add_argument("--eve", default="none", help="none | pol | oam | both")
    eve.add_argument("--eve-angle", type=float, default=0.0, help="Eve's polarization analyzer angle, degrees")
    eve.add_argument("--eve-basis", type=int, default=3, help="Eve's OAM basis index 1..3 (3 = key basis)")

    q = qp.add_parser("run", parents=[common, eve], help="Monte-Carlo protocol run")
    q.add_argument("--rounds", type=_positive, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--shards", type=_positive, default=1)
    q.add_argument("--format", choices=("json", "csv"), default="json")
    q.set_defaults(func=cmd_qkd_run)

    x = qp.add_parser("exact", parents=[common, eve], help="analytic values, no sampling")
    x.set_defaults(func=cmd_qkd_exact)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
