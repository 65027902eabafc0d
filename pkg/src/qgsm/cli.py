"""Command-line front end: ``qgsm {e91,tri,qmem,attack,fixtures,stats}``.

Every artifact starts with the seed and a hash of the effective config, so a
run can be reproduced from its own output.  Exit codes: 0 success, 1 runtime
failure (including an exhausted memory bank), 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from .fixtures import run_fixtures
from .proto_qmem import (
    AcceptPolicy,
    BasisContract,
    CloneModel,
    ReuseError,
    WindowError,
    challenge_rows,
    clone_attack,
    matched_count_pmf,
    provision,
    run_challenges,
    write_challenge_csv,
)
from .proto_tri import ConfigError, ScenarioKind, TriConfig, eve_cnot_session, run_e91_reference, run_trial
from .proto_tri.scenarios import DEFAULT_CONFIG, EAVESDROP_STRATEGIES
from .proto_tri.table import write_round_table
from .runtime import PartyId, RngStream, derive_trial_seed

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
FORMATS = ("csv", "jsonl", "text")

# Defaults per subcommand; a --config file overrides these, flags override both.
DEFAULTS: dict[str, dict[str, Any]] = {
    "e91": {"pairs": 100, "disclose": 0.0, "basis_policy": "uniform"},
    "tri": {
        "scenario": "Simultaneous",
        "source_kind": "GHZ3",
        "num_emissions": DEFAULT_CONFIG.num_emissions,
        "basis_policy": "uniform",
        "order_policy": "fixed",
        "min_key_bits": DEFAULT_CONFIG.min_key_bits,
        "eve": None,
        "mode": "a3",
        "strategy": "observe",
    },
    "qmem": {
        "N": 10**6,
        "m": 10,
        "start": 0,
        "contract": "iid",
        "policy": "threshold",
        "attack": "none",
        "p_flip": 0.0,
        "qber_threshold": 0.0,
    },
    "attack": {
        "channel": "A",
        "num_emissions": DEFAULT_CONFIG.num_emissions,
        "min_key_bits": DEFAULT_CONFIG.min_key_bits,
        "mode": "a3",
    },
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class Output:
    """Collects artifacts under ``--out`` and prints summaries unless quiet."""

    def __init__(self, args: argparse.Namespace, header: dict[str, Any]):
        self.out = Path(args.out) if args.out else None
        self.quiet = args.quiet
        self.format = args.format
        self.header = header
        self.written: list[Path] = []
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path | None:
        if self.out is None:
            return None
        p = self.out / name
        self.written.append(p)
        return p

    def header_lines(self) -> list[str]:
        return [f"# {k}={v}" for k, v in self.header.items()]

    def jsonl(self, name: str, records: list[dict]) -> None:
        p = self.path(name)
        if p is None:
            return
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"header": self.header}, sort_keys=True) + "\n")
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def summary(self, fields: dict[str, Any]) -> None:
        """Print and store the run summary in the selected format."""
        if self.format == "jsonl":
            text = json.dumps({**self.header, **fields}, sort_keys=True) + "\n"
            name = "summary.jsonl"
        elif self.format == "csv":
            keys = list(fields)
            text = "\n".join(self.header_lines() + [",".join(keys), ",".join(str(fields[k]) for k in keys)]) + "\n"
            name = "summary.csv"
        else:
            text = "\n".join(self.header_lines() + [f"{k}: {v}" for k, v in fields.items()]) + "\n"
            name = "summary.txt"
        p = self.path(name)
        if p is not None:
            p.write_text(text, encoding="utf-8")
        if not self.quiet:
            sys.stdout.write(text)

    def say(self, line: str) -> None:
        if not self.quiet:
            print(line)


def config_hash(command: str, params: dict[str, Any], seed: int, trials: int) -> str:
    blob = json.dumps({"command": command, "params": params, "seed": seed, "trials": trials}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_params(command: str, args: argparse.Namespace) -> dict[str, Any]:
    params = dict(DEFAULTS.get(command, {}))
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}", EXIT_CONFIG) from exc
        if not isinstance(data, dict):
            raise CliError("config file must hold a JSON object", EXIT_CONFIG)
        section = data.get(command, data)
        for key in ("seed", "trials"):
            if key in section and getattr(args, key) is None:
                setattr(args, key, section[key])
        unknown = set(section) - set(params) - {"seed", "trials"}
        if unknown:
            raise CliError(f"unknown config keys for {command}: {sorted(unknown)}", EXIT_CONFIG)
        params.update({k: v for k, v in section.items() if k in params})
    for key in params:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


# ---------------------------------------------------------------------------
# Subcommands


def cmd_e91(args, params, out: Output) -> int:
    records = []
    matches = 0
    for t in range(args.trials):
        res = run_e91_reference(params["pairs"], derive_trial_seed(args.seed, t), params["disclose"], params["basis_policy"])
        matches += res.keys_match
        records.append(
            {
                "trial": t,
                "sifted": res.sifted_length,
                "key_length": len(res.alice_key),
                "keys_match": res.keys_match,
                "disclosed": len(res.disclosed_rounds),
            }
        )
        if t == 0 and out.out is not None:
            res.session.transcript.write_jsonl(out.path("transcript_trial0.jsonl"))
    out.jsonl("trials.jsonl", records)
    out.summary(
        {
            "trials": args.trials,
            "pairs": params["pairs"],
            "mean_sifted": sum(r["sifted"] for r in records) / args.trials,
            "key_match_rate": matches / args.trials,
        }
    )
    return EXIT_OK


def _tri_config(params, seed: int) -> TriConfig:
    eve = params.get("eve")
    channel = None
    if eve:
        if not isinstance(eve, dict) or set(eve) - {"channel", "model"}:
            raise ConfigError("eve must be an object {channel, model}")
        if eve.get("model", "cnot") != "cnot":
            raise ConfigError(f"unknown eve model {eve.get('model')!r}; only 'cnot' is modelled")
        channel = eve.get("channel")
    policy = params["basis_policy"]
    return TriConfig(
        source_kind=params["source_kind"],
        num_emissions=int(params["num_emissions"]),
        basis_policy=policy if isinstance(policy, str) else tuple(policy),
        order_policy=params["order_policy"] if isinstance(params["order_policy"], str) else tuple(params["order_policy"]),
        min_key_bits=int(params["min_key_bits"]),
        eve=channel,
        seed=seed,
    )


def _tri_trial(task) -> dict:
    kind, cfg, t, mode, strategy = task
    outcome, _ = run_trial(kind, cfg, t, mode=mode, strategy=strategy)
    return {
        "trial": t,
        "seed": outcome.seed,
        "verdict": outcome.verdict.value.value,
        "reason": outcome.verdict.reason,
        "logins": [p.value for p in outcome.logins],
        "emissions": outcome.emissions,
        "key_a": outcome.key_lengths[0],
        "key_b": outcome.key_lengths[1],
        "null_rounds": outcome.null_rounds,
    }


def fan_out(fn, tasks: list, workers: int) -> list:
    """Map ``fn`` over tasks, in task order whatever the completion order."""
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def cmd_tri(args, params, out: Output) -> int:
    kind = ScenarioKind(params["scenario"])
    if params["strategy"] not in EAVESDROP_STRATEGIES:
        raise ConfigError(f"unknown strategy {params['strategy']!r}")
    base = _tri_config(params, args.seed)
    tasks = [
        (kind, base.replace(seed=derive_trial_seed(args.seed, t)), t, params["mode"], params["strategy"])
        for t in range(args.trials)
    ]
    records = fan_out(_tri_trial, tasks, args.workers)
    if out.out is not None:
        # Trial 0 is re-run locally for its round table and transcript.
        _, result = run_trial(kind, tasks[0][1], 0, mode=params["mode"], strategy=params["strategy"])
        write_round_table(out.path("rounds_trial0.csv"), result.rounds, out.header)
        result.session.transcript.write_jsonl(out.path("transcript_trial0.jsonl"))
    out.jsonl("verdicts.jsonl", records)
    n = args.trials
    out.summary(
        {
            "scenario": kind.value,
            "trials": n,
            "detection_rate": sum(r["verdict"] == "CloneDetected" for r in records) / n,
            "accept_rate": sum(r["verdict"] == "Accepted" for r in records) / n,
            "mean_key_a": sum(r["key_a"] for r in records) / n,
            "mean_key_b": sum(r["key_b"] for r in records) / n,
            "null_rounds": sum(r["null_rounds"] for r in records),
        }
    )
    return EXIT_OK


def _parse_contract(text: str) -> BasisContract:
    if text == "iid":
        return BasisContract.iid()
    if text.startswith("fixed:"):
        return BasisContract.fixed(int(text.split(":", 1)[1]))
    raise ConfigError(f"contract must be 'iid' or 'fixed:Q', got {text!r}")


def _parse_policy(text: str) -> AcceptPolicy:
    name, _, arg = text.partition(":")
    q = int(arg) if arg else None
    if name == "threshold":
        return AcceptPolicy.threshold(q)
    if name == "exact":
        return AcceptPolicy.exact_q(q)
    if name == "modal" and q is None:
        return AcceptPolicy.modal_count()
    raise ConfigError(f"policy must be threshold[:Q], exact[:Q] or modal, got {text!r}")


def cmd_qmem(args, params, out: Output) -> int:
    N, m, start = int(params["N"]), int(params["m"]), int(params["start"])
    contract = _parse_contract(params["contract"])
    policy = _parse_policy(params["policy"])
    contract.check(m)
    if m < 1 or start < 0:
        raise ConfigError("need m >= 1 and start >= 0")
    attack = params["attack"]
    if attack != "none":
        attack = CloneModel(attack)
    ledger, bank = provision(N, args.seed)
    target = bank
    if attack != "none":
        clone, original = clone_attack(bank, attack, RngStream(args.seed, PartyId.EVE, "clone"))
        # MeasureResend is checked on the disturbed original, RandomFresh on the clone.
        target = original if attack is CloneModel.MEASURE_RESEND else clone

    fit = max(0, (N - start) // m)
    served = min(args.trials, fit)
    partial = served < args.trials
    rng = RngStream(args.seed, PartyId.SIM1, "qmem")
    rows: list[dict] = []
    batch = None
    if served:
        batch = run_challenges(
            ledger, target, m, served, contract, policy, rng, start, params["p_flip"], params["qber_threshold"]
        )
        rows = challenge_rows(ledger, batch.report(0))
    header = dict(out.header, partial=str(partial).lower())
    out.header = header
    if rows and out.out is not None:
        write_challenge_csv(out.path("challenge_window0.csv"), rows, header)

    fields: dict[str, Any] = {"N": N, "m": m, "requested": args.trials, "served": served, "partial": partial}
    if batch is not None:
        pmf = matched_count_pmf(m) if m <= 64 else None
        hist = np.bincount(batch.matched, minlength=m + 1)
        hist_rows = [
            {"q": q, "count": int(hist[q]), "freq": hist[q] / served, "exact": float(pmf[q]) if pmf else None}
            for q in range(m + 1)
        ]
        out.jsonl("histogram.jsonl", hist_rows)
        curve = []
        for k in range(m + 1):
            sel = batch.matched == k
            if sel.any():
                curve.append(
                    {"k": k, "trials": int(sel.sum()), "accept_rate": float(batch.accepted[sel].mean()), "oracle_3_4_pow_k": 0.75**k}
                )
        if attack != "none":
            out.jsonl("accept_vs_k.jsonl", curve)
        fields.update(
            {
                "attack": attack if attack == "none" else attack.value,
                "policy": str(policy),
                "accept_rate": float(batch.accepted.mean()),
                "mean_qber": float(batch.qber[batch.matched > 0].mean()) if (batch.matched > 0).any() else 0.0,
                "freq_q_modal": float(hist[m // 2] / served),
            }
        )
    out.summary(fields)
    if partial:
        sys.stderr.write(f"memory exhausted: served {served} of {args.trials} windows\n")
        return EXIT_FAIL
    return EXIT_OK


def _attack_trial(task) -> dict:
    channel, cfg, t, mode = task
    rep = eve_cnot_session(channel, cfg, mode=mode)
    return {
        "trial": t,
        "verdict": rep.verdict.value.value,
        "z_agree": rep.z_agreement.agree,
        "z_total": rep.z_agreement.total,
        "untapped_agree": rep.untapped_agreement.agree,
        "untapped_total": rep.untapped_agreement.total,
    }


def cmd_attack(args, params, out: Output) -> int:
    base = TriConfig(num_emissions=int(params["num_emissions"]), min_key_bits=int(params["min_key_bits"]), seed=args.seed)
    tasks = [
        (params["channel"], base.replace(seed=derive_trial_seed(args.seed, t)), t, params["mode"])
        for t in range(args.trials)
    ]
    records = fan_out(_attack_trial, tasks, args.workers)
    out.jsonl("eve_trials.jsonl", records)
    z = [sum(r["z_agree"] for r in records), sum(r["z_total"] for r in records)]
    untapped = [sum(r["untapped_agree"] for r in records), sum(r["untapped_total"] for r in records)]
    out.summary(
        {
            "channel": params["channel"],
            "trials": args.trials,
            "detection_rate": sum(r["verdict"] == "CloneDetected" for r in records) / args.trials,
            "eve_tapped_z_agreement": z[0] / z[1] if z[1] else float("nan"),
            "eve_untapped_agreement": untapped[0] / untapped[1] if untapped[1] else float("nan"),
        }
    )
    return EXIT_OK


def cmd_fixtures(args, params, out: Output) -> int:
    results = run_fixtures()
    for r in results:
        out.say(r.line())
    out.jsonl("fixtures.jsonl", [{"fixture": r.name, "passed": r.passed, "detail": r.detail} for r in results])
    failed = [r.name for r in results if not r.passed]
    if failed:
        sys.stderr.write(f"fixtures failed: {', '.join(failed)}\n")
        return EXIT_FAIL
    return EXIT_OK


_RATE_FIELDS = ("detected", "accepted")


def cmd_stats(args, params, out: Output) -> int:
    """Aggregate verdict files written by earlier ``tri`` runs."""
    files: list[Path] = []
    for p in map(Path, args.paths):
        files.extend(sorted(p.glob("verdicts.jsonl")) if p.is_dir() else [p])
    if not files:
        raise CliError("no verdicts.jsonl files found", EXIT_FAIL)
    counts: dict[str, int] = {}
    total = 0
    runs = []
    for f in files:
        lines = [json.loads(line) for line in f.read_text().splitlines() if line.strip()]
        if not lines or "header" not in lines[0]:
            raise CliError(f"{f} has no artifact header", EXIT_FAIL)
        runs.append(lines[0]["header"].get("config_hash"))
        for rec in lines[1:]:
            counts[rec["verdict"]] = counts.get(rec["verdict"], 0) + 1
            total += 1
    fields = {"files": len(files), "runs": ",".join(map(str, runs)), "trials": total}
    for verdict in sorted(counts):
        fields[f"rate_{verdict}"] = counts[verdict] / total
    out.summary(fields)
    return EXIT_OK


COMMANDS = {
    "e91": cmd_e91,
    "tri": cmd_tri,
    "qmem": cmd_qmem,
    "attack": cmd_attack,
    "fixtures": cmd_fixtures,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("--trials", type=int, default=None, help="number of trials (default 1)")
    common.add_argument("--out", help="directory for artifacts")
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--workers", type=int, default=1, help="worker processes for independent trials")

    parser = argparse.ArgumentParser(prog="qgsm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("e91", parents=[common], help="two-party Bell-pair reference")
    p.add_argument("--pairs", type=int)
    p.add_argument("--disclose", type=float)
    p.add_argument("--basis-policy", dest="basis_policy", choices=("uniform", "all_z", "all_x"))

    p = sub.add_parser("tri", parents=[common], help="three-party sessions and login scenarios")
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    p.add_argument("--emissions", dest="num_emissions", type=int)
    p.add_argument("--min-key-bits", dest="min_key_bits", type=int)
    p.add_argument("--source", dest="source_kind", choices=("GHZ3", "W_PAPER"))
    p.add_argument("--basis-policy", dest="basis_policy", choices=("uniform", "all_z", "all_x"))
    p.add_argument("--order", dest="order_policy", choices=("fixed", "random"))
    p.add_argument("--mode", choices=("a3", "keys", "single_channel"))
    p.add_argument("--strategy", choices=EAVESDROP_STRATEGIES)

    p = sub.add_parser("qmem", parents=[common], help="quantum-memory challenges")
    p.add_argument("-N", dest="N", type=int)
    p.add_argument("-m", dest="m", type=int)
    p.add_argument("--start", type=int)
    p.add_argument("--contract", help="iid or fixed:Q")
    p.add_argument("--policy", help="threshold[:Q], exact[:Q] or modal")
    p.add_argument("--attack", choices=("none",) + tuple(c.value for c in CloneModel))
    p.add_argument("--p-flip", dest="p_flip", type=float)
    p.add_argument("--qber-threshold", dest="qber_threshold", type=float)

    p = sub.add_parser("attack", parents=[common], help="CNOT eavesdropper on one channel")
    p.add_argument("--channel", choices=("A", "B"))
    p.add_argument("--emissions", dest="num_emissions", type=int)
    p.add_argument("--min-key-bits", dest="min_key_bits", type=int)
    p.add_argument("--mode", choices=("a3", "keys", "single_channel"))

    sub.add_parser("fixtures", parents=[common], help="replay the worked examples")

    p = sub.add_parser("stats", parents=[common], help="aggregate earlier run artifacts")
    p.add_argument("paths", nargs="+", help="artifact directories or verdict files")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        params = load_params(args.command, args)
        args.seed = 0 if args.seed is None else int(args.seed)
        args.trials = 1 if args.trials is None else int(args.trials)
        if not 0 <= args.seed < 2**64:
            raise CliError("seed must be an unsigned 64-bit integer", EXIT_CONFIG)
        if args.workers < 1:
            raise CliError("workers must be >= 1", EXIT_CONFIG)
        if args.trials < 1:
            raise CliError("trials must be >= 1", EXIT_CONFIG)
        header = {
            "command": args.command,
            "seed": args.seed,
            "trials": args.trials,
            "config_hash": config_hash(args.command, params, args.seed, args.trials),
        }
        out = Output(args, header)
        return COMMANDS[args.command](args, params, out)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except (ReuseError, WindowError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAIL
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
