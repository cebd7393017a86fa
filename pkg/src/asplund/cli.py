"""Command-line entry point: ``asplund verify`` and ``asplund transform``.

``verify CONFIG`` runs a seeded batch of checks described by a JSON file and
writes ``results.csv`` and ``results.json`` into the configured output
directory.  Exit status: 0 if nothing is violated, 1 on any violation,
2 on configuration or input errors.

``transform`` applies one operation to gridfn v1 files.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .convolution import sup_convolution
from .generators import (
    FamilySpec,
    generate,
    gen_convex_body,
    gen_random_mask,
    make_common_projection_boxes,
    make_equal_max_section_pair,
    make_equal_projection_integral_pair,
    make_equal_projection_pair,
    make_equal_projection_volume_pair,
)
from .gridfn import format_gridfn, load_gridfn
from .means import as_lambda, format_p, parse_p
from .transform import project, schwarz_fn, steiner_fn
from .verify import (
    HYPOTHESES,
    VIOLATED,
    Report,
    check_bbl,
    check_linear_refinement,
    check_pl,
    check_symmetrization_props,
    lambda_scan,
    reports_to_csv,
)

log = logging.getLogger("asplund")

SUITES = ("pl", "bbl", "refinement", "props", "scan")
CONFIG_KEYS = {
    "suite", "hypothesis", "family", "family2", "lambda", "p", "axis",
    "trials", "seed", "out", "tol_scale", "K",
}
SET_KINDS = ("box", "polytope-2d", "random-mask")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    suite: str
    family: FamilySpec
    family2: FamilySpec | None
    lam: Fraction
    p: float
    axis: int
    trials: int
    seed: int
    out: Path
    hypothesis: str | None = None
    tol_scale: float = 1.0
    K: int = 9

    @classmethod
    def from_dict(cls, data) -> "Config":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"suite", "family", "trials", "seed", "out"} - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            suite = data["suite"]
            if suite not in SUITES:
                raise ConfigError(f"suite must be one of {SUITES}")
            hypothesis = data.get("hypothesis")
            if suite == "refinement" and hypothesis not in HYPOTHESES:
                raise ConfigError(f"refinement needs a hypothesis in {HYPOTHESES}")
            family = FamilySpec.from_dict(data["family"])
            family2 = FamilySpec.from_dict(data["family2"]) if "family2" in data else None
            if family2 is not None and (family2.n, family2.N, family2.radius) != (
                    family.n, family.N, family.radius):
                raise ConfigError("family2 must use the same n, N and radius as family")
            trials, seed, axis = data["trials"], data["seed"], data.get("axis", 0)
            for key, val in (("trials", trials), ("seed", seed), ("axis", axis)):
                if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                    raise ConfigError(f"{key} must be a non-negative integer")
            if trials < 1:
                raise ConfigError("trials must be at least 1")
            if axis >= family.n:
                raise ConfigError(f"axis {axis} out of range for n = {family.n}")
            K = data.get("K", 9)
            if not isinstance(K, int) or K < 3:
                raise ConfigError("K must be an integer >= 3")
            tol_scale = float(data.get("tol_scale", 1.0))
            if not tol_scale >= 0:
                raise ConfigError("tol_scale must be non-negative")
            return cls(
                suite=suite,
                family=family,
                family2=family2,
                lam=as_lambda(str(data.get("lambda", "1/2"))),
                p=parse_p(str(data.get("p", "0"))),
                axis=axis,
                trials=trials,
                seed=seed,
                out=Path(data["out"]),
                hypothesis=hypothesis,
                tol_scale=tol_scale,
                K=K,
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {
            "suite": self.suite,
            "family": self.family.to_dict(),
            "lambda": str(self.lam),
            "p": format_p(self.p),
            "axis": self.axis,
            "trials": self.trials,
            "seed": self.seed,
            "out": str(self.out),
            "tol_scale": self.tol_scale,
            "K": self.K,
        }
        if self.family2 is not None:
            out["family2"] = self.family2.to_dict()
        if self.hypothesis is not None:
            out["hypothesis"] = self.hypothesis
        return out


def trial_seeds(seed: int, trials: int) -> list[tuple[int, int, int]]:
    """Three independent 64-bit seeds per trial, split from one root seed."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        words = child.generate_state(6, dtype=np.uint32).astype(np.uint64)
        out.append(tuple(int(words[2 * i] << np.uint64(32) | words[2 * i + 1])
                         for i in range(3)))
    return out


def _pair_functions(cfg: Config, seeds):
    fam2 = cfg.family2 or cfg.family
    return generate(cfg.family.with_(seed=seeds[0])), generate(fam2.with_(seed=seeds[1]))


def _refinement_pair(cfg: Config, seeds):
    hyp = cfg.hypothesis
    if hyp == "common_projection":
        f = generate(cfg.family.with_(seed=seeds[0]))
        keep = cfg.family.kind not in SET_KINDS
        return make_equal_projection_pair(f, cfg.axis, seeds[2], preserve_logconcave=keep)
    f, g = _pair_functions(cfg, seeds)
    if hyp == "equal_max_section":
        return make_equal_max_section_pair(f, g, cfg.axis)
    return make_equal_projection_integral_pair(f, g, cfg.axis)


def _scan_pair(cfg: Config, seeds):
    fam = cfg.family
    if fam.kind == "box":
        a, b = make_common_projection_boxes(fam.grid, cfg.axis, seeds[0])
        return a.indicator(), b.indicator()
    if fam.kind == "random-mask":
        a = gen_random_mask(fam.with_(seed=seeds[0]))
        b = gen_random_mask(fam.with_(seed=seeds[1]))
        a, b = make_equal_projection_volume_pair(a, b, cfg.axis, seeds[2])
        return a.indicator(), b.indicator()
    if fam.kind == "polytope-2d":
        f = gen_convex_body(fam.with_(seed=seeds[0])).indicator()
    else:
        f = generate(fam.with_(seed=seeds[0]))
    return make_equal_projection_pair(f, cfg.axis, seeds[2], preserve_logconcave=True)


def run_trial(cfg: Config, index: int, seeds) -> dict:
    """Run one trial and return a JSON-ready record."""
    lam, p = cfg.lam, cfg.p
    record = {"trial": index, "seeds": list(seeds)}
    if cfg.suite == "scan":
        f, g = _scan_pair(cfg, seeds)
        scan = lambda_scan(f, g, p, cfg.K, tol_scale=cfg.tol_scale)
        record["scan"] = scan.to_dict()
        # concavity is only guaranteed for common-projection boxes
        concave_required = cfg.family.kind == "box"
        bad = not scan.chords_hold() or (concave_required and not scan.is_concave())
        record["violated"] = bool(bad)
        return record
    if cfg.suite == "refinement":
        f, g = _refinement_pair(cfg, seeds)
        reports = [check_linear_refinement(f, g, lam, p, cfg.hypothesis, cfg.axis,
                                           tol_scale=cfg.tol_scale)]
    else:
        f, g = _pair_functions(cfg, seeds)
        if cfg.suite == "pl":
            reports = [check_pl(f, g, lam, tol_scale=cfg.tol_scale)]
        elif cfg.suite == "bbl":
            reports = [check_bbl(f, g, lam, p, tol_scale=cfg.tol_scale)]
        else:
            reports = check_symmetrization_props(f, g, lam, p, cfg.axis)
    record["reports"] = [r.to_dict() for r in reports]
    record["violated"] = any(r.verdict == VIOLATED for r in reports)
    return record


def worker_count() -> int:
    raw = os.environ.get("ASPLUND_THREADS", "0")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ASPLUND_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError("ASPLUND_THREADS must be non-negative")
    return n or (os.cpu_count() or 1)


def run_config(cfg: Config) -> list[dict]:
    seeds = trial_seeds(cfg.seed, cfg.trials)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(lambda item: run_trial(cfg, *item), enumerate(seeds)))


def _scan_csv(records) -> str:
    lines = ["trial,lambda,value,chord_margin,second_difference"]
    for rec in records:
        s = rec["scan"]
        for row in zip(s["lambdas"], s["values"], s["chord_margins"], s["second_differences"]):
            lines.append(",".join([str(rec["trial"]), row[0]] + [repr(v) for v in row[1:]]))
    return "\n".join(lines) + "\n"


def _reports_csv(records) -> str:
    reports = [Report(**r) for rec in records for r in rec["reports"]]
    return reports_to_csv(reports)


def write_results(cfg: Config, records) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    csv_text = _scan_csv(records) if cfg.suite == "scan" else _reports_csv(records)
    (cfg.out / "results.csv").write_text(csv_text)
    payload = {"config": cfg.to_dict(), "trials": records}
    (cfg.out / "results.json").write_text(json.dumps(payload, indent=2) + "\n")


def cmd_verify(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        cfg = Config.from_dict(data)
        log.info("running %s suite, %d trials", cfg.suite, cfg.trials)
        records = run_config(cfg)
    except (OSError, json.JSONDecodeError, ConfigError, ValueError) as exc:
        print(f"asplund verify: {exc}", file=sys.stderr)
        return 2
    write_results(cfg, records)
    violated = [r["trial"] for r in records if r["violated"]]
    if violated:
        print(f"asplund verify: violations in trials {violated}", file=sys.stderr)
        return 1
    return 0


def cmd_transform(args) -> int:
    try:
        inputs = [load_gridfn(path) for path in args.inputs]
        op = args.operation
        expected = 2 if op == "supconv" else 1
        if len(inputs) != expected:
            raise ValueError(f"{op} takes {expected} input file(s), got {len(inputs)}")
        if op == "project":
            result = project(inputs[0], args.axis)
        elif op == "steiner":
            result = steiner_fn(inputs[0], args.axis)
        elif op == "schwarz":
            result = schwarz_fn(inputs[0], args.axis)
        else:
            result = sup_convolution(inputs[0], inputs[1], args.lam, args.p)
        text = format_gridfn(result)
    except (OSError, ValueError) as exc:
        print(f"asplund transform: {exc}", file=sys.stderr)
        return 2
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="ascii")
        except OSError as exc:
            print(f"asplund transform: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asplund", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a JSON-configured batch of checks")
    v.add_argument("config", help="path to the JSON experiment config")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("transform", help="apply one operation to gridfn files")
    t.add_argument("operation", choices=("project", "steiner", "schwarz", "supconv"))
    t.add_argument("inputs", nargs="+", help="gridfn v1 input file(s)")
    t.add_argument("--axis", type=int, default=0)
    t.add_argument("--lambda", dest="lam", type=_lambda_arg, default=Fraction(1, 2))
    t.add_argument("--p", type=_p_arg, default=0.0)
    t.add_argument("--out", help="output path (default: standard output)")
    t.set_defaults(func=cmd_transform)
    return parser


def _lambda_arg(text: str) -> Fraction:
    try:
        return as_lambda(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _p_arg(text: str) -> float:
    try:
        return parse_p(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
