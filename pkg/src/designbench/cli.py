"""Command-line entry point: ``designbench run`` and ``designbench classify``.

Exit codes: 0 success, 1 configuration or input error, 2 design error
(positivity, empty arms under fixed counts, inapplicable mechanism), 3 a
scenario claim failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

from . import assignment as A
from . import oracle
from .errors import EmptyArm, PositivityViolation, Undefined
from .estimators import ESTIMATORS
from .montecarlo import AllFailed, DesignError, McResult, default_threads
from .population import PopulationError, load_population
from .scenarios import FAILED, SCENARIOS, Arm, Context, Scenario, default_estimators

EXIT_CONFIG, EXIT_DESIGN, EXIT_CLAIM = 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class ScenarioConfig:
    scenario: str
    n: int
    replications: int
    master_seed: int
    estimators: tuple[str, ...] | None
    sampling: str = "iid"
    output: str = "json"
    population_path: str | None = None
    mechanism_path: str | None = None
    threads: int | None = None

    def validate(self) -> None:
        if self.scenario != "custom" and self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        has_files = self.population_path is not None or self.mechanism_path is not None
        if self.scenario == "custom":
            if self.population_path is None or self.mechanism_path is None:
                raise ConfigError("custom scenario needs both --population and --mechanism")
        elif has_files:
            raise ConfigError("--population/--mechanism are only allowed with --scenario custom")
        if self.n < 2:
            raise ConfigError(f"--n must be at least 2, got {self.n}")
        if self.replications < 2:
            raise ConfigError(f"--reps must be at least 2, got {self.replications}")
        if self.sampling not in ("iid", "fixed_counts"):
            raise ConfigError(f"unknown sampling {self.sampling!r}")
        if self.output not in ("table", "json", "csv"):
            raise ConfigError(f"unknown format {self.output!r}")
        for e in self.estimators or ():
            if e not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {e!r}; choose from {', '.join(ESTIMATORS)}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("--threads must be positive")


def _custom_scenario(cfg: ScenarioConfig) -> Scenario:
    try:
        pop = load_population(cfg.population_path)
        mech = A.load_mechanism(cfg.mechanism_path)
    except (OSError, PopulationError, A.MechanismError) as exc:
        raise ConfigError(str(exc)) from None
    return Scenario(
        name="custom",
        description=f"{cfg.population_path} + {cfg.mechanism_path}",
        arms=(Arm("custom", lambda: pop, lambda _: mech),),
        n=cfg.n,
        replications=cfg.replications,
        estimators=(),
    )


def run_scenario(cfg: ScenarioConfig) -> tuple[dict, int]:
    """Run a scenario; return the JSON-ready report and the exit status."""
    cfg.validate()
    scenario = _custom_scenario(cfg) if cfg.scenario == "custom" else SCENARIOS[cfg.scenario]
    ctx = Context(scenario, cfg.n, cfg.replications, cfg.master_seed, cfg.sampling, cfg.threads)
    designs = []
    for arm in scenario.arms:
        pop = arm.population()
        mech = arm.mechanism(pop)
        A.check_applicable(mech, pop)
        report = oracle.build_report(pop, mech)
        ctx.populations[arm.label] = pop
        ctx.mechanisms[arm.label] = mech
        ctx.reports[arm.label] = report
        estimators = cfg.estimators or scenario.estimators or default_estimators(report, mech)
        results = {}
        for est in estimators:
            try:
                results[est] = ctx.run(arm.label, est)
            except AllFailed as exc:
                results[est] = exc
        ctx.results[arm.label] = results
        designs.append({
            "label": arm.label,
            "mechanism": mech.to_dict(),
            "report": report.to_dict(),
            "results": [r.to_dict() for r in results.values()],
        })
    claims = []
    for claim in scenario.claims:
        status, detail = claim.check(ctx)
        claims.append({"claim": claim.name, "status": status, "detail": detail})
    doc = {
        "scenario": scenario.name,
        "description": scenario.description,
        "n": cfg.n,
        "replications": cfg.replications,
        "master_seed": cfg.master_seed,
        "sampling": cfg.sampling,
        "designs": designs,
        "claims": claims,
    }
    status = EXIT_CLAIM if any(c["status"] == FAILED for c in claims) else 0
    return doc, status


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_table(doc: dict) -> str:
    lines = [f"scenario {doc['scenario']}: {doc['description']}",
             f"n={doc['n']} reps={doc['replications']} seed={doc['master_seed']} sampling={doc['sampling']}", ""]
    for d in doc["designs"]:
        rep = d["report"]
        lines.append(f"[{d['label']}] mechanism {d['mechanism']['kind']}")
        for key in ("randomized", "gamma", "positivity", "overlap", "unconditionally_unconfounded",
                    "conditionally_unconfounded", "ate", "unconditional_propensity", "dim_limit",
                    "ht_normalized_variance"):
            lines.append(f"  {key:<30} {_fmt(rep[key])}")
        lines.append(f"  {'propensity_by_x':<30} " + ", ".join(f"x={k}: {_fmt(v)}" for k, v in rep["propensity_by_x"].items()))
        lines.append(f"  {'treatment_probabilities':<30} {', '.join(_fmt(p) for p in rep['treatment_probabilities'])}")
        for name, reason in rep["undefined"].items():
            lines.append(f"  ({name}: {reason})")
        if d["results"]:
            lines.append(f"  {'estimator':<8} {'failures':>8} {'mean':>12} {'variance':>12} {'n*var':>10} {'se':>10}")
            for r in d["results"]:
                lines.append(f"  {r['estimator_id']:<8} {r['failures']:>8} {_fmt(r['mean']):>12} "
                             f"{_fmt(r['variance']):>12} {_fmt(r['normalized_variance']):>10} {_fmt(r['std_error_of_mean']):>10}")
        lines.append("")
    for c in doc["claims"]:
        lines.append(f"{c['claim']}: {c['status']} ({c['detail']})")
    return "\n".join(lines) + "\n"


def render_csv(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("design",) + McResult.CSV_FIELDS)
    for d in doc["designs"]:
        for r in d["results"]:
            row = [r["estimator_id"], r["n"], r["replications"], r["failures"]]
            row += ["" if r[k] is None else repr(r[k]) for k in ("mean", "variance", "normalized_variance", "std_error_of_mean")]
            writer.writerow([d["label"], *row, r["master_seed"]])
    return buf.getvalue()


def render(doc: dict, output: str) -> str:
    if output == "table":
        return render_table(doc)
    if output == "csv":
        return render_csv(doc)
    return json.dumps(doc, indent=2) + "\n"


def classify(population_path: str, mechanism_path: str) -> dict:
    pop = load_population(population_path)
    mech = A.load_mechanism(mechanism_path)
    A.check_applicable(mech, pop)
    return oracle.build_report(pop, mech).to_dict()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="designbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a built-in or custom scenario")
    run.add_argument("--scenario", required=True, choices=[*SCENARIOS, "custom"])
    run.add_argument("--population", help="population JSON (custom only)")
    run.add_argument("--mechanism", help="mechanism JSON (custom only)")
    run.add_argument("--n", type=int, help="sample size (default: scenario's)")
    run.add_argument("--reps", type=int, help="replications (default: scenario's)")
    run.add_argument("--seed", type=int, default=42, help="master seed")
    run.add_argument("--estimators", help="comma-separated subset of " + ",".join(ESTIMATORS))
    run.add_argument("--sampling", choices=["iid", "fixed_counts"], default="iid")
    run.add_argument("--format", choices=["table", "json", "csv"], dest="output",
                     help="default: table on a terminal, json otherwise")
    run.add_argument("--threads", type=int, help="worker threads (default: $DESIGNBENCH_THREADS or 1)")

    cls = sub.add_parser("classify", help="print the exact design report for a population and mechanism")
    cls.add_argument("--population", required=True)
    cls.add_argument("--mechanism", required=True)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    if args.command == "classify":
        try:
            doc = classify(args.population, args.mechanism)
        except (OSError, PopulationError, A.MechanismError, A.DomainError) as exc:
            print(f"designbench: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
        return 0

    scenario = SCENARIOS.get(args.scenario)
    cfg = ScenarioConfig(
        scenario=args.scenario,
        n=args.n if args.n is not None else (scenario.n if scenario else 1000),
        replications=args.reps if args.reps is not None else (scenario.replications if scenario else 1000),
        master_seed=args.seed,
        estimators=tuple(e.strip() for e in args.estimators.split(",") if e.strip()) if args.estimators else None,
        sampling=args.sampling,
        output=args.output or ("table" if sys.stdout.isatty() else "json"),
        population_path=args.population,
        mechanism_path=args.mechanism,
        threads=args.threads,
    )
    try:
        if cfg.threads is None:
            default_threads()
        doc, status = run_scenario(cfg)
    except (PositivityViolation, EmptyArm, DesignError, Undefined, A.MechanismError, A.DomainError) as exc:
        print(f"designbench: design error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except (ConfigError, ValueError) as exc:
        print(f"designbench: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(render(doc, cfg.output))
    return status


if __name__ == "__main__":
    sys.exit(main())
