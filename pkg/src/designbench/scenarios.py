"""Built-in scenarios and the claim checks bound to them.

Each scenario fixes a population, one or more mechanisms, default run sizes
and a list of claims. Claims carry their own expected values and tolerances;
the library modules stay free of pass/fail policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import assignment as A
from . import oracle
from .estimators import ESTIMATORS
from .montecarlo import AllFailed, Design, FixedCounts, IidN, McResult, run_experiment
from .population import PopulationSpec, make_paper_population, make_proportional_population, var_y1

EXACT = 1e-12
MEAN_SE = 5.0
VAR_REL = 0.10
GAP_REL = 0.15

CONFIRMED, FAILED, SKIPPED = "CONFIRMED", "FAILED", "SKIPPED"


@dataclass(frozen=True)
class Arm:
    label: str
    population: Callable[[], PopulationSpec]
    mechanism: Callable[[PopulationSpec], A.Mechanism]


@dataclass(frozen=True)
class Claim:
    name: str
    check: Callable[["Context"], tuple[str, str]]


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    arms: tuple[Arm, ...]
    n: int
    replications: int
    estimators: tuple[str, ...]
    claims: tuple[Claim, ...] = ()


@dataclass
class Context:
    """Everything a claim may inspect, plus a hook to run extra experiments."""

    scenario: Scenario
    n: int
    replications: int
    seed: int
    sampling: str
    threads: int | None
    populations: dict[str, PopulationSpec] = field(default_factory=dict)
    mechanisms: dict[str, A.Mechanism] = field(default_factory=dict)
    reports: dict[str, oracle.DesignReport] = field(default_factory=dict)
    results: dict[str, dict[str, McResult | AllFailed]] = field(default_factory=dict)

    def design(self, label: str, n: int | None = None) -> Design:
        n = self.n if n is None else n
        sampling = FixedCounts.half(n) if self.sampling == "fixed_counts" else IidN(n)
        return Design(self.populations[label], self.mechanisms[label], sampling)

    def run(self, label: str, estimator_id: str, n: int | None = None) -> McResult:
        return run_experiment(self.design(label, n), estimator_id, self.replications, self.seed, self.threads)

    def result(self, label: str, estimator_id: str) -> McResult | AllFailed | None:
        return self.results.get(label, {}).get(estimator_id)


def _verdict(ok: bool, detail: str) -> tuple[str, str]:
    return (CONFIRMED if ok else FAILED), detail


def _z(r: McResult, target: float) -> float:
    """Distance from ``target`` in standard errors of the Monte Carlo mean."""
    if r.std_error_of_mean > 0:
        return abs(r.mean - target) / r.std_error_of_mean
    return 0.0 if r.mean == target else float("inf")


def _close(a, b, tol=EXACT) -> bool:
    return a is not None and abs(a - b) <= tol


def _mc_mean_near(label: str, estimator_id: str, target: Callable[["Context"], float], what: str) -> Claim:
    def check(ctx: Context):
        r = ctx.result(label, estimator_id)
        if r is None:
            return SKIPPED, f"{estimator_id} not run"
        if isinstance(r, AllFailed):
            return FAILED, str(r)
        t = target(ctx)
        z = _z(r, t)
        return _verdict(z < MEAN_SE, f"mean {r.mean:.6f} vs {what} {t:.6f}: {z:.2f} SE")
    return Claim(f"{estimator_id} Monte Carlo mean within {MEAN_SE:g} SE of {what}", check)


def _ate(label: str) -> Callable[[Context], float]:
    return lambda ctx: ctx.reports[label].ate


def _quadrant(label: str, randomized: bool, unconfounded: bool) -> Claim:
    def check(ctx):
        rep = ctx.reports[label]
        ok = rep.randomized is randomized and rep.unconditionally_unconfounded is unconfounded
        return _verdict(ok, f"randomized={rep.randomized}, unconfounded={rep.unconditionally_unconfounded}")
    return Claim(f"randomized={randomized}, unconditionally unconfounded={unconfounded}", check)


# s3: confounded random assignment

def _s3_bayes(ctx):
    pop, mech = ctx.populations["s3"], ctx.mechanisms["s3"]
    treated = sum(v for (y1, _), v in oracle.outcome_given_treatment(pop, mech, 1).items() if y1 == 1)
    control = sum(v for (y1, _), v in oracle.outcome_given_treatment(pop, mech, 0).items() if y1 == 1)
    ok = _close(treated, 2 / 5) and _close(control, 2 / 3)
    return _verdict(ok, f"Pr(Y(1)=1|W=1)={treated:.6f}, Pr(Y(1)=1|W=0)={control:.6f}")


def _s3_propensity(ctx):
    rep = ctx.reports["s3"]
    scores = list(rep.propensity_by_x.values())
    ok = all(_close(v, 5 / 8) for v in scores) and not oracle.is_treatment_probability(
        ctx.populations["s3"], ctx.mechanisms["s3"], 5 / 8
    )
    probs = ", ".join(str(Fraction(p).limit_denominator()) for p in rep.treatment_probabilities)
    return _verdict(ok, f"propensity {scores} vs treatment probabilities {{{probs}}}")


def _s3_dim_limit(ctx):
    rep = ctx.reports["s3"]
    ok = _close(rep.dim_limit, 0.4) and _close(rep.ate, 0.5)
    return _verdict(ok, f"DiM limit {rep.dim_limit} vs ATE {rep.ate}")


def _s3_dim_biased(ctx):
    r = ctx.result("s3", "dim")
    if r is None:
        return SKIPPED, "dim not run"
    if isinstance(r, AllFailed):
        return FAILED, str(r)
    z_limit = _z(r, 0.4)
    z_ate = _z(r, ctx.reports["s3"].ate)
    ok = z_limit < MEAN_SE and z_ate > MEAN_SE
    return _verdict(ok, f"mean {r.mean:.6f}: {z_limit:.2f} SE from 0.4, {z_ate:.2f} SE from ATE")


S3 = Scenario(
    name="s3_confounded_random",
    description="Randomized but confounded: Pr(w=1) = (3 - y1)/4 on the binary population",
    arms=(Arm("s3", make_paper_population, A.confounded_mechanism),),
    n=10000,
    replications=1000,
    estimators=("dim", "ht", "hajek"),
    claims=(
        _quadrant("s3", True, False),
        Claim("Pr(Y(1)=1 | W=w) = 2/(3+2w)", _s3_bayes),
        Claim("propensity 5/8 is not a treatment probability", _s3_propensity),
        Claim("DiM limit 0.4 != ATE 0.5", _s3_dim_limit),
        Claim("DiM Monte Carlo mean near 0.4, away from ATE", _s3_dim_biased),
        _mc_mean_near("s3", "ht", _ate("s3"), "ATE"),
    ),
)


# s4: unconfounded deterministic assignment

def _s4_overlap(ctx):
    rep = ctx.reports["s4"]
    ok = rep.overlap and not rep.positivity and all(_close(v, 0.5) for v in rep.propensity_by_x.values())
    return _verdict(ok, f"overlap={rep.overlap}, positivity={rep.positivity}, propensity={rep.propensity_by_x}")


S4 = Scenario(
    name="s4_deterministic_unconfounded",
    description="Deterministic w = u: unconfounded and overlapping without positivity",
    arms=(Arm("s4", make_paper_population, lambda pop: A.deterministic_from(pop, lambda y1, y0, x, u: u)),),
    n=1000,
    replications=1000,
    estimators=("dim",),
    claims=(
        _quadrant("s4", False, True),
        Claim("overlap without positivity", _s4_overlap),
        _mc_mean_near("s4", "dim", _ate("s4"), "ATE"),
    ),
)


# s5: unconfounded random assignment

S5_P = 0.3
S5_F = {0: 0.25, 1: 0.75}


def _s5_constant_propensity(ctx):
    rep = ctx.reports["s5"]
    ok = all(_close(v, S5_P) for v in rep.propensity_by_x.values()) and _close(rep.unconditional_propensity, S5_P)
    return _verdict(ok, f"propensity {rep.propensity_by_x} vs p={S5_P}")


S5_CONSTANT = Scenario(
    name="s5_constant",
    description=f"Constant treatment probability p = {S5_P}",
    arms=(Arm("s5", make_paper_population, lambda pop: A.constant_prob(S5_P)),),
    n=1000,
    replications=1000,
    estimators=("dim", "ht", "hajek"),
    claims=(
        _quadrant("s5", True, True),
        Claim("propensity score equals the treatment probability", _s5_constant_propensity),
        _mc_mean_near("s5", "ht", _ate("s5"), "ATE"),
        _mc_mean_near("s5", "dim", _ate("s5"), "ATE"),
    ),
)


def _s5_covariate_propensity(ctx):
    rep = ctx.reports["s5x"]
    ok = all(_close(rep.propensity_by_x[x], S5_F[x]) for x in rep.propensity_by_x)
    return _verdict(ok, f"propensity {rep.propensity_by_x} vs f {S5_F}")


def _s5_conditional(ctx):
    rep = ctx.reports["s5x"]
    return _verdict(rep.conditionally_unconfounded is True, f"conditionally unconfounded={rep.conditionally_unconfounded}")


S5_COVARIATE = Scenario(
    name="s5_covariate",
    description=f"Treatment probability f(x) = {S5_F}",
    arms=(Arm("s5x", make_paper_population, lambda pop: A.covariate_fn(S5_F)),),
    n=1000,
    replications=1000,
    estimators=("ht", "ipw_x", "hajek"),
    claims=(
        Claim("propensity score equals f(x)", _s5_covariate_propensity),
        Claim("conditionally unconfounded given X", _s5_conditional),
        _mc_mean_near("s5x", "ipw_x", _ate("s5x"), "ATE"),
        _mc_mean_near("s5x", "ht", _ate("s5x"), "ATE"),
    ),
)


GLOBAL_RATIO = (0.5, 2.0)


def _coin_dim_fails(ctx):
    r = ctx.result("coin", "dim")
    if r is None:
        return SKIPPED, "dim not run"
    failures = r.replications if isinstance(r, AllFailed) else r.failures
    return _verdict(failures == ctx.replications, f"{failures} of {ctx.replications} replications hit an empty arm")


def _coin_variance_flat(ctx):
    small, large = ctx.n, 100 * ctx.n
    a = ctx.run("coin", "ht", small)
    b = ctx.run("coin", "ht", large)
    ratio = a.variance / b.variance if b.variance > 0 else float("inf")
    lo, hi = GLOBAL_RATIO
    return _verdict(lo <= ratio <= hi, f"Var(HT) at n={small}: {a.variance:.5f}, n={large}: {b.variance:.5f}, ratio {ratio:.3f}")


def _coin_unconfounded(ctx):
    rep = ctx.reports["coin"]
    ok = rep.randomized and rep.unconditionally_unconfounded is True and rep.overlap
    return _verdict(ok, f"randomized={rep.randomized}, unconfounded={rep.unconditionally_unconfounded}, overlap={rep.overlap}")


S5_GLOBAL_COIN = Scenario(
    name="s5_global_coin",
    description="One fair coin assigns the whole population to one arm",
    arms=(Arm("coin", make_paper_population, lambda pop: A.global_coin(0.5)),),
    n=100,
    replications=500,
    estimators=("dim", "ht"),
    claims=(
        Claim("randomized, unconfounded and overlapping", _coin_unconfounded),
        Claim("DiM fails on every replication", _coin_dim_fails),
        Claim("HT variance does not shrink from n to 100n", _coin_variance_flat),
    ),
)


# s6: outcome-proportional vs constant probabilities

def _s6_oracle_gap(ctx):
    pop = ctx.populations["proportional"]
    v1 = ctx.reports["proportional"].ht_normalized_variance
    v2 = ctx.reports["constant"].ht_normalized_variance
    target = 2 * var_y1(pop)
    return _verdict(_close(v2 - v1, target), f"oracle: {v2:.6f} - {v1:.6f} = {v2 - v1:.6f} vs 2 Var(Y(1)) = {target:.6f}")


def _s6_mc_matches_oracle(label):
    def check(ctx):
        r = ctx.result(label, "ht")
        if r is None:
            return SKIPPED, "ht not run"
        if ctx.sampling == "fixed_counts":
            return SKIPPED, "oracle variance refers to i.i.d. sampling"
        target = ctx.reports[label].ht_normalized_variance
        rel = abs(r.normalized_variance - target) / target
        return _verdict(rel <= VAR_REL, f"n Var = {r.normalized_variance:.5f} vs oracle {target:.5f} ({rel:.1%})")
    return Claim(f"{label}: HT normalized variance within {VAR_REL:.0%} of oracle", check)


def _s6_mc_gap(ctx):
    a, b = ctx.result("proportional", "ht"), ctx.result("constant", "ht")
    if a is None or b is None:
        return SKIPPED, "ht not run"
    if ctx.sampling == "fixed_counts":
        return SKIPPED, "gap claim refers to i.i.d. sampling"
    target = 2 * var_y1(ctx.populations["proportional"])
    gap = b.normalized_variance - a.normalized_variance
    rel = abs(gap - target) / target
    return _verdict(rel <= GAP_REL, f"gap {gap:.5f} vs 2 Var(Y(1)) = {target:.5f} ({rel:.1%})")


def _s6_fixed_zero(ctx):
    r = ctx.result("proportional", "ht")
    if r is None or ctx.sampling != "fixed_counts":
        return SKIPPED, "needs ht with fixed_counts sampling"
    return _verdict(r.variance == 0.0 and r.mean == ctx.mechanisms["proportional"].m,
                    f"mean {r.mean!r}, variance {r.variance!r}")


def _s6_fixed_constant(ctx):
    r = ctx.result("constant", "ht")
    if r is None or ctx.sampling != "fixed_counts":
        return SKIPPED, "needs ht with fixed_counts sampling"
    target = 2 * var_y1(ctx.populations["constant"])
    rel = abs(r.normalized_variance - target) / target
    return _verdict(rel <= VAR_REL, f"n Var = {r.normalized_variance:.5f} vs 2 Var(Y(1)) = {target:.5f} ({rel:.1%})")


S6 = Scenario(
    name="s6_proportional_vs_constant",
    description="Outcome-proportional (confounded) vs constant 1/2 probabilities on a 3-point population",
    arms=(
        Arm("proportional", make_proportional_population, A.outcome_proportional_for),
        Arm("constant", make_proportional_population, lambda pop: A.constant_prob(0.5)),
    ),
    n=1000,
    replications=4000,
    estimators=("ht", "hajek"),
    claims=(
        _quadrant("proportional", True, False),
        _quadrant("constant", True, True),
        Claim("oracle variance gap equals 2 Var(Y(1))", _s6_oracle_gap),
        _s6_mc_matches_oracle("proportional"),
        _s6_mc_matches_oracle("constant"),
        Claim(f"Monte Carlo variance gap within {GAP_REL:.0%} of 2 Var(Y(1))", _s6_mc_gap),
        Claim("fixed counts: HT has zero variance under the proportional mechanism", _s6_fixed_zero),
        Claim(f"fixed counts: constant mechanism n Var within {VAR_REL:.0%} of 2 Var(Y(1))", _s6_fixed_constant),
        _mc_mean_near("proportional", "ht", _ate("proportional"), "ATE"),
        _mc_mean_near("constant", "ht", _ate("constant"), "ATE"),
    ),
)


SCENARIOS: dict[str, Scenario] = {s.name: s for s in (S3, S4, S5_CONSTANT, S5_COVARIATE, S5_GLOBAL_COIN, S6)}


def default_estimators(report: oracle.DesignReport, mech: A.Mechanism) -> tuple[str, ...]:
    """Estimators that are well defined for a design, used for custom runs."""
    out = []
    if mech.dependence is A.Dependence.INDEPENDENT:
        out.append("dim")
    if report.positivity:
        out += ["ht", "hajek"]
    if report.overlap and mech.dependence is A.Dependence.INDEPENDENT:
        out.append("ipw_x")
    return tuple(e for e in ESTIMATORS if e in out)
