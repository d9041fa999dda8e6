"""Exact design analysis by enumeration over (stratum, treatment) cells.

Everything here is a pure function of a population and a mechanism. The law
of a single sample observation is tabulated once (``joint_distribution``) and
every conditional probability, verdict and estimator limit is read off it.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .assignment import Dependence, Mechanism, is_randomized, stratum_probabilities
from .errors import EmptyArm, PositivityViolation, Undefined
from .population import PopulationSpec, ate

TOL = 1e-12


@dataclass(frozen=True)
class JointTable:
    """Joint law of (stratum, W) for one sample observation.

    ``components`` is a list of ``(mixture_weight, cells)`` pairs where
    ``cells[i, w]`` is the probability of stratum ``i`` with treatment ``w``.
    Independent mechanisms have a single component of weight one. A global
    coin has one component per coin outcome, each putting all mass on one arm.
    """

    spec: PopulationSpec
    probs: np.ndarray
    components: tuple[tuple[float, np.ndarray], ...]

    @property
    def cells(self) -> np.ndarray:
        """Marginal cell probabilities, shape (strata, 2)."""
        return sum(weight * cells for weight, cells in self.components)

    def arm_probability(self, w: int) -> float:
        return float(self.cells[:, w].sum())

    def conditional_law(self, w: int) -> np.ndarray:
        """Stratum distribution among observations with W = w."""
        mass = self.arm_probability(w)
        if mass <= 0:
            raise EmptyArm("treated" if w == 1 else "control")
        return self.cells[:, w] / mass


def joint_distribution(spec: PopulationSpec, mech: Mechanism) -> JointTable:
    probs = stratum_probabilities(mech, spec)
    weights = spec.weights
    if mech.dependence is Dependence.GLOBAL:
        treated = np.zeros((len(spec), 2))
        treated[:, 1] = weights
        control = np.zeros((len(spec), 2))
        control[:, 0] = weights
        components = ((mech.p, treated), (1 - mech.p, control))
    else:
        p = np.where(weights > 0, probs, 0.0)
        cells = np.column_stack([weights * (1 - p), weights * p])
        components = ((1.0, cells),)
    return JointTable(spec, probs, components)


def _x_mask(spec: PopulationSpec, x: int) -> np.ndarray:
    mask = spec.x == x
    if spec.weights[mask].sum() <= 0:
        raise Undefined(f"covariate level x={x} has zero probability")
    return mask


def propensity(spec: PopulationSpec, mech: Mechanism, x: int) -> float:
    """Pr(W = 1 | X = x)."""
    mask = _x_mask(spec, x)
    cells = joint_distribution(spec, mech).cells[mask]
    return float(cells[:, 1].sum() / cells.sum())


def unconditional_propensity(spec: PopulationSpec, mech: Mechanism) -> float:
    return joint_distribution(spec, mech).arm_probability(1)


def propensity_by_x(spec: PopulationSpec, mech: Mechanism) -> dict[int, float]:
    return {x: propensity(spec, mech, x) for x in spec.x_levels()}


def total_probability_propensity(spec: PopulationSpec, mech: Mechanism) -> float:
    """Sum over y1 of Pr(Y(1) = y1) Pr(W = 1 | Y(1) = y1).

    This is the unconditional propensity; it equals the conditional one at
    every x whenever Y(1) and X are independent.
    """
    cells = joint_distribution(spec, mech).cells
    by_y1 = defaultdict(lambda: np.zeros(2))
    for s, row in zip(spec.strata, cells):
        by_y1[s.y1] += row
    total = 0.0
    for row in by_y1.values():
        mass = row.sum()
        if mass > 0:
            total += mass * (row[1] / mass)
    return total


def _outcome_law(spec: PopulationSpec, column: np.ndarray) -> dict[tuple[float, float], float]:
    mass = column.sum()
    law: dict[tuple[float, float], float] = defaultdict(float)
    for s, prob in zip(spec.strata, column):
        law[(s.y1, s.y0)] += prob / mass
    return dict(law)


def outcome_given_treatment(
    spec: PopulationSpec, mech: Mechanism, w: int, x: int | None = None
) -> dict[tuple[float, float], float]:
    """Distribution of (Y(1), Y(0)) given W = w, and X = x if given."""
    cells = joint_distribution(spec, mech).cells
    mask = np.ones(len(spec), dtype=bool) if x is None else _x_mask(spec, x)
    column = np.where(mask, cells[:, w], 0.0)
    if column.sum() <= 0:
        arm = "treated" if w == 1 else "control"
        where = "" if x is None else f" at x={x}"
        raise Undefined(f"no {arm} observations{where}")
    return _outcome_law(spec, column)


def outcome_marginal(spec: PopulationSpec) -> dict[tuple[float, float], float]:
    return _outcome_law(spec, spec.weights)


def _same_law(a: dict, b: dict) -> bool:
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= TOL for k in keys)


def check_unconfounded(spec: PopulationSpec, mech: Mechanism, conditional: bool = False) -> bool | None:
    """Whether (Y(1), Y(0)) is independent of W, optionally given X.

    Returns None when the verdict is undefined because some arm has zero
    probability (overall, or within a positive-mass covariate level).
    """
    levels = spec.x_levels() if conditional else [None]
    for x in levels:
        try:
            treated = outcome_given_treatment(spec, mech, 1, x)
            control = outcome_given_treatment(spec, mech, 0, x)
        except Undefined:
            return None
        if not _same_law(treated, control):
            return False
    return True


def _require_independent(mech: Mechanism, what: str) -> None:
    if mech.dependence is Dependence.GLOBAL:
        raise Undefined(f"{what} is undefined under a global coin: no sample mixes both arms")


def dim_limit(spec: PopulationSpec, mech: Mechanism) -> float:
    """Probability limit of the difference in means, E[Y | W=1] - E[Y | W=0]."""
    _require_independent(mech, "difference-in-means limit")
    table = joint_distribution(spec, mech)
    if min(table.arm_probability(0), table.arm_probability(1)) <= 0:
        raise Undefined("difference-in-means limit is undefined: one arm has zero probability")
    treated = np.dot(table.conditional_law(1), spec.y1)
    control = np.dot(table.conditional_law(0), spec.y0)
    return float(treated - control)


def _ht_terms(spec: PopulationSpec, mech: Mechanism, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell values of an inverse-weighted term and the cell probabilities."""
    cells = joint_distribution(spec, mech).cells
    support = spec.weights > 0
    p = probs[support]
    if np.any((p <= 0) | (p >= 1)):
        raise PositivityViolation("inverse weighting needs every weight strictly in (0, 1)")
    safe = np.where(support, probs, 0.5)
    values = np.column_stack([-spec.y0 / (1 - safe), spec.y1 / safe])
    return values, cells


def ht_mean(spec: PopulationSpec, mech: Mechanism) -> float:
    """E[WY/P - (1-W)Y/(1-P)] for one observation."""
    _require_independent(mech, "Horvitz-Thompson moment")
    values, cells = _ht_terms(spec, mech, stratum_probabilities(mech, spec))
    return float((values * cells).sum())


def ht_normalized_variance(spec: PopulationSpec, mech: Mechanism) -> float:
    """Var(WY/P - (1-W)Y/(1-P)) for one observation, i.e. n Var of the estimator."""
    _require_independent(mech, "Horvitz-Thompson normalized variance")
    values, cells = _ht_terms(spec, mech, stratum_probabilities(mech, spec))
    mean = (values * cells).sum()
    return float(((values - mean) ** 2 * cells).sum())


def ipw_limit(spec: PopulationSpec, mech: Mechanism, score: dict[int, float]) -> float:
    """E[WY/e(X) - (1-W)Y/(1-e(X))] for a covariate score table ``e``."""
    _require_independent(mech, "propensity-weighting limit")
    try:
        probs = np.array([score[s.x] if s.weight > 0 else 0.5 for s in spec.strata], dtype=float)
    except KeyError as exc:
        raise Undefined(f"score has no entry for x={exc.args[0]}") from None
    values, cells = _ht_terms(spec, mech, probs)
    return float((values * cells).sum())


@dataclass
class DesignReport:
    randomized: bool
    gamma: float
    positivity: bool
    overlap: bool
    unconditionally_unconfounded: bool | None
    conditionally_unconfounded: bool | None
    ate: float
    propensity_by_x: dict[int, float]
    unconditional_propensity: float
    treatment_probabilities: list[float]
    dim_limit: float | None
    ht_normalized_variance: float | None
    undefined: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["propensity_by_x"] = {str(k): v for k, v in self.propensity_by_x.items()}
        return out


def build_report(spec: PopulationSpec, mech: Mechanism) -> DesignReport:
    randomized, gamma = is_randomized(mech, spec)
    table = joint_distribution(spec, mech)
    support = spec.weights > 0
    p = table.probs[support]
    scores = propensity_by_x(spec, mech)
    undefined = {}

    def attempt(name, fn):
        try:
            return fn(spec, mech)
        except (Undefined, PositivityViolation, EmptyArm) as exc:
            undefined[name] = str(exc)
            return None

    uncond = check_unconfounded(spec, mech, conditional=False)
    cond = check_unconfounded(spec, mech, conditional=True)
    if uncond is None:
        undefined["unconditionally_unconfounded"] = "one treatment arm has zero probability"
    if cond is None:
        undefined["conditionally_unconfounded"] = "one treatment arm has zero probability at some x"
    return DesignReport(
        randomized=randomized,
        gamma=gamma,
        positivity=bool(np.all((p > 0) & (p < 1))),
        overlap=all(0 < v < 1 for v in scores.values()),
        unconditionally_unconfounded=uncond,
        conditionally_unconfounded=cond,
        ate=ate(spec),
        propensity_by_x=scores,
        unconditional_propensity=table.arm_probability(1),
        treatment_probabilities=sorted({float(v) for v in p}),
        dim_limit=attempt("dim_limit", dim_limit),
        ht_normalized_variance=attempt("ht_normalized_variance", ht_normalized_variance),
        undefined=undefined,
    )


def is_treatment_probability(spec: PopulationSpec, mech: Mechanism, value: float) -> bool:
    """Whether some positive-weight unit has treatment probability exactly ``value``."""
    probs = stratum_probabilities(mech, spec)[spec.weights > 0]
    return any(math.isclose(v, value, rel_tol=0, abs_tol=TOL) for v in probs)
