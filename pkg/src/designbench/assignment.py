"""Treatment-assignment mechanisms.

A mechanism maps a unit's latents ``(y1, y0, x, u)`` to its treatment
probability. Every kind is table-driven or closed-form so that the oracle can
enumerate it exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .population import Latents, PopulationSpec, mean_y1


class Kind(str, Enum):
    CONSTANT_PROB = "constant_prob"
    COVARIATE_FN = "covariate_fn"
    LATENT_FN = "latent_fn"
    DETERMINISTIC = "deterministic"
    GLOBAL_COIN = "global_coin"
    OUTCOME_PROPORTIONAL = "outcome_proportional"


class Dependence(str, Enum):
    INDEPENDENT = "independent"
    GLOBAL = "global"


class MechanismError(ValueError):
    """Invalid mechanism parameters."""


class DomainError(KeyError):
    """Latents fall outside a mechanism's domain."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


def _key(latents: Sequence) -> Latents:
    y1, y0, x, u = latents
    return (float(y1), float(y0), int(x), int(u))


@dataclass(frozen=True)
class Mechanism:
    """A treatment-assignment rule.

    Use the constructor helpers (``constant_prob``, ``global_coin`` ...)
    rather than building instances by hand; they validate parameters.
    """

    kind: Kind
    p: float | None = None
    table: Mapping = field(default_factory=dict)
    m: float | None = None

    @property
    def dependence(self) -> Dependence:
        return Dependence.GLOBAL if self.kind is Kind.GLOBAL_COIN else Dependence.INDEPENDENT

    def __hash__(self):
        return hash((self.kind, self.p, tuple(sorted(self.table.items())), self.m))

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "dependence": self.dependence.value}
        if self.kind in (Kind.CONSTANT_PROB, Kind.GLOBAL_COIN):
            out["p"] = self.p
        elif self.kind is Kind.COVARIATE_FN:
            out["table"] = [{"x": x, "p": p} for x, p in sorted(self.table.items())]
        elif self.kind is Kind.LATENT_FN:
            out["table"] = [_row(k, "p", v) for k, v in self.table.items()]
        elif self.kind is Kind.DETERMINISTIC:
            out["table"] = [_row(k, "w", v) for k, v in self.table.items()]
        else:
            out["m"] = self.m
        return out

    @classmethod
    def from_dict(cls, data: dict) -> Mechanism:
        try:
            kind = Kind(data["kind"])
            dependence = data.get("dependence")
            if dependence is not None:
                expected = Dependence.GLOBAL if kind is Kind.GLOBAL_COIN else Dependence.INDEPENDENT
                if Dependence(dependence) is not expected:
                    raise MechanismError(f"{kind.value} requires dependence {expected.value!r}")
            if kind is Kind.CONSTANT_PROB:
                return constant_prob(data["p"])
            if kind is Kind.GLOBAL_COIN:
                return global_coin(data["p"])
            if kind is Kind.OUTCOME_PROPORTIONAL:
                return outcome_proportional(data["m"])
            rows = data["table"]
            if kind is Kind.COVARIATE_FN:
                return covariate_fn({row["x"]: row["p"] for row in rows})
            if kind is Kind.LATENT_FN:
                return latent_fn({_unrow(row): row["p"] for row in rows})
            return deterministic({_unrow(row): row["w"] for row in rows})
        except MechanismError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MechanismError(f"malformed mechanism document: {exc!r}") from exc


def _row(key: Latents, name: str, value) -> dict:
    y1, y0, x, u = key
    return {"y1": y1, "y0": y0, "x": x, "u": u, name: value}


def _unrow(row: dict) -> Latents:
    return _key((row["y1"], row["y0"], row["x"], row["u"]))


def _check_open_unit(p, what: str) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise MechanismError(f"{what} must lie strictly in (0, 1), got {p}")
    return p


def constant_prob(p: float) -> Mechanism:
    return Mechanism(Kind.CONSTANT_PROB, p=_check_open_unit(p, "p"))


def global_coin(p: float = 0.5) -> Mechanism:
    """One shared coin assigns every unit to the same arm."""
    return Mechanism(Kind.GLOBAL_COIN, p=_check_open_unit(p, "coin probability"))


def covariate_fn(table: Mapping[int, float]) -> Mechanism:
    clean = {int(x): _check_open_unit(p, f"f({x})") for x, p in table.items()}
    if not clean:
        raise MechanismError("empty covariate table")
    return Mechanism(Kind.COVARIATE_FN, table=clean)


def latent_fn(table: Mapping[Sequence, float]) -> Mechanism:
    clean = {}
    for key, p in table.items():
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise MechanismError(f"probability {p} for {tuple(key)} outside [0, 1]")
        clean[_key(key)] = p
    return Mechanism(Kind.LATENT_FN, table=clean)


def deterministic(table: Mapping[Sequence, int]) -> Mechanism:
    clean = {}
    for key, w in table.items():
        if isinstance(w, bool) or w not in (0, 1):
            raise MechanismError(f"deterministic entry for {tuple(key)} must be 0 or 1, got {w!r}")
        clean[_key(key)] = int(w)
    return Mechanism(Kind.DETERMINISTIC, table=clean)


def outcome_proportional(m: float, spec: PopulationSpec | None = None) -> Mechanism:
    """Treatment probability ``y1 / (2 m)``.

    ``m`` is the reference mean E[Y(1)]. When a population is given, every
    positive-weight stratum must satisfy ``0 < y1 < 2 m``.
    """
    m = float(m)
    if not (math.isfinite(m) and m > 0):
        raise MechanismError(f"reference mean must be positive, got {m}")
    mech = Mechanism(Kind.OUTCOME_PROPORTIONAL, m=m)
    if spec is not None:
        try:
            check_applicable(mech, spec)
        except DomainError as exc:
            raise MechanismError(str(exc)) from None
    return mech


def outcome_proportional_for(spec: PopulationSpec) -> Mechanism:
    """Outcome-proportional mechanism using the population's own E[Y(1)]."""
    return outcome_proportional(mean_y1(spec), spec)


def latent_fn_from(spec: PopulationSpec, fn: Callable[[float, float, int, int], float]) -> Mechanism:
    return latent_fn({s.latents: fn(*s.latents) for s in spec.strata})


def deterministic_from(spec: PopulationSpec, fn: Callable[[float, float, int, int], int]) -> Mechanism:
    return deterministic({s.latents: fn(*s.latents) for s in spec.strata})


def confounded_mechanism(spec: PopulationSpec) -> Mechanism:
    """Independent assignment with probability (3 - y1) / 4."""
    return latent_fn_from(spec, lambda y1, y0, x, u: (3 - y1) / 4)


def treatment_probability(mech: Mechanism, latents: Sequence) -> float:
    y1, y0, x, u = latents
    kind = mech.kind
    if kind in (Kind.CONSTANT_PROB, Kind.GLOBAL_COIN):
        return mech.p
    if kind is Kind.COVARIATE_FN:
        try:
            return mech.table[int(x)]
        except KeyError:
            raise DomainError(f"covariate level x={x} not in mechanism table") from None
    if kind is Kind.OUTCOME_PROPORTIONAL:
        p = float(y1) / (2 * mech.m)
        if not 0.0 < p < 1.0:
            raise DomainError(f"y1={y1} violates 0 < y1 < 2m with m={mech.m}")
        return p
    try:
        return float(mech.table[_key(latents)])
    except KeyError:
        raise DomainError(f"latents {tuple(latents)} not in mechanism table") from None


def stratum_probabilities(mech: Mechanism, spec: PopulationSpec) -> np.ndarray:
    """Treatment probability of every stratum, in stratum order.

    Zero-weight strata outside the mechanism's domain get NaN; they can never
    be sampled.
    """
    out = np.empty(len(spec))
    for i, s in enumerate(spec.strata):
        try:
            out[i] = treatment_probability(mech, s.latents)
        except DomainError:
            if s.weight > 0:
                raise
            out[i] = np.nan
    return out


def check_applicable(mech: Mechanism, spec: PopulationSpec) -> None:
    """Raise DomainError unless every positive-weight stratum has a probability."""
    stratum_probabilities(mech, spec)


def assign_probabilities(mech: Mechanism, probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Realize treatments for units with known probabilities ``probs``."""
    n = len(probs)
    if mech.kind is Kind.DETERMINISTIC:
        return probs.astype(np.int8)
    if mech.dependence is Dependence.GLOBAL:
        w = 1 if rng.random() < mech.p else 0
        return np.full(n, w, dtype=np.int8)
    return (rng.random(n) < probs).astype(np.int8)


def assign(mech: Mechanism, units: Sequence[Sequence], rng: np.random.Generator) -> np.ndarray:
    probs = np.array([treatment_probability(mech, u) for u in units], dtype=float)
    return assign_probabilities(mech, probs, rng)


def is_randomized(mech: Mechanism, spec: PopulationSpec) -> tuple[bool, float]:
    """Whether all positive-weight units have probability bounded inside (0, 1).

    Returns the attained bound ``min(p, 1 - p)`` over the support as gamma,
    or 0 when the study is not randomized.
    """
    probs = stratum_probabilities(mech, spec)
    support = np.array([s.weight > 0 for s in spec.strata])
    p = probs[support]
    gamma = float(np.min(np.minimum(p, 1 - p)))
    if gamma > 0:
        return True, gamma
    return False, 0.0


def load_mechanism(path: str | Path) -> Mechanism:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MechanismError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return Mechanism.from_dict(data)


def save_mechanism(mech: Mechanism, path: str | Path) -> None:
    Path(path).write_text(json.dumps(mech.to_dict(), indent=2) + "\n")
