"""Finite-strata superpopulations with exact rational weights."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Latents = tuple[float, float, int, int]


class PopulationError(ValueError):
    """Raised when a population description is invalid."""


@dataclass(frozen=True)
class Stratum:
    y1: float
    y0: float
    x: int
    u: int
    weight: Fraction

    def __post_init__(self):
        object.__setattr__(self, "y1", float(self.y1))
        object.__setattr__(self, "y0", float(self.y0))
        object.__setattr__(self, "weight", Fraction(self.weight))
        for name in ("x", "u"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 0:
                raise PopulationError(f"{name} must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not (np.isfinite(self.y1) and np.isfinite(self.y0)):
            raise PopulationError("potential outcomes must be finite")
        if self.weight < 0:
            raise PopulationError(f"negative stratum weight {self.weight}")

    @property
    def latents(self) -> Latents:
        return (self.y1, self.y0, self.x, self.u)


@dataclass(frozen=True)
class PopulationSpec:
    """An infinite population described by finitely many weighted strata.

    Weights are exact rationals and must sum to exactly one. The spec is
    immutable, so it can be shared between threads.
    """

    strata: tuple[Stratum, ...]

    def __post_init__(self):
        strata = tuple(self.strata)
        object.__setattr__(self, "strata", strata)
        if not strata:
            raise PopulationError("population needs at least one stratum")
        total = sum((s.weight for s in strata), Fraction(0))
        if total != 1:
            raise PopulationError(f"stratum weights must sum to 1, got {total}")
        seen = set()
        for s in strata:
            if s.latents in seen:
                raise PopulationError(f"duplicate stratum {s.latents}")
            seen.add(s.latents)

    def __len__(self) -> int:
        return len(self.strata)

    def _column(self, values, dtype=float) -> np.ndarray:
        arr = np.array(values, dtype=dtype)
        arr.flags.writeable = False
        return arr

    @cached_property
    def weights(self) -> np.ndarray:
        return self._column([float(s.weight) for s in self.strata])

    @cached_property
    def cdf(self) -> np.ndarray:
        return cdf_of(self.weights)

    @cached_property
    def y1(self) -> np.ndarray:
        return self._column([s.y1 for s in self.strata])

    @cached_property
    def y0(self) -> np.ndarray:
        return self._column([s.y0 for s in self.strata])

    @cached_property
    def x(self) -> np.ndarray:
        return self._column([s.x for s in self.strata], np.int64)

    @cached_property
    def u(self) -> np.ndarray:
        return self._column([s.u for s in self.strata], np.int64)

    def support(self) -> list[Stratum]:
        """Strata with positive weight."""
        return [s for s in self.strata if s.weight > 0]

    def x_levels(self) -> list[int]:
        """Covariate levels carrying positive mass, sorted."""
        return sorted({s.x for s in self.support()})

    def to_dict(self) -> dict:
        return {
            "strata": [
                {"y1": s.y1, "y0": s.y0, "x": s.x, "u": s.u, "weight": str(s.weight)}
                for s in self.strata
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> PopulationSpec:
        try:
            rows = data["strata"]
            strata = [
                Stratum(
                    y1=row["y1"],
                    y0=row["y0"],
                    x=row["x"],
                    u=row["u"],
                    weight=Fraction(str(row["weight"])),
                )
                for row in rows
            ]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, PopulationError):
                raise
            raise PopulationError(f"malformed population document: {exc}") from exc
        return cls(tuple(strata))


def population(rows: Iterable[Sequence]) -> PopulationSpec:
    """Build a spec from ``(y1, y0, x, u, weight)`` rows."""
    return PopulationSpec(tuple(Stratum(*row) for row in rows))


def make_paper_population() -> PopulationSpec:
    """Binary y1, x, u in equal eighths with y0 identically zero."""
    rows = []
    for y1 in (0, 1):
        for u in (0, 1):
            for x in (0, 1):
                rows.append((y1, 0, x, u, Fraction(1, 8)))
    return population(rows)


def make_proportional_population() -> PopulationSpec:
    """Three equally likely treated outcomes 0.5, 1.0, 1.5 with y0 = 0."""
    return population((y1, 0, 0, 0, Fraction(1, 3)) for y1 in (0.5, 1.0, 1.5))


def ate(spec: PopulationSpec) -> float:
    return float(np.dot(spec.weights, spec.y1 - spec.y0))


def mean_y1(spec: PopulationSpec) -> float:
    return float(np.dot(spec.weights, spec.y1))


def var_y1(spec: PopulationSpec) -> float:
    m = mean_y1(spec)
    return float(np.dot(spec.weights, (spec.y1 - m) ** 2))


def sample_strata(spec: PopulationSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``n`` i.i.d. stratum draws."""
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    if len(spec) == 1:
        return np.zeros(n, dtype=np.int64)
    return draw_from_cdf(spec.cdf, n, rng)


def cdf_of(probs: np.ndarray) -> np.ndarray:
    """Cumulative probabilities, pinned to exactly 1 from the last positive entry on."""
    cdf = np.cumsum(probs)
    cdf[np.flatnonzero(probs > 0)[-1]:] = 1.0
    return cdf


def draw_from_cdf(cdf: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws; zero-probability categories are never returned."""
    return np.searchsorted(cdf, rng.random(n), side="right")


def sample_iid(spec: PopulationSpec, n: int, rng: np.random.Generator) -> list[Latents]:
    idx = sample_strata(spec, n, rng)
    return [spec.strata[i].latents for i in idx]


def load_population(path: str | Path) -> PopulationSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PopulationError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return PopulationSpec.from_dict(data)


def save_population(spec: PopulationSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
