"""Point estimators of the average treatment effect from one realized sample."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

import numpy as np

from .errors import EmptyArm, PositivityViolation


@dataclass(frozen=True)
class SampleObservation:
    y1: float
    y0: float
    x: int
    u: int
    p: float
    w: int
    y: float

    def __post_init__(self):
        if self.w not in (0, 1):
            raise ValueError(f"treatment must be 0 or 1, got {self.w!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"treatment probability {self.p} outside [0, 1]")
        if self.y != (self.y1 if self.w == 1 else self.y0):
            raise ValueError("realized outcome must equal the potential outcome of the received arm")


@dataclass(frozen=True)
class Sample:
    """Column-oriented sample; row ``i`` is one observation.

    Simulation code builds these directly from arrays. The realized outcome is
    derived from the treatments, so ``y = w*y1 + (1-w)*y0`` holds by
    construction.
    """

    y1: np.ndarray
    y0: np.ndarray
    x: np.ndarray
    u: np.ndarray
    p: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        n = len(self.w)
        if n == 0:
            raise ValueError("sample must be non-empty")
        for name in ("y1", "y0", "x", "u", "p"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has length {len(getattr(self, name))}, expected {n}")
        if not np.all((self.w == 0) | (self.w == 1)):
            raise ValueError("treatments must be 0 or 1")

    @property
    def y(self) -> np.ndarray:
        return np.where(self.w == 1, self.y1, self.y0)

    def __len__(self) -> int:
        return len(self.w)

    def __iter__(self) -> Iterator[SampleObservation]:
        y = self.y
        for i in range(len(self)):
            yield SampleObservation(
                float(self.y1[i]), float(self.y0[i]), int(self.x[i]), int(self.u[i]),
                float(self.p[i]), int(self.w[i]), float(y[i]),
            )

    @classmethod
    def from_observations(cls, observations) -> Sample:
        obs = list(observations)
        if not obs:
            raise ValueError("sample must be non-empty")
        for o in obs:
            if not isinstance(o, SampleObservation):
                raise TypeError(f"expected SampleObservation, got {type(o).__name__}")
        col = lambda name, dtype=float: np.array([getattr(o, name) for o in obs], dtype=dtype)
        return cls(col("y1"), col("y0"), col("x", np.int64), col("u", np.int64), col("p"), col("w", np.int8))


def observation(w: int, y: float, p: float = 0.5, x: int = 0, u: int = 0) -> SampleObservation:
    """An observation with only the realized arm's outcome filled in.

    The unobserved potential outcome is set to zero; estimators never read it.
    """
    return SampleObservation(y if w else 0.0, 0.0 if w else y, x, u, p, w, y)


def _arms(s: Sample) -> tuple[np.ndarray, np.ndarray]:
    treated = s.w == 1
    if not treated.any():
        raise EmptyArm("treated")
    if treated.all():
        raise EmptyArm("control")
    return treated, ~treated


def _check_weights(p: np.ndarray) -> None:
    if np.any((p <= 0) | (p >= 1)):
        raise PositivityViolation("inverse weighting needs every probability strictly in (0, 1)")


def diff_in_means(s: Sample) -> float:
    treated, control = _arms(s)
    y = s.y
    return float(y[treated].mean() - y[control].mean())


def _ipw(s: Sample, p: np.ndarray) -> float:
    _check_weights(p)
    y = s.y
    w = s.w
    return float(np.mean(w * y / p) - np.mean((1 - w) * y / (1 - p)))


def horvitz_thompson(s: Sample) -> float:
    return _ipw(s, s.p)


def ipw_propensity(s: Sample, score: Mapping[int, float]) -> float:
    """Inverse weighting with a covariate score ``score[x]`` in place of P."""
    try:
        e = np.array([score[int(x)] for x in s.x], dtype=float)
    except KeyError as exc:
        raise PositivityViolation(f"score has no entry for x={exc.args[0]}") from None
    return _ipw(s, e)


def hajek(s: Sample) -> float:
    treated, control = _arms(s)
    _check_weights(s.p)
    y = s.y
    wt = 1 / s.p[treated]
    wc = 1 / (1 - s.p[control])
    return float(np.dot(wt, y[treated]) / wt.sum() - np.dot(wc, y[control]) / wc.sum())


ESTIMATORS: dict[str, Callable] = {
    "dim": diff_in_means,
    "ht": horvitz_thompson,
    "ipw_x": ipw_propensity,
    "hajek": hajek,
}
