"""Replicated simulation of sample -> assign -> estimate.

Replication ``i`` draws from its own Philox stream keyed by
``(master_seed, i)``, so results do not depend on how replications are spread
over worker threads. Moments are reduced in replication order with exact
(``math.fsum``) summation.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .assignment import Dependence, Mechanism, assign_probabilities, stratum_probabilities
from .errors import EmptyArm, PositivityViolation
from .estimators import ESTIMATORS, Sample, ipw_propensity
from .oracle import joint_distribution, propensity_by_x
from .population import PopulationSpec, cdf_of, draw_from_cdf, sample_strata

THREADS_ENV = "DESIGNBENCH_THREADS"


class DesignError(ValueError):
    """A design that cannot be simulated."""


class AllFailed(RuntimeError):
    """Every replication of an experiment hit an empty arm."""

    def __init__(self, estimator_id: str, n: int, replications: int, master_seed: int):
        self.estimator_id = estimator_id
        self.n = n
        self.replications = replications
        self.master_seed = master_seed
        super().__init__(f"all {replications} replications of {estimator_id!r} hit an empty arm")

    def to_dict(self) -> dict:
        return {
            "estimator_id": self.estimator_id, "n": self.n, "replications": self.replications,
            "failures": self.replications, "mean": None, "variance": None,
            "normalized_variance": None, "std_error_of_mean": None, "master_seed": self.master_seed,
        }


@dataclass(frozen=True)
class IidN:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DesignError(f"i.i.d. sample size must be at least 2, got {self.n}")

    @property
    def size(self) -> int:
        return self.n


@dataclass(frozen=True)
class FixedCounts:
    n_treated: int
    n_control: int

    def __post_init__(self):
        if self.n_treated < 1 or self.n_control < 1:
            raise DesignError("fixed-count sampling needs at least one unit per arm")

    @property
    def size(self) -> int:
        return self.n_treated + self.n_control

    @classmethod
    def half(cls, n: int) -> FixedCounts:
        return cls(n // 2, n - n // 2)


@dataclass(frozen=True)
class Design:
    population: PopulationSpec
    mechanism: Mechanism
    sampling: IidN | FixedCounts

    def __post_init__(self):
        probs = stratum_probabilities(self.mechanism, self.population)
        object.__setattr__(self, "_probs", probs)
        if isinstance(self.sampling, FixedCounts):
            table = joint_distribution(self.population, self.mechanism)
            if min(table.arm_probability(0), table.arm_probability(1)) <= 0:
                raise DesignError("fixed-count sampling needs both arms to have positive probability")
            laws = (cdf_of(table.conditional_law(0)), cdf_of(table.conditional_law(1)))
            object.__setattr__(self, "_arm_cdfs", laws)

    @property
    def n(self) -> int:
        return self.sampling.size

    @property
    def probabilities(self) -> np.ndarray:
        return self._probs


@dataclass(frozen=True)
class McResult:
    estimator_id: str
    n: int
    replications: int
    failures: int
    mean: float
    variance: float
    normalized_variance: float
    std_error_of_mean: float
    master_seed: int

    @property
    def successes(self) -> int:
        return self.replications - self.failures

    def to_dict(self) -> dict:
        return asdict(self)

    CSV_FIELDS = ("estimator_id", "n", "R", "failures", "mean", "variance",
                  "normalized_variance", "se", "seed")

    def csv_row(self) -> list:
        return [self.estimator_id, self.n, self.replications, self.failures, repr(self.mean),
                repr(self.variance), repr(self.normalized_variance),
                repr(self.std_error_of_mean), self.master_seed]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(self.CSV_FIELDS)
        writer.writerow(self.csv_row())
        return buf.getvalue()


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-derived stream for one replication."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(seq))


def _build_sample(d: Design, idx: np.ndarray, w: np.ndarray) -> Sample:
    spec = d.population
    return Sample(spec.y1[idx], spec.y0[idx], spec.x[idx], spec.u[idx], d.probabilities[idx], w)


def draw_sample(d: Design, rng: np.random.Generator) -> Sample:
    if isinstance(d.sampling, IidN):
        idx = sample_strata(d.population, d.sampling.n, rng)
        w = assign_probabilities(d.mechanism, d.probabilities[idx], rng)
        return _build_sample(d, idx, w)
    control_cdf, treated_cdf = d._arm_cdfs
    treated = draw_from_cdf(treated_cdf, d.sampling.n_treated, rng)
    control = draw_from_cdf(control_cdf, d.sampling.n_control, rng)
    idx = np.concatenate([treated, control])
    w = np.concatenate([np.ones(len(treated), np.int8), np.zeros(len(control), np.int8)])
    return _build_sample(d, idx, w)


def run_replication(
    d: Design,
    estimator_id: str,
    rng: np.random.Generator,
    score: Mapping[int, float] | None = None,
) -> float:
    """One simulated estimate. Raises EmptyArm when the estimator needs both arms."""
    if estimator_id not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator_id!r}")
    s = draw_sample(d, rng)
    if estimator_id == "ipw_x":
        return ipw_propensity(s, score if score is not None else estimate_propensity(s))
    return ESTIMATORS[estimator_id](s)


def estimate_propensity(s: Sample) -> dict[int, float]:
    """Treated fraction per observed covariate level."""
    out = {}
    for x in np.unique(s.x):
        mask = s.x == x
        out[int(x)] = float(s.w[mask].mean())
    return out


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        threads = int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from None
    if threads < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return threads


def _run_block(d, estimator_id, master_seed, score, start, stop, out, ok):
    for i in range(start, stop):
        try:
            out[i] = run_replication(d, estimator_id, replication_rng(master_seed, i), score)
            ok[i] = True
        except EmptyArm:
            ok[i] = False


def summarize(values: np.ndarray, estimator_id: str, n: int, replications: int, master_seed: int) -> McResult:
    """Moments of the successful replications, reduced in a fixed order."""
    k = len(values)
    if k == 0:
        raise AllFailed(estimator_id, n, replications, master_seed)
    mean = math.fsum(values) / k
    variance = math.fsum((values - mean) ** 2) / (k - 1) if k > 1 else math.nan
    return McResult(
        estimator_id=estimator_id,
        n=n,
        replications=replications,
        failures=replications - k,
        mean=mean,
        variance=variance,
        normalized_variance=n * variance,
        std_error_of_mean=math.sqrt(variance / k) if k > 1 else math.nan,
        master_seed=master_seed,
    )


def run_experiment(
    d: Design,
    estimator_id: str,
    replications: int,
    master_seed: int,
    threads: int | None = None,
    propensity: str = "oracle",
) -> McResult:
    """Run ``replications`` independent replications and summarize them.

    ``propensity`` selects the score used by ``ipw_x``: the exact propensity
    from the oracle, or the per-sample stratified frequency (``"estimated"``).
    """
    if replications < 2:
        raise ValueError(f"need at least 2 replications, got {replications}")
    if estimator_id not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator_id!r}")
    if propensity not in ("oracle", "estimated"):
        raise ValueError(f"propensity source must be 'oracle' or 'estimated', got {propensity!r}")
    score = None
    if estimator_id == "ipw_x" and propensity == "oracle":
        score = propensity_by_x(d.population, d.mechanism)
    elif estimator_id in ("ht", "hajek") and d.mechanism.dependence is Dependence.INDEPENDENT:
        p = d.probabilities[d.population.weights > 0]
        if np.any((p <= 0) | (p >= 1)):
            raise PositivityViolation(f"{estimator_id} needs every treatment probability in (0, 1)")

    threads = threads or default_threads()
    out = np.zeros(replications)
    ok = np.zeros(replications, dtype=bool)
    if threads == 1:
        _run_block(d, estimator_id, master_seed, score, 0, replications, out, ok)
    else:
        bounds = np.linspace(0, replications, min(threads, replications) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_run_block, d, estimator_id, master_seed, score, a, b, out, ok)
                for a, b in zip(bounds[:-1], bounds[1:])
            ]
            for f in futures:
                f.result()
    return summarize(out[ok], estimator_id, d.n, replications, master_seed)


def variance_scaling_probe(
    make_design: Callable[[int], Design],
    estimator_id: str,
    sizes: Sequence[int],
    replications: int,
    master_seed: int,
    threads: int | None = None,
) -> dict[int, McResult]:
    """One experiment per sample size, all from the same master seed."""
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    return {
        n: run_experiment(make_design(n), estimator_id, replications, master_seed, threads)
        for n in sizes
    }
