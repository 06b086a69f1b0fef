"""Annual rainfall event sampling.

One daily-accumulated rainfall event is drawn per simulated year from a
period-specific probability distribution (Gumbel, log-normal, or empirical).
Sampling uses year-keyed RNG substreams so that querying a single year gives
the same intensity as querying the full series under the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

# Domain separation tag so rainfall streams never collide with other
# seeded subsystems (demand generation, training, ...).
_STREAM_TAG = 0x52A1F411


class RainfallModelError(ValueError):
    """Invalid rainfall model specification."""


@dataclass(frozen=True)
class Gumbel:
    location_mm: float
    scale_mm: float

    def validate(self) -> None:
        if not self.scale_mm > 0:
            raise RainfallModelError(f"Gumbel scale must be > 0, got {self.scale_mm}")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.gumbel(self.location_mm, self.scale_mm))

    def quantile(self, p: float) -> float:
        return float(self.location_mm - self.scale_mm * np.log(-np.log(p)))


@dataclass(frozen=True)
class LogNormal:
    mu: float       # mean of log-intensity (log mm)
    sigma: float

    def validate(self) -> None:
        if not self.sigma > 0:
            raise RainfallModelError(f"LogNormal sigma must be > 0, got {self.sigma}")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.lognormal(self.mu, self.sigma))

    def quantile(self, p: float) -> float:
        from scipy.stats import norm

        return float(np.exp(self.mu + self.sigma * norm.ppf(p)))


@dataclass(frozen=True)
class Empirical:
    values: tuple[float, ...]

    def validate(self) -> None:
        if len(self.values) == 0:
            raise RainfallModelError("empirical sample must be non-empty")
        if any(v < 0 for v in self.values):
            raise RainfallModelError("empirical sample values must be non-negative")
        if list(self.values) != sorted(self.values):
            raise RainfallModelError("empirical sample values must be sorted ascending")

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.values[rng.integers(0, len(self.values))])

    def quantile(self, p: float) -> float:
        # inverted-CDF sample quantile (order statistic)
        return float(
            np.quantile(np.asarray(self.values), p, method="inverted_cdf")
        )


DistributionSpec = Union[Gumbel, LogNormal, Empirical]


@dataclass(frozen=True)
class Period:
    year_start: int
    year_end: int
    distribution: DistributionSpec


@dataclass(frozen=True)
class RainfallModel:
    """Contiguous periods covering [start_year, end_year], one distribution each."""

    periods: tuple[Period, ...]
    start_year: int
    end_year: int

    def period_for(self, year: int) -> Period:
        if not (self.start_year <= year <= self.end_year):
            raise RainfallModelError(
                f"year {year} outside model coverage "
                f"[{self.start_year}, {self.end_year}]"
            )
        for p in self.periods:
            if p.year_start <= year <= p.year_end:
                return p
        raise AssertionError("validated model must cover every year")  # pragma: no cover

    @property
    def years(self) -> range:
        return range(self.start_year, self.end_year + 1)


@dataclass(frozen=True)
class RainfallEvent:
    year: int
    intensity_mm: float


def build_rainfall_model(
    spec: Sequence[tuple[int, int, DistributionSpec]],
    start_year: int,
    end_year: int,
) -> RainfallModel:
    """Validate period specs and assemble a rainfall model.

    Periods must tile [start_year, end_year] contiguously with no gap or
    overlap, in ascending order.
    """
    if start_year > end_year:
        raise RainfallModelError(f"start_year {start_year} > end_year {end_year}")
    if not spec:
        raise RainfallModelError("at least one period is required")

    periods = []
    expected_start = start_year
    for ys, ye, dist in spec:
        if ys != expected_start:
            kind = "gap" if ys > expected_start else "overlap"
            raise RainfallModelError(
                f"period coverage {kind} at year {expected_start} "
                f"(next period starts {ys})"
            )
        if ye < ys:
            raise RainfallModelError(f"period {ys}-{ye} has end before start")
        dist.validate()
        periods.append(Period(ys, ye, dist))
        expected_start = ye + 1
    if expected_start != end_year + 1:
        raise RainfallModelError(
            f"period coverage gap: years {expected_start}-{end_year} uncovered"
        )
    return RainfallModel(tuple(periods), start_year, end_year)


def _year_rng(seed: int, year: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_STREAM_TAG, seed, year]))


def sample_annual_event(model: RainfallModel, year: int, seed: int) -> RainfallEvent:
    """Draw the single rainfall event for `year` (truncated below at 0 mm)."""
    dist = model.period_for(year).distribution
    intensity = dist.sample(_year_rng(seed, year))
    return RainfallEvent(year=year, intensity_mm=max(0.0, intensity))


def event_series(model: RainfallModel, seed: int) -> list[RainfallEvent]:
    """One event per covered year; year-keyed substreams make the result
    independent of which other years are sampled."""
    return [sample_annual_event(model, y, seed) for y in model.years]


def intensity_deciles(model: RainfallModel, n_draws: int = 20000) -> list[float]:
    """Decile boundaries of annual event intensity, Monte-Carlo estimated.

    Draws are spread evenly over the covered years using a fixed internal
    seed, so boundaries are a deterministic property of the model. Returns
    the 9 inner boundaries (10%..90%).
    """
    rng = np.random.default_rng(np.random.SeedSequence([_STREAM_TAG, 0xDEC11E]))
    years = list(model.years)
    draws = np.empty(n_draws)
    for i in range(n_draws):
        dist = model.period_for(years[i % len(years)]).distribution
        draws[i] = max(0.0, dist.sample(rng))
    return [float(q) for q in np.quantile(draws, np.arange(0.1, 1.0, 0.1))]


def intensity_decile(boundaries: Sequence[float], intensity_mm: float) -> int:
    """Map an intensity to its decile index 0-9 given the 9 inner boundaries."""
    return int(np.searchsorted(np.asarray(boundaries), intensity_mm, side="right"))
