"""Count samplers for papers and citations, and the citation-aging curve.

Paper and citation counts are drawn from either a Poisson or a negative
binomial distribution, both parameterized by their mean so that switching
kinds never changes the expected value. The expected number of citations a
paper receives in a period depends on its age through a log-logistic curve
that rises to a configurable peak and then decays.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError


class CountKind(str, Enum):
    """Supported count distributions."""

    POISSON = "poisson"
    NBINOMIAL = "nbinomial"


def _validate_count_params(kind: CountKind, mean: float, dispersion: float | None) -> None:
    if mean < 0:
        raise ConfigurationError(f"count mean must be nonnegative, got {mean}")
    if kind is CountKind.NBINOMIAL:
        if dispersion is None or dispersion <= 0:
            raise ConfigurationError(
                f"negative binomial requires a positive dispersion, got {dispersion}"
            )


@dataclass(frozen=True)
class CountDistribution:
    """A nonnegative-integer count distribution with mean-based parameters.

    For the negative binomial, ``dispersion`` is the size parameter of the
    mean/dispersion form: Var = mean + mean**2 / dispersion.
    """

    kind: CountKind
    mean: float
    dispersion: float | None = None

    def __post_init__(self) -> None:
        _validate_count_params(self.kind, self.mean, self.dispersion)


def draw_counts(
    kind: CountKind,
    means,
    rng: np.random.Generator,
    dispersion: float | None = None,
    size: int | None = None,
) -> np.ndarray:
    """Draw one count per entry of ``means`` (or ``size`` draws at a scalar mean).

    Negative binomial draws use n = dispersion, p = dispersion / (dispersion + mean),
    which gives E[X] = mean and Var[X] = mean + mean**2 / dispersion.
    """
    means = np.asarray(means, dtype=float)
    if np.any(means < 0):
        raise ConfigurationError("count means must be nonnegative")
    if kind is CountKind.POISSON:
        return rng.poisson(means, size=size)
    _validate_count_params(kind, 0.0, dispersion)
    k = float(dispersion)  # type: ignore[arg-type]
    return rng.negative_binomial(k, k / (k + means), size=size)


def sample_count(dist: CountDistribution, rng: np.random.Generator) -> int:
    """Draw a single count from ``dist``."""
    return int(draw_counts(dist.kind, dist.mean, rng, dist.dispersion))


@dataclass(frozen=True)
class AgingCurve:
    """Expected citations per period as a function of paper age.

    The curve follows the shape of a log-logistic density with steepness
    ``speed`` (> 1 so an interior mode exists), rescaled so its mode sits at
    ``peak_period`` and its peak value is exactly ``max_mean``.
    """

    peak_period: float
    max_mean: float
    speed: float = 2.0

    def __post_init__(self) -> None:
        if self.peak_period <= 0:
            raise ConfigurationError(f"peak_period must be positive, got {self.peak_period}")
        if self.max_mean < 0:
            raise ConfigurationError(f"max_mean must be nonnegative, got {self.max_mean}")
        if self.speed <= 1:
            raise ConfigurationError(
                f"speed must exceed 1 for the curve to have an interior peak, got {self.speed}"
            )

    @property
    def scale(self) -> float:
        """Log-logistic scale placing the density mode at ``peak_period``."""
        b = self.speed
        return self.peak_period * ((b + 1.0) / (b - 1.0)) ** (1.0 / b)


def log_logistic_density(t: float, scale: float, shape: float) -> float:
    """Log-logistic pdf (beta/alpha) (t/alpha)^(beta-1) / (1 + (t/alpha)^beta)^2."""
    x = t / scale
    return (shape / scale) * x ** (shape - 1.0) / (1.0 + x**shape) ** 2


def expected_citations(age: float, curve: AgingCurve) -> float:
    """Expected citations for a paper of the given age (in whole periods, >= 1).

    Returns max_mean * f(age) / f(peak_period) where f is the log-logistic
    density; exactly max_mean at age == peak_period.
    """
    if age < 1:
        raise ValueError(f"paper age must be at least 1 period, got {age}")
    a, b = curve.scale, curve.speed
    return curve.max_mean * log_logistic_density(age, a, b) / log_logistic_density(
        curve.peak_period, a, b
    )


def sample_citations_for_age(
    age: float,
    curve: AgingCurve,
    kind: CountKind,
    rng: np.random.Generator,
    dispersion: float | None = None,
) -> int:
    """Draw one citation count for a paper of the given age."""
    mean = expected_citations(age, curve)
    return int(draw_counts(kind, mean, rng, dispersion))
