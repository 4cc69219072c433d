"""Random weight distributions, weighting schemes and reproducible draws.

Each draw gets its own RNG stream keyed on ``(master_seed, draw_index)``, so
results never depend on the order in which draws are computed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError

# Domain tag mixed into every weight stream so that weights never share a
# stream with other consumers of the same master seed.
_WEIGHT_STREAM_TAG = 0x5257


class WeightScheme(enum.Enum):
    """How penalty weights relate to observation weights.

    ``OBS_ONLY`` keeps every penalty weight at 1 (RW1), ``SHARED_PENALTY`` uses
    one extra random weight for all penalty terms (RW2), and ``PER_PENALTY``
    draws an independent weight per coefficient (RW3).
    """

    OBS_ONLY = "rw1"
    SHARED_PENALTY = "rw2"
    PER_PENALTY = "rw3"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "rw1": cls.OBS_ONLY, "obs_only": cls.OBS_ONLY, "obsonly": cls.OBS_ONLY,
            "rw2": cls.SHARED_PENALTY, "shared_penalty": cls.SHARED_PENALTY,
            "sharedpenalty": cls.SHARED_PENALTY,
            "rw3": cls.PER_PENALTY, "per_penalty": cls.PER_PENALTY, "perpenalty": cls.PER_PENALTY,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidArgumentError(
                f"unknown weighting scheme {value!r}; expected one of rw1, rw2, rw3"
            ) from None


@dataclass(frozen=True)
class WeightDistribution:
    """A positive weight law with analytic moments.

    Parametrisations: ``exponential(rate)``, ``gamma(shape, rate)``,
    ``uniform(low, high)`` with ``low > 0``. ``constant(value)`` is a
    degenerate law used to recover the unweighted LASSO.
    """

    family: str = "exponential"
    rate: float = 1.0
    shape: float = 1.0
    low: float = 0.5
    high: float = 1.5
    value: float = 1.0

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        if fam == "exponential":
            if not self.rate > 0:
                raise InvalidArgumentError("exponential rate must be positive")
        elif fam == "gamma":
            if not (self.shape > 0 and self.rate > 0):
                raise InvalidArgumentError("gamma shape and rate must be positive")
        elif fam == "uniform":
            if not (0 < self.low < self.high):
                raise InvalidArgumentError("uniform bounds must satisfy 0 < low < high")
        elif fam == "constant":
            if not self.value > 0:
                raise InvalidArgumentError("constant weight must be positive")
        else:
            raise InvalidArgumentError(f"unknown weight distribution family {self.family!r}")

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", rate=rate)

    @classmethod
    def gamma(cls, shape, rate=1.0):
        return cls("gamma", shape=shape, rate=rate)

    @classmethod
    def uniform(cls, low, high):
        return cls("uniform", low=low, high=high)

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=value)

    @classmethod
    def from_dict(cls, spec):
        spec = dict(spec)
        family = str(spec.pop("family", "exponential")).lower()
        if family == "exponential":
            return cls.exponential(float(spec.get("rate", 1.0)))
        if family == "gamma":
            return cls.gamma(float(spec["shape"]), float(spec.get("rate", 1.0)))
        if family == "uniform":
            return cls.uniform(float(spec.get("low", spec.get("a"))), float(spec.get("high", spec.get("b"))))
        if family == "constant":
            return cls.constant(float(spec.get("value", 1.0)))
        raise InvalidArgumentError(f"unknown weight distribution family {family!r}")

    def to_dict(self):
        if self.family == "exponential":
            return {"family": "exponential", "rate": self.rate}
        if self.family == "gamma":
            return {"family": "gamma", "shape": self.shape, "rate": self.rate}
        if self.family == "uniform":
            return {"family": "uniform", "low": self.low, "high": self.high}
        return {"family": "constant", "value": self.value}

    def sample(self, rng, size):
        if self.family == "exponential":
            return rng.exponential(1.0 / self.rate, size)
        if self.family == "gamma":
            return rng.gamma(self.shape, 1.0 / self.rate, size)
        if self.family == "uniform":
            return rng.uniform(self.low, self.high, size)
        return np.full(size, self.value, dtype=float)


def moments(dist):
    """Analytic ``(mean, variance)`` of a weight distribution."""
    if dist.family == "exponential":
        return 1.0 / dist.rate, 1.0 / dist.rate**2
    if dist.family == "gamma":
        return dist.shape / dist.rate, dist.shape / dist.rate**2
    if dist.family == "uniform":
        return (dist.low + dist.high) / 2.0, (dist.high - dist.low) ** 2 / 12.0
    return dist.value, 0.0


DEFAULT_DISTRIBUTION = WeightDistribution.exponential(1.0)


@dataclass(frozen=True)
class WeightDraw:
    """Observation weights ``w_obs`` (length n) and penalty weights ``w_pen`` (length p)."""

    w_obs: np.ndarray
    w_pen: np.ndarray
    scheme: WeightScheme
    draw_index: int = 0
    seed: int = 0

    @classmethod
    def unit(cls, n, p, scheme=WeightScheme.OBS_ONLY):
        """All-ones weights: the weighted objective reduces to the plain LASSO."""
        return cls(np.ones(n), np.ones(p), WeightScheme.parse(scheme))


def stream(master_seed, *key):
    """Independent numpy Generator for ``(master_seed, *key)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), *map(int, key)])))


def draw_weights(dist, scheme, n, p, master_seed, draw_index, attempt=0):
    """Draw observation and penalty weights for one replicate of the sampler.

    The result is a deterministic function of the arguments. ``attempt``
    selects a fresh sub-stream for retries of the same draw.

    Selection consistency of the per-penalty scheme is only established for
    exponential weights; other laws are accepted with that scheme but carry
    no such guarantee.
    """
    if n < 1 or p < 1:
        raise InvalidArgumentError("n and p must be at least 1")
    scheme = WeightScheme.parse(scheme)
    rng = stream(master_seed, _WEIGHT_STREAM_TAG, draw_index, attempt)
    w_obs = dist.sample(rng, n)
    if scheme is WeightScheme.OBS_ONLY:
        w_pen = np.ones(p)
    elif scheme is WeightScheme.SHARED_PENALTY:
        w_pen = np.full(p, dist.sample(rng, 1)[0])
    else:
        w_pen = dist.sample(rng, p)
    return WeightDraw(w_obs=w_obs, w_pen=w_pen, scheme=scheme, draw_index=int(draw_index), seed=int(master_seed))
