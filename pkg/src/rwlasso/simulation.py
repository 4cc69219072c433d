"""Simulation settings, data generation and the replicate loop.

Eight preset settings are provided (see :data:`SETTINGS`); each replicate's
data depend only on ``(setting, replicate, master_seed)``.
"""

from __future__ import annotations

import enum
import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import DiagnosticsReport, IrrepresentableReport, check_irrepresentable, diagnose
from .exceptions import InvalidArgumentError
from .linalg import cholesky
from .model import Dataset, TrueModel
from .samplers import (
    CvMode,
    cross_validate,
    one_step_sample,
    residual_bootstrap,
    two_step_sample,
)
from .solver import SolverConfig
from .weights import DEFAULT_DISTRIBUTION, WeightScheme, stream

logger = logging.getLogger(__name__)

_DATA_TAG = 0x44415441
_SEED_TAG = 0x53454544


class ErrorLaw(enum.Enum):
    STD_NORMAL = "normal"
    CENTERED_CHISQ2 = "chisq2"
    ZERO = "zero"


class CovKind(enum.Enum):
    SIGMA1 = "sigma1"
    SIGMA2 = "sigma2"
    SIGMA3 = "sigma3"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SimSetting:
    n: int
    p: int
    q: int
    error_law: ErrorLaw = ErrorLaw.STD_NORMAL
    cov: CovKind = CovKind.SIGMA1
    T: int = 500
    B: int = 1000
    custom_cov: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (0 <= self.q <= self.p <= self.n):
            raise InvalidArgumentError(f"need q <= p <= n, got q={self.q}, p={self.p}, n={self.n}")
        if self.cov is CovKind.CUSTOM:
            if self.custom_cov is None:
                raise InvalidArgumentError("custom covariance requires custom_cov")
            cholesky(self.custom_cov)

    def sigma(self):
        if self.cov is CovKind.CUSTOM:
            return np.asarray(self.custom_cov, dtype=float)
        return build_sigma(self.cov, self.p, self.q)

    def replace(self, **changes):
        kw = dict(n=self.n, p=self.p, q=self.q, error_law=self.error_law, cov=self.cov,
                  T=self.T, B=self.B, custom_cov=self.custom_cov)
        kw.update(changes)
        return SimSetting(**kw)


SETTINGS = {
    1: SimSetting(100, 10, 6, ErrorLaw.STD_NORMAL, CovKind.SIGMA1),
    2: SimSetting(500, 10, 6, ErrorLaw.STD_NORMAL, CovKind.SIGMA1),
    3: SimSetting(100, 10, 6, ErrorLaw.CENTERED_CHISQ2, CovKind.SIGMA1),
    4: SimSetting(500, 10, 6, ErrorLaw.CENTERED_CHISQ2, CovKind.SIGMA1),
    5: SimSetting(100, 10, 6, ErrorLaw.STD_NORMAL, CovKind.SIGMA2),
    6: SimSetting(500, 10, 6, ErrorLaw.STD_NORMAL, CovKind.SIGMA2),
    7: SimSetting(100, 50, 6, ErrorLaw.STD_NORMAL, CovKind.SIGMA3),
    8: SimSetting(500, 50, 6, ErrorLaw.STD_NORMAL, CovKind.SIGMA3),
}


def build_beta0(p, q):
    """``beta0_j = 3/4 + j/4`` for the first ``q`` coordinates (1-based ``j``), zero after."""
    if not 0 <= q <= p:
        raise InvalidArgumentError(f"need 0 <= q <= p, got q={q}, p={p}")
    beta = np.zeros(p)
    j = np.arange(1, q + 1)
    beta[:q] = 0.75 + 0.25 * j
    return beta


def build_sigma(kind, p, q):
    """Covariance of the predictors for the preset settings.

    ``SIGMA1``/``SIGMA3``: unit diagonal, ``0.3**|i-j|`` between two relevant
    predictors, zero otherwise (``p=10`` and ``p=50``). ``SIGMA2``: unit
    diagonal, 0.4 between two relevant predictors and 0.5 for every other
    off-diagonal pair (``p=10``).
    """
    kind = CovKind(kind)
    expected = {CovKind.SIGMA1: 10, CovKind.SIGMA2: 10, CovKind.SIGMA3: 50}
    if kind is CovKind.CUSTOM:
        raise InvalidArgumentError("custom covariances are supplied, not built")
    if p != expected[kind]:
        raise InvalidArgumentError(f"{kind.value} is defined for p={expected[kind]}, got p={p}")
    if not 0 <= q <= p:
        raise InvalidArgumentError(f"need 0 <= q <= p, got q={q}")
    idx = np.arange(p)
    both_relevant = (idx[:, None] < q) & (idx[None, :] < q)
    if kind is CovKind.SIGMA2:
        S = np.where(both_relevant, 0.4, 0.5)
    else:
        S = np.where(both_relevant, 0.3 ** np.abs(idx[:, None] - idx[None, :]), 0.0)
    np.fill_diagonal(S, 1.0)
    return S


def _errors(law, rng, n):
    if law is ErrorLaw.STD_NORMAL:
        return rng.standard_normal(n)
    if law is ErrorLaw.CENTERED_CHISQ2:
        z = rng.standard_normal((n, 2))
        return (z**2).sum(axis=1) - 2.0
    return np.zeros(n)


def error_variance(law):
    return {ErrorLaw.STD_NORMAL: 1.0, ErrorLaw.CENTERED_CHISQ2: 4.0, ErrorLaw.ZERO: 0.0}[law]


def _sample_xy(setting, L, beta0, rng):
    X = rng.standard_normal((setting.n, setting.p)) @ L.T
    y = X @ beta0 + _errors(setting.error_law, rng, setting.n)
    return Dataset.from_raw(X, y)


def generate_dataset(setting, replicate, master_seed):
    """Training data, the true model, and an independent test set of equal size."""
    beta0 = build_beta0(setting.p, setting.q)
    L = cholesky(setting.sigma())
    rng = stream(master_seed, _DATA_TAG, replicate)
    train = _sample_xy(setting, L, beta0, rng)
    test = _sample_xy(setting, L, beta0, rng)
    var = error_variance(setting.error_law)
    truth = TrueModel(beta0=beta0, sigma_eps=var if var > 0 else 1.0)
    return train, truth, test


def orthogonal_dataset(n, beta0, master_seed, replicate=0, error_law=ErrorLaw.STD_NORMAL):
    """Data with centered, mutually orthogonal columns scaled so ``X'X = n I``."""
    beta0 = np.asarray(beta0, dtype=float)
    p = beta0.shape[0]
    if p > n - 1:
        raise InvalidArgumentError("an orthogonal centered design needs p <= n - 1")
    rng = stream(master_seed, _DATA_TAG, 0x4F52, replicate)
    Z = rng.standard_normal((n, p))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    X = np.sqrt(n) * Q
    y = X @ beta0 + _errors(error_law, rng, n)
    var = error_variance(error_law)
    return Dataset.from_raw(X, y), TrueModel(beta0=beta0, sigma_eps=var if var > 0 else 1.0)


def derive_seed(master_seed, *key):
    """A 64-bit seed for a named sub-task, stable across runs and platforms."""
    parts = [int(master_seed), _SEED_TAG]
    for k in key:
        parts.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


# --- methods ----------------------------------------------------------------

METHODS = {
    "rw1": (two_step_sample, WeightScheme.OBS_ONLY),
    "rw2": (two_step_sample, WeightScheme.SHARED_PENALTY),
    "rw3": (two_step_sample, WeightScheme.PER_PENALTY),
    "rw1-onestep": (one_step_sample, WeightScheme.OBS_ONLY),
    "rw2-onestep": (one_step_sample, WeightScheme.SHARED_PENALTY),
    "rw3-onestep": (one_step_sample, WeightScheme.PER_PENALTY),
    "rb": (residual_bootstrap, None),
}
DEFAULT_METHODS = ("rw1", "rw2", "rw3", "rb")


@dataclass
class MethodResult:
    method: str
    lam: float
    report: DiagnosticsReport | None
    n_failures: int = 0
    error: str | None = None


@dataclass
class ReplicateResult:
    replicate_index: int
    methods: list
    seeds: dict
    lambda_two_step: float
    lambda_one_step: float
    irrepresentable: IrrepresentableReport | None = None

    def by_method(self):
        return {m.method: m for m in self.methods}


def _reference_batch(data, lam, B, seed, cfg, workers, procedure):
    if procedure == "one-step":
        return one_step_sample(data, lam, B, DEFAULT_DISTRIBUTION, WeightScheme.OBS_ONLY, seed, cfg, workers)
    return two_step_sample(data, lam, B, DEFAULT_DISTRIBUTION, WeightScheme.OBS_ONLY, seed, cfg, workers)


def run_replicate(setting, replicate, methods=DEFAULT_METHODS, master_seed=0, *, folds=10,
                  reference_B=0, reference_procedure="two-step", level=0.90, cfg=None,
                  workers=None, dist=DEFAULT_DISTRIBUTION, tie_break="stable"):
    """Generate one dataset, tune lambda, and evaluate every method on it.

    Random-weighting methods use the lambda chosen by LASSO+LS
    cross-validation; the residual bootstrap uses plain LASSO
    cross-validation. With ``reference_B > 0`` an additional long RW1 batch
    serves as the reference for the ecdf distances.
    """
    cfg = cfg or SolverConfig()
    for m in methods:
        if m not in METHODS:
            raise InvalidArgumentError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
    data, truth, test = generate_dataset(setting, replicate, master_seed)
    seeds = {"cv": derive_seed(master_seed, "cv", replicate)}
    cv2 = cross_validate(data, folds, mode=CvMode.TWO_STEP, seed=seeds["cv"], cfg=cfg, workers=workers,
                         tie_break=tie_break)
    cv1 = cross_validate(data, folds, mode=CvMode.ONE_STEP, seed=seeds["cv"], cfg=cfg, workers=workers,
                         tie_break=tie_break)
    reference = None
    if reference_B > 0:
        seeds["reference"] = derive_seed(master_seed, "reference", replicate)
        reference = _reference_batch(data, cv2.chosen_lambda, reference_B, seeds["reference"], cfg, workers,
                                     reference_procedure)
    irrep = None
    if 1 <= truth.q < setting.p:
        try:
            irrep = check_irrepresentable(data, truth)
        except ArithmeticError:
            irrep = None
    results = []
    for m in methods:
        sampler, scheme = METHODS[m]
        seeds[m] = derive_seed(master_seed, m, replicate)
        lam = cv1.chosen_lambda if m == "rb" else cv2.chosen_lambda
        try:
            if scheme is None:
                batch = sampler(data, lam, setting.B, seed=seeds[m], cfg=cfg, workers=workers)
            else:
                batch = sampler(data, lam, setting.B, dist, scheme, seeds[m], cfg, workers)
            report = diagnose(batch, data, test, truth.beta0, None if reference is None else reference.draws, level)
            results.append(MethodResult(m, lam, report, len(batch.failures)))
        except Exception as exc:  # recorded, the replicate stream continues
            logger.warning("replicate %d method %s failed: %s", replicate, m, exc)
            results.append(MethodResult(m, lam, None, error=f"{type(exc).__name__}: {exc}"))
    return ReplicateResult(
        replicate_index=replicate,
        methods=results,
        seeds=seeds,
        lambda_two_step=cv2.chosen_lambda,
        lambda_one_step=cv1.chosen_lambda,
        irrepresentable=irrep,
    )


def run_experiment(setting, methods=DEFAULT_METHODS, master_seed=0, **kwargs):
    """Yield a :class:`ReplicateResult` for replicates ``0..T-1`` in order."""
    for r in range(setting.T):
        yield run_replicate(setting, r, methods, master_seed, **kwargs)


def summarize(results, beta0=None):
    """Per-method averages over replicates: coverage, width, selection probability, MSE."""
    acc = {}
    for rep in results:
        for m in rep.methods:
            if m.report is None:
                continue
            a = acc.setdefault(m.method, {"n": 0, "select_prob": 0, "ci_width": 0, "covered": 0, "mse": 0, "mspe": 0})
            a["n"] += 1
            a["select_prob"] = a["select_prob"] + m.report.select_prob
            a["ci_width"] = a["ci_width"] + m.report.ci_width
            a["mse"] += m.report.mse
            a["mspe"] += m.report.mspe or 0.0
            if m.report.covered is not None:
                a["covered"] = a["covered"] + m.report.covered.astype(float)
    out = {}
    for name, a in acc.items():
        k = a.pop("n")
        out[name] = {key: (np.asarray(v) / k) for key, v in a.items()}
        out[name]["replicates"] = k
    return out
