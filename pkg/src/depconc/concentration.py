"""Bernstein-type deviation bounds for weakly dependent sums.

Conventions follow the blocking construction: ``{1..n}`` is split into ``k``
interleaved blocks of sizes ``ell`` or ``ell + 1`` (``n = ell * k + r``), and
the mixing coefficient enters at lag ``k``.  ``ell`` therefore plays the role
of a sample size and ``k`` the role of a dependence horizon.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mixing import MixingRate, RateKind, SeminormConstants, eval_rate, seminorm_constants
from .processes import ProcessSpec, process_constants, simulate, trial_rng

__all__ = [
    "ConcentrationParams",
    "BlockPartition",
    "pi_fn",
    "p_fn",
    "block_partition",
    "effective_sample_size_exact",
    "effective_sample_size_bound",
    "bound_thm31",
    "bound_thm32",
    "bound_cor34",
    "cor34_level",
    "m1_constant",
    "laplace_bound",
    "chernoff_tail",
    "McReport",
    "mc_deviation_check",
    "empirical_quantile",
]


@dataclass(frozen=True)
class ConcentrationParams:
    """Constants feeding every bound.

    ``c`` bounds ``|X_i|`` almost surely, ``sigma2`` bounds ``E|X_i|^2``,
    ``A1, A2`` are the norm-smoothness constants and ``C1, C2`` the seminorm
    constants of the mixing class.
    """

    c: float
    sigma2: float
    A1: float = 1.0
    A2: float = 1.0
    C1: float = 1.0
    C2: float = 0.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.A1 < 1 or self.A2 <= 0:
            raise ValueError("need A1 >= 1 and A2 > 0")
        if self.C1 < 0 or self.C2 < 0:
            raise ValueError("seminorm constants must be nonnegative")

    @property
    def B(self) -> float:
        return self.A1**2 + self.A2

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def A1_tilde(self) -> float:
        return self.C1 * self.A1

    @classmethod
    def from_class(cls, constants: SeminormConstants, sigma2: float, A1: float = 1.0,
                   A2: float = 1.0) -> "ConcentrationParams":
        return cls(constants.ball_radius_c, sigma2, A1, A2, constants.C1, constants.C2)

    @classmethod
    def hilbert_tau(cls, c: float, sigma2: float) -> "ConcentrationParams":
        """Hilbert space (A1 = A2 = 1) with the Lipschitz class on B(c)."""
        return cls.from_class(seminorm_constants("lipschitz", c), sigma2)


@dataclass(frozen=True)
class BlockPartition:
    n: int
    k: int
    ell: int
    r: int
    blocks: tuple[tuple[int, ...], ...]


def pi_fn(x):
    """``exp(x) - x - 1`` without cancellation near zero."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("pi_fn is used for x >= 0")
    with np.errstate(over="ignore"):
        out = np.expm1(x) - x
    return float(out) if out.ndim == 0 else out


def p_fn(k: int, lam: float, params: ConcentrationParams, rate: MixingRate) -> float:
    """Per-step growth factor of the block Laplace transform."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    phi = eval_rate(rate, k)
    c = params.c
    return lam * params.A1_tilde * phi + params.B * (params.C2 * phi + params.sigma2) * pi_fn(lam * c) / c**2


def block_partition(n: int, k: int) -> BlockPartition:
    """Split ``1..n`` into ``k`` blocks with within-block gap ``k``."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    ell, r = divmod(n, k)
    blocks = tuple(tuple(range(i, n + 1, k)) for i in range(1, k + 1))
    return BlockPartition(n, k, ell, r, blocks)


def effective_sample_size_exact(n: int, params: ConcentrationParams, rate: MixingRate) -> int:
    """Largest ``1 <= ell <= n`` with ``C1 Phi(floor(n/ell)) <= max(c/ell, sigma/sqrt(ell))``.

    Evaluates the condition for every ``ell`` (vectorized) and returns the
    largest admissible one, or 1 when none is.
    """
    if n < 1:
        raise ValueError("n must be positive")
    ell = np.arange(1, n + 1, dtype=np.int64)
    phi = np.asarray(eval_rate(rate, n // ell), dtype=float)
    rhs = np.maximum(params.c / ell, params.sigma / np.sqrt(ell))
    ok = np.flatnonzero(params.C1 * phi <= rhs)
    return int(ell[ok[-1]]) if ok.size else 1


def effective_sample_size_bound(n: int, params: ConcentrationParams, rate: MixingRate) -> int:
    """Closed-form lower bound on the effective sample size.

    Exponential rates: ``floor((n/2) theta / (1 v log(C1 chi theta n / c))^(1/gamma))``.
    Polynomial rates: the larger of the variance- and range-driven solutions.
    The result is clamped to ``[1, n]``.
    """
    if rate.kind is RateKind.TABULATED:
        raise ValueError("no closed form for tabulated rates; use effective_sample_size_exact")
    C1, c, sigma = params.C1, params.c, params.sigma
    if rate.kind is RateKind.EXPONENTIAL:
        arg = C1 * rate.chi * rate.theta * n / c
        lg = max(1.0, math.log(arg)) if arg > 0 else 1.0
        value = math.floor(0.5 * n * rate.theta / lg ** (1.0 / rate.gamma))
    else:
        g = rate.gamma
        denom = C1 * rate.rho
        if denom == 0:
            value = n
        else:
            a = (sigma / denom) ** (2 / (2 * g + 1)) * (n / 2) ** (2 * g / (2 * g + 1))
            b = (c / denom) ** (1 / (g + 1)) * (n / 2) ** (g / (g + 1))
            value = max(math.floor(a), math.floor(b))
    return int(min(max(value, 1), n))


def bound_thm31(nu: float, ell: int, k: int, params: ConcentrationParams, rate: MixingRate) -> float:
    """Deviation level for block size ``ell`` and lag ``k``.

    ``P(|S_n/n| >= level) <= 2 exp(-nu)`` with
    ``level = 4 A1 C1 Phi(k) + 4 sqrt(B (sigma2 + C2 Phi(k)) nu / ell) + 4 c nu / (3 ell)``.
    """
    if ell < 2:
        raise ValueError("block size ell must be >= 2")
    if nu <= 0:
        raise ValueError("nu must be positive")
    phi = eval_rate(rate, k)
    return (
        4 * params.A1_tilde * phi
        + 4 * math.sqrt(params.B * (params.sigma2 + params.C2 * phi) * nu / ell)
        + 4 * params.c * nu / (3 * ell)
    )


def m1_constant(params: ConcentrationParams) -> float:
    return 2 + 2 * math.sqrt(params.B) * (1 + 2 * params.C2 / (params.C1 * params.c))


def bound_thm32(nu: float, ell_star: int, params: ConcentrationParams) -> float:
    """Deviation level in terms of the effective sample size, valid for ``nu >= 1``."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if ell_star < 1:
        raise ValueError("ell_star must be positive")
    A1, B = params.A1, params.B
    return (params.sigma * (4 * A1 + 6 * math.sqrt(B) * math.sqrt(nu)) / math.sqrt(ell_star)
            + params.c * (4 * A1 + m1_constant(params) * nu) / ell_star)


def cor34_level(log_factor: float, ell_star: int, sigma: float, c: float) -> float:
    """``log_factor * (13 sigma/sqrt(l) + 21 c/l)`` without a range check on the factor."""
    if ell_star < 1:
        raise ValueError("ell_star must be positive")
    return log_factor * (13 * sigma / math.sqrt(ell_star) + 21 * c / ell_star)


def bound_cor34(eta: float, ell_star: int, sigma: float, c: float) -> float:
    """Hilbert-valued tau-mixing level ``log(2/eta) (13 sigma/sqrt(l) + 21 c/l)``,
    exceeded with probability at most ``eta``."""
    if not 0 < eta <= 0.5:
        raise ValueError("eta must lie in (0, 1/2]")
    return cor34_level(math.log(2 / eta), ell_star, sigma, c)


def laplace_bound(lam: float, ell: int, k: int, params: ConcentrationParams, rate: MixingRate) -> float:
    """Upper bound on ``E exp(lam |S_n/n|)`` from the blocking argument."""
    phi = eval_rate(rate, k)
    c, B = params.c, params.B
    expo = (B / c**2) * ((ell + 1) * params.sigma2 + params.C2 * ell * phi) * pi_fn(lam * c / ell)
    total = expo + lam * params.A1_tilde * phi
    return 2 * math.exp(total) if total < 700 else math.inf


def chernoff_tail(t: float, ell: int, k: int, params: ConcentrationParams, rate: MixingRate) -> float:
    """Tail bound ``2 exp(-ell (t^2 - 4 m t) / (4 (t c / 3 + sigma~^2 B)))``."""
    phi = eval_rate(rate, k)
    m = params.A1_tilde * phi
    s2 = params.sigma2 + params.C2 * phi
    return 2 * math.exp(-ell * (t * t - 4 * m * t) / (4 * (t * params.c / 3 + s2 * params.B)))


def empirical_quantile(values, level: float) -> float:
    """Order statistic at rank ``ceil(level * m)`` (no interpolation)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values")
    rank = max(math.ceil(level * v.size - 1e-12), 1)
    return float(v[min(rank, v.size) - 1])


@dataclass
class McReport:
    n: int
    trials: int
    eta: float
    quantile: float
    bound: float
    holds: bool
    ell_star: int
    c: float
    sigma2: float
    norms: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "eta": self.eta,
            "quantile": self.quantile,
            "bound": self.bound,
            "holds": self.holds,
            "ell_star": self.ell_star,
            "c": self.c,
            "sigma2": self.sigma2,
        }

    def write(self, csv_path, json_path) -> None:
        with open(Path(csv_path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "norm"])
            for i, v in enumerate(self.norms):
                w.writerow([i, repr(float(v))])
        Path(json_path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def _mean_norms(spec: ProcessSpec, n: int, trials: range) -> np.ndarray:
    out = np.empty(len(trials))
    for j, t in enumerate(trials):
        path = simulate(spec, n, trial_rng(spec.seed, t))
        out[j] = np.linalg.norm(path.values.mean(axis=0))
    return out


def mc_deviation_check(spec: ProcessSpec, n: int, trials: int, eta: float,
                       conservative: bool = True, workers: int = 1) -> McReport:
    """Compare the empirical ``(1 - eta)``-quantile of ``|S_n/n|`` with the
    Hilbert tau-mixing level.

    Trial ``t`` uses the child stream ``(spec.seed, t)``, so the result does
    not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    c, sigma2, rate = process_constants(spec, n, conservative=conservative)
    params = ConcentrationParams.hilbert_tau(c, sigma2)
    ell_star = effective_sample_size_exact(n, params, rate)
    bound = bound_cor34(eta, ell_star, params.sigma, c)
    if workers > 1:
        chunks = [range(i, min(i + math.ceil(trials / workers), trials))
                  for i in range(0, trials, math.ceil(trials / workers))]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_mean_norms, [spec] * len(chunks), [n] * len(chunks), chunks))
        norms = np.concatenate(parts)
    else:
        norms = _mean_norms(spec, n, range(trials))
    q = empirical_quantile(norms, 1 - eta)
    return McReport(n, trials, eta, q, bound, bool(q <= bound), ell_star, c, sigma2, norms)
