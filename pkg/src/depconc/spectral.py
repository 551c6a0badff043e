"""Kernel spectral regularization.

Estimators have the form ``f = F_lam(T_x) S_x^* y``.  On a sample they are
computed through the Gram matrix: with ``K/n = U L U^T`` the coefficient
vector is ``alpha = U F_lam(L) U^T y`` and predictions are
``f(x) = (1/n) sum_j alpha_j k(x_j, x)``.

Filters are checked against four conditions on ``(0, 1]``::

    sup |t F(t)|          <= B
    sup |F(t)|            <= E / lam
    sup |1 - t F(t)|      <= gamma0
    sup |1 - t F(t)| t^q  <= gamma_q lam^q        (qualification q)

The module also provides effective dimensions, the effective sample sizes
and deviation levels used by the error analysis, and the ``lam_n`` schedules
for exponentially and polynomially mixing data.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from .mixing import MixingRate, RateKind

__all__ = [
    "FilterFamily",
    "FilterSpec",
    "FilterCertificate",
    "filter_eval",
    "certify_filter",
    "GaussianKernel",
    "SobolevKernel",
    "kernel_from_dict",
    "KernelModel",
    "fit",
    "landweber_iterate",
    "EmpiricalSpectrum",
    "PowerLawSpectrum",
    "effective_dimension",
    "powerlaw_envelope_constant",
    "table1_sample_sizes",
    "Lemma41Report",
    "lemma41_deviations",
    "RatioCheck",
    "ratio_operator_check",
    "SourceCondition",
    "Regime",
    "Schedule",
    "lambda_schedule",
    "rate_exponent",
    "Lemma43Result",
    "ell_zero",
    "error_bound_lemma43",
    "load_dataset_csv",
    "save_dataset_csv",
]


# ---------------------------------------------------------------- filters


class FilterFamily(str, Enum):
    TIKHONOV = "tikhonov"
    CUTOFF = "cutoff"
    LANDWEBER = "landweber"
    CUSTOM = "custom"


@dataclass(frozen=True)
class FilterSpec:
    """A regularization family with its declared constants.

    ``qualification_q`` may be ``math.inf`` (any order); ``gamma_q`` is then
    the constant for order 1 and :meth:`gamma_q_for` gives the rest.
    Custom filters carry a vectorized ``func(lam, t)``.
    """

    family: FilterFamily
    B_const: float = 1.0
    E_const: float = 1.0
    gamma0: float = 1.0
    qualification_q: float = 1.0
    gamma_q: float = 1.0
    func: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        fam = FilterFamily(self.family)
        object.__setattr__(self, "family", fam)
        if fam is FilterFamily.CUSTOM and self.func is None:
            raise ValueError("custom filters need func(lam, t)")

    @classmethod
    def tikhonov(cls) -> "FilterSpec":
        return cls(FilterFamily.TIKHONOV, 1.0, 1.0, 1.0, 1.0, 1.0)

    @classmethod
    def cutoff(cls) -> "FilterSpec":
        return cls(FilterFamily.CUTOFF, 1.0, 1.0, 1.0, math.inf, 1.0)

    @classmethod
    def landweber(cls) -> "FilterSpec":
        return cls(FilterFamily.LANDWEBER, 1.0, 2.0, 1.0, math.inf, 1.0)

    @classmethod
    def custom(cls, func, B_const, E_const, gamma0, qualification_q, gamma_q) -> "FilterSpec":
        return cls(FilterFamily.CUSTOM, B_const, E_const, gamma0, qualification_q, gamma_q, func)

    @classmethod
    def from_name(cls, name: str) -> "FilterSpec":
        try:
            return {"tikhonov": cls.tikhonov, "cutoff": cls.cutoff,
                    "landweber": cls.landweber}[name]()
        except KeyError:
            raise ValueError(f"unknown filter {name!r}") from None

    def gamma_q_for(self, q: float) -> float:
        """Declared constant for qualification order ``q`` (``q <= qualification_q``)."""
        if q > self.qualification_q:
            raise ValueError(f"order {q} exceeds the qualification {self.qualification_q}")
        if self.family is FilterFamily.LANDWEBER:
            # sup_t (1-t)^m t^q <= (q/(m+q))^q <= q^q lam^q
            return max(1.0, q**q)
        return self.gamma_q

    def to_dict(self) -> dict:
        if self.family is FilterFamily.CUSTOM:
            raise ValueError("custom filters are not serializable")
        d = {k: v for k, v in asdict(self).items() if k != "func"}
        d["family"] = self.family.value
        d["qualification_q"] = None if math.isinf(self.qualification_q) else self.qualification_q
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FilterSpec":
        d = dict(d)
        if d.get("qualification_q") is None:
            d["qualification_q"] = math.inf
        return cls(**d)


def landweber_steps(lam: float) -> int:
    return int(math.ceil(1.0 / lam - 1e-12))


def _filter_values(filt: FilterSpec, lam: float, t: np.ndarray) -> np.ndarray:
    # t in [0, 1]; t = 0 arises from clamped Gram eigenvalues
    fam = filt.family
    if fam is FilterFamily.TIKHONOV:
        return 1.0 / (t + lam)
    if fam is FilterFamily.CUTOFF:
        with np.errstate(divide="ignore"):
            return np.where(t >= lam, 1.0 / np.where(t > 0, t, 1.0), 0.0)
    if fam is FilterFamily.LANDWEBER:
        m = landweber_steps(lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            # sum_{i<m} (1-t)^i = (1 - (1-t)^m) / t
            val = -np.expm1(m * np.log1p(-t)) / t
        return np.where(t > 0, val, float(m))
    return np.asarray(filt.func(lam, t), dtype=float)


def _residual_values(filt: FilterSpec, lam: float, t: np.ndarray) -> np.ndarray:
    # r(t) = 1 - t F(t) in closed form where one exists; the generic form
    # cancels catastrophically once multiplied by (t/lam)^q
    fam = filt.family
    if fam is FilterFamily.TIKHONOV:
        return lam / (t + lam)
    if fam is FilterFamily.CUTOFF:
        return np.where(t >= lam, 0.0, 1.0)
    if fam is FilterFamily.LANDWEBER:
        with np.errstate(divide="ignore"):
            return np.exp(landweber_steps(lam) * np.log1p(-t))
    return 1.0 - t * _filter_values(filt, lam, t)


def filter_eval(filt: FilterSpec, lam, t):
    """``F_lam(t)`` for ``0 < lam <= 1`` and ``t`` in ``(0, 1]``."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or np.any(t_arr > 1):
        raise ValueError("t must lie in (0, 1]")
    out = _filter_values(filt, lam, t_arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FilterCertificate:
    declared: FilterSpec
    estimated: FilterSpec
    gamma_q_estimates: dict
    checks: dict
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "family": self.declared.family.value,
            "declared": self.declared.to_dict(),
            "estimated": {
                "B_const": self.estimated.B_const,
                "E_const": self.estimated.E_const,
                "gamma0": self.estimated.gamma0,
            },
            "gamma_q_estimates": {str(q): v for q, v in self.gamma_q_estimates.items()},
            "checks": dict(self.checks),
            "passed": self.passed,
        }


def certify_filter(filt: FilterSpec, lambda_grid, t_grid, qs=None, tol: float = 1e-9) -> FilterCertificate:
    """Grid suprema of the four filter conditions against the declared constants.

    ``qs`` defaults to the declared qualification when finite and to
    ``1..8`` otherwise.  Every ``q`` is checked against ``gamma_q_for(q)``.
    """
    lams = np.asarray(lambda_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0) or np.any(t > 1) or np.any(lams <= 0) or np.any(lams > 1):
        raise ValueError("grids must lie in (0, 1]")
    if qs is None:
        qs = [filt.qualification_q] if math.isfinite(filt.qualification_q) else list(range(1, 9))
    B_hat = E_hat = g0_hat = 0.0
    gq_hat = {q: 0.0 for q in qs}
    for lam in lams:
        F = _filter_values(filt, lam, t)
        tF = t * F
        res = np.abs(_residual_values(filt, lam, t))
        B_hat = max(B_hat, float(np.max(np.abs(tF))))
        E_hat = max(E_hat, float(np.max(np.abs(F))) * lam)
        g0_hat = max(g0_hat, float(np.max(res)))
        for q in qs:
            # compare in scaled form to avoid underflow of lam^q
            gq_hat[q] = max(gq_hat[q], float(np.max(res * (t / lam) ** q)))
    up = 1 + tol
    checks = {
        "B": B_hat <= filt.B_const * up,
        "E": E_hat <= filt.E_const * up,
        "gamma0": g0_hat <= filt.gamma0 * up,
    }
    for q in qs:
        checks[f"gamma_q[{q:g}]"] = q <= filt.qualification_q and gq_hat[q] <= filt.gamma_q_for(q) * up
    q_first = qs[0] if qs else filt.qualification_q
    estimated = replace(filt, B_const=B_hat, E_const=E_hat, gamma0=g0_hat,
                        gamma_q=gq_hat.get(q_first, filt.gamma_q))
    return FilterCertificate(filt, estimated, gq_hat, checks, tol)


# ---------------------------------------------------------------- kernels


def _as_inputs(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("inputs must be a vector or an (n, d) array")
    return x


@dataclass(frozen=True)
class GaussianKernel:
    width: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")

    def __call__(self, x, z) -> np.ndarray:
        x, z = _as_inputs(x), _as_inputs(z)
        sq = np.sum(x * x, 1)[:, None] + np.sum(z * z, 1)[None, :] - 2 * x @ z.T
        return np.exp(-np.maximum(sq, 0.0) / (2 * self.width**2))

    def to_dict(self) -> dict:
        return {"type": "gaussian", "width": self.width}


@dataclass(frozen=True)
class SobolevKernel:
    """``(1 + min(x, z)) / 2`` on ``[0, 1]``, a first-order Sobolev kernel with ``k(x, x) <= 1``."""

    def __call__(self, x, z) -> np.ndarray:
        x, z = _as_inputs(x), _as_inputs(z)
        if x.shape[1] != 1 or z.shape[1] != 1:
            raise ValueError("the spline kernel is univariate")
        if min(x.min(initial=0), z.min(initial=0)) < 0 or max(x.max(initial=0), z.max(initial=0)) > 1:
            raise ValueError("the spline kernel is defined on [0, 1]")
        return 0.5 * (1.0 + np.minimum(x, z.T))

    def to_dict(self) -> dict:
        return {"type": "sobolev"}


def kernel_from_dict(d: dict):
    kind = d.get("type")
    if kind == "gaussian":
        return GaussianKernel(float(d["width"]))
    if kind == "sobolev":
        return SobolevKernel()
    if kind == "mercer":
        from .mercer import MercerKernel

        return MercerKernel(b=float(d["b"]), beta=float(d["beta"]), J=int(d["J"]))
    raise ValueError(f"unknown kernel type {kind!r}")


@dataclass(frozen=True, eq=False)
class KernelModel:
    kernel: object
    support_x: np.ndarray
    alpha: np.ndarray
    lam: float
    filter: FilterSpec

    def predict(self, x) -> np.ndarray:
        return self.kernel(x, self.support_x) @ self.alpha / len(self.alpha)

    def to_json(self) -> str:
        return json.dumps({
            "kernel": self.kernel.to_dict(),
            "lambda": self.lam,
            "filter": self.filter.to_dict(),
            "support_x": np.asarray(self.support_x).tolist(),
            "alpha": np.asarray(self.alpha).tolist(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "KernelModel":
        d = json.loads(text)
        return cls(kernel_from_dict(d["kernel"]), np.asarray(d["support_x"], dtype=float),
                   np.asarray(d["alpha"], dtype=float), float(d["lambda"]),
                   FilterSpec.from_dict(d["filter"]))


def _spectral_apply(filt: FilterSpec, lam: float, gram_n: np.ndarray, y: np.ndarray) -> np.ndarray:
    G = 0.5 * (gram_n + gram_n.T)
    evals, U = np.linalg.eigh(G)
    if evals.size and evals[0] < -1e-10:
        raise ValueError(f"kernel matrix is not positive semidefinite (eigenvalue {evals[0]:.3g})")
    if evals.size and evals[-1] > 1 + 1e-10:
        raise ValueError("normalized kernel matrix has eigenvalues above 1; the kernel must satisfy k(x, x) <= 1")
    evals = np.clip(evals, 0.0, 1.0)
    return U @ (_filter_values(filt, lam, evals) * (U.T @ y))


def fit(x, y, lam: float, filt: FilterSpec, kernel, R: float | None = None) -> KernelModel:
    """Spectral-filter estimator on the sample ``(x, y)``."""
    y = np.asarray(y, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    n = y.shape[0]
    if n < 1 or x_arr.shape[0] != n:
        raise ValueError("need n >= 1 inputs matching the outputs")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if R is not None and np.any(np.abs(y) > R):
        raise ValueError("outputs exceed the bound R")
    K = kernel(x_arr, x_arr)
    alpha = _spectral_apply(filt, lam, K / n, y)
    return KernelModel(kernel, x_arr.copy(), alpha, float(lam), filt)


def landweber_iterate(K_over_n: np.ndarray, y: np.ndarray, steps: int) -> np.ndarray:
    """Explicit residual iteration ``alpha <- alpha + (y - (K/n) alpha)`` from 0."""
    alpha = np.zeros_like(y, dtype=float)
    for _ in range(steps):
        alpha = alpha + (y - K_over_n @ alpha)
    return alpha


# ------------------------------------------------------- effective dimension


@dataclass(frozen=True)
class EmpiricalSpectrum:
    eigenvalues: tuple[float, ...]


@dataclass(frozen=True)
class PowerLawSpectrum:
    """``zeta_j = beta * j^(-b)`` for ``j >= 1``."""

    b: float
    beta: float = 1.0

    def __post_init__(self):
        if self.b <= 1:
            raise ValueError("need b > 1 for a summable spectrum")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def effective_dimension(spectrum, lam: float) -> float:
    """``N(lam) = sum_j zeta_j / (zeta_j + lam)``.

    Power-law series are summed directly up to
    ``J = max(1000, 50 (beta/lam)^(1/b))`` and the remainder is added as
    ``int_J^inf g - g(J)/2`` (Euler-Maclaurin, integral in closed form), whose error is below
    ``|g'(J)|/12``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if isinstance(spectrum, EmpiricalSpectrum):
        z = np.asarray(spectrum.eigenvalues, dtype=float)
        return float(np.sum(z / (z + lam)))
    if not isinstance(spectrum, PowerLawSpectrum):
        raise TypeError("unknown spectrum type")
    b, beta = spectrum.b, spectrum.beta
    ratio = lam / beta
    J = int(min(max(1000, math.ceil(50 * ratio ** (-1 / b))), 20_000_000))
    j = np.arange(1, J + 1, dtype=float)
    head = float(np.sum(1.0 / (1.0 + ratio * j**b)))

    def g(u):
        return 1.0 / (1.0 + ratio * u**b)

    # int_J^inf g = J^(1-b) / (ratio (b-1)) 2F1(1, c; c+1; -1/(ratio J^b)), c = (b-1)/b
    c = (b - 1) / b
    z = -1.0 / (ratio * J**b)
    tail_int = J ** (1 - b) / (ratio * (b - 1)) * special.hyp2f1(1.0, c, c + 1.0, z)
    return head + float(tail_int) - 0.5 * g(J)


def powerlaw_envelope_constant(b: float, beta: float) -> float:
    """``C`` with ``N(lam) <= C lam^(-1/b)`` for the power-law spectrum.

    The summand is decreasing in ``j``, so the series is below
    ``int_0^inf du / (1 + (lam/beta) u^b) = (beta/lam)^(1/b) (pi/b) / sin(pi/b)``.
    """
    PowerLawSpectrum(b, beta)
    return beta ** (1 / b) * (math.pi / b) / math.sin(math.pi / b)


# ------------------------------------------------- effective sample sizes


def _clamp(value: float, n: int) -> int:
    if not math.isfinite(value):
        return n
    return int(min(max(math.floor(value), 1), n))


def _exp_ess(n: int, rate: MixingRate, scale: float) -> int:
    arg = n * scale * rate.chi * rate.theta
    lg = max(1.0, math.log(arg)) if arg > 0 else 1.0
    return _clamp(n * rate.theta / (2 * lg ** (1 / rate.gamma)), n)


def _poly_ess(n: int, rate: MixingRate, numerator: float, denom: float) -> int:
    g = rate.gamma
    if denom * rate.rho == 0:
        return n
    return _clamp((numerator / (denom * rate.rho)) ** (2 / (2 * g + 1)) * (n / 2) ** (2 * g / (2 * g + 1)), n)


def table1_sample_sizes(which: str, n: int, rate: MixingRate, K_kernel: float, R: float, D: float,
                        Sigma: float, lam: float | None = None, Nlam: float | None = None) -> int:
    """Effective sample sizes ``ell1..ell4`` for the kernel deviation bounds.

    ``C = 3 max(1, K R, K D)``.  Exponential rates:
    ``ell1 = ell2 = floor(n theta / (2 (1 v log(n C chi theta / (2R)))^(1/gamma)))`` and
    ``ell3 = ell4 = floor(n theta / (2 (1 v log(n K theta chi))^(1/gamma)))``.
    Polynomial rates: ``floor(a^(2/(2 gamma+1)) (n/2)^(2 gamma/(2 gamma+1)))`` with
    ``a = Sigma/(C rho)``, ``Sigma sqrt(lam N)/(C rho)``, ``sqrt(lam N)/(2 K rho)``
    and ``1/(K rho)`` respectively.  Results are clamped to ``[1, n]``.
    """
    if which not in ("ell1", "ell2", "ell3", "ell4"):
        raise ValueError("which must be one of ell1..ell4")
    if n < 1:
        raise ValueError("n must be positive")
    C = 3 * max(1.0, K_kernel * R, K_kernel * D)
    if rate.kind is RateKind.EXPONENTIAL:
        if which in ("ell1", "ell2"):
            return _exp_ess(n, rate, C / (2 * R))
        return _exp_ess(n, rate, K_kernel)
    if rate.kind is not RateKind.POLYNOMIAL:
        raise ValueError("effective sample sizes need an exponential or polynomial rate")
    if which in ("ell2", "ell3") and (lam is None or Nlam is None):
        raise ValueError(f"{which} needs lambda and N(lambda) for polynomial rates")
    if which == "ell1":
        return _poly_ess(n, rate, Sigma, C)
    if which == "ell2":
        return _poly_ess(n, rate, Sigma * math.sqrt(lam * Nlam), C)
    if which == "ell3":
        return _poly_ess(n, rate, math.sqrt(lam * Nlam), 2 * K_kernel)
    return _poly_ess(n, rate, 1.0, K_kernel)


# ------------------------------------------------ deviation diagnostics


@dataclass(frozen=True)
class Lemma41Report:
    """Empirical operator deviations in feature coordinates and their levels.

    ``empirical[2]`` uses ``(T + lam)^(-1/2)``; ``third_full_inverse`` is the
    same quantity with ``(T + lam)^(-1)``.  Operator quantities are
    Hilbert-Schmidt norms; ``*_op`` fields hold operator norms.
    """

    empirical: tuple[float, float, float, float]
    levels: tuple[float, float, float, float]
    ells: tuple[int, int, int, int]
    third_full_inverse: float
    third_op: float
    fourth_op: float
    Nlam: float

    @property
    def holds(self) -> tuple[bool, ...]:
        return tuple(e <= lv for e, lv in zip(self.empirical, self.levels))


def _psd_power(diag_or_mat: np.ndarray, lam: float, power: float) -> np.ndarray:
    T = np.asarray(diag_or_mat, dtype=float)
    if T.ndim == 1:
        return np.diag((T + lam) ** power)
    w, V = np.linalg.eigh(0.5 * (T + T.T))
    return (V * (np.clip(w, 0, None) + lam) ** power) @ V.T


def _as_matrix(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    return np.diag(T) if T.ndim == 1 else T


def lemma41_deviations(setup, x, y, lam: float, rate: MixingRate, eta: float = 0.05) -> Lemma41Report:
    """Empirical deviations of the covariance and cross-covariance operators.

    ``setup`` supplies ``features(x)`` (rows ``Phi(x_i)`` in coordinates where
    the RKHS norm is Euclidean), ``T`` (reference covariance, vector of
    eigenvalues or matrix), ``f_coords``, ``K_bound``, ``R``, ``D`` and
    ``Sigma``.
    """
    Phi = setup.features(x)
    y = np.asarray(y, dtype=float)
    n = Phi.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    T = _as_matrix(setup.T)
    Tx = Phi.T @ Phi / n
    v = Tx @ setup.f_coords - Phi.T @ y / n
    half = _psd_power(setup.T, lam, -0.5)
    full = _psd_power(setup.T, lam, -1.0)
    diff = T - Tx
    e1 = float(np.linalg.norm(v))
    e2 = float(np.linalg.norm(half @ v))
    e3 = float(np.linalg.norm(half @ diff))
    e4 = float(np.linalg.norm(diff))
    Nlam = float(np.trace(full @ T))
    kw = dict(n=n, rate=rate, K_kernel=setup.K_bound, R=setup.R, D=setup.D, Sigma=setup.Sigma,
              lam=lam, Nlam=Nlam)
    ells = tuple(table1_sample_sizes(w, **kw) for w in ("ell1", "ell2", "ell3", "ell4"))
    L = math.log(2 / eta)
    l1, l2, l3, l4 = ells
    levels = (
        21 * L * (setup.Sigma / math.sqrt(l1) + 2 * setup.R / l1),
        21 * L * (setup.Sigma * math.sqrt(Nlam) / math.sqrt(l2) + 2 * setup.R / (math.sqrt(lam) * l2)),
        21 * L * (math.sqrt(Nlam) / math.sqrt(l3) + 2 / (math.sqrt(lam) * l3)),
        42 * L / math.sqrt(l4),
    )
    return Lemma41Report(
        (e1, e2, e3, e4), levels, ells,
        third_full_inverse=float(np.linalg.norm(full @ diff)),
        third_op=float(np.linalg.norm(half @ diff, 2)),
        fourth_op=float(np.linalg.norm(diff, 2)),
        Nlam=Nlam,
    )


@dataclass(frozen=True)
class RatioCheck:
    ratio: float
    below_two: bool
    hypothesis_holds: bool | None
    Nlam: float


def ratio_operator_check(Tx, lam: float, reference_T, ell_prime: int | None = None,
                         eta: float = 0.05) -> RatioCheck:
    """Operator norm of ``(T_x + lam)^(-1) (T + lam)``.

    When ``ell_prime`` is given the sufficient sample-size condition
    ``sqrt(ell' lam) >= 50 log(2/eta) sqrt(max(N(lam), 1))`` is evaluated
    and reported.
    """
    T = _as_matrix(reference_T)
    Tx = _as_matrix(Tx)
    if T.shape != Tx.shape:
        raise ValueError("operators must have the same shape")
    eye = np.eye(T.shape[0])
    M = np.linalg.solve(Tx + lam * eye, T + lam * eye)
    ratio = float(np.linalg.norm(M, 2))
    Nlam = float(np.trace(np.linalg.solve(T + lam * eye, T)))
    hyp = None
    if ell_prime is not None:
        hyp = bool(math.sqrt(ell_prime * lam) >= 50 * math.log(2 / eta) * math.sqrt(max(Nlam, 1.0)))
    return RatioCheck(ratio, ratio <= 2.0, hyp, Nlam)


# ------------------------------------------------------------ rate analysis


@dataclass(frozen=True)
class SourceCondition:
    """Smoothness ``f = T^r g`` with ``|g| <= D``, spectrum ``zeta_j <= beta j^(-b)``,
    outputs bounded by ``R`` and conditional variance at most ``Sigma^2``."""

    r: float
    D: float
    b: float
    beta: float
    R: float
    Sigma: float

    def __post_init__(self):
        if self.r <= 0 or self.D <= 0 or self.beta <= 0 or self.R <= 0 or self.Sigma <= 0:
            raise ValueError("r, D, beta, R and Sigma must be positive")
        if self.b <= 1:
            raise ValueError("need b > 1")

    def check_normalization(self) -> None:
        if not self.D >= self.R >= 1:
            raise ValueError("rate schedules assume D >= R >= 1")


class Regime(str, Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class Schedule:
    lam: float
    ell_prime: int


def rate_exponent(regime, b: float, r: float, s: float, gamma: float = 1.0) -> float:
    """Decay exponent of the error bound.

    Exponential mixing: ``2b(r+s)/(2br+b+1)`` in ``1/sqrt(ell'_g)``.
    Polynomial mixing: ``b(r+s)/(2br+b+1+b(r+1)/gamma)`` in ``1/n``.
    """
    regime = Regime(regime)
    if regime is Regime.EXPONENTIAL:
        return 2 * b * (r + s) / (2 * b * r + b + 1)
    return b * (r + s) / (2 * b * r + b + 1 + b * (r + 1) / gamma)


def lambda_schedule(regime, n: int, source: SourceCondition, rate: MixingRate,
                    K_kernel: float) -> Schedule:
    """Regularization parameter ``lam_n`` and the matching effective sample size."""
    regime = Regime(regime)
    source.check_normalization()
    b, r = source.b, source.r
    if regime is Regime.EXPONENTIAL:
        if rate.kind is not RateKind.EXPONENTIAL:
            raise ValueError("the exponential schedule needs an exponential rate")
        ell = _exp_ess(n, rate, 3 * K_kernel * source.D / source.R)
        lam = min((source.Sigma**2 / (source.D**2 * ell)) ** (b / (2 * b * r + b + 1)), 1.0)
        return Schedule(float(lam), ell)
    if rate.kind is not RateKind.POLYNOMIAL:
        raise ValueError("the polynomial schedule needs a polynomial rate")
    g = rate.gamma
    lam = float(n) ** (-b / (2 * b * r + b + 1 + b * (r + 1) / g))
    N = effective_dimension(PowerLawSpectrum(b, source.beta), lam)
    ell = _clamp((lam * N) ** (2 / (2 * g + 1)) * (n / 2) ** (2 * g / (2 * g + 1)), n)
    return Schedule(float(lam), ell)


@dataclass(frozen=True)
class Lemma43Result:
    value: float
    ell0: float
    feasible: bool
    Nlam: float
    front_constant: float


def ell_zero(lam: float, Nlam: float, eta: float) -> float:
    """Minimal effective sample size ``2500 max(N, 1) log^2(8/eta) / lam``."""
    return 2500.0 / lam * max(Nlam, 1.0) * math.log(8 / eta) ** 2


def error_bound_lemma43(lam: float, ell_prime: int, source: SourceCondition, filt: FilterSpec,
                        eta: float, s: float = 0.5, Nlam: float | None = None,
                        front_constant: float = 1.0) -> Lemma43Result:
    """``C log(8/eta) lam^s (D (lam^r + 1/sqrt(l)) + R/(l lam) + sqrt(Sigma^2 N / (lam l)))``.

    ``C`` is left to the caller (default 1).  ``feasible`` reports whether
    ``ell_prime`` reaches the minimal sample size.
    """
    if filt.qualification_q < source.r + s:
        raise ValueError("the filter qualification must be at least r + s")
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if ell_prime < 1:
        raise ValueError("ell_prime must be positive")
    if Nlam is None:
        Nlam = effective_dimension(PowerLawSpectrum(source.b, source.beta), lam)
    l = float(ell_prime)
    inner = (source.D * (lam**source.r + 1 / math.sqrt(l)) + source.R / (l * lam)
             + math.sqrt(source.Sigma**2 * Nlam / (lam * l)))
    value = front_constant * math.log(8 / eta) * lam**s * inner
    l0 = ell_zero(lam, Nlam, eta)
    return Lemma43Result(value, l0, bool(l >= l0), float(Nlam), front_constant)


# ------------------------------------------------------------------- data io


def save_dataset_csv(path, x, y) -> None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("datasets are univariate: x and y of equal length")
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for a, b in zip(x, y):
            w.writerow([repr(float(a)), repr(float(b))])


def load_dataset_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "y"]:
            raise ValueError("dataset CSV must have header 'x,y'")
        rows = [(float(r["x"]), float(r["y"])) for r in reader]
    arr = np.asarray(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]
