"""Mixing-rate models, seminorm constants and exact oracles for finite chains.

The oracles compute the tau and phi-tilde coefficients of a stationary
real-valued Markov chain exactly.  For the Lipschitz class the supremum over
test functions is the Wasserstein-1 distance (Kantorovich-Rubinstein duality),
for the bounded-variation class it is the Kolmogorov distance.  On the real
line both reduce to sums over the CDF difference, so no transport solver is
involved.

Only the current state is conditioned on; by the Markov property this equals
conditioning on the whole past.  The oracles are therefore restricted to
chains.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "RateKind",
    "MixingRate",
    "ClassId",
    "SeminormConstants",
    "eval_rate",
    "ar1_tau_bound",
    "stationary_distribution",
    "chain_tau_exact",
    "chain_phitilde_exact",
    "chain_tau_profile",
    "seminorm_constants",
    "load_rate_csv",
    "save_rate_csv",
]

_DENSE_STATE_LIMIT = 64


class RateKind(str, Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class MixingRate:
    """Decay model for the mixing coefficients ``Phi(k)``.

    Exponential: ``chi * exp(-(theta * k) ** gamma)``.
    Polynomial: ``rho * k ** (-gamma)``.
    Tabulated: explicit values for lags ``1..len(table)``.

    Use the ``exponential``, ``polynomial`` and ``tabulated`` constructors
    rather than filling the fields by hand.
    """

    kind: RateKind
    chi: float = 0.0
    theta: float = 1.0
    gamma: float = 1.0
    rho: float = 0.0
    table: tuple[float, ...] = field(default=())

    def __post_init__(self):
        kind = RateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is RateKind.EXPONENTIAL:
            if self.chi < 0 or self.theta <= 0 or self.gamma <= 0:
                raise ValueError("exponential rate needs chi >= 0, theta > 0, gamma > 0")
        elif kind is RateKind.POLYNOMIAL:
            if self.rho < 0 or self.gamma <= 0:
                raise ValueError("polynomial rate needs rho >= 0, gamma > 0")
        else:
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 1 or tab.size == 0:
                raise ValueError("tabulated rate needs a non-empty 1-d table")
            if np.any(tab < 0) or np.any(np.diff(tab) > 0):
                raise ValueError("tabulated rate must be nonnegative and nonincreasing")
            object.__setattr__(self, "table", tuple(float(v) for v in tab))

    @classmethod
    def exponential(cls, chi: float, theta: float, gamma: float = 1.0) -> "MixingRate":
        return cls(RateKind.EXPONENTIAL, chi=chi, theta=theta, gamma=gamma)

    @classmethod
    def polynomial(cls, rho: float, gamma: float) -> "MixingRate":
        return cls(RateKind.POLYNOMIAL, rho=rho, gamma=gamma)

    @classmethod
    def tabulated(cls, values) -> "MixingRate":
        return cls(RateKind.TABULATED, table=tuple(values))

    @classmethod
    def independent(cls) -> "MixingRate":
        """Identically zero coefficients (i.i.d. data)."""
        return cls(RateKind.EXPONENTIAL, chi=0.0, theta=1.0, gamma=1.0)

    @property
    def max_lag(self) -> float:
        if self.kind is RateKind.TABULATED:
            return len(self.table)
        return math.inf

    def __call__(self, k):
        return eval_rate(self, k)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is RateKind.EXPONENTIAL:
            d.update(chi=self.chi, theta=self.theta, gamma=self.gamma)
        elif self.kind is RateKind.POLYNOMIAL:
            d.update(rho=self.rho, gamma=self.gamma)
        else:
            d["table"] = list(self.table)
        return d


def eval_rate(rate: MixingRate, k):
    """Evaluate ``Phi(k)`` for a scalar or array of lags ``k >= 1``.

    Non-integer lags use the continuous extension of the parametric models;
    a tabulated rate is extended as a step function (``Phi(floor(t))``),
    which keeps it nonincreasing.  Tabulated rates are never extrapolated.
    """
    t = np.asarray(k, dtype=float)
    if np.any(t < 1):
        raise ValueError("mixing coefficients are defined for lags >= 1")
    if rate.kind is RateKind.EXPONENTIAL:
        out = rate.chi * np.exp(-((rate.theta * t) ** rate.gamma))
    elif rate.kind is RateKind.POLYNOMIAL:
        out = rate.rho * t ** (-rate.gamma)
    else:
        idx = np.floor(t).astype(np.int64)
        if np.any(idx > len(rate.table)):
            raise ValueError(
                f"tabulated rate only covers lags 1..{len(rate.table)}; got {int(idx.max())}"
            )
        out = np.asarray(rate.table)[idx - 1]
    if np.ndim(out) == 0:
        return float(out)
    return out


def ar1_tau_bound(rho_norm: float, sup_norm: float, s: int, conservative: bool = True) -> float:
    """Geometric tau bound for a contractive linear AR(1).

    Returns ``rho_norm**s * sup_norm``, doubled when ``conservative``.  The
    factor 2 comes from bounding the conditional and unconditional terms
    separately; it is kept by default because it is the one the derivation
    actually supports.
    """
    if not 0 <= rho_norm < 1:
        raise ValueError("rho_norm must lie in [0, 1)")
    if s < 1:
        raise ValueError("lag s must be >= 1")
    value = rho_norm**s * sup_norm
    return 2.0 * value if conservative else value


def _validate_chain(states, P) -> tuple[np.ndarray, np.ndarray]:
    states = np.asarray(states, dtype=float)
    P = np.asarray(P, dtype=float)
    m = states.size
    if states.ndim != 1 or m < 1:
        raise ValueError("states must be a non-empty 1-d vector")
    if np.any(np.diff(states) <= 0):
        raise ValueError("states must be strictly increasing")
    if P.shape != (m, m):
        raise ValueError(f"transition matrix must be {m}x{m}")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("transition matrix must be row-stochastic")
    return states, P


def stationary_distribution(P) -> np.ndarray:
    """Unique stationary law of an ergodic (irreducible, aperiodic) chain.

    Dense eigensolve up to 64 states, power iteration above.  Raises
    ``ValueError`` when the law is not unique or the chain is periodic, since
    the mixing coefficients then do not vanish.
    """
    P = np.asarray(P, dtype=float)
    m = P.shape[0]
    if m <= _DENSE_STATE_LIMIT:
        evals, evecs = np.linalg.eig(P.T)
        on_circle = np.abs(np.abs(evals) - 1.0) < 1e-10
        if on_circle.sum() != 1:
            raise ValueError("chain has no unique stationary law or is periodic")
        pi = np.real(evecs[:, np.argmax(on_circle)])
        pi = pi / pi.sum()
    else:
        pi = np.full(m, 1.0 / m)
        for _ in range(1_000_000):
            nxt = pi @ P
            if np.abs(nxt - pi).sum() < 1e-14:
                pi = nxt
                break
            pi = nxt
        else:
            raise ValueError("power iteration did not converge; chain may be periodic or reducible")
        if np.abs(pi @ np.linalg.matrix_power(P, 2) - pi).sum() > 1e-10:
            raise ValueError("chain has no unique stationary law")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _w1(states, p, q) -> np.ndarray:
    # rows of p against q; exact W1 for laws on the sorted grid `states`
    gaps = np.diff(states)
    diff = np.cumsum(p - q, axis=-1)[..., :-1]
    return np.abs(diff) @ gaps


def _kolmogorov(p, q) -> np.ndarray:
    return np.abs(np.cumsum(p - q, axis=-1)).max(axis=-1)


def _chain_profile(states, P, kmax: int, distance) -> np.ndarray:
    states, P = _validate_chain(states, P)
    pi = stationary_distribution(P)
    support = pi > 1e-15
    out = np.empty(kmax)
    Pk = np.eye(P.shape[0])
    for k in range(kmax):
        Pk = Pk @ P
        out[k] = distance(states, Pk[support], pi).max()
    return out


def chain_tau_exact(states, P, k: int) -> float:
    """Exact tau(k) of a stationary chain on the real ``states``.

    Max over starting states of ``W1(P^k(s, .), pi)``.
    """
    if k < 1:
        raise ValueError("lag must be >= 1")
    return float(_chain_profile(states, P, k, _w1)[-1])


def chain_phitilde_exact(states, P, k: int) -> float:
    """Exact phi-tilde(k): max over starting states of the Kolmogorov distance."""
    if k < 1:
        raise ValueError("lag must be >= 1")
    return float(_chain_profile(states, P, k, lambda s, p, q: _kolmogorov(p, q))[-1])


def chain_tau_profile(states, P, kmax: int, kind: str = "tau") -> np.ndarray:
    """``[Phi(1), ..., Phi(kmax)]`` in one pass of matrix powers."""
    if kind == "tau":
        return _chain_profile(states, P, kmax, _w1)
    if kind == "phitilde":
        return _chain_profile(states, P, kmax, lambda s, p, q: _kolmogorov(p, q))
    raise ValueError(f"unknown coefficient kind {kind!r}")


class ClassId(str, Enum):
    LIPSCHITZ = "lipschitz"
    BOUNDED_VARIATION = "bv"


@dataclass(frozen=True)
class SeminormConstants:
    class_id: ClassId
    C1: float
    C2: float
    ball_radius_c: float


def seminorm_constants(class_id, ball_radius_c: float) -> SeminormConstants:
    """Constants bounding the seminorm of linear forms (C1) and of ``|x|^2`` (C2)
    on the ball of radius ``c``."""
    class_id = ClassId(class_id)
    c = float(ball_radius_c)
    if c <= 0:
        raise ValueError("ball radius must be positive")
    if class_id is ClassId.LIPSCHITZ:
        return SeminormConstants(class_id, 1.0, 2.0 * c, c)
    return SeminormConstants(class_id, 2.0 * c, 2.0 * c * c, c)


def load_rate_csv(path) -> MixingRate:
    """Read a tabulated rate from a two-column ``k,phi`` CSV.

    Lags must be exactly ``1..K`` in order.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["k", "phi"]:
            raise ValueError("rate CSV must have header 'k,phi'")
        rows = [(int(r["k"]), float(r["phi"])) for r in reader]
    lags = [k for k, _ in rows]
    if lags != list(range(1, len(rows) + 1)):
        raise ValueError("rate CSV lags must run 1..K without gaps")
    return MixingRate.tabulated([v for _, v in rows])


def save_rate_csv(rate: MixingRate, path) -> None:
    if rate.kind is not RateKind.TABULATED:
        raise ValueError("only tabulated rates have a CSV form")
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "phi"])
        for k, v in enumerate(rate.table, start=1):
            w.writerow([k, repr(v)])
