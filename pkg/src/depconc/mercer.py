"""A regression model with a known covariance operator.

Inputs are uniform on ``[0, 1]`` and the kernel is a finite Mercer expansion
``k(x, z) = sum_{j<=J} zeta_j e_j(x) e_j(z)`` with ``e_1 = 1``,
``e_j(x) = sqrt(2) cos(pi (j-1) x)`` and ``zeta_j = beta j^(-b)``.  In the
coordinates ``w`` of ``f = sum_j w_j sqrt(zeta_j) e_j`` the RKHS norm is
Euclidean, the covariance operator is ``diag(zeta)`` and the feature map is
``Phi(x)_j = sqrt(zeta_j) e_j(x)``.  Every error norm is therefore exact.

The inputs form a stationary Markov chain with an exactly uniform marginal:
``x_t = (x_{t-1} + d_t) / m`` with digits ``d_t`` uniform on ``{0..m-1}``.
Conditionally on the past, ``x_{t+k}`` is uniform on a grid of mesh ``m^-k``
shifted by ``x_t m^-k``, so its Wasserstein distance to the uniform law is at
most ``m^-k``.  For ``m = 3`` this gives ``tau(k) <= exp(-k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .mixing import MixingRate
from .spectral import FilterSpec, SourceCondition, _filter_values

__all__ = ["MercerKernel", "MercerSetup", "digit_chain"]


def _basis(x: np.ndarray, J: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    j = np.arange(J)
    E = math.sqrt(2.0) * np.cos(math.pi * np.outer(x, j))
    E[:, 0] = 1.0
    return E


def normalized_beta(b: float, J: int) -> float:
    """Largest ``beta`` with ``sup_x k(x, x) = beta (1 + 2 sum_{j=2}^J j^-b) <= 1``."""
    j = np.arange(2, J + 1, dtype=float)
    return 1.0 / (1.0 + 2.0 * np.sum(j**-b))


@dataclass(frozen=True)
class MercerKernel:
    b: float = 2.0
    beta: float | None = None
    J: int = 64

    def __post_init__(self):
        if self.b <= 1 or self.J < 1:
            raise ValueError("need b > 1 and J >= 1")
        if self.beta is None:
            object.__setattr__(self, "beta", normalized_beta(self.b, self.J))
        elif self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def zeta(self) -> np.ndarray:
        return self.beta * np.arange(1, self.J + 1, dtype=float) ** -self.b

    def features(self, x) -> np.ndarray:
        return _basis(x, self.J) * np.sqrt(self.zeta)

    def __call__(self, x, z) -> np.ndarray:
        return self.features(x) @ self.features(z).T

    def lipschitz_bound(self) -> float:
        """``K`` with ``|k_x - k_z| <= K |x - z|`` in the RKHS norm.

        ``|d/dx Phi(x)|^2 = sum_j zeta_j 2 pi^2 (j-1)^2 sin^2(pi (j-1) x)``,
        bounded by dropping the sines.
        """
        j = np.arange(self.J, dtype=float)
        return float(math.sqrt(np.sum(self.zeta * 2 * math.pi**2 * j**2)))

    def to_dict(self) -> dict:
        return {"type": "mercer", "b": self.b, "beta": self.beta, "J": self.J}


def digit_chain(n: int, rng: np.random.Generator, base: int = 3) -> np.ndarray:
    """Stationary chain ``x_t = (x_{t-1} + d_t) / base`` started from the uniform law."""
    if base < 2:
        raise ValueError("base must be at least 2")
    x0 = rng.uniform()
    digits = rng.integers(0, base, size=n).astype(float)
    out, _ = lfilter([1.0 / base], [1.0, -1.0 / base], digits, zi=[x0 / base])
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class MercerSetup:
    """Synthetic model: regression function ``f = T^r g`` with ``g = D sqrt(zeta_1) e_1``
    (unit RKHS norm direction), uniform noise of variance ``Sigma^2``.

    Outputs are clipped to ``[-R, R]``; with the defaults clipping never
    happens (``|f| + sqrt(3) Sigma < R``).
    """

    b: float = 2.0
    J: int = 64
    r: float = 0.5
    D: float = 1.0
    R: float = 1.0
    Sigma: float = 0.3
    base: int = 3
    beta: float | None = None

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", normalized_beta(self.b, self.J))

    @property
    def kernel(self) -> MercerKernel:
        return MercerKernel(self.b, self.beta, self.J)

    @property
    def zeta(self) -> np.ndarray:
        return self.kernel.zeta

    @property
    def T(self) -> np.ndarray:
        return self.zeta

    @property
    def K_bound(self) -> float:
        return self.kernel.lipschitz_bound()

    @property
    def f_coords(self) -> np.ndarray:
        w = np.zeros(self.J)
        w[0] = self.D * self.zeta[0] ** self.r
        return w

    @property
    def source(self) -> SourceCondition:
        return SourceCondition(self.r, self.D, self.b, self.beta, self.R, self.Sigma)

    def features(self, x) -> np.ndarray:
        return self.kernel.features(x)

    def f_nu(self, x) -> np.ndarray:
        return self.features(x) @ self.f_coords

    def exponential_rate(self) -> MixingRate:
        """``tau(k) <= base^-k``, written as ``chi exp(-(theta k)^gamma)``."""
        return MixingRate.exponential(1.0, math.log(self.base), 1.0)

    def polynomial_rate(self, gamma: float) -> MixingRate:
        """Smallest ``rho`` with ``base^-k <= rho k^-gamma`` for all ``k >= 1``."""
        k = np.arange(1, 200, dtype=float)
        rho = float(np.max(k**gamma * float(self.base) ** -k))
        return MixingRate.polynomial(rho, gamma)

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float]:
        """Inputs, clipped outputs and the fraction of clipped outputs."""
        x = digit_chain(n, rng, self.base)
        half = math.sqrt(3.0) * self.Sigma
        y = self.f_nu(x) + rng.uniform(-half, half, size=n)
        clipped = float(np.mean(np.abs(y) > self.R))
        return x, np.clip(y, -self.R, self.R), clipped

    def fit_coords(self, x, y, lam: float, filt: FilterSpec) -> np.ndarray:
        """Coordinates of ``F_lam(T_x) S_x^* y``, computed in the J-dimensional feature space."""
        Phi = self.features(x)
        n = Phi.shape[0]
        Tx = Phi.T @ Phi / n
        evals, U = np.linalg.eigh(0.5 * (Tx + Tx.T))
        evals = np.clip(evals, 0.0, 1.0)
        rhs = Phi.T @ np.asarray(y, dtype=float) / n
        return U @ (_filter_values(filt, lam, evals) * (U.T @ rhs))

    def weighted_error(self, w, s: float) -> float:
        """``|T^s (f_nu - f_w)|`` in the RKHS norm."""
        return float(np.linalg.norm(self.zeta**s * (self.f_coords - np.asarray(w))))
