"""Norm smoothness: closed-form Gateaux derivatives and their constants.

Three spaces are covered: a Euclidean truncation of a Hilbert space, ``L_p``
over a finite weighted grid (a discrete probability space) and real symmetric
matrices under the Schatten ``p``-norm.  Functions accept a single element or
a stack of elements along a leading batch axis.

For the Schatten norm the derivatives come from the spectral calculus with
``w(x) = sign(x) |x|^(p-1)``::

    d/dt |X + tH|_p        = <w(X), H>_F / |X|_p^(p-1)
    d^2/dt^2 |X + tH|_p    = <w1(L) o H~, H~>_F / |X|_p^(p-1)
                             - (p-1) <w(X), H>_F^2 / |X|_p^(2p-1)

where ``X = U L U^T``, ``H~ = U^T H U`` and ``w1`` is the divided-difference
matrix of ``w`` on the eigenvalues.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

__all__ = [
    "SpaceKind",
    "NormSpace",
    "SmoothnessCert",
    "RankDeficientWarning",
    "norm",
    "gateaux_first",
    "gateaux_second",
    "fd_oracle",
    "preset_constants",
    "certify_constants",
    "random_elements",
]

TIE_TOL = 1e-10


class RankDeficientWarning(UserWarning):
    """A Schatten derivative was evaluated at a (numerically) singular matrix."""


class SpaceKind(str, Enum):
    HILBERT = "hilbert"
    LP = "lp"
    SCHATTEN = "schatten"


@dataclass(frozen=True)
class NormSpace:
    kind: SpaceKind
    dim: int
    p: float = 2.0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = SpaceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if kind is not SpaceKind.HILBERT and self.p < 2:
            raise ValueError("p must be >= 2")
        if kind is SpaceKind.LP:
            w = np.full(self.dim, 1.0 / self.dim) if self.weights is None else np.asarray(self.weights, float)
            if w.shape != (self.dim,) or np.any(w <= 0):
                raise ValueError("weights must be dim positive numbers")
            object.__setattr__(self, "weights", tuple(w / w.sum()))

    @classmethod
    def hilbert(cls, dim: int) -> "NormSpace":
        return cls(SpaceKind.HILBERT, dim)

    @classmethod
    def lp(cls, p: float, dim: int, weights=None) -> "NormSpace":
        return cls(SpaceKind.LP, dim, p, None if weights is None else tuple(weights))

    @classmethod
    def schatten(cls, p: float, dim: int) -> "NormSpace":
        return cls(SpaceKind.SCHATTEN, dim, p)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim, self.dim) if self.kind is SpaceKind.SCHATTEN else (self.dim,)


@dataclass(frozen=True)
class SmoothnessCert:
    A1: float
    A2: float
    max_ratio_first: float
    max_ratio_second: float
    samples: int
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return (self.max_ratio_first <= self.A1 * (1 + self.tol)
                and self.max_ratio_second <= self.A2 * (1 + self.tol))

    def to_json(self) -> str:
        return json.dumps(dict(asdict(self), passed=self.passed), sort_keys=True)


def _as_batch(space: NormSpace, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    nd = len(space.shape)
    if x.shape[-nd:] != space.shape:
        raise ValueError(f"element shape {x.shape} does not match space shape {space.shape}")
    single = x.ndim == nd
    return (x[None] if single else x), single


def _check_symmetric(X: np.ndarray) -> None:
    asym = np.abs(X - np.swapaxes(X, -1, -2)).max(initial=0.0)
    if asym > 1e-12 * max(1.0, np.abs(X).max(initial=0.0)):
        raise ValueError("Schatten elements must be symmetric")


def _out(v: np.ndarray, single: bool):
    return float(v[0]) if single else v


def _lp_norm(f, w, p):
    return (np.abs(f) ** p @ w) ** (1.0 / p)


def norm(space: NormSpace, x):
    """Norm of an element (or of each element in a stack)."""
    x, single = _as_batch(space, x)
    if space.kind is SpaceKind.HILBERT:
        v = np.linalg.norm(x, axis=-1)
    elif space.kind is SpaceKind.LP:
        v = _lp_norm(x, np.asarray(space.weights), space.p)
    else:
        _check_symmetric(x)
        lam = np.linalg.eigvalsh(x)
        v = np.sum(np.abs(lam) ** space.p, axis=-1) ** (1.0 / space.p)
    return _out(v, single)


def _nonzero(nx: np.ndarray) -> None:
    if np.any(nx == 0):
        raise ValueError("the norm is not differentiable at the origin")


def _w(lam, p):
    return np.sign(lam) * np.abs(lam) ** (p - 1)


def _schatten_parts(space: NormSpace, X, H):
    _check_symmetric(X)
    _check_symmetric(H)
    p = space.p
    lam, U = np.linalg.eigh(X)
    nx = np.sum(np.abs(lam) ** p, axis=-1) ** (1.0 / p)
    _nonzero(nx)
    spec_norm = np.abs(lam).max(axis=-1)
    small = np.abs(lam).min(axis=-1) <= TIE_TOL * spec_norm
    if np.any(small):
        warnings.warn(
            "closed form evaluated at a rank-deficient matrix; shifted by 1e-12 |X| I",
            RankDeficientWarning,
            stacklevel=3,
        )
        X = X + (1e-12 * spec_norm[:, None, None]) * np.eye(space.dim) * small[:, None, None]
        lam, U = np.linalg.eigh(X)
        nx = np.sum(np.abs(lam) ** p, axis=-1) ** (1.0 / p)
    Ht = np.swapaxes(U, -1, -2) @ H @ U
    return lam, U, Ht, nx


def gateaux_first(space: NormSpace, x, h):
    """Closed-form ``d/dt |x + t h|`` at ``t = 0`` (``x != 0``)."""
    x, single = _as_batch(space, x)
    h, _ = _as_batch(space, h)
    if space.kind is SpaceKind.HILBERT:
        nx = np.linalg.norm(x, axis=-1)
        _nonzero(nx)
        v = np.sum(x * h, axis=-1) / nx
    elif space.kind is SpaceKind.LP:
        p, w = space.p, np.asarray(space.weights)
        nx = _lp_norm(x, w, p)
        _nonzero(nx)
        v = nx ** (1 - p) * ((np.abs(x) ** (p - 2) * x * h) @ w)
    else:
        lam, U, Ht, nx = _schatten_parts(space, x, h)
        # <w(X), H>_F = sum_i w(lam_i) Ht_ii
        v = np.sum(_w(lam, space.p) * np.diagonal(Ht, axis1=-2, axis2=-1), axis=-1) / nx ** (space.p - 1)
    return _out(v, single)


def _divided_difference(lam, p, spec_norm):
    li = lam[..., :, None]
    lj = lam[..., None, :]
    diff = li - lj
    tie = np.abs(diff) <= TIE_TOL * spec_norm[..., None, None]
    safe = np.where(tie, 1.0, diff)
    dd = (_w(li, p) - _w(lj, p)) / safe
    deriv = (p - 1) * np.abs(0.5 * (li + lj)) ** (p - 2)
    return np.where(tie, deriv, dd)


def gateaux_second(space: NormSpace, x, h):
    """Closed-form ``d^2/dt^2 |x + t h|`` at ``t = 0`` (``x != 0``)."""
    x, single = _as_batch(space, x)
    h, _ = _as_batch(space, h)
    if space.kind is SpaceKind.HILBERT:
        nx = np.linalg.norm(x, axis=-1)
        _nonzero(nx)
        ip = np.sum(x * h, axis=-1)
        v = (np.sum(h * h, axis=-1) - ip**2 / nx**2) / nx
    elif space.kind is SpaceKind.LP:
        p, w = space.p, np.asarray(space.weights)
        nx = _lp_norm(x, w, p)
        _nonzero(nx)
        ax = np.abs(x) ** (p - 2)
        quad = (ax * h * h) @ w
        lin = (ax * x * h) @ w
        v = (p - 1) * nx ** (1 - 2 * p) * (nx**p * quad - lin**2)
    else:
        p = space.p
        lam, U, Ht, nx = _schatten_parts(space, x, h)
        spec_norm = np.abs(lam).max(axis=-1)
        w1 = _divided_difference(lam, p, spec_norm)
        first = np.sum(w1 * Ht * Ht, axis=(-2, -1)) / nx ** (p - 1)
        lin = np.sum(_w(lam, p) * np.diagonal(Ht, axis1=-2, axis2=-1), axis=-1)
        v = first - (p - 1) * lin**2 / nx ** (2 * p - 1)
    return _out(v, single)


def fd_oracle(space: NormSpace, x, h, order: int, step: float = 1e-4):
    """Central finite difference of ``t -> |x + t h|`` at 0 (order 1 or 2)."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x, single = _as_batch(space, x)
    h, _ = _as_batch(space, h)
    if not step > 0:
        raise ValueError("step must be positive")
    hmax = np.abs(h).max(initial=0.0)
    # the perturbation must survive rounding, otherwise the quotient is noise
    if hmax > 0 and step * hmax <= np.finfo(float).eps * np.abs(x).max(initial=0.0):
        raise ValueError("step is degenerate at this scale")
    plus = np.asarray(norm(space, x + step * h))
    minus = np.asarray(norm(space, x - step * h))
    if order == 1:
        v = (plus - minus) / (2 * step)
    else:
        v = (plus - 2 * np.asarray(norm(space, x)) + minus) / step**2
    v = np.atleast_1d(v)
    return _out(v, single)


def preset_constants(space: NormSpace) -> tuple[float, float]:
    """``(A1, A2)``: ``(1, 1)`` Hilbert, ``(1, p-1)`` L_p, ``(1, 3(p-1))`` Schatten."""
    if space.kind is SpaceKind.HILBERT:
        return 1.0, 1.0
    if space.kind is SpaceKind.LP:
        return 1.0, space.p - 1
    return 1.0, 3.0 * (space.p - 1)


def random_elements(space: NormSpace, size: int, rng: np.random.Generator) -> np.ndarray:
    """Standard Gaussian entries; matrices are symmetrized."""
    g = rng.standard_normal((size,) + space.shape)
    if space.kind is SpaceKind.SCHATTEN:
        g = (g + np.swapaxes(g, -1, -2)) / np.sqrt(2.0)
    return g


def certify_constants(space: NormSpace, samples: int, seed: int = 0, tol: float = 1e-9,
                      chunk: int = 2048) -> SmoothnessCert:
    """Sampled maxima of ``|d_h|x|| / |h|`` and ``|d_hh|x|| |x| / |h|^2``
    compared with the preset constants."""
    if samples < 1:
        raise ValueError("samples must be positive")
    A1, A2 = preset_constants(space)
    rng = np.random.default_rng(seed)
    r1 = r2 = 0.0
    done = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        while done < samples:
            m = min(chunk, samples - done)
            x = random_elements(space, m, rng)
            h = random_elements(space, m, rng)
            nx = norm(space, x)
            nh = norm(space, h)
            d1 = gateaux_first(space, x, h)
            d2 = gateaux_second(space, x, h)
            r1 = max(r1, float(np.max(np.abs(d1) / nh)))
            r2 = max(r2, float(np.max(np.abs(d2) * nx / nh**2)))
            done += m
    return SmoothnessCert(A1, A2, r1, r2, samples, tol)
