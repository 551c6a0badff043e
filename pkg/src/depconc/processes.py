"""Sample paths of weakly dependent processes.

Hilbert-valued processes live in a ``d``-dimensional coordinate truncation, so
every norm and inner product is computed exactly.  All simulators return
centered paths and record the almost-sure norm bound ``c`` with the path.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .mixing import MixingRate, stationary_distribution, chain_tau_profile

__all__ = [
    "ProcessKind",
    "ProcessSpec",
    "Trajectory",
    "LIPSCHITZ_MAPS",
    "simulate",
    "simulate_ar1",
    "simulate_ma",
    "simulate_chain",
    "lipschitz_image",
    "ar1_operator_diagonal",
    "ar1_burn_in",
    "process_constants",
    "trial_rng",
    "sample_unit_ball",
    "save_csv",
    "load_csv",
    "save_binary",
    "load_binary",
    "BINARY_MAGIC",
]

KAPPA = 0.9
BURN_IN_CAP = 1_000_000
BINARY_MAGIC = b"DEPC0001"
_BIN_HEADER = struct.Struct("<8sQQdd")


class ProcessKind(str, Enum):
    HILBERT_AR1 = "hilbert_ar1"
    HILBERT_MA = "hilbert_ma"
    FINITE_CHAIN = "finite_chain"
    LIPSCHITZ_IMAGE = "lipschitz_image"


@dataclass(frozen=True)
class ProcessSpec:
    """Configuration of a simulated process.

    Only the fields relevant to ``kind`` are used.  A ``LIPSCHITZ_IMAGE`` spec
    wraps a ``source`` spec and a map from :data:`LIPSCHITZ_MAPS`.
    """

    kind: ProcessKind
    dim: int = 16
    rho_norm: float = 0.0
    ma_order: int = 0
    ma_weights: tuple[float, ...] = (1.0,)
    chain_states: tuple[float, ...] = ()
    chain_matrix: tuple[tuple[float, ...], ...] = ()
    noise_bound: float = 1.0
    seed: int = 0
    source: "ProcessSpec | None" = None
    map_id: str = "identity"
    lip_const: float = 1.0
    map_params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        kind = ProcessKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "ma_weights", tuple(float(w) for w in self.ma_weights))
        object.__setattr__(self, "chain_states", tuple(float(s) for s in self.chain_states))
        object.__setattr__(
            self, "chain_matrix", tuple(tuple(float(v) for v in row) for row in self.chain_matrix)
        )
        if self.seed < 0:
            raise ValueError("seed must be an unsigned integer")
        if kind in (ProcessKind.HILBERT_AR1, ProcessKind.HILBERT_MA):
            if self.dim < 1:
                raise ValueError("dim must be positive")
            if not (self.noise_bound > 0 and math.isfinite(self.noise_bound)):
                raise ValueError("noise_bound must be a positive finite number")
        if kind is ProcessKind.HILBERT_AR1 and not 0 <= self.rho_norm < 1:
            raise ValueError("rho_norm must lie in [0, 1) for a contractive AR(1)")
        if kind is ProcessKind.HILBERT_MA:
            if len(self.ma_weights) == 0:
                raise ValueError("ma_weights must not be empty")
            if len(self.ma_weights) != self.ma_order + 1:
                raise ValueError("ma_weights must have length ma_order + 1")
        if kind is ProcessKind.FINITE_CHAIN:
            P = np.asarray(self.chain_matrix, dtype=float)
            m = len(self.chain_states)
            if m == 0 or P.shape != (m, m):
                raise ValueError("chain needs states and a matching square matrix")
            if np.any(np.diff(self.chain_states) <= 0):
                raise ValueError("chain_states must be strictly increasing")
            if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
                raise ValueError("chain_matrix must be row-stochastic")
        if kind is ProcessKind.LIPSCHITZ_IMAGE and self.source is None:
            raise ValueError("a Lipschitz image needs a source spec")

    @classmethod
    def ar1(cls, rho_norm: float, dim: int = 16, noise_bound: float = 1.0, seed: int = 0):
        return cls(ProcessKind.HILBERT_AR1, dim=dim, rho_norm=rho_norm, noise_bound=noise_bound, seed=seed)

    @classmethod
    def ma(cls, weights, dim: int = 16, noise_bound: float = 1.0, seed: int = 0):
        weights = tuple(weights)
        return cls(
            ProcessKind.HILBERT_MA,
            dim=dim,
            ma_order=len(weights) - 1,
            ma_weights=weights,
            noise_bound=noise_bound,
            seed=seed,
        )

    @classmethod
    def chain(cls, states, matrix, seed: int = 0):
        return cls(
            ProcessKind.FINITE_CHAIN,
            dim=1,
            chain_states=tuple(states),
            chain_matrix=tuple(tuple(r) for r in np.asarray(matrix, dtype=float)),
            seed=seed,
        )

    @property
    def output_dim(self) -> int:
        if self.kind is ProcessKind.FINITE_CHAIN:
            return 1
        if self.kind is ProcessKind.LIPSCHITZ_IMAGE:
            return _MAP_DIMS.get(self.map_id, lambda d: d)(self.source.output_dim)
        return self.dim


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A realized path; row ``i`` of ``values`` is ``X_i`` in coordinates.

    ``tau_scale`` is the factor by which the tau coefficients of this path
    may exceed those of the originally simulated process (product of the
    Lipschitz constants of all maps applied since).
    """

    values: np.ndarray
    marginal_bound_c: float
    second_moment_sigma2: float
    tau_scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        norms = np.linalg.norm(v, axis=1)
        if norms.size and norms.max() > self.marginal_bound_c + 1e-12:
            raise ValueError(
                f"path exceeds its declared a.s. bound: {norms.max()} > {self.marginal_bound_c}"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)


def trial_rng(seed: int, trial: int | None = None) -> np.random.Generator:
    """Generator for ``seed``; ``trial`` selects an independent child stream."""
    if trial is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def sample_unit_ball(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    """Uniform samples from the closed unit ball of R^dim."""
    g = rng.standard_normal((size, dim))
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    radius = rng.random((size, 1)) ** (1.0 / dim)
    return g / nrm * radius


def ar1_operator_diagonal(rho_norm: float, dim: int) -> np.ndarray:
    """Diagonal of the AR operator: ``rho_norm * KAPPA**j``, ``j = 0..dim-1``."""
    return rho_norm * KAPPA ** np.arange(dim)


def ar1_burn_in(rho_norm: float) -> int:
    if rho_norm == 0:
        return 0
    return min(math.ceil(math.log(1e-12) / math.log(rho_norm)), BURN_IN_CAP)


def _check_n(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ValueError("path length n must be positive")
    return n


def _empirical_sigma2(values: np.ndarray) -> float:
    return float(np.mean(np.sum(values**2, axis=1)))


def simulate_ar1(spec: ProcessSpec, n: int, rng: np.random.Generator | None = None) -> Trajectory:
    """Stationary path of ``X_i = rho(X_{i-1}) + xi_i`` with ball-uniform noise."""
    if spec.kind is not ProcessKind.HILBERT_AR1:
        raise ValueError("spec is not an AR(1) spec")
    n = _check_n(n)
    rng = trial_rng(spec.seed) if rng is None else rng
    burn = ar1_burn_in(spec.rho_norm)
    noise = spec.noise_bound * sample_unit_ball(rng, burn + n, spec.dim)
    diag = ar1_operator_diagonal(spec.rho_norm, spec.dim)
    path = np.empty_like(noise)
    for j, a in enumerate(diag):
        path[:, j] = lfilter([1.0], [1.0, -a], noise[:, j]) if a else noise[:, j]
    values = path[burn:]
    c = spec.noise_bound / (1.0 - spec.rho_norm)
    return Trajectory(values, c, _empirical_sigma2(values))


def simulate_ma(spec: ProcessSpec, n: int, rng: np.random.Generator | None = None) -> Trajectory:
    """Centered MA(q) path ``W_i = sum_j theta_j psi_{i-j}``."""
    if spec.kind is not ProcessKind.HILBERT_MA:
        raise ValueError("spec is not an MA spec")
    n = _check_n(n)
    rng = trial_rng(spec.seed) if rng is None else rng
    theta = np.asarray(spec.ma_weights)
    q = theta.size - 1
    noise = spec.noise_bound * sample_unit_ball(rng, n + q, spec.dim)
    values = lfilter(theta, [1.0], noise, axis=0)[q:]
    c = spec.noise_bound * float(np.abs(theta).sum())
    return Trajectory(values, c, _empirical_sigma2(values))


def simulate_chain(spec: ProcessSpec, n: int, rng: np.random.Generator | None = None) -> Trajectory:
    """Stationary chain path, centered by the stationary mean."""
    if spec.kind is not ProcessKind.FINITE_CHAIN:
        raise ValueError("spec is not a finite-chain spec")
    n = _check_n(n)
    rng = trial_rng(spec.seed) if rng is None else rng
    states = np.asarray(spec.chain_states)
    P = np.asarray(spec.chain_matrix)
    pi = stationary_distribution(P)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(n)
    idx = np.empty(n, dtype=np.int64)
    idx[0] = min(np.searchsorted(np.cumsum(pi), u[0], side="right"), len(pi) - 1)
    for i in range(1, n):
        idx[i] = np.searchsorted(cum[idx[i - 1]], u[i], side="right")
    mean = float(pi @ states)
    values = states[idx] - mean
    c = float(np.abs(states - mean).max())
    return Trajectory(values, c, _empirical_sigma2(values[:, None]), meta={"stationary_mean": mean})


# Lipschitz map catalog: name -> (function(values, lip_const, params), certified Lipschitz constant)
def _identity(v, L, params):
    return v


def _constant(v, L, params):
    return np.zeros_like(v)


def _clip(v, L, params):
    b = params.get("bound", 0.5)
    return np.clip(v, -b, b)


def _scale(v, L, params):
    return L * v


def _unit_interval(v, L, params):
    # first coordinate mapped affinely onto [0, 1] around 1/2, slope L
    return np.clip(0.5 + L * v[:, :1], 0.0, 1.0)


LIPSCHITZ_MAPS = {
    "identity": (_identity, lambda L, p: 1.0),
    "constant": (_constant, lambda L, p: 0.0),
    "clip": (_clip, lambda L, p: 1.0),
    "scale": (_scale, lambda L, p: abs(L)),
    "unit_interval": (_unit_interval, lambda L, p: abs(L)),
}
_MAP_DIMS = {"unit_interval": lambda d: 1}


def lipschitz_image(traj: Trajectory, lip_const: float, map_id: str, **params) -> Trajectory:
    """Apply a catalogued Lipschitz map row-wise to a path.

    ``lip_const`` must dominate the map's certified Lipschitz constant; the
    result's ``tau_scale`` is multiplied by it, since tau coefficients of the
    image are at most ``lip_const`` times those of the source.
    """
    if map_id not in LIPSCHITZ_MAPS:
        raise ValueError(f"unknown map_id {map_id!r}; choose from {sorted(LIPSCHITZ_MAPS)}")
    if lip_const <= 0:
        raise ValueError("lip_const must be positive")
    fn, certified = LIPSCHITZ_MAPS[map_id]
    L_map = certified(lip_const, params)
    if L_map > lip_const:
        raise ValueError(f"map {map_id!r} has Lipschitz constant {L_map} > lip_const={lip_const}")
    out = fn(traj.values, lip_const, params)
    c = traj.marginal_bound_c
    if map_id == "identity":
        pass
    elif map_id == "constant":
        c = 0.0
    elif map_id == "clip":
        c = min(c, params.get("bound", 0.5) * math.sqrt(out.shape[1]))
    elif map_id == "scale":
        c = abs(lip_const) * c
    else:
        c = 1.0
    meta = dict(traj.meta, map_id=map_id, lip_const=lip_const)
    return Trajectory(out, c, _empirical_sigma2(out), traj.tau_scale * lip_const, meta)


def simulate(spec: ProcessSpec, n: int, rng: np.random.Generator | None = None) -> Trajectory:
    """Dispatch on ``spec.kind``."""
    if spec.kind is ProcessKind.HILBERT_AR1:
        return simulate_ar1(spec, n, rng)
    if spec.kind is ProcessKind.HILBERT_MA:
        return simulate_ma(spec, n, rng)
    if spec.kind is ProcessKind.FINITE_CHAIN:
        return simulate_chain(spec, n, rng)
    rng = trial_rng(spec.seed) if rng is None else rng
    src = simulate(spec.source, n, rng)
    return lipschitz_image(src, spec.lip_const, spec.map_id, **dict(spec.map_params))


def _ball_second_moment(dim: int, radius: float) -> float:
    # E|xi|^2 for xi uniform on the d-ball of the given radius
    return radius**2 * dim / (dim + 2.0)


def process_constants(spec: ProcessSpec, n: int, conservative: bool = True):
    """Analytic ``(c, sigma2, tau_rate)`` of a preset process.

    The tau rate is what the concentration bounds consume.  For the AR(1)
    it is ``m * rho**k * c`` with ``m = 2`` when ``conservative``; for MA(q)
    the process is (q+1)-dependent and ``tau(k) <= m * noise_bound *
    sum_{j>=k} |theta_j|``; for chains the exact oracle values are tabulated
    for lags ``1..n``.
    """
    mult = 2.0 if conservative else 1.0
    if spec.kind is ProcessKind.HILBERT_AR1:
        diag = ar1_operator_diagonal(spec.rho_norm, spec.dim)
        per_coord = spec.noise_bound**2 / (spec.dim + 2.0)
        sigma2 = float(np.sum(per_coord / (1.0 - diag**2)))
        c = spec.noise_bound / (1.0 - spec.rho_norm)
        if spec.rho_norm == 0:
            rate = MixingRate.independent()
        else:
            rate = MixingRate.exponential(chi=mult * c, theta=-math.log(spec.rho_norm), gamma=1.0)
        return c, sigma2, rate
    if spec.kind is ProcessKind.HILBERT_MA:
        theta = np.abs(np.asarray(spec.ma_weights))
        sigma2 = float(np.sum(theta**2) * _ball_second_moment(spec.dim, spec.noise_bound))
        c = spec.noise_bound * float(theta.sum())
        tails = np.array([theta[k:].sum() for k in range(1, theta.size)])
        table = np.zeros(max(n, 1))
        m = min(tails.size, table.size)
        table[:m] = mult * spec.noise_bound * tails[:m]
        return c, sigma2, MixingRate.tabulated(table)
    if spec.kind is ProcessKind.FINITE_CHAIN:
        states = np.asarray(spec.chain_states)
        P = np.asarray(spec.chain_matrix)
        pi = stationary_distribution(P)
        centered = states - pi @ states
        prof = chain_tau_profile(states, P, max(n, 1))
        prof = np.minimum.accumulate(np.maximum(prof, 0.0))
        return float(np.abs(centered).max()), float(pi @ centered**2), MixingRate.tabulated(prof)
    raise ValueError("analytic constants are only available for AR(1), MA and chain presets")


def save_csv(traj: Trajectory, path) -> None:
    """One row per time step with header ``t,x1..xd``."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{j + 1}" for j in range(traj.dim)])
        for t, row in enumerate(traj.values):
            w.writerow([t] + [repr(float(v)) for v in row])


def load_csv(path, marginal_bound_c: float | None = None) -> Trajectory:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t" or header[1:] != [f"x{j + 1}" for j in range(len(header) - 1)]:
            raise ValueError("trajectory CSV header must be 't,x1..xd'")
        values = np.array([[float(v) for v in row[1:]] for row in reader], dtype=float)
    values = values.reshape(-1, len(header) - 1)
    c = float(np.linalg.norm(values, axis=1).max()) if marginal_bound_c is None else marginal_bound_c
    return Trajectory(values, c, _empirical_sigma2(values))


def save_binary(traj: Trajectory, path) -> None:
    """Binary container: ``DEPC0001``, uint64 n, uint64 d, float64 c,
    float64 sigma2, then ``n*d`` little-endian float64 values row-major."""
    with open(Path(path), "wb") as fh:
        fh.write(_BIN_HEADER.pack(BINARY_MAGIC, traj.n, traj.dim, traj.marginal_bound_c,
                                  traj.second_moment_sigma2))
        fh.write(np.ascontiguousarray(traj.values, dtype="<f8").tobytes())


def load_binary(path) -> Trajectory:
    data = Path(path).read_bytes()
    if len(data) < _BIN_HEADER.size or data[:8] != BINARY_MAGIC:
        raise ValueError("not a DEPC0001 trajectory file")
    _, n, d, c, s2 = _BIN_HEADER.unpack_from(data)
    body = data[_BIN_HEADER.size:]
    if len(body) != 8 * n * d:
        raise ValueError("truncated trajectory file")
    values = np.frombuffer(body, dtype="<f8").reshape(n, d)
    return Trajectory(values.copy(), c, s2)
