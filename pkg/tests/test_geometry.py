import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depconc.geometry import (
    NormSpace,
    RankDeficientWarning,
    certify_constants,
    fd_oracle,
    gateaux_first,
    gateaux_second,
    norm,
    preset_constants,
    random_elements,
)

SPACES = [
    NormSpace.hilbert(6),
    NormSpace.lp(2, 7),
    NormSpace.lp(3, 7),
    NormSpace.lp(4, 64),
    NormSpace.lp(3.5, 5, weights=[1, 2, 3, 4, 5]),
    NormSpace.schatten(2, 4),
    NormSpace.schatten(3, 5),
    NormSpace.schatten(4, 3),
]
IDS = [f"{s.kind.value}-p{s.p:g}-d{s.dim}" for s in SPACES]


def pair(space, seed):
    rng = np.random.default_rng(seed)
    return random_elements(space, 1, rng)[0], random_elements(space, 1, rng)[0]


class TestHilbert:
    space = NormSpace.hilbert(5)

    def test_along_ray(self):
        x = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
        assert gateaux_first(self.space, x, x) == pytest.approx(np.linalg.norm(x))
        assert gateaux_second(self.space, x, x) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal(self):
        x = np.eye(5)[0]
        h = np.eye(5)[1]
        assert gateaux_first(self.space, x, h) == 0.0
        assert gateaux_second(self.space, x, h) == pytest.approx(1.0)

    def test_origin_rejected(self):
        with pytest.raises(ValueError, match="origin"):
            gateaux_first(self.space, np.zeros(5), np.ones(5))


class TestSchatten:
    def test_identity_example(self):
        sp = NormSpace.schatten(2, 2)
        assert gateaux_first(sp, np.eye(2), np.eye(2)) == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_p2_matches_hilbert(self):
        sp = NormSpace.schatten(2, 4)
        hs = NormSpace.hilbert(16)
        for seed in range(20):
            X, H = pair(sp, seed)
            assert gateaux_first(sp, X, H) == pytest.approx(gateaux_first(hs, X.ravel(), H.ravel()), abs=1e-12)
            assert gateaux_second(sp, X, H) == pytest.approx(gateaux_second(hs, X.ravel(), H.ravel()), abs=1e-12)

    def test_repeated_eigenvalues(self):
        sp = NormSpace.schatten(3, 3)
        X = np.diag([2.0, 2.0, -1.0])
        H = np.array([[0.3, 1.0, 0.2], [1.0, -0.5, 0.4], [0.2, 0.4, 0.1]])
        fd = fd_oracle(sp, X, H, 2, 1e-4)
        assert gateaux_second(sp, X, H) == pytest.approx(fd, rel=1e-6)

    def test_rank_deficient_warns(self):
        sp = NormSpace.schatten(3, 3)
        X = np.diag([1.0, 0.5, 0.0])
        H = np.eye(3)
        with pytest.warns(RankDeficientWarning):
            gateaux_first(sp, X, H)

    def test_symmetry_enforced(self):
        sp = NormSpace.schatten(3, 2)
        with pytest.raises(ValueError, match="symmetric"):
            norm(sp, np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_norm_value(self):
        sp = NormSpace.schatten(3, 2)
        assert norm(sp, np.diag([1.0, -2.0])) == pytest.approx(9 ** (1 / 3))


class TestLp:
    def test_uniform_weights_normalized(self):
        sp = NormSpace.lp(3, 4)
        assert sp.weights == (0.25,) * 4
        assert norm(sp, np.ones(4)) == pytest.approx(1.0)

    def test_p2_is_weighted_hilbert(self):
        w = np.array([0.1, 0.2, 0.3, 0.4])
        sp = NormSpace.lp(2, 4, weights=w)
        x, h = pair(sp, 3)
        hs = NormSpace.hilbert(4)
        s = np.sqrt(w)
        assert gateaux_second(sp, x, h) == pytest.approx(gateaux_second(hs, s * x, s * h), rel=1e-12)

    @pytest.mark.parametrize("p", [1.5, 1.0])
    def test_small_p_rejected(self, p):
        with pytest.raises(ValueError):
            NormSpace.lp(p, 3)


@pytest.mark.parametrize("space", SPACES, ids=IDS)
class TestAgainstFiniteDifferences:
    def test_first(self, space):
        for seed in range(10):
            x, h = pair(space, seed)
            closed = gateaux_first(space, x, h)
            fd = fd_oracle(space, x, h, 1, 1e-4)
            assert abs(closed - fd) <= 1e-6 * norm(space, h)

    def test_second(self, space):
        for seed in range(10):
            x, h = pair(space, seed)
            closed = gateaux_second(space, x, h)
            fd = fd_oracle(space, x, h, 2, 1e-4)
            assert abs(closed - fd) <= 1e-6 * norm(space, h) ** 2 / norm(space, x)

    def test_batched_matches_loop(self, space):
        rng = np.random.default_rng(1)
        X = random_elements(space, 5, rng)
        H = random_elements(space, 5, rng)
        loop = [gateaux_second(space, x, h) for x, h in zip(X, H)]
        np.testing.assert_allclose(gateaux_second(space, X, H), loop, rtol=1e-12)

    def test_zero_homogeneous(self, space):
        x, h = pair(space, 11)
        for lam in (0.01, 3.0, 1e4):
            assert gateaux_first(space, lam * x, h) == pytest.approx(gateaux_first(space, x, h), rel=1e-12)

    def test_certificate(self, space):
        cert = certify_constants(space, 2000, seed=5)
        assert cert.passed
        assert (cert.A1, cert.A2) == preset_constants(space)


def test_fd_order_and_step_validation():
    sp = NormSpace.hilbert(3)
    x = np.array([1.0, 2.0, 3.0])
    assert fd_oracle(sp, x, np.zeros(3), 1, 1e-4) == 0.0
    with pytest.raises(ValueError):
        fd_oracle(sp, x, x, 3)
    with pytest.raises(ValueError):
        fd_oracle(sp, x, x, 1, step=0.0)
    with pytest.raises(ValueError, match="degenerate"):
        fd_oracle(sp, 1e10 * x, x, 1, step=1e-300)


def test_fd_convergence_order_hilbert():
    sp = NormSpace.hilbert(8)
    for seed in range(20):
        x, h = pair(sp, seed)
        step = 1e-3
        rel = abs(fd_oracle(sp, x, h, 1, step) - gateaux_first(sp, x, h)) / norm(sp, h)
        assert rel <= 10 * step**2


@settings(max_examples=50, deadline=None)
@given(p=st.floats(2, 6), d=st.integers(2, 6), seed=st.integers(0, 10**6))
def test_schatten_ratios_bounded(p, d, seed):
    sp = NormSpace.schatten(p, d)
    x, h = pair(sp, seed)
    nx, nh = norm(sp, x), norm(sp, h)
    assert abs(gateaux_first(sp, x, h)) <= nh * (1 + 1e-9)
    assert abs(gateaux_second(sp, x, h)) * nx <= 3 * (p - 1) * nh**2 * (1 + 1e-9)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(2, 8), d=st.integers(1, 30), seed=st.integers(0, 10**6))
def test_lp_ratios_bounded(p, d, seed):
    sp = NormSpace.lp(p, d)
    x, h = pair(sp, seed)
    nx, nh = norm(sp, x), norm(sp, h)
    assert abs(gateaux_first(sp, x, h)) <= nh * (1 + 1e-9)
    assert -1e-12 * nh**2 <= gateaux_second(sp, x, h) * nx <= (p - 1) * nh**2 * (1 + 1e-9)


@pytest.mark.parametrize("space, A2", [
    (NormSpace.hilbert(8), 1.0),
    (NormSpace.lp(4, 64), 3.0),
    (NormSpace.schatten(3, 5), 6.0),
])
def test_certificate_examples(space, A2):
    cert = certify_constants(space, 10_000, seed=0)
    assert cert.passed and cert.A1 == 1.0 and cert.A2 == A2
    d = json.loads(cert.to_json())
    assert d["passed"] is True and d["samples"] == 10_000


def test_certificate_is_deterministic():
    sp = NormSpace.schatten(4, 3)
    assert certify_constants(sp, 500, seed=9) == certify_constants(sp, 500, seed=9)
