import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adlstream.adaptive_radar import (
    nodewise_current_estimate,
    nodewise_gradient,
    nodewise_init,
    nodewise_observe,
)
from adlstream.errors import ConfigError, SequencingError
from adlstream.glm_family import GAUSSIAN, LOGISTIC
from adlstream.schedule import geometric_schedule
from adlstream.simulate import gen_ar1_rows


def _sched(start=0, t1=10, lam=0.1, radius=3.0, horizon=500):
    return geometric_schedule(t1, lam, radius, horizon, start=start)


def test_init_pins_target():
    s = nodewise_init(6, 2, _sched(), np.zeros(6))
    np.testing.assert_array_equal(nodewise_current_estimate(s), [0, 0, -1, 0, 0, 0])
    s = nodewise_init(4, 1, _sched(), np.full(4, 7.0))
    assert s.current_iterate[1] == -1.0 and s.current_iterate[0] == 7.0


def test_default_initial_value_is_pinned_zero():
    s = nodewise_init(5, 4, _sched())
    np.testing.assert_array_equal(nodewise_current_estimate(s), [0, 0, 0, 0, -1])


@pytest.mark.parametrize("j", [-1, 5, 6])
def test_init_rejects_bad_index(j):
    with pytest.raises(ConfigError):
        nodewise_init(5, j, _sched())


def test_gradient_examples():
    x = np.array([1.0, 1.0, 0.0])
    r = np.array([0.0, -1.0, 0.0])
    g = nodewise_gradient(x, r, np.zeros(3), 1, 0.0, GAUSSIAN)
    np.testing.assert_array_equal(g, [-1.0, 0.0, 0.0])
    np.testing.assert_array_equal(nodewise_gradient(np.array([0.0, 0.0, 3.0]), r, np.zeros(3), 1, 0.7, GAUSSIAN), 0.0)
    gl = nodewise_gradient(np.array([1.0, 1.0, 0.0]), r, np.zeros(3), 1, 0.0, LOGISTIC)
    np.testing.assert_array_equal(gl, 0.25 * g)


def test_gradient_penalty_uses_sign_with_zero_at_rest():
    r = np.array([0.5, -1.0, 0.0, -0.2])
    g = nodewise_gradient(np.zeros(4), r, np.zeros(4), 1, 0.3, GAUSSIAN)
    np.testing.assert_allclose(g, [0.3, 0.0, 0.0, -0.3])


def test_gradient_requires_pin():
    with pytest.raises(ValueError):
        nodewise_gradient(np.ones(3), np.zeros(3), np.zeros(3), 1, 0.1, GAUSSIAN)


def test_sequencing():
    s = nodewise_init(3, 0, _sched(start=20))
    with pytest.raises(SequencingError):
        nodewise_observe(s, np.ones(3), np.zeros(3), 20, GAUSSIAN)
    nodewise_observe(s, np.ones(3), np.zeros(3), 21, GAUSSIAN)
    with pytest.raises(SequencingError):
        nodewise_observe(s, np.ones(3), np.zeros(3), 23, GAUSSIAN)


def test_plugged_beta_frozen_within_epoch():
    p = 4
    s = nodewise_init(p, 0, _sched(start=5, t1=3))
    first = np.full(p, 0.3)
    nodewise_observe(s, np.ones(p), first, 6, LOGISTIC)
    nodewise_observe(s, np.ones(p), np.full(p, -9.0), 7, LOGISTIC)
    assert s.plugged_beta is first
    nodewise_observe(s, np.ones(p), np.full(p, 5.0), 8, LOGISTIC)
    new = np.full(p, 1.5)
    nodewise_observe(s, np.ones(p), new, 9, LOGISTIC)
    assert s.plugged_beta is new


def _run(rho, j, n=10000, seed=0, family=GAUSSIAN, p=5):
    rng = np.random.default_rng(seed)
    X = gen_ar1_rows(n, p, rho, 1.0, rng)
    sched = geometric_schedule(50, 0.02, 3.0, n)
    s = nodewise_init(p, j, sched)
    traj = []
    for i, x in enumerate(X, 1):
        nodewise_observe(s, x, np.zeros(p), i, family)
        traj.append(nodewise_current_estimate(s).copy())
    return sched, np.array(traj)


def test_identity_design_gives_unit_vector():
    for seed in range(3):
        _, traj = _run(0.0, 0, seed=seed)
        g = traj[-1]
        assert g[0] == -1.0
        assert np.abs(g[1:]).max() < 0.1


def test_ar1_design_recovers_neighbour_support():
    p, rho, j = 5, 0.5, 1
    cov = rho ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    theta = np.linalg.inv(cov)
    pop = -theta[:, j] / theta[j, j]
    assert np.allclose(pop[[3, 4]], 0.0, atol=1e-12)
    _, traj = _run(rho, j)
    g = traj[-1]
    np.testing.assert_array_equal(np.sign(g[[0, 2]]), np.sign(pop[[0, 2]]))
    np.testing.assert_allclose(g[[0, 2]], pop[[0, 2]], atol=0.05)
    assert np.abs(g[[3, 4]]).max() < 0.1


def test_trajectory_error_trend():
    p, rho, j = 5, 0.5, 1
    cov = rho ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    theta = np.linalg.inv(cov)
    pop = -theta[:, j] / theta[j, j]
    sched, traj = _run(rho, j, n=3000)
    errs = [np.abs(traj[b - 1] - pop).sum() for b in sched.boundaries() if b <= 3000]
    assert errs[-1] < errs[0]
    assert errs[-1] < 0.1


def test_pin_and_hold_rule_on_replay():
    sched, traj = _run(0.5, 3, n=800, family=LOGISTIC, p=8)
    assert np.all(traj[:, 3] == -1.0)
    bounds = set(sched.boundaries())
    for i in range(2, traj.shape[0] + 1):
        if i not in bounds:
            assert np.array_equal(traj[i - 1], traj[i - 2])
    n1, n2 = sched.boundary(0), sched.boundary(1)
    assert np.array_equal(traj[n1 - 1], traj[n2 - 2])


@given(st.integers(0, 7), st.integers(0, 2**32 - 1))
def test_pin_holds_for_any_target(j, seed):
    rng = np.random.default_rng(seed)
    p = 8
    s = nodewise_init(p, j, _sched(t1=4, lam=0.01, radius=5.0))
    for i in range(1, 30):
        nodewise_observe(s, rng.standard_normal(p) * 4, rng.standard_normal(p), i, LOGISTIC)
        assert s.current_iterate[j] == -1.0
        assert nodewise_current_estimate(s)[j] == -1.0


def test_determinism():
    _, a = _run(0.5, 2, n=500, seed=9, family=LOGISTIC)
    _, b = _run(0.5, 2, n=500, seed=9, family=LOGISTIC)
    assert np.array_equal(a, b)
