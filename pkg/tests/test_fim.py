import time

import numpy as np
import pytest

from conftest import random_psd
from secure_isac import oracles
from secure_isac.experiments import check_fim_oracle
from secure_isac.fim import (EtaLayout, SingularFimError, assemble_fim_operator, crb_from_fim,
                             crb_theta, evaluate_fim, trace_inverse)
from secure_isac.scenario import ScenarioConfig, build_scenario
from secure_isac.sigmodel import LiftedVariables


def small_scenario(N=4, K=2, seed=0, **kw):
    ues = ((5.0, 20.0), (25.0, 12.0), (-8.0, 30.0))[:K]
    return build_scenario(ScenarioConfig(((0.0, 0.0), (30.0, 0.0)), ues, (12.0, 28.0), N=N,
                                         rng_seed=seed, **kw))


def random_vars(rng, sc, rank=2):
    NM = sc.N * sc.M
    W = np.stack([random_psd(rng, NM, rank) for _ in range(sc.S)])
    R = np.stack([random_psd(rng, sc.N, rank) for _ in range(sc.M)])
    return LiftedVariables(W, R)


def test_layout_ordering():
    lay = EtaLayout(2)
    assert lay.dim == 10
    assert lay.labels()[:4] == ["re_alpha_11", "im_alpha_11", "re_alpha_12", "im_alpha_12"]
    assert lay.theta(0) == 8 and lay.re_alpha(1, 0) == 4 and lay.im_alpha(1, 1) == 7


def test_zero_design_gives_zero_fim():
    sc = small_scenario()
    J = evaluate_fim(assemble_fim_operator(sc), LiftedVariables.zeros(sc.S, 2, 4))
    assert np.all(J == 0)


def test_fim_matches_finite_difference_oracle(rng):
    sc = small_scenario(N=4, K=2, seed=3)
    v = random_vars(rng, sc)
    J = evaluate_fim(assemble_fim_operator(sc), v)
    Jo = oracles.fim_finite_difference(sc, v.W, v.R)
    assert np.linalg.norm(J - Jo) / np.linalg.norm(Jo) < 1e-6


def test_oracle_suite_twenty_instances():
    t0 = time.perf_counter()
    err = check_fim_oracle(instances=20, seed=11)
    assert err < 1e-6
    assert time.perf_counter() - t0 < 30


def test_closed_form_entries(rng):
    sc = small_scenario(N=5, K=1, seed=4)
    v = random_vars(rng, sc)
    op = assemble_fim_operator(sc)
    J = evaluate_fim(op, v)
    ref = oracles.fim_closed_form_entries(sc, v.W, v.R)
    lay = op.layout
    for m in range(sc.M):
        assert J[lay.re_alpha(m, m), lay.re_alpha(m, m)] == pytest.approx(ref[("re", m, "re", m)], rel=1e-12)
        assert J[lay.re_alpha(m, m), lay.theta(m)] == pytest.approx(ref[("re", m, "theta", m)], rel=1e-10)
        assert J[lay.theta(m), lay.theta(m)] == pytest.approx(ref[("theta", m, "theta", m)], rel=1e-10)


def test_single_ap_alpha_entry(rng):
    sc = build_scenario(ScenarioConfig(((0.0, 0.0),), ((5.0, 20.0),), (-8.0, 25.0), N=3))
    v = LiftedVariables(np.stack([random_psd(rng, 3) for _ in range(sc.S)]), random_psd(rng, 3)[None])
    J = evaluate_fim(assemble_fim_operator(sc), v)
    a = sc.steering(0)
    Q = v.W.sum(axis=0) + v.R[0]
    expected = 2.0 * 3 * np.real(a.conj() @ Q @ a)
    assert J[0, 0] == pytest.approx(expected, rel=1e-12)
    assert J[1, 1] == pytest.approx(expected, rel=1e-12)


def test_exactly_symmetric(rng):
    sc = small_scenario()
    J = evaluate_fim(assemble_fim_operator(sc), random_vars(rng, sc))
    assert np.array_equal(J, J.T)


def test_linear_in_design(rng):
    sc = small_scenario()
    op = assemble_fim_operator(sc)
    v1, v2 = random_vars(rng, sc), random_vars(rng, sc)
    J1, J2 = evaluate_fim(op, v1), evaluate_fim(op, v2)
    np.testing.assert_allclose(evaluate_fim(op, v1.scaled(3.5)), 3.5 * J1, rtol=1e-12)
    assert np.max(np.abs(evaluate_fim(op, v1 + v2) - (J1 + J2))) < 1e-12 * np.abs(J1 + J2).max()


def test_psd_and_monotone(rng):
    sc = small_scenario()
    op = assemble_fim_operator(sc)
    for _ in range(10):
        v, d = random_vars(rng, sc), random_vars(rng, sc, rank=1)
        J = evaluate_fim(op, v)
        assert np.linalg.eigvalsh(J).min() >= -1e-8 * np.trace(J)
        diff = evaluate_fim(op, v + d) - J
        assert np.linalg.eigvalsh(diff).min() >= -1e-9 * np.abs(diff).max()


def test_noise_doubling_halves_fim(rng):
    sc1 = small_scenario(sigma2_s=1.0)
    sc2 = small_scenario(sigma2_s=2.0)
    v = random_vars(rng, sc1)
    np.testing.assert_array_equal(evaluate_fim(assemble_fim_operator(sc2), v),
                                  0.5 * evaluate_fim(assemble_fim_operator(sc1), v))


def test_crb_identity():
    np.testing.assert_allclose(crb_from_fim(np.eye(10), 2), np.degrees(1.0))


def test_crb_diagonal_theta_block():
    J = np.eye(10)
    J[8, 8], J[9, 9] = 4.0, 25.0
    np.testing.assert_allclose(crb_from_fim(J, 2), np.degrees([0.5, 0.2]))
    J[8, 8], J[9, 9] = 0.25, 0.04
    np.testing.assert_allclose(crb_from_fim(J, 2), np.degrees([2.0, 5.0]))


def test_singular_fim_raises_with_deficiency():
    J = np.eye(10)
    J[3, 3] = 0.0
    with pytest.raises(SingularFimError) as err:
        crb_from_fim(J, 2)
    assert err.value.deficiency == 1
    with pytest.raises(SingularFimError):
        trace_inverse(np.zeros((3, 3)))


def test_crb_theta_positive(rng):
    sc = small_scenario()
    op = assemble_fim_operator(sc)
    crb = crb_theta(op, random_vars(rng, sc))
    assert crb.shape == (2,) and np.all(crb > 0)
