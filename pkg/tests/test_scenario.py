import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secure_isac.scenario import (DEFAULT_AP_POSITIONS, ScenarioConfig, angle_from, build_scenario,
                                  close_ue_positions, config_from_dict, db_to_linear, linear_to_db,
                                  load_config, two_ap_config, steering_derivative, steering_vector)


def test_steering_broadside_is_all_ones():
    np.testing.assert_array_equal(steering_vector(0.0, 4), np.ones(4))


def test_steering_endfire_alternates():
    np.testing.assert_allclose(steering_vector(np.pi / 2, 3), [1, -1, 1], atol=1e-15)


def test_steering_unit_modulus_and_first_entry():
    a = steering_vector(0.37, 17)
    assert a[0] == 1
    np.testing.assert_allclose(np.abs(a), 1.0)


def test_derivative_examples():
    np.testing.assert_allclose(steering_derivative(0.0, 3), [0, 1j * np.pi, 2j * np.pi])
    np.testing.assert_allclose(steering_derivative(np.pi / 2, 5), np.zeros(5), atol=1e-14)
    assert steering_derivative(1.1, 6)[0] == 0


def test_derivative_inner_product_with_steering():
    th, N = 0.3, 30
    prod = np.sum(steering_vector(th, N).conj() * steering_derivative(th, N))
    assert np.isclose(prod, 1j * np.pi * np.cos(th) * np.arange(N).sum())


@settings(max_examples=100, deadline=None)
@given(st.floats(-np.pi / 2, np.pi / 2), st.integers(1, 32))
def test_derivative_matches_central_difference(theta, N):
    h = 1e-6
    fd = (steering_vector(theta + h, N) - steering_vector(theta - h, N)) / (2 * h)
    assert np.max(np.abs(fd - steering_derivative(theta, N))) < 1e-5


def test_derivative_fd_at_fixed_point():
    h = 1e-6
    fd = (steering_vector(0.7 + h, 8) - steering_vector(0.7 - h, 8)) / (2 * h)
    assert np.max(np.abs(fd - steering_derivative(0.7, 8))) < 1e-5


def test_eve_broadside_has_zero_angle():
    cfg = ScenarioConfig(((10.0, 0.0),), ((20.0, 5.0),), (10.0, 30.0), N=4)
    assert build_scenario(cfg).theta[0] == 0.0


def test_angle_sign_convention():
    assert angle_from((0, 0), (1, 1)) == pytest.approx(np.pi / 4)
    assert angle_from((0, 0), (-1, 1)) == pytest.approx(-np.pi / 4)


def test_two_ap_layout_dimensions():
    sc = build_scenario(two_ap_config(N=30, K=4))
    assert sc.S == 5 and sc.fim_dim == 10 and sc.M == 2
    assert sc.config.ap_positions == DEFAULT_AP_POSITIONS
    assert sc.h.shape == (4, 2, 30)
    assert sc.theta[0] != sc.theta[1]


def test_same_seed_reproduces_bitwise():
    a = build_scenario(two_ap_config(N=8, rng_seed=7))
    b = build_scenario(two_ap_config(N=8, rng_seed=7))
    assert a.alpha.tobytes() == b.alpha.tobytes()
    assert a.h.tobytes() == b.h.tobytes()
    assert a.theta.tobytes() == b.theta.tobytes()
    c = build_scenario(two_ap_config(N=8, rng_seed=8))
    assert not np.array_equal(a.alpha, c.alpha)


def test_channels_finite_and_nonzero():
    for pathloss in ("unit", "free_space"):
        sc = build_scenario(two_ap_config(N=8, pathloss=pathloss))
        norms = np.linalg.norm(sc.h, axis=-1)
        assert np.all(np.isfinite(norms)) and np.all(norms > 0)


def test_unit_channel_norm():
    sc = build_scenario(two_ap_config(N=8))
    np.testing.assert_allclose(np.linalg.norm(sc.h, axis=-1) ** 2, 8.0)


def test_free_space_pathloss_value():
    cfg = ScenarioConfig(((0.0, 0.0),), ((0.0, 10.0),), (5.0, 5.0), N=2, pathloss="free_space")
    sc = build_scenario(cfg)
    lam = 299_792_458.0 / 3.5e9
    beta = (lam / (4 * np.pi * 10.0)) ** 2
    assert np.linalg.norm(sc.h[0, 0]) ** 2 == pytest.approx(2 * beta)


def test_scenario_arrays_are_read_only():
    sc = build_scenario(two_ap_config(N=4))
    with pytest.raises(ValueError):
        sc.alpha[0, 0] = 0


@pytest.mark.parametrize("change", [
    dict(eve_position=(10.0, 0.0)),
    dict(N=1),
    dict(P_m=0.0),
    dict(sigma2_c=0.0),
    dict(delta2=0.0),
    dict(gamma=-1.0),
    dict(psi=0.0),
    dict(pathloss="rician"),
])
def test_invalid_configs_rejected(change):
    with pytest.raises(ValueError):
        build_scenario(two_ap_config(N=4).with_(**change))


def test_streams_always_k_plus_one():
    for K in (0, 1, 3):
        assert two_ap_config(N=4, K=K).S == K + 1


def test_close_placement():
    eve = (60.0, 20.0)
    ues = close_ue_positions(((1.0, 2.0), (3.0, 4.0), (5.0, 6.0)), eve)
    assert ues[0] == (59.5, 20.0) and ues[1] == (60.5, 20.0) and ues[2] == (5.0, 6.0)
    with pytest.raises(ValueError):
        close_ue_positions(((1.0, 2.0),), eve)


def test_db_round_trip():
    assert db_to_linear(-3.0) == pytest.approx(0.501187, rel=1e-5)
    assert linear_to_db(db_to_linear(-5.0)) == pytest.approx(-5.0)


def test_config_requires_seed():
    with pytest.raises(ValueError):
        config_from_dict({"network": {"N": 4}})


def test_config_from_dict_db_inputs():
    cfg = config_from_dict({"seed": 3, "network": {"N": 6},
                            "geometry": {"ue_positions": [[30.0, 20.0], [40.0, 30.0]]},
                            "constraints": {"gamma_db": 0.0, "psi_db": -3.0}})
    assert cfg.N == 6 and cfg.K == 2 and cfg.rng_seed == 3
    assert cfg.gamma == pytest.approx(1.0)
    assert cfg.psi == pytest.approx(db_to_linear(-3.0))


def test_shipped_config_loads():
    from pathlib import Path
    cfg = load_config(Path(__file__).parents[1] / "configs" / "two_ap.toml")
    assert cfg.M == 2 and cfg.K == 4 and cfg.N == 8
    build_scenario(cfg)
