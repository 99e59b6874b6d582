import numpy as np
import pytest

from conftest import cached_design
from secure_isac import oracles
from secure_isac.experiments import desk_config
from secure_isac.fim import assemble_fim_operator, evaluate_fim
from secure_isac.scenario import ScenarioConfig, build_scenario, db_to_linear, two_ap_config
from secure_isac.sdp import (INFEASIBLE, OPTIMAL, build_problem, check_solution, diagnose_infeasibility,
                             epigraph_gap, export_problem, lifted_to_values, phase_one, solve)
from secure_isac.sigmodel import ap_power, sinr_ue, snr_eve


def tiny_config(**kw):
    params = dict(N=4, K=2, rng_seed=2)
    params.update(kw)
    return two_ap_config(**params)


def test_inventory_full_scale():
    prob = build_problem(build_scenario(two_ap_config(N=30, K=4)))
    inv = prob.inventory()
    assert inv["psd_blocks"] == {60: 5, 30: 2}
    assert inv["schur_blocks"] == {11: 10}
    assert inv["scalars"] == 10
    assert inv["constraints"]["sinr"] == 4
    assert inv["constraints"]["snr"] == 1
    assert inv["constraints"]["power"] == 2
    assert inv["constraints"]["fim"] == 55


def test_sensing_only_problem_is_well_posed():
    sc = build_scenario(tiny_config(K=0))
    prob = build_problem(sc)
    assert "sinr" not in prob.inventory()["constraints"]
    res = solve(prob, fim_op=assemble_fim_operator(sc))
    assert res.report.status == OPTIMAL
    assert epigraph_gap(res) < 1e-4


def test_infeasible_above_sinr_bound():
    sc = build_scenario(tiny_config())
    bound = max(oracles.sinr_upper_bound(sc, k) for k in range(sc.K))
    sc = build_scenario(tiny_config(gamma=1.5 * bound))
    res = solve(build_problem(sc))
    assert res.report.status == INFEASIBLE
    assert res.variables is None
    assert diagnose_infeasibility(sc) == "sinr"


def test_phase_one_feasible_case():
    prob = build_problem(build_scenario(tiny_config(gamma=0.5)))
    status, slack = phase_one(prob)
    assert status == OPTIMAL and slack <= 0


def test_returned_solution_feasible(desk_run):
    sc, v = desk_run.scenario, desk_run.result.variables
    cfg = sc.config
    for k in range(sc.K):
        assert sinr_ue(sc, v, k) >= cfg.gammas[k] * (1 - 1e-6)
    assert snr_eve(sc, v) <= cfg.psi * (1 + 1e-6)
    for m in range(sc.M):
        assert ap_power(v, m) <= cfg.power_budgets[m] * (1 + 1e-6)
    wmin, rmin = v.min_eigenvalues()
    assert np.all(wmin >= -1e-7 * np.trace(v.W, axis1=1, axis2=2).real.max())
    assert np.all(rmin >= -1e-7 * max(np.trace(v.R, axis1=1, axis2=2).real.max(), 1.0))
    worst, _ = check_solution(desk_run.problem, lifted_to_values(v, desk_run.result.fim,
                                                                  desk_run.result.epigraph))
    assert worst < 1e-6


def test_epigraph_exact(desk_run):
    assert epigraph_gap(desk_run.result) < 1e-4


def test_power_budget_active(desk_run):
    p = [ap_power(desk_run.result.variables, m) for m in range(2)]
    assert max(p) == pytest.approx(1.0, abs=1e-5)


def test_fim_well_conditioned_at_optimum(desk_run):
    assert 1.0 / np.linalg.cond(desk_run.result.fim) > 1e-12


def test_reduction_preserves_optimum():
    sc = build_scenario(tiny_config(gamma=0.8))
    prob = build_problem(sc)
    a = solve(prob, reduce=True)
    b = solve(prob, reduce=False)
    assert a.report.status == b.report.status == OPTIMAL
    assert a.report.objective == pytest.approx(b.report.objective, rel=1e-6)


def test_deterministic():
    prob = build_problem(build_scenario(tiny_config(gamma=0.8)))
    a, b = solve(prob), solve(prob)
    assert a.report.objective == b.report.objective


def test_power_scaling_with_loose_constraints():
    # gamma = 0 and a very loose eve ceiling: only the budgets bind
    base = tiny_config(gamma=0.0, psi=1e6)
    r1 = solve(build_problem(build_scenario(base)))
    r4 = solve(build_problem(build_scenario(base.with_(P_m=4.0))))
    assert r1.report.objective / r4.report.objective == pytest.approx(4.0, rel=1e-5)


def test_objective_monotone_in_gamma_and_psi():
    gammas = (0.1, 0.5, 1.0, 2.0)
    psis = tuple(db_to_linear(x) for x in (0.0, -3.0, -5.0))
    obj = np.array([[cached_design(gamma=g, psi=p).result.report.objective for g in gammas] for p in psis])
    assert np.all(np.diff(obj, axis=1) >= -1e-6)  # nondecreasing in gamma
    assert np.all(np.diff(obj, axis=0) >= -1e-6)  # psi decreases down the rows


def test_brute_force_agreement_small():
    cfg = ScenarioConfig(((0.0, 0.0),), ((5.0, 20.0),), (-15.0, 30.0), N=2, gamma=0.5, psi=1e6, rng_seed=5)
    sc = build_scenario(cfg)
    res = solve(build_problem(sc))
    best, f = oracles.brute_force_single_ap(sc, points=12)
    assert res.report.objective <= best * (1 + 1e-6)
    assert abs(best - res.report.objective) / res.report.objective < 1e-2


def test_fim_from_solution_matches_auxiliary(desk_run):
    # the returned J is re-evaluated from the design
    J = evaluate_fim(desk_run.fim_op, desk_run.result.variables)
    np.testing.assert_array_equal(J, desk_run.result.fim)


def test_export_format(tmp_path):
    prob = build_problem(build_scenario(tiny_config(N=2, K=1)))
    path = tmp_path / "prob.txt"
    export_problem(prob, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("var W0 complex 4 1")
    assert sum(1 for ln in lines if ln.startswith("con ")) == len(prob.constraints)
    assert sum(1 for ln in lines if ln.startswith("epi ")) == len(prob.epigraph)
    assert sum(1 for ln in lines if ln.startswith("obj ")) == prob.meta["dim"]


@pytest.mark.slow
def test_full_scale_eve_snr_at_large_gamma():
    run = cached_design(gamma=5.0, N=30)
    assert run.status == OPTIMAL
    snr_db = 10 * np.log10(run.solution.achieved.snr_eve)
    assert abs(snr_db) < 0.05
    p = run.solution.achieved.power
    assert np.all(p <= 1 + 1e-6) and np.any(np.abs(p - 1) < 1e-5)
