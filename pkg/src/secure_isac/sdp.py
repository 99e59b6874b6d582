"""Relaxed CRB-minimisation problem as a solver-agnostic conic program.

Decision variables are the stream covariances ``W_s``, the AN covariances
``R_m``, an auxiliary symmetric FIM ``J`` tied to them by linear equalities and
epigraph scalars ``t``.  ``Tr(J^-1) <= sum_i t_i`` is encoded by the Schur
blocks ``[[J, e_i], [e_i^T, t_i]] >= 0``.

All affine constraints are stored as ``sum_v <C_v, X_v> + constant (<= | ==) 0``
with ``<C, X> = Re Tr(C X)`` for matrix variables and ``C @ x`` for vectors.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy import linalg

from .fim import FimOperator, assemble_fim_operator, evaluate_fim, trace_inverse
from .scenario import Scenario
from .sigmodel import LiftedVariables

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

# Looser settings leave a visible epigraph gap and rank-2 residue at N = 30.
DESK_TOL = 1e-10
FULL_TOL = 1e-10


# normalised-row violation above which phase one declares infeasibility
PHASE_ONE_MARGIN = 1e-7


def default_tolerance(N: int) -> float:
    return DESK_TOL if N <= 8 else FULL_TOL


@dataclass(frozen=True)
class MatrixVariable:
    name: str
    size: int
    field: str = "complex"  # "complex" -> Hermitian, "real" -> symmetric
    psd: bool = True


@dataclass(frozen=True)
class VectorVariable:
    name: str
    size: int


@dataclass(eq=False)
class AffineConstraint:
    name: str
    family: str
    sense: str  # "<=" or "=="
    terms: dict[str, np.ndarray]
    constant: float = 0.0


@dataclass(frozen=True)
class EpigraphBlock:
    """``[[J, e_i], [e_i^T, t_i]] >= 0``."""

    name: str
    matrix: str
    scalar: str
    index: int


@dataclass(eq=False)
class ConicProblem:
    matrix_vars: list[MatrixVariable]
    vector_vars: list[VectorVariable]
    objective: dict[str, np.ndarray]
    constraints: list[AffineConstraint]
    epigraph: list[EpigraphBlock]
    meta: dict = field(default_factory=dict)

    def variable(self, name: str):
        for v in [*self.matrix_vars, *self.vector_vars]:
            if v.name == name:
                return v
        raise KeyError(name)

    def family(self, family: str) -> list[AffineConstraint]:
        return [c for c in self.constraints if c.family == family]

    def inventory(self) -> dict:
        psd = {}
        for v in self.matrix_vars:
            if v.psd:
                psd[v.size] = psd.get(v.size, 0) + 1
        fams = {}
        for c in self.constraints:
            fams[c.family] = fams.get(c.family, 0) + 1
        return {
            "psd_blocks": psd,
            "schur_blocks": ({self.variable(self.epigraph[0].matrix).size + 1: len(self.epigraph)}
                             if self.epigraph else {}),
            "scalars": sum(v.size for v in self.vector_vars),
            "constraints": fams,
        }

    def validate(self) -> None:
        names = {v.name: v for v in [*self.matrix_vars, *self.vector_vars]}
        for c in self.constraints:
            for vn, coef in c.terms.items():
                if vn not in names:
                    raise ValueError(f"constraint {c.name} references unknown variable {vn}")
                v = names[vn]
                shape = (v.size, v.size) if isinstance(v, MatrixVariable) else (v.size,)
                if np.shape(coef) != shape:
                    raise ValueError(f"constraint {c.name}: coefficient for {vn} has shape {np.shape(coef)}")
            if c.sense not in ("<=", "=="):
                raise ValueError(f"constraint {c.name}: bad sense {c.sense}")
        for b in self.epigraph:
            if b.matrix not in names or b.scalar not in names:
                raise ValueError(f"epigraph block {b.name} references unknown variables")


@dataclass
class SolveReport:
    status: str
    objective: float = float("nan")
    iterations: int | None = None
    max_primal_residual: float = float("nan")
    slack: dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0
    solver: str = ""
    message: str = ""


@dataclass(eq=False)
class SolveResult:
    variables: LiftedVariables | None
    epigraph: np.ndarray | None
    report: SolveReport
    fim: np.ndarray | None = None
    raw: dict | None = field(default=None, repr=False)


def _stream(s: int) -> str:
    return f"W{s}"


def _an(m: int) -> str:
    return f"R{m}"


def build_problem(scenario: Scenario, fim_op: FimOperator | None = None) -> ConicProblem:
    """Relaxed design problem: CRB epigraph, SINR, eve SNR and power constraints."""
    if fim_op is None:
        fim_op = assemble_fim_operator(scenario)
    M, N, K, S = scenario.M, scenario.N, scenario.K, scenario.S
    NM = N * M
    dim = fim_op.dim
    if fim_op.N != N or fim_op.phi.shape[2] != M:
        raise ValueError("FIM operator does not match the scenario")
    cfg = scenario.config

    mvars = [MatrixVariable(_stream(s), NM) for s in range(S)]
    mvars += [MatrixVariable(_an(m), N) for m in range(M)]
    mvars.append(MatrixVariable("J", dim, field="real", psd=False))
    vvars = [VectorVariable("t", dim)]
    cons: list[AffineConstraint] = []

    # FIM linking equalities, upper triangle
    for i in range(dim):
        for j in range(i, dim):
            E = np.zeros((dim, dim))
            E[j, i] = 1.0
            blocks = fim_op.scale * fim_op.phi[i, j]
            Cw = linalg.block_diag(*blocks)
            terms = {"J": E}
            terms.update({_stream(s): -Cw for s in range(S)})
            terms.update({_an(m): -blocks[m] for m in range(M)})
            cons.append(AffineConstraint(f"fim[{i},{j}]", "fim", "==", terms,
                                         float(-fim_op.constant[i, j])))

    gammas = cfg.gammas
    for k in range(K):
        hk = scenario.h_stacked(k)
        H = np.outer(hk, hk.conj())
        g = gammas[k]
        terms = {_stream(s): (g * H if s != k else -H) for s in range(S)}
        for m in range(M):
            hm = scenario.h[k, m]
            terms[_an(m)] = g * np.outer(hm, hm.conj())
        cons.append(AffineConstraint(f"sinr[{k}]", "sinr", "<=", terms, g * cfg.sigma2_c))

    d2 = np.diag(cfg.delta2_matrix)
    Aw = np.zeros((NM, NM), dtype=complex)
    terms = {}
    for m in range(M):
        a = scenario.steering(m)
        aa = np.outer(a, a.conj())
        Aw[m * N:(m + 1) * N, m * N:(m + 1) * N] = d2[m] * aa
        terms[_an(m)] = -cfg.psi * d2[m] * aa
    for s in range(S):
        terms[_stream(s)] = Aw
    cons.append(AffineConstraint("snr_eve", "snr", "<=", terms, -cfg.psi * cfg.sigma2_s))

    budgets = cfg.power_budgets
    for m in range(M):
        sel = np.zeros((NM, NM))
        sel[m * N:(m + 1) * N, m * N:(m + 1) * N] = np.eye(N)
        terms = {_stream(s): sel for s in range(S)}
        terms[_an(m)] = np.eye(N)
        cons.append(AffineConstraint(f"power[{m}]", "power", "<=", terms, -float(budgets[m])))

    epi = [EpigraphBlock(f"epi[{i}]", "J", "t", i) for i in range(dim)]
    prob = ConicProblem(mvars, vvars, {"t": np.ones(dim)}, cons, epi,
                        meta={"S": S, "M": M, "N": N, "K": K, "dim": dim,
                              "fim_scale": _fim_reference_scale(scenario, fim_op)})
    prob.validate()
    return prob


def _inner(coef: np.ndarray, x: np.ndarray) -> float:
    if coef.ndim == 1:
        return float(coef @ x)
    return float(np.real(np.sum(coef * x.T)))


def constraint_values(problem: ConicProblem, values: dict[str, np.ndarray]) -> dict[str, float]:
    """Left-hand side of every affine constraint at ``values``."""
    return {c.name: sum(_inner(coef, values[vn]) for vn, coef in c.terms.items()) + c.constant
            for c in problem.constraints}


def check_solution(problem: ConicProblem, values: dict[str, np.ndarray]) -> tuple[float, dict[str, float]]:
    """Solver-free feasibility audit.

    Returns the largest violation (relative to each constraint's scale; PSD
    violations relative to the trace) and the slack of every inequality.
    """
    worst = 0.0
    slack = {}
    lhs = constraint_values(problem, values)
    for c in problem.constraints:
        scale = 1.0 + abs(c.constant)
        if c.sense == "==":
            scale += abs(_inner(c.terms["J"], values["J"])) if "J" in c.terms else 0.0
            worst = max(worst, abs(lhs[c.name]) / scale)
        else:
            worst = max(worst, max(lhs[c.name], 0.0) / scale)
            slack[c.name] = -lhs[c.name]
    for v in problem.matrix_vars:
        if v.psd:
            X = values[v.name]
            ev = np.linalg.eigvalsh(0.5 * (X + X.conj().T))
            worst = max(worst, max(-ev[0], 0.0) / max(1.0, float(np.sum(np.abs(ev)))))
    for b in problem.epigraph:
        J = values[b.matrix]
        t = values[b.scalar][b.index]
        e = np.zeros(J.shape[0])
        e[b.index] = 1.0
        blk = np.block([[J, e[:, None]], [e[None, :], np.array([[t]])]])
        ev = np.linalg.eigvalsh(0.5 * (blk + blk.T))
        worst = max(worst, max(-ev[0], 0.0) / max(1.0, float(np.abs(ev).max())))
    return worst, slack


def _coordinate_projector_mask(C: np.ndarray) -> np.ndarray | None:
    """Support of ``C`` if it is ``c * diag(mask)`` with ``c > 0``, else ``None``."""
    d = np.diag(C)
    if np.any(C - np.diag(d)) or np.any(np.imag(d)):
        return None
    d = np.real(d)
    nz = d[d != 0]
    if nz.size == 0 or nz.min() <= 0 or not np.allclose(nz, nz[0], rtol=0, atol=0):
        return None
    return d != 0


def _orth(A: np.ndarray, rtol: float) -> np.ndarray:
    if A.shape[1] == 0:
        return A
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return U[:, :0]
    return U[:, sv > rtol * sv[0]]


@dataclass(eq=False)
class RangeReduction:
    bases: dict[str, np.ndarray]

    def lift(self, values: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        out = dict(values)
        for name, B in self.bases.items():
            out[name] = B @ values[name] @ B.conj().T
        return out


def reduce_problem(problem: ConicProblem, rtol: float = 1e-10) -> tuple[ConicProblem, RangeReduction]:
    """Compress each complex PSD variable onto the range its constraints can see.

    Let ``U`` span the ranges of every coefficient of ``X`` except budget-type
    ones (positive multiples of coordinate projectors in ``<=`` rows), made
    invariant under those projectors.  Replacing ``X`` by ``P X P`` with ``P``
    the projector onto ``U`` leaves every other constraint value unchanged and
    cannot increase a budget row, so ``X = B Y B^H`` with ``B`` an orthonormal
    basis of ``U`` loses no optimal value.
    """
    bases = {}
    for v in problem.matrix_vars:
        if v.field != "complex" or not v.psd:
            continue
        cols, masks = [], []
        for c in problem.constraints:
            C = c.terms.get(v.name)
            if C is None:
                continue
            mask = _coordinate_projector_mask(C) if c.sense == "<=" else None
            if mask is not None:
                masks.append(mask)
            else:
                cols += [C, C.conj().T]
        if not cols:
            continue
        union = np.zeros(v.size, bool)
        disjoint = True
        for mk in masks:
            disjoint &= not np.any(union & mk)
            union |= mk
        if not disjoint:
            continue
        U = _orth(np.hstack(cols), rtol)
        pieces = [U * mk[:, None] for mk in masks] + [U * (~union)[:, None]]
        B = _orth(np.hstack(pieces), rtol)
        if B.shape[1] == 0:
            B = np.eye(v.size, 1, dtype=complex)
        if B.shape[1] < v.size:
            bases[v.name] = B

    def compress(name, coef):
        B = bases.get(name)
        return coef if B is None else B.conj().T @ coef @ B

    mvars = [MatrixVariable(v.name, bases[v.name].shape[1], v.field, v.psd) if v.name in bases else v
             for v in problem.matrix_vars]
    cons = [AffineConstraint(c.name, c.family, c.sense,
                             {vn: compress(vn, coef) for vn, coef in c.terms.items()}, c.constant)
            for c in problem.constraints]
    reduced = ConicProblem(mvars, problem.vector_vars, problem.objective, cons, problem.epigraph,
                           dict(problem.meta, reduced=True))
    return reduced, RangeReduction(bases)


class Backend(Protocol):
    name: str

    def solve(self, problem: ConicProblem, tol: float) -> tuple[str, dict[str, np.ndarray] | None, dict]:
        """Return ``(status, values, info)``; ``values`` maps variable names to arrays."""


class CvxpyBackend:
    """cvxpy front end; complex PSD blocks are embedded into real cones by cvxpy.

    The FIM variable is equilibrated by a fixed positive diagonal before it
    reaches the solver (``J = D Jn D``); the Schur blocks are rescaled
    accordingly so the feasible set is unchanged.
    """

    def __init__(self, solver: str = "CLARABEL", verbose: bool = False, equilibrate: bool = True):
        self.name = f"cvxpy/{solver}"
        self.solver = solver
        self.verbose = verbose
        self.equilibrate = equilibrate

    def _solver_opts(self, tol: float) -> dict:
        if self.solver == "CLARABEL":
            return dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, tol_ktratio=1e-6,
                        max_iter=400)
        if self.solver == "SCS":
            return dict(eps_abs=tol, eps_rel=tol, max_iters=200_000)
        if self.solver == "CVXOPT":
            return dict(abstol=tol, reltol=tol, feastol=tol)
        return {}

    def solve(self, problem, tol):
        import cvxpy as cp

        X = {}
        cons = []
        for v in problem.matrix_vars:
            if v.field == "complex":
                X[v.name] = cp.Variable((v.size, v.size), hermitian=True, name=v.name)
            else:
                X[v.name] = cp.Variable((v.size, v.size), symmetric=True, name=v.name)
            if v.psd:
                cons.append(X[v.name] >> 0)
        for v in problem.vector_vars:
            X[v.name] = cp.Variable(v.size, name=v.name)

        d = np.ones(problem.meta.get("dim", 0))
        if self.equilibrate and "fim_scale" in problem.meta:
            d = np.sqrt(problem.meta["fim_scale"])
        J_scale = np.outer(d, d)

        def coef_for(vn, coef):
            if vn == "J" and self.equilibrate:
                return coef * J_scale.T
            return coef

        for sense in ("==", "<="):
            group = [c for c in problem.constraints if c.sense == sense]
            if not group:
                continue
            used = sorted({vn for c in group for vn in c.terms})
            expr = np.array([c.constant for c in group])
            row_scale = np.array([_row_norm(c) for c in group])
            expr = expr / row_scale
            for vn in used:
                var = X[vn]
                rows = []
                for c, rs in zip(group, row_scale):
                    coef = c.terms.get(vn)
                    if coef is None:
                        rows.append(np.zeros(int(np.prod(var.shape)), dtype=complex))
                    else:
                        # Re Tr(C X) = Re(vec_C(C) . vec_F(X))
                        rows.append(np.ravel(coef_for(vn, coef)) / rs)
                A = np.array(rows)
                if np.iscomplexobj(A) and not np.any(A.imag):
                    A = A.real
                if var.ndim == 2:
                    term = A @ cp.vec(var, order="F")
                else:
                    term = A @ var
                expr = expr + (cp.real(term) if np.iscomplexobj(A) or var.is_complex() else term)
            cons.append(expr == 0 if sense == "==" else expr <= 0)

        for b in problem.epigraph:
            J = X[b.matrix]
            t = X[b.scalar]
            e = np.zeros((J.shape[0], 1))
            e[b.index, 0] = 1.0
            tt = cp.reshape(t[b.index] * d[b.index] ** 2, (1, 1), order="F")
            blk = cp.bmat([[J, e], [e.T, tt]])
            cons.append(blk >> 0)

        obj = sum(coef @ X[vn] for vn, coef in problem.objective.items())
        prob = cp.Problem(cp.Minimize(obj), cons)
        info = {}
        try:
            with warnings.catch_warnings():
                # inaccurate solutions are flagged in the report instead
                warnings.simplefilter("ignore", UserWarning)
                prob.solve(solver=self.solver, verbose=self.verbose, **self._solver_opts(tol))
        except cp.error.SolverError as exc:
            return NUMERICAL_FAILURE, None, {"message": str(exc)}
        stats = prob.solver_stats
        info["iterations"] = getattr(stats, "num_iters", None)
        info["message"] = prob.status
        if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return INFEASIBLE, None, info
        if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or (
                "t" in X and X["t"].value is None):
            return NUMERICAL_FAILURE, None, info
        values = {name: np.asarray(var.value) for name, var in X.items()}
        if self.equilibrate and "J" in values:
            values["J"] = values["J"] * J_scale
        info["inaccurate"] = prob.status == cp.OPTIMAL_INACCURATE
        return OPTIMAL, values, info


def _row_norm(c: AffineConstraint) -> float:
    # row equilibration: largest coefficient magnitude, J rows excluded
    mags = [np.abs(coef).max() for vn, coef in c.terms.items() if vn != "J" and np.size(coef)]
    mags.append(abs(c.constant))
    m = max(mags) if mags else 1.0
    return m if m > 0 else 1.0


def _fim_reference_scale(scenario: Scenario, op: FimOperator) -> np.ndarray:
    """Diagonal of J under isotropic full-power transmission, floored to stay positive."""
    P = scenario.config.power_budgets
    N, M, S = scenario.N, scenario.M, scenario.S
    R = np.stack([P[m] / N * np.eye(N) for m in range(M)]).astype(complex)
    v = LiftedVariables(np.zeros((S, N * M, N * M), complex), R)
    diag = np.diag(evaluate_fim(op, v)).copy()
    floor = diag.max() * 1e-12 if diag.max() > 0 else 1.0
    return np.maximum(diag, floor)


def values_to_lifted(values: dict[str, np.ndarray], S: int, M: int) -> LiftedVariables:
    W = np.stack([values[_stream(s)] for s in range(S)])
    R = np.stack([values[_an(m)] for m in range(M)])
    return LiftedVariables(W, R)


def lifted_to_values(v: LiftedVariables, fim: np.ndarray, t: np.ndarray) -> dict[str, np.ndarray]:
    values = {_stream(s): v.W[s] for s in range(v.S)}
    values.update({_an(m): v.R[m] for m in range(v.M)})
    values["J"] = fim
    values["t"] = np.asarray(t, float)
    return values


def solve(problem: ConicProblem, tol: float | None = None, backend: Backend | None = None,
          fim_op: FimOperator | None = None, reduce: bool = True) -> SolveResult:
    """Solve ``problem``; infeasible and failed solves come back as reports, not exceptions.

    With ``fim_op`` the returned FIM is re-evaluated from the returned design
    instead of taken from the solver's auxiliary variable.  ``reduce`` applies
    :func:`reduce_problem` before the backend sees the problem.
    """
    backend = backend or CvxpyBackend()
    if tol is None:
        tol = default_tolerance(problem.meta["N"])
    t0 = time.perf_counter()
    if reduce:
        inner, reduction = reduce_problem(problem)
    else:
        inner, reduction = problem, RangeReduction({})
    status, values, info = backend.solve(inner, tol)
    if status == NUMERICAL_FAILURE and problem.epigraph:
        # the epigraph can drive the solver off along an infeasibility ray;
        # settle feasibility without it
        fstatus, slack = phase_one(problem, tol=tol, backend=backend)
        if fstatus == INFEASIBLE:
            status = INFEASIBLE
        info = dict(info, message=f"{info.get('message', '')}; phase-one {fstatus}, slack {slack:.3e}")
    if values is not None:
        values = reduction.lift(values)
    wall = time.perf_counter() - t0
    report = SolveReport(status=status, iterations=info.get("iterations"), wall_time=wall,
                         solver=backend.name, message=str(info.get("message", "")))
    if status != OPTIMAL:
        log.info("solve ended with status %s (%s)", status, report.message)
        return SolveResult(None, None, report, raw=info)
    S, M = problem.meta["S"], problem.meta["M"]
    v = values_to_lifted(values, S, M)
    t = np.asarray(values["t"], float)
    if fim_op is not None:
        J = evaluate_fim(fim_op, v)
    else:
        J = values["J"]
    values["J"] = J
    worst, slack = check_solution(problem, values)
    report.objective = float(t.sum())
    report.max_primal_residual = worst
    report.slack = slack
    if worst > max(100 * tol, 1e-6):
        log.warning("primal residual %.2e above tolerance", worst)
    return SolveResult(v, t, report, fim=J, raw=info)


def feasibility_problem(problem: ConicProblem, families=("sinr", "snr", "power")) -> ConicProblem:
    """Phase-one program: minimise the largest normalised violation of the soft rows.

    Power rows stay hard, so the program is always feasible and bounded; the
    listed families are jointly feasible iff the optimal slack is <= 0.
    """
    cons = [AffineConstraint("slack_floor", "slack", "<=", {"slack": -np.ones(1)}, -1.0)]
    for c in problem.constraints:
        if c.family not in families:
            continue
        if c.family == "power":
            cons.append(c)
            continue
        rn = _row_norm(c)
        terms = {vn: coef / rn for vn, coef in c.terms.items()}
        terms["slack"] = -np.ones(1)
        cons.append(AffineConstraint(c.name, c.family, c.sense, terms, c.constant / rn))
    mats = [v for v in problem.matrix_vars if v.name.startswith(("W", "R"))]
    return ConicProblem(mats, [VectorVariable("slack", 1)], {"slack": np.ones(1)}, cons, [],
                        dict(problem.meta))


def phase_one(problem: ConicProblem, families=("sinr", "snr", "power"), tol: float | None = None,
              backend: Backend | None = None) -> tuple[str, float]:
    """``(OPTIMAL | INFEASIBLE | NUMERICAL_FAILURE, optimal slack)`` for the listed families."""
    backend = backend or CvxpyBackend()
    if tol is None:
        tol = default_tolerance(problem.meta["N"])
    sub, _ = reduce_problem(feasibility_problem(problem, families))
    status, values, _ = backend.solve(sub, tol)
    if status != OPTIMAL:
        return status, float("nan")
    slack = float(values["slack"][0])
    return (INFEASIBLE if slack > PHASE_ONE_MARGIN else OPTIMAL), slack


def epigraph_gap(result: SolveResult) -> float:
    """``|sum t - Tr(J^-1)| / Tr(J^-1)`` with ``J`` evaluated from the returned design."""
    ti = trace_inverse(result.fim)
    return abs(float(result.epigraph.sum()) - ti) / ti


def diagnose_infeasibility(scenario: Scenario, tol: float | None = None,
                           backend: Backend | None = None) -> str | None:
    """First constraint family whose addition makes the problem infeasible.

    Probes power-only, then power+SINR, then power+SINR+SNR.  Returns ``None``
    when all stages are feasible.
    """
    full = build_problem(scenario)
    backend = backend or CvxpyBackend()
    if tol is None:
        tol = default_tolerance(scenario.N)
    for label, fams in (("power", ("power",)), ("sinr", ("power", "sinr")),
                        ("snr", ("power", "sinr", "snr"))):
        if phase_one(full, fams, tol, backend)[0] == INFEASIBLE:
            return label
    return None


def export_problem(problem: ConicProblem, path) -> None:
    """Write a sparse text dump of the conic program.

    Format: header lines ``var <name> <kind> <size> <psd>``, then one block per
    constraint ``con <name> <family> <sense> <constant>`` followed by
    ``<var> <row> <col> <re> <im>`` lines for each nonzero coefficient, then
    ``epi <name> <matrix> <scalar> <index>`` and ``obj <var> <idx> <coef>``.
    """
    with open(path, "w") as fh:
        for v in problem.matrix_vars:
            fh.write(f"var {v.name} {v.field} {v.size} {int(v.psd)}\n")
        for v in problem.vector_vars:
            fh.write(f"var {v.name} vector {v.size} 0\n")
        for c in problem.constraints:
            fh.write(f"con {c.name} {c.family} {c.sense} {c.constant:.17g}\n")
            for vn, coef in c.terms.items():
                arr = np.atleast_2d(coef) if np.ndim(coef) == 2 else coef[None, :]
                for r, col in zip(*np.nonzero(arr)):
                    z = complex(arr[r, col])
                    fh.write(f"{vn} {r} {col} {z.real:.17g} {z.imag:.17g}\n")
        for b in problem.epigraph:
            fh.write(f"epi {b.name} {b.matrix} {b.scalar} {b.index}\n")
        for vn, coef in problem.objective.items():
            for i, c in enumerate(np.ravel(coef)):
                if c:
                    fh.write(f"obj {vn} {i} {c:.17g}\n")
