"""Independent reference computations used to validate the main code paths.

Nothing here imports the FIM operator or the SDP; each oracle works from the
raw echo model or from brute force so that agreement is meaningful.
"""

from __future__ import annotations

import numpy as np

from .scenario import Scenario, steering_vector


def _unpack_eta(eta: np.ndarray, M: int) -> tuple[np.ndarray, np.ndarray]:
    gains = eta[: 2 * M * M].reshape(M, M, 2)
    alpha = gains[..., 0] + 1j * gains[..., 1]  # [rx, tx]
    return alpha, eta[2 * M * M:]


def nominal_eta(scenario: Scenario) -> np.ndarray:
    # (rx, tx, re/im) reshape gives the receiver-major enumeration
    pairs = np.stack([scenario.alpha.real, scenario.alpha.imag], axis=-1).reshape(-1)
    return np.concatenate([pairs, np.asarray(scenario.theta, float)]).astype(float)


def echo_mean(eta: np.ndarray, phi: np.ndarray, M: int, N: int) -> np.ndarray:
    """Noise-free stacked echo for one deterministic transmit vector.

    ``phi`` has shape (M, N) (per-AP transmit samples of a single stream).
    Block ``m`` of the output is ``sum_mp alpha[m, mp] a(theta_m) a(theta_mp)^H phi_mp``.
    """
    alpha, theta = _unpack_eta(eta, M)
    out = np.zeros((M, N), dtype=complex)
    for m in range(M):
        a_rx = steering_vector(theta[m], N)
        for mp in range(M):
            a_tx = steering_vector(theta[mp], N)
            out[m] += alpha[m, mp] * a_rx * (a_tx.conj() @ phi[mp])
    return out.reshape(-1)


def _sqrt_factor(C: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (C + C.conj().T))
    keep = w > 1e-14 * max(w.max(initial=0.0), 1e-300)
    return V[:, keep] * np.sqrt(w[keep])


def fim_finite_difference(scenario: Scenario, W: np.ndarray, R: np.ndarray,
                          step: float = 1e-6) -> np.ndarray:
    """FIM from central differences of the echo model.

    For every stream the per-AP transmit second moment ``W_{m,s} + R_m / S`` is
    factored as ``L L^H``; each column of ``L`` is pushed through
    :func:`echo_mean` and differentiated numerically.  Summing
    ``Re(dg^H dg)`` over columns equals the symbol/AN expectation.
    """
    M, N, S = scenario.M, scenario.N, W.shape[0]
    eta0 = nominal_eta(scenario)
    dim = eta0.size
    J = np.zeros((dim, dim))
    for s in range(S):
        factors = []
        for m in range(M):
            blk = W[s, m * N:(m + 1) * N, m * N:(m + 1) * N] + R[m] / S
            factors.append(_sqrt_factor(blk))
        # APs are uncorrelated: each factor column excites only its own AP
        for m, L in enumerate(factors):
            for c in range(L.shape[1]):
                phi = np.zeros((M, N), dtype=complex)
                phi[m] = L[:, c]
                D = np.empty((M * N, dim), dtype=complex)
                for i in range(dim):
                    e = np.zeros(dim)
                    e[i] = step
                    D[:, i] = (echo_mean(eta0 + e, phi, M, N) - echo_mean(eta0 - e, phi, M, N)) / (2 * step)
                J += np.real(D.conj().T @ D)
    return 2.0 / scenario.config.sigma2_s * J


def fim_closed_form_entries(scenario: Scenario, W: np.ndarray, R: np.ndarray) -> dict:
    """Closed-form FIM families printed for the single-index case.

    Returns ``{("re", m, "re", m): ..., ("re", m, "theta", m): ..., ("theta", m, "theta", m): ...}``
    evaluated for every AP ``m``.  The third family uses the matrix
    ``da da^H`` in its final term.
    """
    M, N, S = scenario.M, scenario.N, W.shape[0]
    alpha = scenario.alpha
    c = 2.0 / scenario.config.sigma2_s
    a = [steering_vector(t, N) for t in scenario.theta]
    n = np.arange(N)
    da = [1j * np.pi * n * np.cos(t) * np.exp(1j * np.pi * n * np.sin(t)) for t in scenario.theta]

    def Q(m, s):
        return W[s, m * N:(m + 1) * N, m * N:(m + 1) * N] + R[m] / S

    out = {}
    for m in range(M):
        A = np.outer(a[m], a[m].conj())
        B = np.outer(da[m], a[m].conj()) + np.outer(a[m], da[m].conj())
        aa = aq = tt = 0.0
        for s in range(S):
            aa += N * np.real(np.trace(Q(m, s) @ A))
            aq += np.real(alpha[m, m] * np.trace(Q(m, s) @ A @ B))
            tt += abs(alpha[m, m]) ** 2 * np.real(np.trace(Q(m, s) @ B.conj().T @ B))
            for mp in range(M):
                if mp == m:
                    continue
                X = np.outer(a[mp], da[m].conj()) @ np.outer(da[m], a[mp].conj())
                tt += abs(alpha[m, mp]) ** 2 * np.real(np.trace(Q(mp, s) @ X))
                tt += N * abs(alpha[mp, m]) ** 2 * np.real(np.trace(Q(m, s) @ np.outer(da[m], da[m].conj())))
        out[("re", m, "re", m)] = c * aa
        out[("re", m, "theta", m)] = c * aq
        out[("theta", m, "theta", m)] = c * tt
    return out


def sinr_upper_bound(scenario: Scenario, k: int) -> float:
    """SINR of UE ``k`` if every AP spent its whole budget on it, noise only."""
    P = scenario.config.power_budgets
    amp = sum(np.sqrt(P[m]) * np.linalg.norm(scenario.h[k, m]) for m in range(scenario.M))
    return float(amp**2 / scenario.config.sigma2_c)


def _gain_matrix_derivatives(scenario: Scenario, step: float = 1e-6) -> np.ndarray:
    """Central differences of the echo map ``phi -> g``, column by column."""
    M, N = scenario.M, scenario.N
    eta0 = nominal_eta(scenario)
    eye = np.eye(M * N).reshape(M * N, M, N)
    out = np.empty((eta0.size, M * N, M * N), dtype=complex)
    for i in range(eta0.size):
        e = np.zeros(eta0.size)
        e[i] = step
        cols = [(echo_mean(eta0 + e, u, M, N) - echo_mean(eta0 - e, u, M, N)) / (2 * step) for u in eye]
        out[i] = np.stack(cols, axis=1)
    return out


def _rank1_objective(scenario: Scenario, phi: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``Tr(J^-1)`` for a batch of single-AP designs ``f`` of shape (B, S, N); inf when singular."""
    scale = 2.0 / scenario.config.sigma2_s
    # Re sum_s f_s^H phi f_s for every (i, j)
    J = scale * np.real(np.einsum("nsa,ijab,nsb->nij", f.conj(), phi, f))
    J = 0.5 * (J + np.swapaxes(J, 1, 2))
    w = np.linalg.eigvalsh(J)
    ok = w[:, 0] > 1e-12 * np.maximum(w[:, -1], 1e-300)
    out = np.full(f.shape[0], np.inf)
    out[ok] = np.sum(1.0 / w[ok], axis=1)
    return out


def _two_stream_designs(x: np.ndarray, P: float) -> np.ndarray:
    # x = (p1, a, b, c, d): power split and two unit directions in C^2
    p1, a, b, c, d = np.moveaxis(np.atleast_2d(x), -1, 0)
    f1 = np.sqrt(p1)[:, None] * np.stack([np.cos(a), np.sin(a) * np.exp(1j * b)], axis=-1)
    f2 = np.sqrt(np.maximum(P - p1, 0.0))[:, None] * np.stack([np.cos(c), np.sin(c) * np.exp(1j * d)], axis=-1)
    return np.stack([f1, f2], axis=1)


def brute_force_single_ap(scenario: Scenario, points: int = 18, polish: int = 5) -> tuple[float, np.ndarray]:
    """Best ``Tr(J^-1)`` over rank-one designs for M = 1, K = 1, N = 2 without AN.

    A uniform grid over the power split and both stream directions (full
    budget, which never hurts the FIM) is searched exhaustively; the best
    feasible points are then polished with SLSQP.  Returns the objective and
    the beamformers (S, N).
    """
    from scipy.optimize import minimize

    if (scenario.M, scenario.K, scenario.N) != (1, 1, 2):
        raise ValueError("brute force is defined for M = 1, K = 1, N = 2")
    cfg = scenario.config
    P = float(cfg.power_budgets[0])
    dG = _gain_matrix_derivatives(scenario)
    phi = np.einsum("iab,jac->ijbc", dG.conj(), dG)
    h = scenario.h[0, 0]
    a_eve = scenario.steering(0)
    d2 = float(np.diag(cfg.delta2_matrix)[0])
    gamma = float(cfg.gammas[0])

    def margins(f):
        g1 = np.abs(f[:, 0] @ h.conj()) ** 2
        g2 = np.abs(f[:, 1] @ h.conj()) ** 2
        sinr = g1 - gamma * (g2 + cfg.sigma2_c)
        eve = cfg.psi * cfg.sigma2_s - d2 * np.sum(np.abs(f @ a_eve.conj()) ** 2, axis=1)
        return np.stack([sinr, eve], axis=1)

    axes = [np.linspace(P / points, P, points), np.linspace(0, np.pi / 2, points),
            np.linspace(0, 2 * np.pi, points, endpoint=False), np.linspace(0, np.pi / 2, points),
            np.linspace(0, 2 * np.pi, points, endpoint=False)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 5)
    best = []
    for chunk in np.array_split(grid, max(1, grid.shape[0] // 200_000)):
        f = _two_stream_designs(chunk, P)
        obj = _rank1_objective(scenario, phi, f)
        obj[np.any(margins(f) < 0, axis=1)] = np.inf
        keep = np.argsort(obj)[:polish]
        best += [(obj[i], chunk[i]) for i in keep if np.isfinite(obj[i])]
    if not best:
        return np.inf, np.zeros((2, 2), complex)
    best.sort(key=lambda t: t[0])
    top_val, top_x = best[0]
    bounds = [(1e-9, P), (0, np.pi / 2), (None, None), (0, np.pi / 2), (None, None)]
    cons = [{"type": "ineq", "fun": lambda x, i=i: margins(_two_stream_designs(x, P))[0, i]} for i in range(2)]
    for _, x0 in best[:polish]:
        res = minimize(lambda x: float(_rank1_objective(scenario, phi, _two_stream_designs(x, P))[0]),
                       x0, method="SLSQP", bounds=bounds, constraints=cons, options={"ftol": 1e-12, "maxiter": 500})
        if res.success and np.all(margins(_two_stream_designs(res.x, P)) >= -1e-9) and res.fun < top_val:
            top_val, top_x = float(res.fun), res.x
    return float(top_val), _two_stream_designs(top_x, P)[0]
