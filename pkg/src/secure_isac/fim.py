"""Fisher information of the multistatic echo model as a linear map of the design.

The noise-free echo of stream ``s`` stacked over receiving APs is
``g_s = G(eta) phi_s`` where block ``(m, m')`` of ``G`` is
``alpha[m, m'] a(theta_m) a(theta_m')^H``.  Symbols and AN are uncorrelated
across APs, so the second moment of ``phi_s`` is block diagonal with blocks
``W_{m,s} + R_m / S`` and every FIM entry reduces to

    J_ij = (2 / sigma_s^2) sum_m Re Tr(Phi^{ij}_m Q_m),
    Q_m  = sum_s W_{m,s} + R_m,

with ``Phi^{ij}_m`` the Hermitian part of the m-th diagonal block of
``dG_i^H dG_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .scenario import Scenario, steering_derivative, steering_vector
from .sigmodel import LiftedVariables, hermitian


class SingularFimError(np.linalg.LinAlgError):
    def __init__(self, rank: int, dim: int):
        super().__init__(f"FIM is singular: rank {rank} < {dim} (deficiency {dim - rank})")
        self.rank = rank
        self.dim = dim
        self.deficiency = dim - rank


@dataclass(frozen=True)
class EtaLayout:
    """Ordering of ``eta = [Re a_11, Im a_11, ..., Re a_MM, Im a_MM, theta_1..theta_M]``.

    Gains are enumerated receiver-major: pair ``(m, mp)`` (rx ``m``, tx ``mp``)
    sits at ``2 * (m * M + mp)``.
    """

    M: int

    @property
    def dim(self) -> int:
        return 2 * self.M**2 + self.M

    def re_alpha(self, m: int, mp: int) -> int:
        return 2 * (m * self.M + mp)

    def im_alpha(self, m: int, mp: int) -> int:
        return 2 * (m * self.M + mp) + 1

    def theta(self, m: int) -> int:
        return 2 * self.M**2 + m

    def labels(self) -> list[str]:
        out = []
        for m in range(self.M):
            for mp in range(self.M):
                out += [f"re_alpha_{m + 1}{mp + 1}", f"im_alpha_{m + 1}{mp + 1}"]
        return out + [f"theta_{m + 1}" for m in range(self.M)]


@dataclass(frozen=True, eq=False)
class FimOperator:
    """``J(vars) = constant + scale * sum_m Re Tr(phi[i, j, m] Q_m)``."""

    layout: EtaLayout
    phi: np.ndarray  # (dim, dim, M, N, N), Hermitian in the last two axes
    scale: float
    constant: np.ndarray
    S: int

    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def N(self) -> int:
        return self.phi.shape[-1]

    def coeff_R(self, i: int, j: int, m: int) -> np.ndarray:
        """``D^{ij}_m``: J_ij picks up ``scale * Re Tr(D R_m)``."""
        return self.phi[i, j, m]

    def coeff_W(self, i: int, j: int, s: int | None = None) -> np.ndarray:
        """``C^{ij}_s`` (NM x NM, block diagonal, identical for every stream)."""
        return linalg.block_diag(*self.phi[i, j])

    def __call__(self, v: LiftedVariables) -> np.ndarray:
        return evaluate_fim(self, v)


def _gain_operator_derivatives(scenario: Scenario) -> np.ndarray:
    """Analytic ``dG/d eta_i`` for every component, shape (dim, NM, NM)."""
    M, N = scenario.M, scenario.N
    lay = EtaLayout(M)
    a = [steering_vector(t, N) for t in scenario.theta]
    da = [steering_derivative(t, N) for t in scenario.theta]
    alpha = scenario.alpha
    dG = np.zeros((lay.dim, N * M, N * M), dtype=complex)

    def blk(m, mp):
        return slice(m * N, (m + 1) * N), slice(mp * N, (mp + 1) * N)

    for m in range(M):
        for mp in range(M):
            outer = np.outer(a[m], a[mp].conj())
            dG[lay.re_alpha(m, mp)][blk(m, mp)] = outer
            dG[lay.im_alpha(m, mp)][blk(m, mp)] = 1j * outer
    for p in range(M):
        D = dG[lay.theta(p)]
        for m in range(M):
            for mp in range(M):
                term = np.zeros((N, N), dtype=complex)
                if m == p:  # receive side
                    term += np.outer(da[m], a[mp].conj())
                if mp == p:  # transmit side
                    term += np.outer(a[m], da[mp].conj())
                D[blk(m, mp)] = alpha[m, mp] * term
    return dG


def assemble_fim_operator(scenario: Scenario) -> FimOperator:
    M, N = scenario.M, scenario.N
    lay = EtaLayout(M)
    dG = _gain_operator_derivatives(scenario)
    # products[i, j] = dG_i^H dG_j
    products = np.einsum("iab,jac->ijbc", dG.conj(), dG)
    phi = np.empty((lay.dim, lay.dim, M, N, N), dtype=complex)
    for m in range(M):
        sl = slice(m * N, (m + 1) * N)
        phi[:, :, m] = hermitian(products[:, :, sl, sl])
    # Hermitian parts of dG_i^H dG_j and its adjoint coincide; average for exact J_ij == J_ji
    phi = 0.5 * (phi + np.swapaxes(phi, 0, 1))
    return FimOperator(
        layout=lay,
        phi=phi,
        scale=2.0 / scenario.config.sigma2_s,
        constant=np.zeros((lay.dim, lay.dim)),
        S=scenario.S,
    )


def evaluate_fim(op: FimOperator, v: LiftedVariables) -> np.ndarray:
    if v.M != op.phi.shape[2] or v.N != op.N:
        raise ValueError("variables do not match the FIM operator dimensions")
    Q = v.transmit_covariance()
    # Re Tr(Phi Q) = Re sum_ab Phi_ab Q_ba
    J = op.scale * np.real(np.einsum("ijmab,mba->ij", op.phi, Q))
    J = op.constant + J
    return 0.5 * (J + J.T)


def _checked_inverse(J: np.ndarray) -> np.ndarray:
    dim = J.shape[0]
    rank = np.linalg.matrix_rank(J, tol=dim * np.finfo(float).eps * np.abs(J).max())
    if rank < dim:
        raise SingularFimError(rank, dim)
    try:
        c, low = linalg.cho_factor(J)
        return linalg.cho_solve((c, low), np.eye(dim))
    except linalg.LinAlgError:
        # symmetric indefinite fallback keeps failure explicit for singular J
        return linalg.solve(J, np.eye(dim), assume_a="sym")


def crb_from_fim(J: np.ndarray, M: int) -> np.ndarray:
    """Square-root CRB on the angles in degrees (FIM in radians)."""
    Jinv = _checked_inverse(J)
    base = 2 * M**2
    var = np.diag(Jinv)[base:base + M]
    if np.any(var <= 0):
        raise SingularFimError(np.linalg.matrix_rank(J), J.shape[0])
    return np.degrees(np.sqrt(var))


def crb_theta(op: FimOperator, v: LiftedVariables) -> np.ndarray:
    return crb_from_fim(evaluate_fim(op, v), op.layout.M)


def trace_inverse(J: np.ndarray) -> float:
    return float(np.trace(_checked_inverse(J)))
