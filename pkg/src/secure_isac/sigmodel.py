"""Waveform model and closed-form performance metrics.

Every metric comes in two flavours: the lifted form over stream covariances
``W_s`` and AN covariances ``R_m`` (what the SDP sees) and the beamformer form
over precoders ``f_{m,s}``.  Beamformer metrics are expectation-level: unit
power symbols, one symbol per stream shared by all APs, independent AN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario, steering_vector


def hermitian(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))


@dataclass(frozen=True, eq=False)
class LiftedVariables:
    """Stream covariances ``W`` (S, NM, NM) and AN covariances ``R`` (M, N, N)."""

    W: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        R = np.asarray(self.R, dtype=complex)
        if W.ndim != 3 or W.shape[1] != W.shape[2]:
            raise ValueError(f"W must have shape (S, NM, NM), got {W.shape}")
        if R.ndim != 3 or R.shape[1] != R.shape[2]:
            raise ValueError(f"R must have shape (M, N, N), got {R.shape}")
        if W.shape[1] != R.shape[0] * R.shape[1]:
            raise ValueError("W blocks must be N*M with N, M taken from R")
        object.__setattr__(self, "W", hermitian(W))
        object.__setattr__(self, "R", hermitian(R))

    @classmethod
    def zeros(cls, S: int, M: int, N: int) -> "LiftedVariables":
        return cls(np.zeros((S, N * M, N * M), complex), np.zeros((M, N, N), complex))

    @property
    def S(self) -> int:
        return self.W.shape[0]

    @property
    def M(self) -> int:
        return self.R.shape[0]

    @property
    def N(self) -> int:
        return self.R.shape[1]

    def block(self, s: int, m: int) -> np.ndarray:
        """``W_{m,s}``: m-th N x N diagonal block of ``W_s``."""
        N = self.N
        return self.W[s, m * N:(m + 1) * N, m * N:(m + 1) * N]

    def diagonal_blocks(self) -> np.ndarray:
        """All ``W_{m,s}`` as an array of shape (S, M, N, N)."""
        N, M = self.N, self.M
        Wr = self.W.reshape(self.S, M, N, M, N)
        return np.stack([Wr[:, m, :, m, :] for m in range(M)], axis=1)

    def transmit_covariance(self) -> np.ndarray:
        """Per-AP covariance ``sum_s W_{m,s} + R_m`` (M, N, N)."""
        return self.diagonal_blocks().sum(axis=0) + self.R

    def scaled(self, c: float) -> "LiftedVariables":
        return LiftedVariables(c * self.W, c * self.R)

    def __add__(self, other: "LiftedVariables") -> "LiftedVariables":
        return LiftedVariables(self.W + other.W, self.R + other.R)

    def min_eigenvalues(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigvalsh(self.W)[:, 0], np.linalg.eigvalsh(self.R)[:, 0]


@dataclass(frozen=True, eq=False)
class BeamformerSet:
    """Precoders ``f[s, m]`` of length N; ``stacked(s)`` gives ``f_s`` (NM,)."""

    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        if f.ndim != 3:
            raise ValueError("f must have shape (S, M, N)")
        object.__setattr__(self, "f", f)

    @classmethod
    def from_stacked(cls, fs: np.ndarray, M: int) -> "BeamformerSet":
        fs = np.asarray(fs, dtype=complex)
        return cls(fs.reshape(fs.shape[0], M, -1))

    @property
    def S(self) -> int:
        return self.f.shape[0]

    @property
    def M(self) -> int:
        return self.f.shape[1]

    @property
    def N(self) -> int:
        return self.f.shape[2]

    def stacked(self, s: int | None = None) -> np.ndarray:
        fs = self.f.reshape(self.S, -1)
        return fs if s is None else fs[s]

    def lift(self, R: np.ndarray | None = None) -> LiftedVariables:
        fs = self.stacked()
        W = np.einsum("si,sj->sij", fs, fs.conj())
        if R is None:
            R = np.zeros((self.M, self.N, self.N), complex)
        return LiftedVariables(W, R)


def _check(scenario: Scenario, v: LiftedVariables) -> None:
    if v.M != scenario.M or v.N != scenario.N:
        raise ValueError(
            f"variables sized for M={v.M}, N={v.N}; scenario has M={scenario.M}, N={scenario.N}")


def sinr_terms(scenario: Scenario, v: LiftedVariables, k: int) -> tuple[float, float]:
    """Numerator and denominator of the lifted SINR of UE ``k``."""
    _check(scenario, v)
    if not 0 <= k < scenario.K:
        raise IndexError(f"UE index {k} out of range")
    hk = scenario.h_stacked(k)
    quad = np.real(np.einsum("i,sij,j->s", hk.conj(), v.W, hk))
    an = sum(np.real(scenario.h[k, m].conj() @ v.R[m] @ scenario.h[k, m]) for m in range(v.M))
    num = quad[k]
    den = quad.sum() - quad[k] + an + scenario.config.sigma2_c
    return float(num), float(den)


def sinr_ue(scenario: Scenario, v: LiftedVariables, k: int) -> float:
    num, den = sinr_terms(scenario, v, k)
    return num / den


def snr_eve_terms(scenario: Scenario, v: LiftedVariables) -> tuple[float, float]:
    _check(scenario, v)
    d2 = np.diag(scenario.config.delta2_matrix)
    blocks = v.diagonal_blocks()
    num = den = 0.0
    for m in range(v.M):
        a = scenario.steering(m)
        num += d2[m] * sum(np.real(a.conj() @ blocks[s, m] @ a) for s in range(v.S))
        den += d2[m] * np.real(a.conj() @ v.R[m] @ a)
    return float(num), float(den + scenario.config.sigma2_s)


def snr_eve(scenario: Scenario, v: LiftedVariables) -> float:
    num, den = snr_eve_terms(scenario, v)
    return num / den


def ap_power(v: LiftedVariables, m: int) -> float:
    if not 0 <= m < v.M:
        raise IndexError(f"AP index {m} out of range")
    return float(np.real(np.trace(v.transmit_covariance()[m])))


def sinr_from_beamformers(scenario: Scenario, bf: BeamformerSet, R: np.ndarray,
                          k: int, coherent: bool = True) -> float:
    """SINR of UE ``k`` from precoders.

    With ``coherent=True`` the APs send the same stream symbol, so the desired
    and interfering amplitudes add across APs before squaring.  ``coherent=False``
    sums per-AP powers instead (independent symbols per AP); that value equals
    the lifted SINR of the block-diagonal part of each ``W_s``.
    """
    h = scenario.h[k]  # (M, N)
    amp = np.einsum("mn,smn->sm", h.conj(), bf.f)  # h_{m,k}^H f_{m,s}
    if coherent:
        pw = np.abs(amp.sum(axis=1)) ** 2
    else:
        pw = (np.abs(amp) ** 2).sum(axis=1)
    an = sum(np.real(h[m].conj() @ R[m] @ h[m]) for m in range(scenario.M))
    return float(pw[k] / (pw.sum() - pw[k] + an + scenario.config.sigma2_c))


def snr_eve_from_beamformers(scenario: Scenario, bf: BeamformerSet, R: np.ndarray) -> float:
    d2 = np.diag(scenario.config.delta2_matrix)
    num = den = 0.0
    for m in range(scenario.M):
        a = scenario.steering(m)
        num += d2[m] * np.sum(np.abs(bf.f[:, m, :] @ a.conj()) ** 2)
        den += d2[m] * abs(a.conj() @ R[m] @ a)
    return float(num / (den + scenario.config.sigma2_s))


def an_beampattern(R_m: np.ndarray, theta_grid, normalize: bool = True) -> tuple[np.ndarray, bool]:
    """AN beampattern ``10 log10 ||a(theta)^H R_m||^2`` over ``theta_grid`` (rad).

    Returns ``(pattern_db, degenerate)``.  A zero covariance yields a flat 0 dB
    pattern with ``degenerate=True``.  With ``normalize`` the grid maximum is 0 dB.
    """
    grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("theta grid is empty")
    N = R_m.shape[0]
    A = np.stack([steering_vector(t, N) for t in grid])  # (G, N)
    power = np.sum(np.abs(A.conj() @ R_m) ** 2, axis=1)
    if not np.any(power > 0):
        return np.zeros_like(grid), True
    db = 10 * np.log10(np.maximum(power, np.finfo(float).tiny))
    if normalize:
        db = db - db.max()
    return db, False


def quadratic_beampattern(R_m: np.ndarray, theta_grid, normalize: bool = True) -> np.ndarray:
    """``10 log10 a(theta)^H R_m a(theta)``; cross-check for :func:`an_beampattern`."""
    grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    N = R_m.shape[0]
    A = np.stack([steering_vector(t, N) for t in grid])
    power = np.real(np.einsum("gi,ij,gj->g", A.conj(), R_m, A))
    db = 10 * np.log10(np.maximum(power, np.finfo(float).tiny))
    return db - db.max() if normalize else db
