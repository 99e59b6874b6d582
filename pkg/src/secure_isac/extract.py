"""Rank diagnostics, beamformer recovery and AN characterisation of a solved design."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fim import FimOperator, SingularFimError, crb_theta
from .scenario import Scenario
from .sigmodel import (BeamformerSet, LiftedVariables, an_beampattern, ap_power, sinr_ue,
                       snr_eve)

RANK1_RATIO = 1e-3
NEGLIGIBLE = 1e-4  # relative to max(P_m)


class NotTightError(ValueError):
    """A lifted covariance is not (numerically) rank one."""

    def __init__(self, stream: int, spectrum: np.ndarray):
        self.stream = stream
        self.spectrum = np.asarray(spectrum)
        ratio = rank1_ratio(self.spectrum)
        super().__init__(f"W_{stream} is not rank one: lambda2/lambda1 = {ratio:.3g}")
        self.ratio = ratio


def spectrum(X: np.ndarray) -> np.ndarray:
    """Eigenvalues in descending order."""
    return np.linalg.eigvalsh(0.5 * (X + X.conj().T))[::-1]


def rank1_ratio(ev: np.ndarray) -> float:
    if ev.size < 2:
        return 0.0
    if ev[0] <= 0:
        return float("nan")
    return float(max(ev[1], 0.0) / ev[0])


@dataclass
class Thresholds:
    rank1_ratio: float = RANK1_RATIO
    negligible: float = NEGLIGIBLE
    metric_delta: float = 1e-3


@dataclass
class RankReport:
    stream_spectra: list[np.ndarray]
    an_spectra: list[np.ndarray]
    stream_ratios: list[float]
    an_ratios: list[float]
    sensing_max_eig: float
    negligible_an: list[bool]


def rank_report(v: LiftedVariables, K: int, power_scale: float,
                thresholds: Thresholds | None = None) -> RankReport:
    th = thresholds or Thresholds()
    ws = [spectrum(W) for W in v.W]
    rs = [spectrum(R) for R in v.R]
    sensing = float(max(ws[K][0], 0.0)) if v.S > K else 0.0
    return RankReport(
        stream_spectra=ws,
        an_spectra=rs,
        stream_ratios=[rank1_ratio(e) for e in ws],
        an_ratios=[rank1_ratio(e) for e in rs],
        sensing_max_eig=sensing,
        negligible_an=[bool(e[0] < th.negligible * power_scale) for e in rs],
    )


def _dominant(X: np.ndarray) -> tuple[float, np.ndarray]:
    w, U = np.linalg.eigh(0.5 * (X + X.conj().T))
    u = U[:, -1]
    mags = np.abs(u)
    first = int(np.argmax(mags > 1e-9 * mags.max()))
    u = u * np.exp(-1j * np.angle(u[first]))
    return float(max(w[-1], 0.0)), u


def extract_beamformers(v: LiftedVariables, K: int | None = None,
                        max_ratio: float = RANK1_RATIO) -> BeamformerSet:
    """Dominant-eigenpair recovery ``f_s = sqrt(eps_s) u_s`` for the communication streams.

    The first non-negligible entry of every ``u_s`` is made real positive.
    Raises :class:`NotTightError` when a stream fails the rank-one test.
    """
    K = v.S - 1 if K is None else K
    fs = []
    for s in range(K):
        ev = spectrum(v.W[s])
        ratio = rank1_ratio(ev)
        if ev[0] > 0 and not ratio < max_ratio:
            raise NotTightError(s, ev)
        eps, u = _dominant(v.W[s])
        fs.append(np.sqrt(eps) * u)
    return BeamformerSet.from_stacked(np.array(fs).reshape(K, -1), v.M)


@dataclass
class Achieved:
    sinr: np.ndarray
    snr_eve: float
    power: np.ndarray
    crb_deg: np.ndarray


def achieved_metrics(scenario: Scenario, op: FimOperator, v: LiftedVariables) -> Achieved:
    try:
        crb = crb_theta(op, v)
    except SingularFimError:
        crb = np.full(scenario.M, np.inf)
    return Achieved(
        sinr=np.array([sinr_ue(scenario, v, k) for k in range(scenario.K)]),
        snr_eve=snr_eve(scenario, v),
        power=np.array([ap_power(v, m) for m in range(scenario.M)]),
        crb_deg=crb,
    )


@dataclass
class DesignSolution:
    vars: LiftedVariables
    beamformers: BeamformerSet | None
    rank_report: RankReport
    tight: bool
    evidence: dict = field(default_factory=dict)
    achieved: Achieved | None = None
    rank1: Achieved | None = None


def _rel(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, float))
    b = np.atleast_1d(np.asarray(b, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.abs(a - b) / np.maximum(np.abs(b), 1e-300)
    d = np.where((a == b), 0.0, d)
    return float(np.max(d)) if d.size else 0.0


def verify_tightness(v: LiftedVariables, scenario: Scenario, op: FimOperator,
                     thresholds: Thresholds | None = None) -> DesignSolution:
    """Rank tests plus metric deltas between the lifted design and its rank-one rebuild.

    The rebuild keeps the solved AN covariances and drops the sensing stream,
    whose covariance must be negligible for a positive verdict.  AN matrices
    below the negligible level count as rank zero.
    """
    th = thresholds or Thresholds()
    K = scenario.K
    pscale = float(scenario.config.power_budgets.max())
    rep = rank_report(v, K, pscale, th)
    evidence: dict = {}
    ok_streams = all(
        (rep.stream_spectra[s][0] < th.negligible * pscale) or rep.stream_ratios[s] < th.rank1_ratio
        for s in range(K))
    ok_sensing = rep.sensing_max_eig < th.negligible * pscale
    ok_an = all(neg or r < th.rank1_ratio for neg, r in zip(rep.negligible_an, rep.an_ratios))
    evidence.update(rank1_streams=ok_streams, sensing_negligible=ok_sensing, rank1_an=ok_an)

    lifted = achieved_metrics(scenario, op, v)
    bf = None
    rebuilt = None
    if ok_streams:
        bf = extract_beamformers(v, K, max_ratio=np.inf)
        full = np.concatenate([bf.f, np.zeros((scenario.S - K, scenario.M, scenario.N), complex)])
        rebuilt_vars = BeamformerSet(full).lift(v.R)
        rebuilt = achieved_metrics(scenario, op, rebuilt_vars)
        deltas = {
            "sinr": _rel(rebuilt.sinr, lifted.sinr) if K else 0.0,
            "snr_eve": _rel(rebuilt.snr_eve, lifted.snr_eve),
            "power": _rel(rebuilt.power, lifted.power),
            "crb": _rel(rebuilt.crb_deg, lifted.crb_deg),
        }
        evidence["deltas"] = deltas
        ok_deltas = all(d < th.metric_delta for d in deltas.values())
    else:
        ok_deltas = False
    evidence["metric_deltas_ok"] = ok_deltas
    tight = bool(ok_streams and ok_sensing and ok_an and ok_deltas)
    return DesignSolution(vars=v, beamformers=bf, rank_report=rep, tight=tight,
                          evidence=evidence, achieved=lifted, rank1=rebuilt)


@dataclass
class AnCharacter:
    peak_deg: float
    width_deg: float
    rank_ratio: float
    peak_power: float
    sidelobe_db: float
    degenerate: bool
    grid_deg: np.ndarray = field(repr=False)
    pattern_db: np.ndarray = field(repr=False)


def characterize_an(R_m: np.ndarray, scenario: Scenario | None = None, m: int | None = None,
                    step_deg: float = 0.05) -> AnCharacter:
    """Peak direction, -3 dB width, rank ratio and sidelobe level of an AN covariance.

    The pattern is that of the dominant eigen-component.  ``peak_power`` is the
    unnormalised ``||a^H R||^2`` at the peak; ``sidelobe_db`` is the highest
    level outside the main lobe (bounded by the first local minima on either side).
    """
    grid_deg = np.arange(-90.0, 90.0 + step_deg / 2, step_deg)
    grid = np.radians(grid_deg)
    ev = spectrum(R_m)
    lam, u = _dominant(R_m)
    Rd = lam * np.outer(u, u.conj())
    db, degenerate = an_beampattern(Rd, grid, normalize=False)
    if degenerate:
        return AnCharacter(float("nan"), float("nan"), float("nan"), 0.0, float("nan"), True,
                           grid_deg, np.zeros_like(grid_deg))
    i = int(np.argmax(db))
    peak_power = float(10 ** (db[i] / 10))
    rel = db - db[i]
    lo = i
    while lo > 0 and rel[lo - 1] < rel[lo]:
        lo -= 1
    hi = i
    while hi < rel.size - 1 and rel[hi + 1] < rel[hi]:
        hi += 1
    outside = np.concatenate([rel[:lo], rel[hi + 1:]])
    side = float(outside.max()) if outside.size else -np.inf
    above = np.nonzero(rel[lo:hi + 1] >= -3.0)[0] + lo
    width = float(grid_deg[above.max()] - grid_deg[above.min()]) if above.size else 0.0
    return AnCharacter(float(grid_deg[i]), width, rank1_ratio(ev), peak_power, side, False,
                       grid_deg, rel)
