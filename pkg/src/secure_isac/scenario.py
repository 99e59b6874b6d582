"""Network geometry, channels and ULA steering vectors.

Angle convention: every AP carries a ULA whose axis is parallel to the x-axis,
so the array broadside points along +y.  The angle of a point (x, y) seen from
an AP at (x0, y0) is ``atan2(x - x0, y - y0)``: zero straight ahead, positive
towards +x.  The same convention is used for the target, the UEs and all
beampattern grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER_HZ = 3.5e9

# Layout used in the simulation study: two APs 70 m apart, UEs dropped in a
# 40 x 40 m box in front of them.
DEFAULT_AP_POSITIONS = ((10.0, 0.0), (80.0, 0.0))
DEFAULT_UE_BOX = (25.0, 65.0, 10.0, 50.0)  # x_min, x_max, y_min, y_max
DEFAULT_EVE_POSITION = (60.0, 20.0)


def steering_vector(theta: float, N: int) -> np.ndarray:
    """Half-wavelength ULA response, ``a_n = exp(j*pi*n*sin(theta))``."""
    n = np.arange(N)
    return np.exp(1j * np.pi * n * np.sin(theta))


def steering_derivative(theta: float, N: int) -> np.ndarray:
    """Derivative of :func:`steering_vector` with respect to ``theta``."""
    n = np.arange(N)
    return 1j * np.pi * n * np.cos(theta) * np.exp(1j * np.pi * n * np.sin(theta))


def angle_from(origin: Sequence[float], point: Sequence[float]) -> float:
    """Broadside angle (rad) of ``point`` seen from an array at ``origin``."""
    dx = point[0] - origin[0]
    dy = point[1] - origin[1]
    return float(np.arctan2(dx, dy))


@dataclass(frozen=True)
class ScenarioConfig:
    ap_positions: tuple[tuple[float, float], ...]
    ue_positions: tuple[tuple[float, float], ...]
    eve_position: tuple[float, float]
    N: int = 30
    P_m: float | tuple[float, ...] = 1.0
    sigma2_c: float = 1.0
    sigma2_s: float = 1.0
    delta2: float | tuple[tuple[float, ...], ...] = 0.1
    gamma: float | tuple[float, ...] = 1.0
    psi: float = 1.0
    rng_seed: int = 0
    pathloss: str = "unit"
    carrier_hz: float = DEFAULT_CARRIER_HZ

    def __post_init__(self):
        # normalise list inputs so the config stays hashable and comparable
        object.__setattr__(self, "ap_positions", tuple(tuple(map(float, p)) for p in self.ap_positions))
        object.__setattr__(self, "ue_positions", tuple(tuple(map(float, p)) for p in self.ue_positions))
        object.__setattr__(self, "eve_position", tuple(map(float, self.eve_position)))
        for name in ("P_m", "gamma"):
            v = getattr(self, name)
            if not np.isscalar(v):
                object.__setattr__(self, name, tuple(map(float, v)))
        if not np.isscalar(self.delta2):
            object.__setattr__(self, "delta2", tuple(tuple(map(float, r)) for r in self.delta2))
        self.validate()

    @property
    def M(self) -> int:
        return len(self.ap_positions)

    @property
    def K(self) -> int:
        return len(self.ue_positions)

    @property
    def S(self) -> int:
        return self.K + 1

    @property
    def power_budgets(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.P_m, dtype=float), (self.M,)).copy()

    @property
    def gammas(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.gamma, dtype=float), (self.K,)).copy()

    @property
    def delta2_matrix(self) -> np.ndarray:
        """Swerling-I variances indexed ``[rx, tx]``."""
        return np.broadcast_to(np.asarray(self.delta2, dtype=float), (self.M, self.M)).copy()

    def validate(self) -> None:
        pts = [*self.ap_positions, *self.ue_positions, self.eve_position]
        if any(len(p) != 2 for p in pts):
            raise ValueError("positions must be 2-D coordinates")
        if not np.all(np.isfinite(np.asarray(pts, dtype=float))):
            raise ValueError("positions must be finite")
        if self.M < 1:
            raise ValueError("at least one AP is required")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if np.any(self.power_budgets <= 0):
            raise ValueError("power budgets must be positive")
        if self.sigma2_c <= 0 or self.sigma2_s <= 0:
            raise ValueError("noise variances must be positive")
        if np.any(self.delta2_matrix <= 0):
            raise ValueError("delta2 must be positive for every AP pair")
        if np.any(self.gammas < 0):
            raise ValueError("gamma must be non-negative")
        if not self.psi > 0:
            raise ValueError("psi must be positive")
        if self.pathloss not in ("unit", "free_space"):
            raise ValueError(f"unknown pathloss model {self.pathloss!r}")
        for ap in self.ap_positions:
            if np.allclose(ap, self.eve_position):
                raise ValueError("eve coincides with an AP; angle undefined")

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable realisation of a :class:`ScenarioConfig`.

    ``alpha[m, mp]`` is the gain from transmitting AP ``mp`` to receiving AP
    ``m``; ``h[k, m]`` is the length-N channel from AP ``m`` to UE ``k``.
    """

    config: ScenarioConfig
    theta: np.ndarray
    alpha: np.ndarray
    h: np.ndarray
    ue_angles: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.config.M

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def S(self) -> int:
        return self.config.S

    @property
    def fim_dim(self) -> int:
        return 2 * self.M**2 + self.M

    def h_stacked(self, k: int) -> np.ndarray:
        """Stacked channel ``h_k`` of length N*M."""
        return self.h[k].reshape(-1)

    def steering(self, m: int) -> np.ndarray:
        return steering_vector(self.theta[m], self.N)


def draw_alpha(delta2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Swerling-I draw, ``alpha ~ CN(0, delta2)`` entrywise."""
    scale = np.sqrt(delta2 / 2.0)
    return scale * (rng.standard_normal(delta2.shape) + 1j * rng.standard_normal(delta2.shape))


def los_channel(ap: Sequence[float], ue: Sequence[float], N: int, pathloss: str,
                carrier_hz: float) -> np.ndarray:
    d = float(np.hypot(ue[0] - ap[0], ue[1] - ap[1]))
    lam = SPEED_OF_LIGHT / carrier_hz
    if pathloss == "unit":
        beta = 1.0
    else:
        beta = (lam / (4 * np.pi * d)) ** 2
    phase = np.exp(-2j * np.pi * d / lam)
    return np.sqrt(beta) * phase * steering_vector(angle_from(ap, ue), N)


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Realise geometry, Swerling gains and LoS UE channels from ``config``."""
    config.validate()
    M, K, N = config.M, config.K, config.N
    theta = np.array([angle_from(ap, config.eve_position) for ap in config.ap_positions])
    rng = np.random.default_rng(config.rng_seed)
    alpha = draw_alpha(config.delta2_matrix, rng)

    ue_angles = np.zeros((K, M))
    h = np.zeros((K, M, N), dtype=complex)
    for k, ue in enumerate(config.ue_positions):
        for m, ap in enumerate(config.ap_positions):
            if np.allclose(ap, ue):
                raise ValueError(f"UE {k} coincides with AP {m}")
            ue_angles[k, m] = angle_from(ap, ue)
            h[k, m] = los_channel(ap, ue, N, config.pathloss, config.carrier_hz)
    for arr in (theta, alpha, h, ue_angles):
        arr.setflags(write=False)
    return Scenario(config=config, theta=theta, alpha=alpha, h=h, ue_angles=ue_angles)


def draw_ue_positions(K: int, rng: np.random.Generator,
                      box: Sequence[float] = DEFAULT_UE_BOX) -> tuple[tuple[float, float], ...]:
    """Uniform UE drop inside ``box = (x_min, x_max, y_min, y_max)``."""
    x = rng.uniform(box[0], box[1], size=K)
    y = rng.uniform(box[2], box[3], size=K)
    return tuple((float(a), float(b)) for a, b in zip(x, y))


def close_ue_positions(base: Sequence[Sequence[float]], eve: Sequence[float],
                       offset: float = 0.5) -> tuple[tuple[float, float], ...]:
    """Move the first two UEs to ``offset`` metres left and right of the eve."""
    ues = [tuple(map(float, p)) for p in base]
    if len(ues) < 2:
        raise ValueError("proximity study needs at least two UEs")
    ues[0] = (eve[0] - offset, eve[1])
    ues[1] = (eve[0] + offset, eve[1])
    return tuple(ues)


def two_ap_config(N: int = 30, K: int = 4, gamma: float = 1.0, psi: float = 1.0,
                 rng_seed: int = 0, ue_seed: int | None = None, **overrides) -> ScenarioConfig:
    """Two-AP simulation layout with UEs drawn from ``ue_seed`` (default ``rng_seed``)."""
    ue_rng = np.random.default_rng(rng_seed if ue_seed is None else ue_seed)
    params = dict(
        ap_positions=DEFAULT_AP_POSITIONS,
        ue_positions=draw_ue_positions(K, ue_rng),
        eve_position=DEFAULT_EVE_POSITION,
        N=N, P_m=1.0, sigma2_c=1.0, sigma2_s=1.0, delta2=0.1,
        gamma=gamma, psi=psi, rng_seed=rng_seed,
    )
    params.update(overrides)
    return ScenarioConfig(**params)


def db_to_linear(x: float) -> float:
    return float(10.0 ** (x / 10.0))


def linear_to_db(x: float) -> float:
    return float(10.0 * np.log10(x))


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a config from the parsed TOML layout documented in the README.

    ``[network]`` holds sizes and budgets, ``[geometry]`` the positions and
    ``[constraints]`` the SINR floor / eve ceiling (``*_db`` keys accepted).
    UEs are either listed in ``geometry.ue_positions`` or drawn from
    ``geometry.ue_box`` with ``geometry.num_ues`` and ``geometry.ue_seed``.
    """
    net = data.get("network", {})
    geo = data.get("geometry", {})
    con = data.get("constraints", {})
    if "seed" not in data:
        raise ValueError("config must state an explicit top-level 'seed'")
    seed = int(data["seed"])

    if "ue_positions" in geo:
        ues = tuple(tuple(p) for p in geo["ue_positions"])
    else:
        box = geo.get("ue_box", DEFAULT_UE_BOX)
        ue_rng = np.random.default_rng(int(geo.get("ue_seed", seed)))
        ues = draw_ue_positions(int(geo.get("num_ues", 4)), ue_rng, box)

    def _maybe_db(table, key, default):
        if f"{key}_db" in table:
            v = table[f"{key}_db"]
            return tuple(db_to_linear(x) for x in v) if isinstance(v, list) else db_to_linear(v)
        v = table.get(key, default)
        return tuple(v) if isinstance(v, list) else v

    delta2 = net.get("delta2", 0.1)
    return ScenarioConfig(
        ap_positions=tuple(tuple(p) for p in geo.get("ap_positions", DEFAULT_AP_POSITIONS)),
        ue_positions=ues,
        eve_position=tuple(geo.get("eve_position", DEFAULT_EVE_POSITION)),
        N=int(net.get("N", 30)),
        P_m=tuple(net["P_m"]) if isinstance(net.get("P_m"), list) else float(net.get("P_m", 1.0)),
        sigma2_c=float(net.get("sigma2_c", 1.0)),
        sigma2_s=float(net.get("sigma2_s", 1.0)),
        delta2=tuple(map(tuple, delta2)) if isinstance(delta2, list) else float(delta2),
        gamma=_maybe_db(con, "gamma", 1.0),
        psi=float(_maybe_db(con, "psi", 1.0)),
        rng_seed=seed,
        pathloss=str(net.get("pathloss", "unit")),
        carrier_hz=float(net.get("carrier_hz", DEFAULT_CARRIER_HZ)),
    )


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))
