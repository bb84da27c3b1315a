"""Two coupled oscillators, one starting as a classical point and one in a coherent state.

For a quadratic Hamiltonian the Wigner function is carried along classical
trajectories, so means and covariances evolve with the trajectory matrix
``U(t)``: ``m -> U m`` and ``Sigma -> U Sigma U^T``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import MomentState, QuadraticHamiltonian, VariableSet, build_structure, flow_matrix, propagators

PAIR_VARS = VariableSet(("q", "p", "x", "k"))

# (Omega, omega, gamma) of the six published figure panels
FIGURE_CONFIGS = (
    (3.0, 2.0, 1.0),
    (2.0, 3.0, 1.0),
    (2.0, 0.51, 1.0),
    (0.51, 2.0, 1.0),
    (1.73, 1.73, 1.0),
    (1.0, 1.01, 1.0),
)


@dataclass(frozen=True)
class OscPairConfig:
    Omega: float = 3.0
    omega: float = 2.0
    gamma: float = 1.0
    hbar: float = 1.0
    q0: float = 0.0
    p0: float = 0.0
    x0: float = 0.0
    k0: float = 0.0
    sigma_x: float | None = None
    sigma_k: float | None = None

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        # oscillator-matched coherent state: stationary when uncoupled
        if self.sigma_x is None:
            object.__setattr__(self, "sigma_x", float(np.sqrt(self.hbar / (2 * self.omega))))
        if self.sigma_k is None:
            object.__setattr__(self, "sigma_k", float(np.sqrt(self.hbar * self.omega / 2)))

    @property
    def stable(self) -> bool:
        return self.Omega**2 * self.omega**2 > self.gamma**2


@dataclass(frozen=True)
class NormalModes:
    freqs_squared: np.ndarray
    mode_matrix: np.ndarray
    stable: bool


@dataclass(frozen=True)
class DispersionSeries:
    times: np.ndarray
    dq: np.ndarray
    dp: np.ndarray
    dx: np.ndarray
    dk: np.ndarray

    @property
    def dqdp(self) -> np.ndarray:
        return self.dq * self.dp

    @property
    def dxdk(self) -> np.ndarray:
        return self.dx * self.dk

    @property
    def total(self) -> np.ndarray:
        return self.dqdp + self.dxdk

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.times, "dq": self.dq, "dp": self.dp, "dx": self.dx, "dk": self.dk,
            "dqdp": self.dqdp, "dxdk": self.dxdk, "total": self.total,
        }


def hamiltonian(cfg: OscPairConfig) -> QuadraticHamiltonian:
    return QuadraticHamiltonian.from_terms(PAIR_VARS, {
        ("p", "p"): 0.5,
        ("q", "q"): 0.5 * cfg.Omega**2,
        ("k", "k"): 0.5,
        ("x", "x"): 0.5 * cfg.omega**2,
        ("q", "x"): cfg.gamma,
    })


def generator(cfg: OscPairConfig) -> np.ndarray:
    s = build_structure(PAIR_VARS, [("q", "p"), ("x", "k")], cfg.hbar)
    return flow_matrix(hamiltonian(cfg), s)


def normal_modes(cfg: OscPairConfig) -> NormalModes:
    """Eigenpairs of the stiffness matrix ``[[Omega^2, gamma], [gamma, omega^2]]``.

    Mode 1 continues the (q, p) oscillator and mode 2 the (x, k) one, so the
    mode matrix reduces to the identity when the coupling vanishes.
    """
    a, d, b = cfg.Omega**2, cfg.omega**2, cfg.gamma
    if b == 0:
        theta = 0.0
    elif a == d:
        theta = np.copysign(np.pi / 4, b)
    else:
        theta = 0.5 * np.arctan(2 * b / (a - d))
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    K = np.array([[a, b], [b, d]])
    w2 = np.einsum("ia,ij,ja->a", R, K, R)
    return NormalModes(w2, R, bool(np.all(w2 > 0)))


def _mode_blocks(w2: float, t: np.ndarray):
    """(cos-like, sin/w-like, -w^2 sin/w-like) for one mode at any sign of w^2."""
    if w2 > 0:
        w = np.sqrt(w2)
        return np.cos(w * t), np.sin(w * t) / w, -w * np.sin(w * t)
    if w2 < 0:
        g = np.sqrt(-w2)
        return np.cosh(g * t), np.sinh(g * t) / g, g * np.sinh(g * t)
    return np.ones_like(t), t.copy(), np.zeros_like(t)


def normal_mode_propagators(cfg: OscPairConfig, times) -> np.ndarray:
    """``U(t)`` assembled mode by mode, independent of the matrix exponential path."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    nm = normal_modes(cfg)
    R = nm.mode_matrix
    U = np.zeros((times.size, 4, 4))
    pos, mom = [0, 2], [1, 3]
    for a in range(2):
        cc, ss, ds = _mode_blocks(nm.freqs_squared[a], times)
        P = np.outer(R[:, a], R[:, a])
        for i in range(2):
            for j in range(2):
                U[:, pos[i], pos[j]] += P[i, j] * cc
                U[:, pos[i], mom[j]] += P[i, j] * ss
                U[:, mom[i], pos[j]] += P[i, j] * ds
                U[:, mom[i], mom[j]] += P[i, j] * cc
    return U


def initial_state(cfg: OscPairConfig) -> MomentState:
    """Point (q0, p0) times a Gaussian (x, k) of widths sigma_x, sigma_k."""
    if cfg.sigma_x <= 0 or cfg.sigma_k <= 0:
        raise ValueError("sigma_x and sigma_k must be positive")
    mean = np.array([cfg.q0, cfg.p0, cfg.x0, cfg.k0], dtype=float)
    return MomentState(mean, np.diag([0.0, 0.0, cfg.sigma_x**2, cfg.sigma_k**2]))


def covariance_series(cfg: OscPairConfig, times) -> np.ndarray:
    U = propagators(generator(cfg), times)
    with np.errstate(over="ignore", invalid="ignore"):
        C = np.einsum("tij,jk,tlk->til", U, initial_state(cfg).cov, U)
        return 0.5 * (C + C.transpose(0, 2, 1))


def time_grid(t_max: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(t_max / dt))
    return np.arange(n + 1) * dt


def dispersion_series(cfg: OscPairConfig, t_max: float, dt: float) -> DispersionSeries:
    times = time_grid(t_max, dt)
    C = covariance_series(cfg, times)
    sd = np.sqrt(np.clip(np.diagonal(C, axis1=1, axis2=2), 0.0, None))
    return DispersionSeries(times, sd[:, 0], sd[:, 1], sd[:, 2], sd[:, 3])


def total_uncertainty_min(series: DispersionSeries) -> float:
    if series.times.size == 0:
        raise ValueError("empty series")
    return float(np.min(series.total))


def _normals(seed: int, start: int, count: int) -> np.ndarray:
    """Two standard normals per sample, keyed by the absolute sample index.

    Sample i always uses Philox block ``counter = i`` so any sharding of the
    index range reproduces the same draws.
    """
    bits = np.random.Philox(key=seed, counter=start).random_raw(4 * count).reshape(count, 4)
    u1 = ((bits[:, 0] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u2 = ((bits[:, 1] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u1))
    return np.column_stack([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])


def sample_transported(cfg: OscPairConfig, t: float, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw ``n`` initial points, push each along its trajectory to time ``t``."""
    if n < 2:
        raise ValueError("need at least two samples")
    U = normal_mode_propagators(cfg, [t])[0]
    bounds = np.linspace(0, n, workers + 1).astype(int)

    def shard(lo, hi):
        z = _normals(seed, int(lo), int(hi - lo))
        pts = np.empty((hi - lo, 4))
        pts[:, 0] = cfg.q0
        pts[:, 1] = cfg.p0
        pts[:, 2] = cfg.x0 + cfg.sigma_x * z[:, 0]
        pts[:, 3] = cfg.k0 + cfg.sigma_k * z[:, 1]
        return pts @ U.T

    if workers == 1:
        return shard(0, n)
    with ThreadPoolExecutor(workers) as ex:
        parts = list(ex.map(shard, bounds[:-1], bounds[1:]))
    return np.concatenate(parts)


def sample_moments(samples: np.ndarray):
    """Unbiased mean and covariance plus the standard error of each covariance entry."""
    n = len(samples)
    # shifting by one sample keeps exactly constant columns exactly zero
    d = samples - samples[0]
    dm = d.mean(axis=0)
    c = d - dm
    cov = c.T @ c / (n - 1)
    prods = c[:, :, None] * c[:, None, :]
    se = prods.std(axis=0, ddof=1) / np.sqrt(n)
    return MomentState(samples[0] + dm, cov), se


def monte_carlo_covariance(cfg: OscPairConfig, t: float, n: int, seed: int, workers: int = 1):
    """Empirical moments at time ``t`` and their standard errors."""
    return sample_moments(sample_transported(cfg, t, n, seed, workers))
