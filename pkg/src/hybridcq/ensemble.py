"""Pure-state ensembles of a qubit-like system coupled to a classical oscillator.

Quantum amplitudes are carried as real pairs ``a_i = X_i + i K_i``.  The
hybrid Hamiltonian

    H_T = 1/2 (p^2 + Omega^2 q^2) + a^dag H_Q a + gamma f(q) a^dag A a

drives (q, p) by Hamilton's equations and the amplitudes by the Schrodinger
equation of ``H_Q + gamma f(q) A`` at the current q.  Two ensembles with the
same density matrix need not stay equal once gamma != 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import rk4_integrate

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}

NORM_TOL = 1e-8
HERMITIAN_TOL = 1e-12

# classical weight f(q) and its derivative
WEIGHTS = {
    "linear": (lambda q: q, lambda q: np.ones_like(q)),
    "quadratic": (lambda q: 0.5 * q**2, lambda q: q),
}


@dataclass(frozen=True)
class PureStatePoint:
    q: float
    p: float
    X: np.ndarray
    K: np.ndarray

    @property
    def amplitudes(self) -> np.ndarray:
        return np.asarray(self.X) + 1j * np.asarray(self.K)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.square(self.X)) + np.sum(np.square(self.K)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.q, self.p], self.X, self.K])

    @classmethod
    def from_vector(cls, y) -> "PureStatePoint":
        n = (len(y) - 2) // 2
        return cls(float(y[0]), float(y[1]), np.array(y[2:2 + n]), np.array(y[2 + n:]))


@dataclass(frozen=True)
class WeightedEnsemble:
    weights: np.ndarray
    points: tuple[PureStatePoint, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", tuple(self.points))
        if w.shape != (len(self.points),):
            raise ValueError("one weight per member required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must be nonnegative and sum to 1, got sum {w.sum()!r}")

    @classmethod
    def uniform(cls, points) -> "WeightedEnsemble":
        points = tuple(points)
        return cls(np.full(len(points), 1.0 / len(points)), points)

    def stacked(self) -> np.ndarray:
        return np.stack([pt.to_vector() for pt in self.points])

    def with_states(self, Y: np.ndarray) -> "WeightedEnsemble":
        return WeightedEnsemble(self.weights, tuple(PureStatePoint.from_vector(y) for y in Y))


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray

    def check(self, tol: float = HERMITIAN_TOL) -> None:
        r = self.rho
        if np.max(np.abs(r - r.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(r) - 1) > tol:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(r)[0] < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


@dataclass(frozen=True)
class HybridCouplingSpec:
    Omega: float = 1.0
    H_Q: np.ndarray = field(default_factory=lambda: 0.5 * SIGMA_X)
    A: np.ndarray = field(default_factory=lambda: SIGMA_Z.copy())
    gamma: float = 1.0
    weight: str = "linear"
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("H_Q", "A"):
            M = np.asarray(getattr(self, name), dtype=complex)
            if np.max(np.abs(M - M.conj().T)) > HERMITIAN_TOL:
                raise ValueError(f"{name} must be Hermitian")
            object.__setattr__(self, name, M)
        if self.H_Q.shape != self.A.shape:
            raise ValueError("H_Q and A must have the same dimension")
        if self.weight not in WEIGHTS:
            raise ValueError(f"unknown weight {self.weight!r}")

    @property
    def n(self) -> int:
        return self.H_Q.shape[0]


def embed(amplitudes, q: float = 0.0, p: float = 0.0) -> PureStatePoint:
    a = np.asarray(amplitudes, dtype=complex)
    norm2 = float(np.vdot(a, a).real)
    if abs(norm2 - 1.0) > NORM_TOL:
        raise ValueError(f"amplitudes are not normalized (norm^2 = {norm2!r})")
    return PureStatePoint(q, p, a.real.copy(), a.imag.copy())


def density_of(e: WeightedEnsemble) -> DensityMatrix:
    a = np.stack([pt.amplitudes for pt in e.points])
    return DensityMatrix(np.einsum("m,mi,mj->ij", e.weights, a, a.conj()))


def _quadratic_forms(A: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``a^dag A a`` per row of ``a``, real-valued."""
    v = np.einsum("mi,ij,mj->m", a.conj(), A, a)
    if np.max(np.abs(v.imag), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(v.real), initial=0.0))):
        raise ValueError("expectation of a Hermitian matrix came out complex")
    return v.real


def observable_expectation(e: WeightedEnsemble, A) -> float:
    A = np.asarray(A, dtype=complex)
    a = np.stack([pt.amplitudes for pt in e.points])
    if A.shape != (a.shape[1], a.shape[1]):
        raise ValueError("dimension mismatch")
    return float(e.weights @ _quadratic_forms(A, a))


def _rhs_batch(spec: HybridCouplingSpec, Y: np.ndarray) -> np.ndarray:
    """Time derivative for a stack of member states, rows (q, p, X..., K...)."""
    n = spec.n
    q = Y[:, 0]
    a = Y[:, 2:2 + n] + 1j * Y[:, 2 + n:]
    f, df = WEIGHTS[spec.weight]
    Aa = a @ spec.A.T
    coupling = np.sum(a.conj() * Aa, axis=1).real
    # i hbar da/dt = (H_Q + gamma f(q) A) a
    adot = (-1j / spec.hbar) * (a @ spec.H_Q.T + (spec.gamma * f(q))[:, None] * Aa)
    out = np.empty_like(Y)
    out[:, 0] = Y[:, 1]
    out[:, 1] = -spec.Omega**2 * q - spec.gamma * df(q) * coupling
    out[:, 2:2 + n] = adot.real
    out[:, 2 + n:] = adot.imag
    return out


def hybrid_rhs(spec: HybridCouplingSpec, point: PureStatePoint) -> PureStatePoint:
    d = _rhs_batch(spec, point.to_vector()[None, :])[0]
    return PureStatePoint.from_vector(d)


def total_energy(spec: HybridCouplingSpec, point: PureStatePoint) -> float:
    a = point.amplitudes[None, :]
    f, _ = WEIGHTS[spec.weight]
    return float(
        0.5 * (point.p**2 + spec.Omega**2 * point.q**2)
        + _quadratic_forms(spec.H_Q, a)[0]
        + spec.gamma * f(point.q) * _quadratic_forms(spec.A, a)[0]
    )


def _integrate(e: WeightedEnsemble, spec: HybridCouplingSpec, times, dt: float) -> list[np.ndarray]:
    # members never interact, so integrating the stack row-wise equals integrating each alone
    return rk4_integrate(lambda Y: _rhs_batch(spec, Y), e.stacked(), float(times[-1]), dt, record=list(times))


def evolve_ensemble(e: WeightedEnsemble, spec: HybridCouplingSpec, t: float, dt: float) -> WeightedEnsemble:
    if t == 0:
        return e
    return e.with_states(_integrate(e, spec, [t], dt)[0])


def trace_distance(r1: DensityMatrix, r2: DensityMatrix) -> float:
    a, b = r1.rho, r2.rho
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def unitary_density_evolution(rho: np.ndarray, H: np.ndarray, t: float, hbar: float = 1.0) -> np.ndarray:
    U = scipy.linalg.expm(-1j * np.asarray(H) * t / hbar)
    return U @ rho @ U.conj().T


@dataclass(frozen=True)
class DivergenceSeries:
    times: np.ndarray
    trace_distance: np.ndarray
    q_mean_1: np.ndarray
    q_mean_2: np.ndarray
    q_var_1: np.ndarray
    q_var_2: np.ndarray

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.times, "trace_distance": self.trace_distance,
            "q_mean_1": self.q_mean_1, "q_mean_2": self.q_mean_2,
            "q_var_1": self.q_var_1, "q_var_2": self.q_var_2,
        }


def _classical_stats(e: WeightedEnsemble, Y: np.ndarray):
    m = float(e.weights @ Y[:, 0])
    return m, float(e.weights @ (Y[:, 0] - m) ** 2)


def representation_divergence(mix1: WeightedEnsemble, mix2: WeightedEnsemble, spec: HybridCouplingSpec,
                              t_grid, dt: float = 1e-3, premise_tol: float = 1e-12) -> DivergenceSeries:
    t_grid = np.asarray(t_grid, dtype=float)
    d0 = trace_distance(density_of(mix1), density_of(mix2))
    if d0 > premise_tol:
        raise ValueError(f"initial density matrices differ (trace distance {d0!r})")
    cols = {k: [] for k in ("td", "m1", "m2", "v1", "v2")}
    marks = [t for t in t_grid if t > 0]
    runs = []
    for mix in (mix1, mix2):
        states = [mix.stacked()] * int(np.sum(t_grid <= 0))
        if marks:
            states += _integrate(mix, spec, marks, dt)
        runs.append(states)
    for Y1, Y2 in zip(*runs):
        e1, e2 = mix1.with_states(Y1), mix2.with_states(Y2)
        cols["td"].append(trace_distance(density_of(e1), density_of(e2)))
        m1, v1 = _classical_stats(mix1, Y1)
        m2, v2 = _classical_stats(mix2, Y2)
        cols["m1"].append(m1)
        cols["m2"].append(m2)
        cols["v1"].append(v1)
        cols["v2"].append(v2)
    arr = {k: np.array(v) for k, v in cols.items()}
    return DivergenceSeries(t_grid, arr["td"], arr["m1"], arr["m2"], arr["v1"], arr["v2"])


def z_mixture(q: float = 1.0, p: float = 0.0) -> WeightedEnsemble:
    return WeightedEnsemble.uniform([embed([1, 0], q, p), embed([0, 1], q, p)])


def y_mixture(q: float = 1.0, p: float = 0.0) -> WeightedEnsemble:
    r = 1 / np.sqrt(2)
    return WeightedEnsemble.uniform([embed([r, 1j * r], q, p), embed([r, -1j * r], q, p)])


def default_divergence(gamma: float = 1.0, t_max: float = 10.0, dt: float = 1e-3, sample_dt: float = 0.1,
                       **spec_kw) -> DivergenceSeries:
    spec = HybridCouplingSpec(gamma=gamma, **spec_kw)
    n = int(round(t_max / sample_dt))
    grid = np.arange(n + 1) * sample_dt
    return representation_divergence(z_mixture(), y_mixture(), spec, grid, dt)
