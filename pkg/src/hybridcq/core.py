"""Linear phase-space machinery shared by every model in the package.

A quadratic Hamiltonian ``H = 1/2 xi^T H xi`` together with an antisymmetric
structure matrix ``S`` (brackets ``[xi_a, xi_b] = i hbar S_ab``) generates the
linear flow ``d xi/dt = A xi`` with ``A = S H``.  Means and covariances close
under such flows, so states are carried as first and second moments only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

STRUCTURE_TOL = 1e-10
ROBERTSON_TOL = 1e-10
EIGVEC_COND_LIMIT = 1e8


class NonFiniteError(FloatingPointError):
    """Raised when an integrator produces NaN or inf."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


@dataclass(frozen=True)
class VariableSet:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        seen = set()
        for lab in labels:
            if lab in seen:
                raise ValueError(f"duplicate label {lab!r}")
            seen.add(lab)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def indices(self, labels: Sequence[str]) -> list[int]:
        return [self.index(lab) for lab in labels]


@dataclass(frozen=True)
class StructureMatrix:
    S: np.ndarray
    varset: VariableSet
    hbar: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")

    def bracket(self, a: str, b: str) -> float:
        return float(self.S[self.varset.index(a), self.varset.index(b)])


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """``H(xi) = 1/2 xi^T H xi`` over ``varset``."""

    H: np.ndarray
    varset: VariableSet

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        if H.shape != (self.varset.dim, self.varset.dim):
            raise ValueError(f"H has shape {H.shape}, expected dim {self.varset.dim}")
        if not np.array_equal(H, H.T):
            raise ValueError("H must be exactly symmetric")
        object.__setattr__(self, "H", H)

    @classmethod
    def from_terms(cls, varset: VariableSet, terms: dict) -> "QuadraticHamiltonian":
        """Build from monomial coefficients, e.g. ``{("p", "p"): 0.5, ("q", "x"): g}``.

        A diagonal key ``(a, a)`` with coefficient c contributes ``c a^2``;
        an off-diagonal key ``(a, b)`` contributes ``c a b``.
        """
        n = varset.dim
        H = np.zeros((n, n))
        for (a, b), c in terms.items():
            i, j = varset.index(a), varset.index(b)
            if i == j:
                H[i, i] += 2.0 * c
            else:
                H[i, j] += c
                H[j, i] += c
        return cls(H, varset)


@dataclass(frozen=True)
class MomentState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match mean")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class Propagator:
    U: np.ndarray
    t: float
    flow: np.ndarray = field(repr=False)


def build_structure(varset: VariableSet, pairs: Sequence[tuple[str, str]], hbar: float = 1.0) -> StructureMatrix:
    """Structure matrix with ``S[a, b] = +1`` for every declared (position, momentum) pair."""
    n = varset.dim
    S = np.zeros((n, n))
    used: set[str] = set()
    for a, b in pairs:
        for lab in (a, b):
            if lab in used:
                raise ValueError(f"label {lab!r} appears in more than one pair")
            used.add(lab)
        i, j = varset.index(a), varset.index(b)
        S[i, j] = 1.0
        S[j, i] = -1.0
    return StructureMatrix(S, varset, hbar)


def flow_matrix(ham: QuadraticHamiltonian, s: StructureMatrix) -> np.ndarray:
    if ham.H.shape != s.S.shape:
        raise ValueError(f"dimension mismatch: H {ham.H.shape} vs S {s.S.shape}")
    return s.S @ ham.H


def _expm_eig(A: np.ndarray, times: np.ndarray):
    """exp(A t) for many t via one eigendecomposition, or None if ill-conditioned."""
    w, V = np.linalg.eig(A)
    if np.linalg.cond(V) > EIGVEC_COND_LIMIT:
        return None
    Vinv = np.linalg.inv(V)
    # unstable flows may overflow; the caller's finiteness check reports it
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.einsum("ij,tj,jk->tik", V, np.exp(np.outer(times, w)), Vinv)
    return out.real if np.isrealobj(A) else out


def propagators(A: np.ndarray, times) -> np.ndarray:
    """Stack of ``exp(A t)`` over ``times``; shape ``(len(times), n, n)``."""
    A = np.asarray(A, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if not A.any():
        return np.broadcast_to(np.eye(A.shape[0]), (times.size,) + A.shape).copy()
    out = _expm_eig(A, times)
    if out is None:
        out = np.stack([scipy.linalg.expm(A * t) for t in times])
    # t == 0 is exactly the identity
    out[times == 0.0] = np.eye(A.shape[0])
    return out


def propagate_analytic(A: np.ndarray, t: float) -> Propagator:
    A = np.asarray(A, dtype=float)
    return Propagator(propagators(A, [t])[0], float(t), A)


def rk4_integrate(rhs: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, t: float, dt: float,
                  record: Sequence[float] | None = None):
    """Fixed-step classical RK4 for an autonomous system ``y' = rhs(y)``.

    The step is shrunk so an integer number of steps lands exactly on ``t``.
    With ``record`` (sorted times in [0, t]) each interval between recorded
    times is integrated separately and the list of states is returned.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    y = np.array(y0, copy=True)
    marks = [0.0] + list(record if record is not None else [t])
    out = []
    step = 0
    for t0, t1 in zip(marks[:-1], marks[1:]):
        span = t1 - t0
        n = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
        h = span / n if n else 0.0
        for _ in range(n):
            with np.errstate(over="ignore", invalid="ignore"):
                k1 = rhs(y)
                k2 = rhs(y + 0.5 * h * k1)
                k3 = rhs(y + 0.5 * h * k2)
                k4 = rhs(y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            step += 1
            if not np.all(np.isfinite(y)):
                raise NonFiniteError(step)
        out.append(y.copy())
    if record is None:
        return out[-1]
    return out


def propagate_numeric(A: np.ndarray, state: MomentState, t: float, dt: float) -> MomentState:
    """Integrate ``m' = A m`` and ``Sigma' = A Sigma + Sigma A^T`` with RK4."""
    A = np.asarray(A, dtype=float)
    n = state.dim
    if A.shape != (n, n):
        raise ValueError("dimension mismatch")

    def rhs(y):
        m, C = y[:n], y[n:].reshape(n, n)
        AC = A @ C
        return np.concatenate([A @ m, (AC + AC.T).ravel()])

    y = rk4_integrate(rhs, np.concatenate([state.mean, state.cov.ravel()]), t, dt)
    C = y[n:].reshape(n, n)
    return MomentState(y[:n], 0.5 * (C + C.T))


def evolve_moments(state: MomentState, u: Propagator | np.ndarray) -> MomentState:
    U = u.U if isinstance(u, Propagator) else np.asarray(u)
    if U.shape != (state.dim, state.dim):
        raise ValueError("dimension mismatch")
    C = U @ state.cov @ U.T
    return MomentState(U @ state.mean, 0.5 * (C + C.T))


def expectation_quadratic(state: MomentState, ham: QuadraticHamiltonian) -> float:
    """``<1/2 xi^T H xi> = 1/2 tr(H Sigma) + 1/2 m^T H m``."""
    if ham.H.shape != state.cov.shape:
        raise ValueError("dimension mismatch")
    return 0.5 * float(np.sum(ham.H * state.cov)) + 0.5 * float(state.mean @ ham.H @ state.mean)


@dataclass(frozen=True)
class RobertsonResult:
    feasible: bool
    min_eigenvalue: float


def hermitian_min_eigenvalue(M: np.ndarray) -> float:
    """Smallest eigenvalue of a complex Hermitian M through its real symmetric embedding.

    ``[[Re M, -Im M], [Im M, Re M]]`` carries each eigenvalue of M twice.
    """
    R, I = M.real, M.imag
    big = np.block([[R, -I], [I, R]])
    big = 0.5 * (big + big.T)
    return float(np.linalg.eigvalsh(big)[0])


def robertson_check(state: MomentState | np.ndarray, s: StructureMatrix,
                    subset: Sequence[int] | None = None, tol: float = ROBERTSON_TOL) -> RobertsonResult:
    """Positive-semidefiniteness of ``Sigma + (i hbar / 2) S``."""
    cov = state.cov if isinstance(state, MomentState) else np.asarray(state, dtype=float)
    S = s.S
    if subset is not None:
        idx = list(subset)
        n = S.shape[0]
        if any(i < 0 or i >= n for i in idx):
            raise IndexError(f"subset {idx} out of range for dim {n}")
        cov = cov[np.ix_(idx, idx)]
        S = S[np.ix_(idx, idx)]
    lam = hermitian_min_eigenvalue(cov + 0.5j * s.hbar * S)
    return RobertsonResult(lam >= -tol, lam)


def is_symplectic(U: np.ndarray, s: StructureMatrix, tol: float = STRUCTURE_TOL) -> bool:
    return bool(np.max(np.abs(U @ s.S @ U.T - s.S)) <= tol)
