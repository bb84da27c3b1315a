"""Koopman-von Neumann-Sudarshan hybrid of a classical and a quantum oscillator.

Six variables ``(q, p, q_p, p_q, x, k)``: the commuting classical pair, its
unobservable conjugates, and the quantum pair.  The Liouville part is
``p p_q + Omega^2 q q_p`` and the interaction family is
``alpha q x + beta q_p x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    MomentState,
    QuadraticHamiltonian,
    StructureMatrix,
    VariableSet,
    build_structure,
    flow_matrix,
    propagators,
    robertson_check,
)

HYBRID_VARS = VariableSet(("q", "p", "q_p", "p_q", "x", "k"))
QQ_VARS = VariableSet(("q", "p", "x", "k"))
BAR_VARS = VariableSet(("qbar", "pbar", "l_p", "l_q", "x", "k"))
OBSERVABLES = ("q", "p", "x", "k")
UNOBSERVABLES = ("q_p", "p_q")
RANK_TOL = 1e-10
ACHIEVABLE_TOL = 1e-10


@dataclass(frozen=True)
class HybridSpec:
    Omega: float = 3.0
    omega: float = 2.0
    gamma: float = 1.0
    alpha: float | None = None
    beta: float | None = None
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("Omega", "omega", "gamma"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        # the canonical interaction gamma (q/2 + q_p) x
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.gamma / 2)
        if self.beta is None:
            object.__setattr__(self, "beta", self.gamma)

    @property
    def stable(self) -> bool:
        return self.Omega**2 * self.omega**2 > self.gamma**2


@dataclass(frozen=True)
class ConstraintSet:
    """Affine first-moment and linear covariance functionals on ``varset``.

    ``first_order`` rows c impose ``c . mean = d``; each ``second_order``
    weight matrix W (symmetric) imposes ``sum(W * cov) = e``.
    """

    varset: VariableSet
    first_order: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    first_rhs: np.ndarray | None = None
    second_order: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))
    second_rhs: np.ndarray | None = None
    names: tuple[str, ...] = ()

    def __post_init__(self):
        n = self.varset.dim
        C = np.asarray(self.first_order, dtype=float).reshape(-1, n)
        W = np.asarray(self.second_order, dtype=float).reshape(-1, n, n)
        d = np.zeros(len(C)) if self.first_rhs is None else np.asarray(self.first_rhs, dtype=float)
        e = np.zeros(len(W)) if self.second_rhs is None else np.asarray(self.second_rhs, dtype=float)
        if d.shape != (len(C),) or e.shape != (len(W),):
            raise ValueError("right-hand sides do not match the functionals")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("constraint values must be finite")
        object.__setattr__(self, "first_order", C)
        object.__setattr__(self, "second_order", W)
        object.__setattr__(self, "first_rhs", d)
        object.__setattr__(self, "second_rhs", e)

    def __len__(self):
        return len(self.first_order) + len(self.second_order)

    @property
    def homogeneous(self) -> bool:
        return not (self.first_rhs.any() or self.second_rhs.any())

    def residuals(self, state: MomentState) -> np.ndarray:
        r1 = self.first_order @ state.mean - self.first_rhs
        r2 = np.einsum("kab,ab->k", self.second_order, state.cov) - self.second_rhs
        return np.concatenate([r1, r2])

    def satisfied(self, state: MomentState, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.residuals(state)) <= tol))

    def pulled_back(self, T: np.ndarray, varset: VariableSet) -> "ConstraintSet":
        """Re-express on coordinates xi where these functionals act on ``eta = T xi``."""
        return ConstraintSet(
            varset,
            self.first_order @ T,
            self.first_rhs,
            np.einsum("ai,kab,bj->kij", T, self.second_order, T),
            self.second_rhs,
            self.names,
        )


@dataclass(frozen=True)
class BenchmarkReport:
    achievable: bool
    constraints: ConstraintSet | None
    residual: float
    reason: str
    min_eigenvalue: float | None = None


def build_hybrid(spec: HybridSpec) -> tuple[QuadraticHamiltonian, StructureMatrix]:
    W2, w2 = spec.Omega**2, spec.omega**2
    ham = QuadraticHamiltonian.from_terms(HYBRID_VARS, {
        ("p", "p_q"): 1.0,
        ("q", "q_p"): W2,
        ("k", "k"): 0.5,
        ("x", "x"): 0.5 * w2,
        ("q", "x"): spec.alpha,
        ("q_p", "x"): spec.beta,
    })
    s = build_structure(HYBRID_VARS, [("q", "p_q"), ("q_p", "p"), ("x", "k")], spec.hbar)
    return ham, s


def build_qq_reference(spec: HybridSpec) -> tuple[QuadraticHamiltonian, StructureMatrix]:
    """Both oscillators quantized: ``1/2(p^2 + Omega^2 q^2) + 1/2(k^2 + omega^2 x^2) + gamma q x``."""
    ham = QuadraticHamiltonian.from_terms(QQ_VARS, {
        ("p", "p"): 0.5,
        ("q", "q"): 0.5 * spec.Omega**2,
        ("k", "k"): 0.5,
        ("x", "x"): 0.5 * spec.omega**2,
        ("q", "x"): spec.gamma,
    })
    s = build_structure(QQ_VARS, [("q", "p"), ("x", "k")], spec.hbar)
    return ham, s


@dataclass(frozen=True)
class BarTransform:
    """``eta = T xi`` with eta = (qbar, pbar, l_p, l_q, x, k)."""

    T: np.ndarray

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.T)

    def structure(self, s: StructureMatrix) -> StructureMatrix:
        return StructureMatrix(self.T @ s.S @ self.T.T, BAR_VARS, s.hbar)

    def hamiltonian(self, ham: QuadraticHamiltonian) -> QuadraticHamiltonian:
        Ti = self.inverse
        H = Ti.T @ ham.H @ Ti
        return QuadraticHamiltonian(0.5 * (H + H.T), BAR_VARS)

    def state(self, state: MomentState) -> MomentState:
        C = self.T @ state.cov @ self.T.T
        return MomentState(self.T @ state.mean, 0.5 * (C + C.T))

    def state_back(self, state: MomentState) -> MomentState:
        Ti = self.inverse
        C = Ti @ state.cov @ Ti.T
        return MomentState(Ti @ state.mean, 0.5 * (C + C.T))


def to_bar_variables() -> BarTransform:
    T = np.zeros((6, 6))
    q, p, qp, pq, x, k = range(6)
    T[0, qp], T[0, q] = 1.0, 0.5      # qbar = q_p + q/2
    T[1, pq], T[1, p] = 1.0, 0.5      # pbar = p_q + p/2
    T[2, qp], T[2, q] = 1.0, -0.5     # l_p  = q_p - q/2
    T[3, pq], T[3, p] = 1.0, -0.5     # l_q  = p_q - p/2
    T[4, x] = T[5, k] = 1.0
    return BarTransform(T)


def bar_hamiltonian(spec: HybridSpec) -> QuadraticHamiltonian:
    """The canonical hybrid written directly in bar variables.

    ``-1/2(l_q^2 + Omega^2 l_p^2) + 1/2(pbar^2 + Omega^2 qbar^2)
    + 1/2(k^2 + omega^2 x^2) + gamma qbar x``; valid for the canonical
    interaction only.
    """
    return QuadraticHamiltonian.from_terms(BAR_VARS, {
        ("l_q", "l_q"): -0.5,
        ("l_p", "l_p"): -0.5 * spec.Omega**2,
        ("pbar", "pbar"): 0.5,
        ("qbar", "qbar"): 0.5 * spec.Omega**2,
        ("k", "k"): 0.5,
        ("x", "x"): 0.5 * spec.omega**2,
        ("qbar", "x"): spec.gamma,
    })


def first_moment_constraints() -> ConstraintSet:
    """``<l_p> = 0`` and ``<l_q> = 0`` expressed on the hybrid variables."""
    T = to_bar_variables().T
    return ConstraintSet(HYBRID_VARS, T[2:4].copy(), names=("<l_p>", "<l_q>"))


def second_moment_constraints() -> ConstraintSet:
    """The eleven covariance conditions on the l-sector, in bar variables."""
    idx = {lab: i for i, lab in enumerate(BAR_VARS.labels)}
    mats, names = [], []

    def sym(a, b, scale=1.0):
        W = np.zeros((6, 6))
        i, j = idx[a], idx[b]
        if i == j:
            W[i, i] = scale
        else:
            W[i, j] = W[j, i] = 0.5 * scale
        return W

    for l in ("l_p", "l_q"):
        for other in ("qbar", "pbar", "x", "k"):
            mats.append(sym(l, other))
            names.append(f"<{l} {other}>")
    mats.append(sym("l_p", "l_p"))
    names.append("<l_p^2>")
    mats.append(sym("l_q", "l_q"))
    names.append("<l_q^2>")
    # symmetrized <l_p l_q + l_q l_p>
    mats.append(sym("l_p", "l_q", 2.0))
    names.append("<l_p l_q + l_q l_p>")
    return ConstraintSet(BAR_VARS, second_order=np.array(mats), names=tuple(names))


def _span_contains(basis: np.ndarray, vecs: np.ndarray, tol: float = RANK_TOL) -> bool:
    if len(vecs) == 0:
        return True
    if len(basis) == 0:
        return bool(np.max(np.abs(vecs)) <= tol)
    # least-squares projection onto the row space of basis
    coef, *_ = np.linalg.lstsq(basis.T, vecs.T, rcond=None)
    resid = vecs.T - basis.T @ coef
    scale = max(1.0, float(np.max(np.abs(vecs))))
    return bool(np.max(np.abs(resid)) <= tol * scale)


def check_constraint_closure(cs: ConstraintSet, A: np.ndarray) -> bool:
    """Whether the constraint span is invariant under the adjoint of the flow ``A``.

    A first-order row c evolves as ``c A``; a covariance weight W as
    ``W A + A^T W``.
    """
    if not cs.homogeneous:
        raise ValueError("closure check needs homogeneous constraints")
    A = np.asarray(A, dtype=float)
    C = cs.first_order
    if not _span_contains(C, C @ A):
        return False
    W = cs.second_order
    if len(W):
        moved = np.einsum("kab,bc->kac", W, A)
        moved = moved + moved.transpose(0, 2, 1)
        if not _span_contains(W.reshape(len(W), -1), moved.reshape(len(W), -1)):
            return False
    return True


def benchmark_first_moment(spec: HybridSpec) -> BenchmarkReport:
    """Search for constraints ``q_p = lam . o``, ``p_q = mu . o`` with o = (q, p, x, k).

    Requirements: on the constraint surface the observable rows of the hybrid
    flow equal the fully quantized flow, and the surface is invariant.  With
    the reduced flow fixed to the quantized one both are linear in (lam, mu).
    """
    ham, s = build_hybrid(spec)
    A = flow_matrix(ham, s)
    Aqq = flow_matrix(*build_qq_reference(spec))
    obs = HYBRID_VARS.indices(OBSERVABLES)
    qp, pq = HYBRID_VARS.indices(UNOBSERVABLES)

    A_oo = A[np.ix_(obs, obs)]
    A_ou = A[np.ix_(obs, [qp, pq])]
    if not A_ou.any():
        mismatch = float(np.max(np.abs(A_oo - Aqq)))
        if mismatch <= ACHIEVABLE_TOL:
            return BenchmarkReport(True, ConstraintSet(HYBRID_VARS), mismatch, "decoupled")
        return BenchmarkReport(False, None, mismatch, "observable_flow_mismatch")

    # unknowns z = (lam_1..4, mu_1..4); assemble M z = r
    eye = np.eye(4)
    blocks, rhs = [], []
    # observable rows: A_oo + A_o,qp lam^T + A_o,pq mu^T = Aqq
    for i in range(4):
        for j in range(4):
            row = np.zeros(8)
            row[j] = A_ou[i, 0]
            row[4 + j] = A_ou[i, 1]
            blocks.append(row)
            rhs.append(Aqq[i, j] - A_oo[i, j])
    # invariance of q_p - lam.o and p_q - mu.o under the reduced flow Aqq
    for r, off in ((qp, 0), (pq, 4)):
        a_o = A[r, obs]
        a_qp, a_pq = A[r, qp], A[r, pq]
        # a_o + a_qp lam + a_pq mu - Aqq^T v = 0, v = lam or mu
        M = np.zeros((4, 8))
        M[:, 0:4] += a_qp * eye
        M[:, 4:8] += a_pq * eye
        M[:, off:off + 4] -= Aqq.T
        blocks.extend(M)
        rhs.extend(-a_o)
    M = np.array(blocks)
    r = np.array(rhs)
    z, *_ = np.linalg.lstsq(M, r, rcond=None)
    residual = float(np.max(np.abs(M @ z - r)))
    if residual > ACHIEVABLE_TOL * max(1.0, float(np.max(np.abs(r)))):
        return BenchmarkReport(False, None, residual, "no_consistent_constraints")
    lam, mu = z[:4], z[4:]
    C = np.zeros((2, 6))
    C[0, obs], C[0, qp] = -lam, 1.0
    C[1, obs], C[1, pq] = -mu, 1.0
    cs = ConstraintSet(HYBRID_VARS, C, names=("q_p - lam.o", "p_q - mu.o"))
    return BenchmarkReport(True, cs, residual, "constraints_found")


def benchmark_second_moment(spec: HybridSpec) -> BenchmarkReport:
    """The eleven l-sector conditions force ``Sigma_l = 0`` on a conjugate pair.

    Infeasibility is decided relative to hbar so that it holds for any
    hbar > 0; the raw eigenvalue is reported as is.
    """
    ham, s = build_hybrid(spec)
    bt = to_bar_variables()
    sb = bt.structure(s)
    cs = second_moment_constraints()
    l_idx = BAR_VARS.indices(("l_p", "l_q"))
    res = robertson_check(np.zeros((6, 6)), sb, subset=l_idx)
    infeasible = res.min_eigenvalue < -1e-10 * s.hbar
    return BenchmarkReport(
        not infeasible,
        cs,
        abs(min(res.min_eigenvalue, 0.0)),
        "robertson_violation" if infeasible else "feasible",
        res.min_eigenvalue,
    )


def constrained_mean(obs_mean) -> np.ndarray:
    """Six-variable mean on the surface ``q_p = q/2``, ``p_q = p/2``."""
    q, p, x, k = obs_mean
    return np.array([q, p, q / 2, p / 2, x, k], dtype=float)


def observable_trajectories(spec: HybridSpec, obs_mean, times):
    """Mean observables (q, p, x, k) under the hybrid and the quantized flow."""
    A = flow_matrix(*build_hybrid(spec))
    Aqq = flow_matrix(*build_qq_reference(spec))
    obs = HYBRID_VARS.indices(OBSERVABLES)
    m6 = constrained_mean(obs_mean)
    cq = np.einsum("tij,j->ti", propagators(A, times), m6)[:, obs]
    qq = np.einsum("tij,j->ti", propagators(Aqq, times), np.asarray(obs_mean, dtype=float))
    return cq, qq


def novelty_initial_states(spec: HybridSpec, sigma_x: float | None = None, sigma_k: float | None = None):
    """Matched hybrid and quantized initial covariances for the second-moment comparison.

    In bar variables both conjugate pairs (qbar, pbar) and (l_p, l_q) start at
    minimum uncertainty ``(hbar/2) I``, (x, k) in the oscillator-matched
    coherent state, with no cross-correlations.  The quantized system starts
    from the observable covariance the hybrid shows at t = 0.
    """
    h = spec.hbar
    sx2 = h / (2 * spec.omega) if sigma_x is None else sigma_x**2
    sk2 = h * spec.omega / 2 if sigma_k is None else sigma_k**2
    cov_bar = np.diag([h / 2, h / 2, h / 2, h / 2, sx2, sk2])
    bt = to_bar_variables()
    cq0 = bt.state_back(MomentState(np.zeros(6), cov_bar))
    obs = HYBRID_VARS.indices(OBSERVABLES)
    qq0 = MomentState(cq0.mean[obs], cq0.cov[np.ix_(obs, obs)])
    return cq0, qq0


def observable_covariance_deviation(spec: HybridSpec, times, sigma_x=None, sigma_k=None) -> np.ndarray:
    """``max |Sigma_obs^CQ(t) - Sigma_obs^QQ(t)|`` per time."""
    cq0, qq0 = novelty_initial_states(spec, sigma_x, sigma_k)
    A = flow_matrix(*build_hybrid(spec))
    Aqq = flow_matrix(*build_qq_reference(spec))
    obs = HYBRID_VARS.indices(OBSERVABLES)
    Ucq = propagators(A, times)
    Uqq = propagators(Aqq, times)
    cov_cq = np.einsum("tij,jk,tlk->til", Ucq, cq0.cov, Ucq)[:, obs][:, :, obs]
    cov_qq = np.einsum("tij,jk,tlk->til", Uqq, qq0.cov, Uqq)
    return np.max(np.abs(cov_cq - cov_qq), axis=(1, 2))


def interaction_scan(gamma: float = 1.0, Omega: float = 3.0, omega: float = 2.0, n: int = 41):
    """Benchmark achievability over an n x n grid of (alpha, beta) in [-2 gamma, 2 gamma]^2."""
    grid = np.linspace(-2 * gamma, 2 * gamma, n)
    ok = np.zeros((n, n), dtype=bool)
    for i, a in enumerate(grid):
        for j, b in enumerate(grid):
            ok[i, j] = benchmark_first_moment(HybridSpec(Omega, omega, gamma, a, b)).achievable
    return grid, ok
