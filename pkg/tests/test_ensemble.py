import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcq.ensemble import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    HybridCouplingSpec,
    WeightedEnsemble,
    default_divergence,
    density_of,
    embed,
    evolve_ensemble,
    hybrid_rhs,
    observable_expectation,
    representation_divergence,
    total_energy,
    trace_distance,
    unitary_density_evolution,
    y_mixture,
    z_mixture,
)

R = 1 / np.sqrt(2)


def test_embed_examples():
    pt = embed([R, 1j * R], q=0.3, p=-1.0)
    np.testing.assert_array_equal(pt.X, [R, 0])
    np.testing.assert_array_equal(pt.K, [0, R])
    assert pt.norm2 == pytest.approx(1.0)
    np.testing.assert_array_equal(pt.to_vector(), [0.3, -1.0, R, 0, 0, R])
    with pytest.raises(ValueError):
        embed([1, 1])


def test_weights_validated():
    with pytest.raises(ValueError):
        WeightedEnsemble(np.array([0.7, 0.7]), (embed([1, 0]), embed([0, 1])))
    with pytest.raises(ValueError):
        WeightedEnsemble(np.array([1.0]), (embed([1, 0]), embed([0, 1])))


def test_density_examples():
    for mix in (z_mixture(), y_mixture()):
        rho = density_of(mix)
        rho.check()
        np.testing.assert_allclose(rho.rho, np.eye(2) / 2, atol=1e-15)
        assert rho.purity == pytest.approx(0.5)
    pure = density_of(WeightedEnsemble.uniform([embed([R, R])]))
    np.testing.assert_allclose(pure.rho @ pure.rho, pure.rho, atol=1e-15)
    np.testing.assert_allclose(pure.rho, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_density_check_rejects_bad_matrices():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1, 1j], [0, 0]])).check()
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2)).check()
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5])).check()


def test_observable_expectations():
    e = WeightedEnsemble(np.array([0.25, 0.75]), (embed([1, 0]), embed([0, 1])))
    assert observable_expectation(e, SIGMA_Z) == pytest.approx(-0.5)
    assert observable_expectation(e, SIGMA_X) == pytest.approx(0.0)
    plus = WeightedEnsemble.uniform([embed([R, 1j * R])])
    assert observable_expectation(plus, SIGMA_Y) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        observable_expectation(plus, np.eye(3))


def test_spec_validation():
    with pytest.raises(ValueError):
        HybridCouplingSpec(H_Q=np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        HybridCouplingSpec(A=np.eye(3))
    with pytest.raises(ValueError):
        HybridCouplingSpec(weight="cubic")


def test_rhs_force_examples():
    spec = HybridCouplingSpec(Omega=2.0, gamma=0.5)
    up = hybrid_rhs(spec, embed([1, 0], q=1.0, p=0.25))
    down = hybrid_rhs(spec, embed([0, 1], q=1.0, p=0.25))
    assert up.q == 0.25
    assert up.p == pytest.approx(-4.0 - 0.5)
    assert down.p == pytest.approx(-4.0 + 0.5)


def test_rhs_is_schrodinger_flow():
    spec = HybridCouplingSpec(gamma=0.7)
    a = np.array([0.6, 0.8j])
    d = hybrid_rhs(spec, embed(a, q=0.4))
    expected = -1j * (spec.H_Q + 0.7 * 0.4 * spec.A) @ a
    np.testing.assert_allclose(d.amplitudes, expected, atol=1e-15)


def test_quadratic_weight_force():
    spec = HybridCouplingSpec(Omega=1.0, gamma=1.0, weight="quadratic")
    d = hybrid_rhs(spec, embed([1, 0], q=2.0))
    assert d.p == pytest.approx(-2.0 - 2.0)


@given(st.floats(-1, 1), st.floats(-2, 2), st.floats(0, 2 * np.pi), st.floats(0.1, 1.4))
@settings(max_examples=15, deadline=None)
def test_norm_and_energy_preserved(q, gamma, phase, theta):
    spec = HybridCouplingSpec(gamma=gamma)
    pt = embed([np.cos(theta), np.exp(1j * phase) * np.sin(theta)], q=q, p=0.1)
    e = WeightedEnsemble.uniform([pt])
    out = evolve_ensemble(e, spec, 5.0, 1e-3).points[0]
    assert abs(out.norm2 - 1) <= 1e-8
    assert abs(total_energy(spec, out) - total_energy(spec, pt)) <= 1e-6


def test_uncoupled_matches_unitary_evolution():
    spec = HybridCouplingSpec(gamma=0.0)
    e = y_mixture()
    for t in (0.0, 1.3, 4.0):
        out = density_of(evolve_ensemble(e, spec, t, 1e-3)).rho
        ref = unitary_density_evolution(density_of(e).rho, spec.H_Q, t)
        np.testing.assert_allclose(out, ref, atol=1e-10)


def test_trace_distance_examples():
    a = DensityMatrix(np.eye(2) / 2)
    assert trace_distance(a, DensityMatrix(np.diag([0.6, 0.4]))) == pytest.approx(0.1)
    assert trace_distance(DensityMatrix(np.diag([1.0, 0])), DensityMatrix(np.diag([0, 1.0]))) == pytest.approx(1.0)
    assert trace_distance(a, a) == 0.0
    with pytest.raises(ValueError):
        trace_distance(a, DensityMatrix(np.eye(3) / 3))


def test_divergence_premise_rejected():
    pure = WeightedEnsemble.uniform([embed([1, 0], 1.0)])
    with pytest.raises(ValueError):
        representation_divergence(pure, z_mixture(), HybridCouplingSpec(), [0.0, 1.0])


def test_divergence_vanishes_without_coupling():
    s = default_divergence(gamma=0.0, t_max=5.0)
    assert s.trace_distance.max() <= 1e-9
    np.testing.assert_allclose(s.q_mean_1, s.q_mean_2, atol=1e-12)


def test_commuting_hamiltonian_gives_no_divergence():
    s = default_divergence(gamma=1.0, t_max=5.0, H_Q=0.5 * SIGMA_Z)
    assert s.trace_distance.max() <= 1e-9


def test_default_divergence_nonzero_and_step_stable():
    coarse = default_divergence(gamma=1.0, t_max=10.0, dt=2e-3)
    fine = default_divergence(gamma=1.0, t_max=10.0, dt=1e-3)
    assert coarse.trace_distance[0] <= 1e-12
    assert fine.trace_distance.max() >= 0.1
    np.testing.assert_allclose(coarse.trace_distance, fine.trace_distance, atol=1e-8)
    # classical sector feels the difference too
    assert np.max(np.abs(fine.q_var_1 - fine.q_var_2)) > 1e-3
