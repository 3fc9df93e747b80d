import numpy as np
import pytest

from oracles import lindblad_expectations
from sunqsde import (DomainError, IntegrationDivergedError, OperatorMatrix, StateSpaceModel,
                     ThetaContext, basis_for, check_preservation, init_moments, integrate_moments,
                     ito_integrands, opmat_anticommutator, opmat_bracket, random_model, random_slh,
                     synthesize_state_space)
from sunqsde.oracle import (generator_column, linear_independence_margin, max_residual, theta_minus_op,
                            theta_plus_op)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_generator_relations_hold_entrywise(n):
    ctx = ThetaContext.for_n(n)
    x = generator_column(basis_for(n))
    ccr = opmat_bracket(x, x) - theta_minus_op(ctx, x) * 2j
    accr = (opmat_anticommutator(x, x) - OperatorMatrix.scalar((4 / n) * np.eye(ctx.s), n)
            - theta_plus_op(ctx, x) * 2)
    assert ccr.norm() < 1e-12
    assert accr.norm() < 1e-12


def test_bracket_diagonal_vanishes():
    x = generator_column(basis_for(2))
    br = opmat_bracket(x, x)
    for i in range(3):
        assert not br.entries[i, i].any()


def test_bracket_definition_on_small_example():
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    b = a.conj().T
    x, y = OperatorMatrix.column([a, b]), OperatorMatrix.column([b, a])
    br = opmat_bracket(x, y)
    # entry (i, j) = x_i y_j - y_j x_i
    assert np.allclose(br.entries[0, 0], a @ b - b @ a)
    assert np.allclose(br.entries[0, 1], a @ a - a @ a)


def test_bracket_dimension_mismatch():
    x2 = generator_column(basis_for(2))
    x3 = generator_column(basis_for(3))
    with pytest.raises(DomainError):
        opmat_bracket(x2, x3)


def test_operator_matrix_algebra():
    x = generator_column(basis_for(2))
    M = np.arange(9.0).reshape(3, 3)
    y = M @ x
    assert y.shape == (3, 1)
    assert np.allclose(y.entries[1, 0], sum(M[1, k] * x.entries[k, 0] for k in range(3)))
    assert (x - x).norm() == 0.0
    assert x.T.shape == (1, 3)


def test_generators_linearly_independent():
    assert linear_independence_margin(basis_for(3)) > 1.0


def test_zero_model_integrands_are_zero():
    ctx = ThetaContext.for_n(3)
    terms = ito_integrands(ctx, StateSpaceModel.zeros(3, 1))
    assert terms.max_norm() == 0.0


@pytest.mark.parametrize("n", [2, 3])
def test_realizable_integrands_vanish(n):
    ctx = ThetaContext.for_n(n)
    m = random_model(ctx, 2, seed=21)
    terms = ito_integrands(ctx, m)
    assert terms.max_norm() < 1e-10
    assert set(terms.norms()) >= {"ccr_dt", "accr_dt", "ccr_dW1[0]", "accr_dW2[1]"}


def test_perturbed_drift_is_seen_by_oracle():
    ctx = ThetaContext.for_n(3)
    m = random_model(ctx, 1, seed=21).perturbed("A", (0, 0), 0.1)
    norms = ito_integrands(ctx, m).norms()
    assert max(norms["ccr_dt"], norms["accr_dt"]) >= 1e-2


def test_init_moments_maximally_mixed():
    ctx = ThetaContext.for_n(3)
    st = init_moments(ctx, np.eye(3) / 3)
    assert np.allclose(st.m, 0)
    assert np.allclose(st.M, (2 / 3) * np.eye(8))


def test_init_moments_su2_ground():
    ctx = ThetaContext.for_n(2)
    st = init_moments(ctx, np.diag([1.0, 0.0]))
    assert np.allclose(st.m, [0, 0, -1])
    assert st.r_ccr < 1e-12 and st.r_accr < 1e-12


def test_init_moments_match_direct_traces(rng):
    n = 4
    ctx = ThetaContext.for_n(n)
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = X @ X.conj().T
    rho /= np.trace(rho)
    gens = basis_for(n).generators
    st = init_moments(ctx, rho)
    direct = np.array([[np.trace(rho @ a @ b) for b in gens] for a in gens])
    assert np.abs(st.M - direct).max() < 1e-13
    assert st.r_ccr < 1e-12 and st.r_accr < 1e-12


@pytest.mark.parametrize("rho", [np.diag([1.0, 1.0]), np.array([[1, 1], [0, 0]]), np.diag([1.5, -0.5]),
                                 np.eye(3) / 3])
def test_init_moments_rejects_invalid_density(rho):
    with pytest.raises(DomainError):
        init_moments(ThetaContext.for_n(2), rho)


@pytest.mark.parametrize("n", [2, 3])
def test_moment_flow_matches_master_equation(n):
    ctx = ThetaContext.for_n(n)
    p = random_slh(ctx, 2, seed=8, scale=0.7)
    model = synthesize_state_space(ctx, p)
    rho = np.zeros((n, n), complex)
    rho[0, 0] = 0.6
    rho[-1, -1] = 0.4
    rho[0, -1] = rho[-1, 0] = 0.2
    traj = integrate_moments(ctx, model, init_moments(ctx, rho), t_end=0.5, h=1e-3)
    m_ref, M_ref = lindblad_expectations(basis_for(n).generators, p.alpha, p.Lambda, rho, 0.5, 1e-3)
    assert traj[-1].t == pytest.approx(0.5)
    assert np.abs(traj[-1].m - m_ref).max() < 1e-9
    assert np.abs(traj[-1].M - M_ref).max() < 1e-9


def test_zero_model_state_is_constant():
    ctx = ThetaContext.for_n(2)
    s0 = init_moments(ctx, np.diag([1.0, 0.0]))
    traj = integrate_moments(ctx, StateSpaceModel.zeros(2, 1), s0, 0.1, 1e-2)
    assert len(traj) == 11
    for st in traj:
        assert np.array_equal(st.m, s0.m) and np.array_equal(st.M, s0.M)
        assert st.r_ccr == st.r_accr == 0.0


def test_preserving_models_keep_relations():
    ctx = ThetaContext.for_n(3)
    for kind in ("realizable", "preservation-only"):
        m = random_model(ctx, 1, seed=2, kind=kind)
        assert check_preservation(ctx, m).passed
        traj = integrate_moments(ctx, m, init_moments(ctx, np.eye(3) / 3), 0.5, 1e-3)
        assert max_residual(traj) < 1e-9


def test_generic_model_breaks_relations():
    ctx = ThetaContext.for_n(2)
    m = random_model(ctx, 1, seed=2, kind="generic")
    traj = integrate_moments(ctx, m, init_moments(ctx, np.diag([1.0, 0])), 1.0, 1e-3)
    assert max(st.r_ccr for st in traj) > 1e-3


def test_step_lands_on_end_time():
    ctx = ThetaContext.for_n(2)
    traj = integrate_moments(ctx, StateSpaceModel.zeros(2, 0), init_moments(ctx, np.eye(2) / 2), 0.25, 0.1)
    assert len(traj) == 4 and traj[-1].t == pytest.approx(0.25)


def test_bad_step_rejected():
    ctx = ThetaContext.for_n(2)
    s0 = init_moments(ctx, np.eye(2) / 2)
    with pytest.raises(DomainError):
        integrate_moments(ctx, StateSpaceModel.zeros(2, 0), s0, 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate_moments(ctx, StateSpaceModel.zeros(2, 0), s0, -1.0, 0.1)


def test_divergence_reports_last_state():
    ctx = ThetaContext.for_n(2)
    z = StateSpaceModel.zeros(2, 0)
    m = StateSpaceModel(2, 0, z.A0, 1e150 * np.eye(3), z.B1, z.B2, z.C1, z.C2)
    s0 = init_moments(ctx, np.diag([1.0, 0.0]))
    with pytest.raises(IntegrationDivergedError) as exc:
        integrate_moments(ctx, m, s0, 1.0, 0.1)
    last = exc.value.last_state
    assert np.all(np.isfinite(last.m)) and np.all(np.isfinite(last.M))
