import numpy as np
import pytest
from hypothesis import given, settings

from cmtfa_star.certificate import (
    Certificate,
    DominanceViolation,
    build_certificate,
    build_t_dm,
    build_t_nd,
    choose_c,
    null_basis_construction,
    rank_one_null_certificate,
    solve_beta,
    verify_certificate,
)
from cmtfa_star.closed_form import CmtfaSolution, DominanceError, rank_one_candidate, solve, solve_dm
from cmtfa_star.star_model import InvalidInputError, build_sigma_x, classify_dominance

from .conftest import alphas


class TestChooseC:
    def test_case_one(self):
        _, case = choose_c((0.5, 0.4, 0.3))
        assert case == "SumSquaresEqualsOne"

    def test_case_two(self):
        c, case = choose_c((0.8, 0.56, 0.40))
        assert case == "SumSquaresBelowOne"
        assert c.tolist() == [1.0, 1.0]

    def test_case_two_signs_follow_loadings(self):
        c, _ = choose_c((-0.8, 0.56, 0.40))
        assert c.tolist() == [-1.0, -1.0]

    def test_case_three(self):
        a = (0.4, 0.35, 0.3, 0.25)
        c, case = choose_c(a)
        assert case == "SumSquaresAboveOne"
        tail = np.array(a[1:]) / a[0]
        assert abs(float(c @ tail)) == pytest.approx(0.5, abs=1e-12)

    def test_rejects_dominant(self):
        with pytest.raises(DominanceError):
            choose_c((0.9, 0.3, 0.2))


class TestSolveBeta:
    def test_case_one(self):
        a = (0.5, 0.4, 0.3)
        c, case = choose_c(a)
        assert solve_beta(a, c, case).tolist() == [1.0, 1.0, 0.0]

    def test_case_two(self):
        a = (0.8, 0.56, 0.40)
        beta = solve_beta(a, *choose_c(a))
        # (1 - 0.74) / (1.44 - 0.74)
        assert beta[-1] == pytest.approx(0.26 / 0.70, abs=1e-12)
        assert np.allclose(beta[:-1], 1 - 0.26 / 0.70, atol=1e-12)

    def test_case_three(self):
        a = (0.4, 0.35, 0.3, 0.25)
        beta = solve_beta(a, *choose_c(a))
        # (1 - 1.71875) / (0.25 - 1.71875)
        assert beta[-1] == pytest.approx(0.71875 / 1.46875, abs=1e-12)
        assert np.allclose(beta[:-1], 1 - 0.71875 / 1.46875, atol=1e-12)

    def test_dominance_violation(self):
        a = (0.9, 0.3, 0.2)
        c = np.sign(np.array(a[1:]))
        with pytest.raises(DominanceViolation, match="dominance violation"):
            solve_beta(a, c, "SumSquaresBelowOne")

    @settings(max_examples=200)
    @given(alphas(min_n=3, max_n=10))
    def test_beta_in_unit_interval(self, vals):
        if classify_dominance(vals).dominant:
            return
        beta = solve_beta(vals, *choose_c(vals))
        assert np.all(beta >= -1e-12) and np.all(beta <= 1 + 1e-12)


class TestConstruction:
    @given(alphas(min_n=2, max_n=10))
    def test_v_columns_in_null_space(self, vals):
        if classify_dominance(vals).dominant:
            return
        cons = null_basis_construction(vals)
        canon = vals[np.argsort(-np.abs(vals), kind="stable")]
        assert np.max(np.abs(canon @ cons.v_matrix[:, :-1])) <= 1e-15
        assert np.max(np.abs(canon @ cons.v_matrix)) <= 1e-12
        expected_case = 1 - np.sum(cons.alpha_tilde[1:] ** 2)
        if cons.case_tag == "SumSquaresBelowOne":
            assert expected_case > 0
        elif cons.case_tag == "SumSquaresAboveOne":
            assert expected_case < 0

    @given(alphas(min_n=3, max_n=10))
    def test_case_three_denominator_negative(self, vals):
        if classify_dominance(vals).dominant:
            return
        cons = null_basis_construction(vals)
        if cons.case_tag != "SumSquaresAboveOne":
            return
        tail = cons.alpha_tilde[1:]
        den = float(cons.c @ tail) ** 2 - float(np.sum(tail**2))
        assert den < 0
        assert 0 < cons.beta[-1] <= 1 + 1e-12


class TestBuildTNd:
    def test_constant_vector(self):
        cert = build_t_nd((0.5, 0.5, 0.5))
        assert cert.case_tag == "SumSquaresAboveOne"
        assert np.allclose(cert.construction.beta, 0.5, atol=1e-15)
        t = cert.t_matrix
        assert np.allclose(np.sum(t**2, axis=1), 1.0, atol=1e-12)
        assert np.max(np.abs(np.array([0.5, 0.5, 0.5]) @ t)) <= 1e-12
        assert cert.verdict

    def test_case_two(self):
        cert = build_t_nd((0.8, 0.56, 0.40))
        assert cert.verdict
        assert cert.row_norm_residual <= 1e-10 and cert.null_residual <= 1e-10
        assert not cert.mu

    def test_boundary(self):
        cert = build_t_nd((0.6, 0.4, 0.2))
        beta = cert.construction.beta
        assert beta[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(beta[:-1], 0.0, atol=1e-12)
        assert np.allclose(np.sum(cert.t_matrix**2, axis=1), 1.0, atol=1e-12)
        assert np.linalg.matrix_rank(cert.t_matrix, tol=1e-9) == 1
        assert cert.verdict

    def test_unsorted_input(self):
        cert = build_t_nd((0.3, 0.5, -0.4, 0.45))
        assert cert.verdict
        assert np.max(np.abs(np.array([0.3, 0.5, -0.4, 0.45]) @ cert.t_matrix)) <= 1e-12

    def test_dominant_raises_violation(self):
        with pytest.raises(DominanceViolation):
            build_t_nd((0.9, 0.3, 0.2))

    def test_two_by_two_equal(self):
        cert = build_t_nd((0.5, -0.5))
        assert cert.verdict


class TestBuildTDm:
    def test_worked_example(self):
        cert = build_t_dm((0.9, 0.3, 0.2))
        assert cert.t_matrix[:, 0].tolist() == [1.0, -1.0, -1.0]
        assert np.array_equal(np.sum(cert.t_matrix**2, axis=1), np.ones(3))
        assert cert.verdict
        assert cert.row_norm_residual <= 1e-12 and cert.null_residual <= 1e-12

    def test_signed(self):
        assert build_t_dm((0.9, 0.3, -0.2)).t_matrix[:, 0].tolist() == [1.0, -1.0, 1.0]

    @pytest.mark.parametrize("a, expected", [((0.7, 0.4), [1, -1]), ((0.7, -0.4), [1, 1]), ((-0.7, 0.4), [1, 1])])
    def test_two_by_two(self, a, expected):
        cert = build_t_dm(a)
        assert cert.t_matrix[:, 0].tolist() == expected
        assert cert.verdict

    def test_rejects_non_dominant(self):
        with pytest.raises(DominanceError):
            build_t_dm((0.5, 0.5, 0.5))


class TestVerify:
    def test_rank_one_on_dominant_fails(self):
        cert = rank_one_null_certificate((0.9, 0.3, 0.2))
        assert not cert.verdict
        assert cert.row_norm_residual > 0.01
        assert cert.null_residual <= 1e-12

    def test_perturbed_d_fails_on_min_eig(self):
        a = (0.9, 0.3, 0.2)
        sol = solve_dm(a)
        d = sol.d.copy()
        d[1] += 1e-3
        bumped = CmtfaSolution(sol.sigma_t, d, sol.rank_class, sol.trace_sigma_t)
        cert = verify_certificate(build_sigma_x(a), bumped, build_t_dm(a))
        assert not cert.verdict
        assert cert.min_eig < -1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            verify_certificate(build_sigma_x((0.5, 0.5, 0.5)), solve((0.5, 0.5, 0.5)), np.ones((2, 1)))

    def test_rejects_non_positive_tol(self):
        a = (0.9, 0.3, 0.2)
        with pytest.raises(InvalidInputError):
            verify_certificate(build_sigma_x(a), solve(a), build_t_dm(a), tol=0.0)

    def test_multiplier_on_zero_diagonal(self):
        # Sigma = [[1, 1], [1, 1]]: d = 0 is optimal with null vector (1, -1)/sqrt(2) * sqrt(2)
        sigma = np.ones((2, 2))
        sol = CmtfaSolution(sigma, np.zeros(2), "RankOne", 2.0)
        t = np.array([[1.5], [-1.5]])
        cert = verify_certificate(sigma, sol, Certificate(t))
        assert cert.mu == {0: pytest.approx(1.25), 1: pytest.approx(1.25)}
        assert cert.row_norm_residual == pytest.approx(0.0, abs=1e-15)
        assert cert.verdict

    def test_multiplier_cannot_cover_deficit(self):
        sigma = np.ones((2, 2))
        sol = CmtfaSolution(sigma, np.zeros(2), "RankOne", 2.0)
        cert = verify_certificate(sigma, sol, np.array([[0.5], [-0.5]]))
        assert not cert.verdict
        assert cert.mu == {}

    @settings(max_examples=300, deadline=None)
    @given(alphas(min_n=3, max_n=10))
    def test_complete_for_every_valid_alpha(self, vals):
        cert = build_certificate(vals)
        assert cert.verdict
        if classify_dominance(vals).dominant:
            with pytest.raises(DominanceViolation):
                build_t_nd(vals)

    @given(alphas(min_n=3, max_n=8))
    def test_rank_one_candidate_certifies_iff_non_dominant(self, vals):
        dominant = classify_dominance(vals).dominant
        cert = verify_certificate(build_sigma_x(vals), rank_one_candidate(vals), rank_one_null_certificate(vals))
        if dominant:
            assert not cert.verdict
