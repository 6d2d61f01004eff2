import numpy as np
import pytest

from pdesec.lmi import (
    DesignCertificate,
    InfeasibleDesignError,
    InitialBounds,
    SearchSpace,
    TuningParams,
    assemble_lmi,
    certify,
    check_semidefinite,
    default_search_space,
    jacobi_eigenvalues,
    load_certificate,
    save_certificate,
    scan_design,
    theorem3_constants,
)

GOOD = dict(
    c=3.0,
    lam=0.5,
    alphas=(1.0, 1.0, 1.0, -10.0, -10.0, -10.0),
    lams=(0.1,) * 6,
    beta1=4.0,
    beta2=5.0,
    alpha=-1.0,
)


@pytest.fixture()
def good_params():
    return TuningParams(**GOOD)


class TestTuningValidation:
    def test_c_lambda_ordering(self):
        with pytest.raises(ValueError):
            TuningParams(**{**GOOD, "c": 0.4})

    def test_positive_lambda_i(self):
        with pytest.raises(ValueError):
            TuningParams(**{**GOOD, "lams": (0.1,) * 5 + (-0.1,)})

    def test_positive_betas(self):
        with pytest.raises(ValueError):
            TuningParams(**{**GOOD, "beta2": 0.0})


class TestAssembly:
    def test_diagonal_closed_forms(self, good_params):
        A, _ = assemble_lmi(good_params)
        np.testing.assert_allclose(
            np.diag(A), [-7.85, -2.9, -2.94375, -1.0, -6.0, -10.375], rtol=1e-12
        )
        # alpha_1..3 = 1 kills the robustness couplings
        assert np.max(np.abs(A - np.diag(np.diag(A)))) == 0.0

    def test_sensitivity_blocks(self, good_params):
        _, B = assemble_lmi(good_params)
        assert (B[0, 0], B[0, 3], B[3, 3]) == (11.5, -16.5, 125.0)
        assert (B[1, 1], B[1, 4], B[4, 4]) == (4.0, -11.0, 75.0)
        assert (B[2, 2], B[2, 5], B[5, 5]) == (3.5625, -6.1875, 31.25)
        # 2x2 blocks with positive trace and determinant: positive semidefinite
        for i in range(3):
            blk = B[np.ix_([i, i + 3], [i, i + 3])]
            assert np.trace(blk) > 0 and np.linalg.det(blk) > 0

    def test_symmetry(self, good_params):
        A, B = assemble_lmi(good_params)
        np.testing.assert_array_equal(A, A.T)
        np.testing.assert_array_equal(B, B.T)

    def test_feasible_point(self, good_params):
        A, B = assemble_lmi(good_params)
        assert check_semidefinite(A, "neg").ok
        assert check_semidefinite(B, "pos").ok

    def test_beta1_step_flips_a44(self):
        p = TuningParams(**{**GOOD, "beta1": 3.8})
        A, _ = assemble_lmi(p)
        assert A[3, 3] == pytest.approx(0.56)
        assert not check_semidefinite(A, "neg").ok


class TestJacobi:
    def test_identity(self):
        v = check_semidefinite(np.eye(6), "pos")
        assert v.ok and v.extreme_eigenvalue == pytest.approx(1.0)

    def test_diagonal(self):
        v = check_semidefinite(np.diag([-1.0, -2.0, 0, 0, 0, 0]), "neg")
        assert v.ok

    def test_embedded_swap_block(self):
        M = np.zeros((6, 6))
        M[0, 1] = M[1, 0] = 1.0
        v = check_semidefinite(M, "pos")
        assert not v.ok
        assert v.extreme_eigenvalue == pytest.approx(-1.0, abs=1e-12)

    def test_asymmetric_rejected(self):
        M = np.zeros((6, 6))
        M[0, 1] = 1.0
        with pytest.raises(ValueError):
            jacobi_eigenvalues(M)

    def test_closed_form_2x2_3x3_blocks(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            # block-diagonal 6x6 built from a 2x2, a 3x3 and a scalar block
            b2 = rng.standard_normal((2, 2))
            b2 = b2 + b2.T
            b3 = rng.standard_normal((3, 3))
            b3 = b3 + b3.T
            s = rng.standard_normal()
            M = np.zeros((6, 6))
            M[:2, :2] = b2
            M[2:5, 2:5] = b3
            M[5, 5] = s

            # 2x2 closed form
            tr, det = np.trace(b2), np.linalg.det(b2)
            disc = np.sqrt(tr * tr / 4 - det)
            eig2 = [tr / 2 - disc, tr / 2 + disc]
            # symmetric 3x3 closed form (trigonometric)
            q = np.trace(b3) / 3
            B = b3 - q * np.eye(3)
            p = np.sqrt(np.sum(B * B) / 6)
            phi = np.arccos(np.clip(np.linalg.det(B / p) / 2, -1, 1)) / 3
            eig3 = [q + 2 * p * np.cos(phi + 2 * np.pi * k / 3) for k in range(3)]

            expected = np.sort(eig2 + eig3 + [s])
            got = jacobi_eigenvalues(M)
            np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_random_against_numpy(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            M = rng.standard_normal((6, 6))
            M = M + M.T
            np.testing.assert_allclose(
                jacobi_eigenvalues(M), np.sort(np.linalg.eigvalsh(M)), atol=1e-12
            )

    def test_diagonal_regime_equivalence(self):
        # with alpha_1..3 = 1 the A matrix is diagonal and semidefiniteness
        # reduces to sign checks of the closed-form diagonal
        p = TuningParams(**GOOD)
        A, _ = assemble_lmi(p)
        direct = bool(np.all(np.diag(A) <= 1e-10))
        assert check_semidefinite(A, "neg").ok == direct


class TestMonotonicity:
    def test_beta1_enlarges_feasible_set(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            p_lo = TuningParams(
                c=3.0,
                lam=0.5,
                alphas=tuple(rng.uniform(-2, 2, 3)) + tuple(rng.uniform(-20, -1, 3)),
                lams=tuple(rng.uniform(0.05, 0.5, 6)),
                beta1=3.0,
                beta2=5.0,
                alpha=-1.0,
            )
            p_hi = TuningParams(**{**p_lo.__dict__, "beta1": 4.5})
            A_lo, _ = assemble_lmi(p_lo)
            A_hi, _ = assemble_lmi(p_hi)
            if check_semidefinite(A_lo, "neg").ok:
                assert check_semidefinite(A_hi, "neg").ok

    def test_beta2_shrinks_feasible_set(self):
        p_lo = TuningParams(**GOOD)
        p_hi = TuningParams(**{**GOOD, "beta2": 12.0})
        _, B_lo = assemble_lmi(p_lo)
        _, B_hi = assemble_lmi(p_hi)
        assert check_semidefinite(B_lo, "pos").ok
        assert not check_semidefinite(B_hi, "pos").ok


class TestConstants:
    def test_closed_forms(self, good_params):
        k = theorem3_constants(good_params, InitialBounds(1.0, 1.0, 1.0, 1.0))
        assert k.K2 == 6.0
        assert k.K4 == 5.0
        assert k.M2 == pytest.approx(9.0)
        assert k.K5 == pytest.approx(1.2)
        assert k.K1 == k.K3 == pytest.approx((2 / 3) * (1.5 + 1.0))
        assert k.epsilon == pytest.approx(1.5 + 1.0 + 1.0)

    def test_bounds_validation(self):
        with pytest.raises(ValueError):
            InitialBounds(1.0, 1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            InitialBounds(1.0, 1.0, 0.5, 1.0)


class TestScan:
    def test_finds_the_good_point(self):
        res = scan_design(-1.0, beta1=4.0, beta2=5.0)
        assert res.feasible
        assert res.feasible_count > 0
        assert res.certificate.feasible
        assert res.certificate.margin == res.best_margin > 0

    def test_deterministic(self):
        r1 = scan_design(-1.0, 4.0, 5.0)
        r2 = scan_design(-1.0, 4.0, 5.0)
        assert r1.certificate.params == r2.certificate.params
        assert r1.best_margin == r2.best_margin

    def test_infeasible_levels_reported(self):
        res = scan_design(-1.0, beta1=0.5, beta2=50.0)
        assert not res.feasible
        assert res.certificate is None
        assert "infeasible" in res.message
        assert np.isfinite(res.best_margin)

    def test_empty_space_rejected(self):
        with pytest.raises(ValueError):
            scan_design(-1.0, 4.0, 5.0, space=SearchSpace(c_values=()))

    def test_default_space_contains_reference_point(self):
        sp = default_search_space()
        assert 3.0 in sp.c_values
        assert 0.5 in sp.lam_values
        assert 1.0 in sp.alpha_rob_values
        assert -10.0 in sp.alpha_sen_values
        assert 0.1 in sp.lam_i_values


class TestCertificateRoundTrip:
    def test_save_load(self, tmp_path, good_params):
        cert = certify(good_params, InitialBounds(0.7, 0.5, 1.0, 1.0))
        path = tmp_path / "cert.json"
        save_certificate(path, cert)
        loaded = load_certificate(path)
        assert loaded.params == cert.params
        np.testing.assert_array_equal(loaded.A, cert.A)
        np.testing.assert_array_equal(loaded.B, cert.B)
        assert loaded.feasible == cert.feasible
        assert loaded.constants == cert.constants
        assert loaded.bounds == cert.bounds

    def test_stable_serialization(self, tmp_path, good_params):
        cert = certify(good_params, InitialBounds(1.0, 1.0, 1.0, 1.0))
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_certificate(p1, cert)
        save_certificate(p2, cert)
        assert p1.read_bytes() == p2.read_bytes()

    def test_with_bounds_rederives_constants(self, good_params):
        cert = certify(good_params, InitialBounds(1.0, 1.0, 1.0, 1.0))
        tight = cert.with_bounds(InitialBounds(0.5, 0.5, 2.0, 2.0))
        assert tight.constants.K1 == pytest.approx((2 / 3) * (1.5 + 0.25))
        assert tight.feasible == cert.feasible
