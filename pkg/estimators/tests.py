from dataclasses import replace

import numpy as np

from django.test              import SimpleTestCase
from numpy.testing            import assert_allclose

from core.exceptions          import DomainError, NumericalError, RankError
from dynamics.bodies          import RegressorSample
from estimators.kalman        import initial_kf_state, kf_predict, kf_update
from estimators.least_squares import batch_least_squares
from estimators.linalg        import check_covariance, spd_solve
from estimators.rls           import initial_rls_state, rls_update

TRUE_PI = np.array([18.7545, 0.142648, 0.0])
GRAVITY = 9.81


def regressor_sample(acceleration, pi=TRUE_PI, noise=None, time=0.0):
    phi = np.zeros((6, 3))
    phi[0:3, 0] = np.asarray(acceleration) + [0.0, 0.0, GRAVITY]
    phi[3, 2]   = GRAVITY
    phi[4, 1]   = -GRAVITY

    z = phi @ pi
    if noise is not None:
        z = z + noise
    return RegressorSample(phi=phi, z=z, time=time)


def random_samples(rng, count, noise_std=0.0, pi=TRUE_PI):
    return [
        regressor_sample(rng.normal(scale=1.5, size=3), pi, rng.normal(scale=noise_std, size=6) if noise_std else None)
        for _ in range(count)
    ]


class LinalgTest(SimpleTestCase):
    def test_spd_solve(self):
        matrix = np.array([[4.0, 1.0], [1.0, 3.0]])

        assert_allclose(matrix @ spd_solve(matrix, [1.0, 2.0]), [1.0, 2.0])

    def test_spd_solve_rejects_indefinite_matrix(self):
        with self.assertRaises(NumericalError):
            spd_solve(np.diag([1.0, -1.0]), [1.0, 1.0])

    def test_spd_solve_with_several_right_hand_sides(self):
        rng    = np.random.default_rng(8)
        factor = rng.normal(size=(6, 6))
        matrix = factor @ factor.T + 6.0 * np.eye(6)
        rhs    = rng.normal(size=(6, 3))

        solution = spd_solve(matrix, rhs)

        self.assertEqual(solution.shape, (6, 3))
        assert_allclose(solution, np.linalg.solve(matrix, rhs), rtol=1e-10, atol=1e-12)

    def test_spd_solve_rejects_singular_and_non_finite_matrices(self):
        with self.assertRaises(NumericalError):
            spd_solve(np.zeros((6, 6)), np.ones(6))
        with self.assertRaises(NumericalError):
            spd_solve(np.diag([1.0, np.nan]), [1.0, 1.0])
        with self.assertRaises(NumericalError):
            spd_solve(np.diag([1.0, np.inf]), [1.0, 1.0])

    def test_check_covariance(self):
        check_covariance('P', np.zeros((3, 3)))

        with self.assertRaises(NumericalError):
            check_covariance('R', np.zeros((6, 6)), definite=True)
        with self.assertRaises(NumericalError):
            check_covariance('P', [[1.0, 0.5], [0.0, 1.0]])


class KalmanPredictTest(SimpleTestCase):
    def test_predict_adds_process_noise(self):
        state = kf_predict(initial_kf_state())

        assert_allclose(np.diag(state.P), [1.005, 0.2005, 0.2005], rtol=0, atol=1e-15)
        assert_allclose(state.pi_hat.as_array(), [16.21, 0.142648, 0.0])

    def test_repeated_predictions_add_process_noise_linearly(self):
        initial = initial_kf_state()
        state   = initial
        for _ in range(7):
            state = kf_predict(state)

        assert_allclose(state.P, initial.P + 7 * initial.Q, rtol=0, atol=1e-14)
        self.assertEqual(state.pi_hat, initial.pi_hat)

    def test_zero_process_noise_is_identity(self):
        state = initial_kf_state(q=[0.0, 0.0, 0.0])

        assert_allclose(kf_predict(state).P, state.P)

    def test_rejects_indefinite_covariances(self):
        with self.assertRaises(NumericalError):
            initial_kf_state(p0=[1.0, -0.2, 0.2])
        with self.assertRaises(NumericalError):
            initial_kf_state(r=np.zeros(6))


class KalmanUpdateTest(SimpleTestCase):
    def setUp(self):
        self.state = kf_predict(initial_kf_state())

    def test_zero_regressor_leaves_state_unchanged(self):
        updated = kf_update(self.state, RegressorSample(phi=np.zeros((6, 3)), z=np.ones(6)))

        assert_allclose(updated.pi_hat.as_array(), self.state.pi_hat.as_array())
        assert_allclose(updated.P, self.state.P)
        assert_allclose(updated.last_gain, np.zeros((3, 6)))

    def test_zero_innovation_keeps_estimate_and_shrinks_covariance(self):
        sample  = regressor_sample(np.zeros(3), pi=self.state.pi_hat.as_array())
        updated = kf_update(self.state, sample)

        assert_allclose(updated.pi_hat.as_array(), self.state.pi_hat.as_array(), atol=1e-12)
        self.assertTrue(np.all(np.diag(updated.P) < np.diag(self.state.P)))

    def test_scalar_update_formula(self):
        phi       = np.zeros((6, 3))
        phi[2, 0] = 2.0
        state     = initial_kf_state(p0=[0.5, 0.2, 0.2], r=np.full(6, 3.0))

        updated = kf_update(state, RegressorSample(phi=phi, z=[0.0, 0.0, 40.0, 0.0, 0.0, 0.0]))

        self.assertAlmostEqual(updated.P[0, 0], 0.5 - 0.25 * 4.0 / (4.0 * 0.5 + 3.0), places=14)
        self.assertAlmostEqual(updated.pi_hat.m, 16.21 + 0.5 * 2.0 / (4.0 * 0.5 + 3.0) * (40.0 - 2.0 * 16.21), places=12)
        assert_allclose(updated.P[1:, 1:], state.P[1:, 1:])

    def test_measurement_noise_scale_applies_to_one_update(self):
        sample = regressor_sample([0.2, -0.1, 0.4])
        scaled = kf_update(self.state, sample, r_scale=50.0)
        direct = kf_update(replace(self.state, R=50.0 * self.state.R), sample)

        assert_allclose(scaled.P, direct.P, rtol=1e-12)
        assert_allclose(scaled.pi_hat.as_array(), direct.pi_hat.as_array(), rtol=1e-12)
        assert_allclose(scaled.R, self.state.R)
        self.assertTrue(np.all(np.diag(scaled.P) > np.diag(kf_update(self.state, sample).P)))

    def test_covariance_stays_positive_semidefinite_and_shrinks(self):
        rng   = np.random.default_rng(2024)
        state = initial_kf_state()

        for cycle in range(100000):
            if cycle % 100 == 0:
                root  = rng.normal(size=(3, 3))
                state = initial_kf_state(p0=root @ root.T + 1e-6 * np.eye(3), r=rng.uniform(1.0, 1e4, size=6))

            predicted = kf_predict(state)
            state     = kf_update(predicted, regressor_sample(rng.normal(scale=2.0, size=3), noise=rng.normal(size=6)))

            self.assertGreaterEqual(np.linalg.eigvalsh(state.P).min(), -1e-10)
            self.assertTrue(np.all(np.diag(state.P) <= np.diag(predicted.P) + 1e-12))

    def test_singular_innovation_is_a_numerical_error(self):
        state = replace(initial_kf_state(), P=np.zeros((3, 3)), Q=np.zeros((3, 3)), R=np.zeros((6, 6)))

        with self.assertRaises(NumericalError):
            kf_update(state, regressor_sample(np.zeros(3)))

    def test_matches_batch_least_squares_without_process_noise(self):
        rng     = np.random.default_rng(7)
        samples = random_samples(rng, 500, noise_std=2.0)
        state   = initial_kf_state(p0=np.full(3, 1e9), q=np.zeros(3), r=np.ones(6))

        for sample in samples:
            state = kf_update(kf_predict(state), sample)

        assert_allclose(state.pi_hat.as_array(), batch_least_squares(samples).as_array(), atol=1e-4)

    def test_tracks_a_mass_step(self):
        state  = initial_kf_state()
        before = regressor_sample(np.zeros(3), pi=np.array([16.21, 0.142648, 0.0]))
        after  = regressor_sample(np.zeros(3), pi=np.array([16.21 + 2.5445, 0.142648, 0.0]))

        for _ in range(1000):
            state = kf_update(kf_predict(state), before)
        self.assertLess(abs(state.pi_hat.m - 16.21), 1e-6)

        for _ in range(500):
            state = kf_update(kf_predict(state), after)
        self.assertLess(abs(state.pi_hat.m - 18.7545), 0.5)


class RLSTest(SimpleTestCase):
    def test_forgetting_factor_domain(self):
        for forgetting in (0.0, -0.5, 1.01):
            with self.assertRaises(DomainError):
                initial_rls_state(forgetting=forgetting)

    def test_zero_regressor_inflates_covariance(self):
        state   = initial_rls_state(p0=2.0, forgetting=0.8)
        updated = rls_update(state, RegressorSample(phi=np.zeros((6, 3)), z=np.ones(6)))

        assert_allclose(updated.P, state.P / 0.8)
        assert_allclose(updated.pi_hat.as_array(), state.pi_hat.as_array())

    def test_single_noiseless_sample_is_recovered(self):
        state = initial_rls_state(pi0=np.zeros(3), p0=1e8, forgetting=1.0)

        updated = rls_update(state, regressor_sample([0.3, -0.2, 0.1]))

        assert_allclose(updated.pi_hat.as_array(), TRUE_PI, atol=1e-5)

    def test_forgetting_recovers_noiseless_parameters(self):
        state = initial_rls_state(forgetting=0.8)

        for sample in random_samples(np.random.default_rng(41), 200):
            state = rls_update(state, sample)

        self.assertLessEqual(np.linalg.norm(state.pi_hat.as_array() - TRUE_PI), 1e-6)

    def test_without_forgetting_matches_batch_least_squares(self):
        rng     = np.random.default_rng(19)
        samples = random_samples(rng, 300, noise_std=3.0)
        state   = initial_rls_state(p0=1e6, forgetting=1.0)

        for sample in samples:
            state = rls_update(state, sample)

        assert_allclose(state.pi_hat.as_array(), batch_least_squares(samples).as_array(), atol=1e-4)

    def test_covariance_stays_positive_semidefinite(self):
        rng = np.random.default_rng(5)
        for forgetting in (0.8, 0.95, 1.0):
            state = initial_rls_state(forgetting=forgetting)
            for sample in random_samples(rng, 2000, noise_std=5.0):
                state = rls_update(state, sample)
                self.assertGreaterEqual(np.linalg.eigvalsh(state.P).min(), -1e-10)


class BatchLeastSquaresTest(SimpleTestCase):
    def test_noiseless_samples_are_interpolated(self):
        samples = random_samples(np.random.default_rng(1), 20)

        assert_allclose(batch_least_squares(samples).as_array(), TRUE_PI, atol=1e-9)

    def test_free_fall_leaves_mass_unobservable(self):
        samples = [regressor_sample([0.0, 0.0, -GRAVITY]) for _ in range(10)]

        with self.assertRaises(RankError) as context:
            batch_least_squares(samples)

        self.assertEqual(context.exception.rank, 2)

    def test_empty_stream_is_rank_deficient(self):
        with self.assertRaises(RankError) as context:
            batch_least_squares([])

        self.assertEqual(context.exception.rank, 0)

    def test_monte_carlo_error_matches_theory(self):
        rng           = np.random.default_rng(99)
        accelerations = rng.normal(scale=1.5, size=(50, 3))
        noise_std     = 5.0
        trials        = 400

        phi        = np.vstack([regressor_sample(a).phi for a in accelerations])
        theory_std = noise_std * np.sqrt(np.diag(np.linalg.inv(phi.T @ phi)))

        estimates = np.array([
            batch_least_squares([
                regressor_sample(a, noise=rng.normal(scale=noise_std, size=6)) for a in accelerations
            ]).as_array()
            for _ in range(trials)
        ])

        self.assertTrue(np.all(np.abs(estimates.mean(axis=0) - TRUE_PI) < 4.0 * theory_std / np.sqrt(trials)))
        assert_allclose(estimates.std(axis=0, ddof=1), theory_std, rtol=0.2)
