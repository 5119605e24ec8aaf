import numpy as np

from django.test       import SimpleTestCase
from numpy.testing     import assert_allclose

from core.exceptions   import DomainError, SingularityError
from dynamics.bodies   import UPRIGHT, FootState, ParameterVector, RigidBodyState, RobotSnapshot, cross
from dynamics.legs     import (LegModel, default_legs, leg_forward_kinematics, leg_grf_from_torques,
                               leg_jacobian, leg_torques_from_grf, standing_footprint)
from dynamics.regressor import (build_regressor, com_from_parameters, predicted_wrench,
                                regressor_residual)
from simulator.forces  import distribute_forces

NOMINAL = ParameterVector(m=16.21, h_x=0.142648, h_y=0.0)
GRAVITY = np.array([0.0, 0.0, 9.81])


def make_snapshot(positions, forces, acceleration=(0.0, 0.0, 0.0), gravity=GRAVITY, time=0.0):
    feet = [
        FootState(index=index, position=position, force=force)
        for index, (position, force) in enumerate(zip(positions, forces))
    ]
    base = RigidBodyState(position=[0.0, 0.0, 0.3], linear_acceleration=acceleration)
    return RobotSnapshot(time=time, base=base, feet=feet, gravity=gravity)


class RegressorTest(SimpleTestCase):
    def setUp(self):
        self.positions = standing_footprint()

    def test_static_zero_force_regressor(self):
        sample = build_regressor(make_snapshot(self.positions, np.zeros((4, 3))))

        expected = np.array([
            [0.0,   0.0,   0.0 ],
            [0.0,   0.0,   0.0 ],
            [9.81,  0.0,   0.0 ],
            [0.0,   0.0,   9.81],
            [0.0,  -9.81,  0.0 ],
            [0.0,   0.0,   0.0 ],
        ])
        assert_allclose(sample.phi, expected)
        assert_allclose(sample.z, np.zeros(6))

    def test_static_stand_is_consistent_with_nominal_parameters(self):
        forces = distribute_forces(self.positions, NOMINAL, np.zeros(3), GRAVITY)
        sample = build_regressor(make_snapshot(self.positions, forces))

        assert_allclose(sample.z, sample.phi @ [16.21, 0.142648, 0.0], atol=1e-9)

    def test_single_stance_foot_moment(self):
        positions = np.array([[0.1, 0.0, -0.3], [0.2, 0.1, -0.3], [-0.2, 0.1, -0.3], [-0.2, -0.1, -0.3]])
        forces    = np.zeros((4, 3))
        forces[0] = [0.0, 0.0, 159.02]

        sample = build_regressor(make_snapshot(positions, forces))

        assert_allclose(sample.z[3:], [0.0, -15.902, 0.0], atol=1e-12)
        assert_allclose(sample.z[:3], [0.0, 0.0, 159.02])

    def test_structural_zeros_hold_for_random_snapshots(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            snapshot = make_snapshot(
                rng.normal(size=(4, 3)), rng.normal(scale=40.0, size=(4, 3)), acceleration=rng.normal(size=3)
            )
            phi = build_regressor(snapshot).phi

            self.assertTrue(np.all(phi[0:3, 1:] == 0.0))
            self.assertTrue(np.all(phi[3:6, 0] == 0.0))
            self.assertTrue(np.all(phi[5] == 0.0))

    def test_rejects_tilted_gravity(self):
        with self.assertRaises(DomainError):
            build_regressor(make_snapshot(self.positions, np.zeros((4, 3)), gravity=[0.1, 0.0, 9.81]))

    def test_rejects_non_finite_forces(self):
        forces       = np.zeros((4, 3))
        forces[2, 1] = np.nan

        with self.assertRaises(DomainError):
            build_regressor(make_snapshot(self.positions, forces))

    def test_residual_of_consistent_sample_is_zero(self):
        forces = distribute_forces(self.positions, NOMINAL, np.zeros(3), GRAVITY)
        sample = build_regressor(make_snapshot(self.positions, forces))

        self.assertLess(np.max(np.abs(regressor_residual(sample, NOMINAL))), 1e-9)


class PredictedWrenchTest(SimpleTestCase):
    def setUp(self):
        self.snapshot = make_snapshot(standing_footprint(), np.zeros((4, 3)))

    def test_static_stand_wrench(self):
        wrench = predicted_wrench(NOMINAL, self.snapshot)

        assert_allclose(wrench[:3], [0.0, 0.0, 16.21 * 9.81], atol=1e-12)
        self.assertAlmostEqual(wrench[4], -9.81 * 0.142648, places=12)

    def test_zero_gravity_and_acceleration_gives_zero_wrench(self):
        snapshot = make_snapshot(standing_footprint(), np.zeros((4, 3)), gravity=[0.0, 0.0, 0.0])

        assert_allclose(predicted_wrench(ParameterVector(3.0, 0.4, -0.2), snapshot), np.zeros(6))

    def test_linear_in_parameters(self):
        snapshot = make_snapshot(standing_footprint(), np.zeros((4, 3)), acceleration=[0.3, -0.2, 0.5])
        first    = ParameterVector(16.0, 0.1, -0.05)
        second   = ParameterVector(2.5, 0.25, 0.02)
        combined = ParameterVector.from_array(2.0 * first.as_array() + 0.5 * second.as_array())

        assert_allclose(
            predicted_wrench(combined, snapshot),
            2.0 * predicted_wrench(first, snapshot) + 0.5 * predicted_wrench(second, snapshot),
            rtol=1e-14, atol=1e-12,
        )

    def test_rejects_non_positive_mass(self):
        with self.assertRaises(DomainError):
            predicted_wrench(ParameterVector(0.0, 0.0, 0.0), self.snapshot)


class ComTest(SimpleTestCase):
    def test_nominal_robot(self):
        c_x, c_y = com_from_parameters(NOMINAL)

        self.assertAlmostEqual(c_x, 0.0088, places=12)
        self.assertEqual(c_y, 0.0)

    def test_exact_divisions(self):
        self.assertEqual(com_from_parameters(ParameterVector(2.0, 0.0, 0.0)), (0.0, 0.0))
        self.assertEqual(com_from_parameters(ParameterVector(10.0, 0.5, -0.25)), (0.05, -0.025))

    def test_non_positive_mass_is_a_domain_error(self):
        with self.assertRaises(DomainError):
            com_from_parameters(ParameterVector(-1.0, 0.1, 0.0))


class BodiesTest(SimpleTestCase):
    def test_orientation_must_be_a_rotation(self):
        with self.assertRaises(DomainError):
            RigidBodyState(position=np.zeros(3), orientation=np.diag([1.0, 1.0, -1.0]))

    def test_snapshot_needs_four_distinct_feet(self):
        feet = [FootState(index=0, position=np.zeros(3), force=np.zeros(3)) for _ in range(4)]

        with self.assertRaises(DomainError):
            RobotSnapshot(time=0.0, base=RigidBodyState(position=np.zeros(3)), feet=feet)

    def test_arrays_are_read_only(self):
        foot = FootState(index=1, position=[0.1, 0.2, -0.3], force=[0.0, 0.0, 40.0])

        with self.assertRaises(ValueError):
            foot.force[2] = 0.0

    def test_default_orientation_is_shared_and_upright(self):
        first  = RigidBodyState(position=np.zeros(3))
        second = RigidBodyState(position=[0.0, 0.0, 0.3], linear_acceleration=[0.0, 0.0, 1.0])

        self.assertIs(first.orientation, UPRIGHT)
        self.assertIs(second.orientation, UPRIGHT)
        np.testing.assert_array_equal(UPRIGHT, np.eye(3))
        with self.assertRaises(ValueError):
            UPRIGHT[0, 1] = 1.0

    def test_explicit_orientation_is_still_checked(self):
        angle    = 0.3
        rotation = np.array([[np.cos(angle), -np.sin(angle), 0.0], [np.sin(angle), np.cos(angle), 0.0], [0.0, 0.0, 1.0]])

        state = RigidBodyState(position=np.zeros(3), orientation=rotation)

        assert_allclose(state.orientation, rotation)
        with self.assertRaises(DomainError):
            RigidBodyState(position=np.zeros(3), orientation=2.0 * rotation)

    def test_read_only_arrays_are_not_copied(self):
        position = np.array([0.1, 0.2, 0.3])
        position.setflags(write=False)

        state = RigidBodyState(position=position)

        self.assertIs(state.position, position)
        self.assertIsNot(RigidBodyState(position=[0.1, 0.2, 0.3]).position, position)

    def test_cross_matches_numpy(self):
        rng = np.random.default_rng(5)
        a, b = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))

        assert_allclose(cross(a, b), np.cross(a, b), rtol=0.0, atol=1e-15)
        assert_allclose(cross(a[0], b[0]), np.cross(a[0], b[0]), rtol=0.0, atol=1e-15)
        assert_allclose(cross([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0, 1.0])


class LegModelTest(SimpleTestCase):
    def setUp(self):
        self.leg  = LegModel(link_lengths=[0.0, 0.213, 0.213], hip_offset=[0.19, 0.05, 0.0])
        self.legs = default_legs()
        self.rng  = np.random.default_rng(11)

    def random_nonsingular_configuration(self, leg):
        while True:
            q = np.array([
                self.rng.uniform(-0.6, 0.6), self.rng.uniform(-1.2, 1.2), self.rng.uniform(-2.6, -0.4)
            ])
            if np.linalg.cond(leg_jacobian(leg, q)) < 1e3:
                return q

    def test_zero_configuration_is_fully_stretched(self):
        assert_allclose(leg_forward_kinematics(self.leg, [0.0, 0.0, 0.0]), [0.19, 0.05, -0.426], atol=1e-15)

    def test_quarter_turn_flexion_is_horizontal(self):
        foot = leg_forward_kinematics(self.leg, [0.0, np.pi / 2, 0.0])

        assert_allclose(foot - self.leg.hip_offset, [-0.426, 0.0, 0.0], atol=1e-12)

    def test_revolute_periodicity(self):
        q = np.array([0.2, 0.7, -1.4])
        for joint in range(3):
            shifted        = q.copy()
            shifted[joint] += 2 * np.pi

            assert_allclose(leg_forward_kinematics(self.leg, shifted), leg_forward_kinematics(self.leg, q), atol=1e-12)

    def test_jacobian_matches_finite_differences(self):
        step = 1e-6
        for index in range(100):
            leg = self.legs[index % 4]
            q   = self.random_nonsingular_configuration(leg)

            numeric = np.column_stack([
                (leg_forward_kinematics(leg, q + step * e) - leg_forward_kinematics(leg, q - step * e)) / (2 * step)
                for e in np.eye(3)
            ])
            assert_allclose(leg_jacobian(leg, q), numeric, atol=1e-5)

    def test_grf_round_trip(self):
        for index in range(100):
            leg   = self.legs[index % 4]
            q     = self.random_nonsingular_configuration(leg)
            force = self.rng.uniform(-80.0, 80.0, size=3)

            recovered = leg_grf_from_torques(leg, q, leg_torques_from_grf(leg, q, force))

            assert_allclose(recovered, force, atol=1e-9)

    def test_zero_torque_gives_zero_force(self):
        assert_allclose(leg_grf_from_torques(self.legs[0], [0.0, 0.8, -1.6], np.zeros(3)), np.zeros(3))

    def test_straight_knee_is_singular(self):
        with self.assertRaises(SingularityError) as context:
            leg_grf_from_torques(self.legs[0], [0.0, 0.4, 0.0], [1.0, 2.0, 3.0])

        self.assertGreater(context.exception.condition_number, 1e6)

    def test_standing_footprint_is_symmetric(self):
        footprint = standing_footprint()

        assert_allclose(footprint[0], -footprint[3] * [1, 1, -1], atol=1e-12)
        assert_allclose(footprint[1], -footprint[2] * [1, 1, -1], atol=1e-12)
        self.assertTrue(np.all(footprint[:, 2] < -0.25))
