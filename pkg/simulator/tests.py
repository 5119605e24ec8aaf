import os, tempfile

from itertools import islice

import numpy as np

from django.test         import Client, SimpleTestCase
from numpy.testing       import assert_allclose

from core.exceptions     import DistributionError, InfeasibleStanceError, ScenarioError
from dynamics.bodies     import ParameterVector
from dynamics.legs       import standing_footprint
from dynamics.regressor  import build_regressor, regressor_residual
from simulator.engine    import draw_noise, run_scenario
from simulator.forces    import balancing_acceleration, contact_map, distribute_forces
from simulator.gait      import stepping_motion
from simulator.scenarios import (GaitSchedule, MotionProfile, NoiseModel, bundled_scenarios, load_scenario,
                                 parse_scenario, resolve_scenario)

GRAVITY = np.array([0.0, 0.0, 9.81])
NOMINAL = ParameterVector(16.21, 0.142648, 0.0)


def scenario_document(**overrides):
    document = {
        'schema_version'       : 1,
        'name'                 : 'test',
        'duration'             : 2.0,
        'tick_rate'            : 100.0,
        'true_base_parameters' : [16.21, 0.142648, 0.0],
        'gait_timeline'        : [{'pattern': 'trot', 'start_time': 0.0, 'phase_duration': 0.35}],
        'payload_events'       : [],
        'noise'                : {'seed': 3},
    }
    document.update(overrides)
    return document


class ScenarioTest(SimpleTestCase):
    def test_bundled_scenarios_load(self):
        names = bundled_scenarios()

        self.assertEqual(
            names, ['noiseless_trot', 'offcenter_payload', 'payload_switching', 'stand_then_trot', 'standing_bias']
        )
        for name in names:
            self.assertEqual(resolve_scenario(name).name, name)

    def test_defaults_come_from_settings(self):
        scenario = parse_scenario(scenario_document())

        self.assertEqual(scenario.noise.force_noise_std, 5.0)
        assert_allclose(scenario.noise.standing_force_bias, [0.0, 0.0, 4.0])
        self.assertEqual(scenario.motion, MotionProfile(swing_apex=0.05, bob_amplitude=0.02))
        self.assertEqual(scenario.tick_count, 200)

    def test_unknown_keys_are_rejected(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(scenario_document(colour='red'))
        with self.assertRaises(ScenarioError):
            parse_scenario(scenario_document(noise={'force_noise': 1.0}))
        with self.assertRaises(ScenarioError):
            parse_scenario(scenario_document(estimator={'kf': {'gain': 1.0}}))

    def test_invalid_estimator_settings_are_scenario_errors(self):
        invalid = [
            {'kf': {'q': 'abc'}},
            {'kf': {'q': [1.0, 2.0]}},
            {'kf': {'r': [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]}},
            {'kf': {'pi0': [-1.0, 0.0, 0.0]}},
            {'rls': {'forgetting': 1.5}},
            {'rls': {'forgetting': 'slow'}},
            {'adaptation': {'publish_policy': 'bogus'}},
            {'adaptation': {'thresholds': [0.695, -0.12, 0.11]}},
            {'adaptation': {'leg_contribution': [20.0, 0.0, 0.0]}},
        ]
        for estimator in invalid:
            with self.assertRaises(ScenarioError, msg=estimator):
                parse_scenario(scenario_document(estimator=estimator))

    def test_noise_counts_must_be_integers(self):
        for noise in ({'seed': 'x'}, {'seed': 1.5}, {'seed': -1}, {'detection_lag': 1.5}, {'detection_lag': -2},
                      {'phantom_swing_contacts': 'yes'}, {'standing_force_bias': [1.0, 2.0]}):
            with self.assertRaises(ScenarioError, msg=noise):
                parse_scenario(scenario_document(noise=noise))

    def test_estimator_states_follow_the_overrides(self):
        scenario = parse_scenario(scenario_document(estimator={
            'kf'  : {'r': [1e3] * 6},
            'rls' : {'forgetting': 0.9},
        }))

        kf, rls, config = scenario.estimator_states()

        assert_allclose(np.diag(kf.R), np.full(6, 1e3))
        self.assertEqual(rls.forgetting, 0.9)
        self.assertEqual(rls.pi_hat, kf.pi_hat)
        self.assertEqual(config.publish_policy, 'all-below')

    def test_malformed_file_reports_the_line(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'broken.json')
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write('{\n  "name": "broken",\n  "duration": 2.0,,\n}\n')

            with self.assertRaises(ScenarioError) as context:
                load_scenario(path)

        self.assertEqual(context.exception.context['line'], 3)
        self.assertEqual(context.exception.exit_code, 2)

    def test_timeline_must_be_contiguous_from_zero(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(scenario_document(gait_timeline=[{'pattern': 'trot', 'start_time': 1.0}]))
        with self.assertRaises(ScenarioError):
            parse_scenario(scenario_document(gait_timeline=[
                {'pattern': 'stand', 'start_time': 0.0}, {'pattern': 'trot', 'start_time': 0.0},
            ]))

    def test_payload_cannot_remove_more_than_was_attached(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(scenario_document(payload_events=[
                {'time': 0.5, 'mass_delta': 1.0}, {'time': 1.0, 'mass_delta': -1.5},
            ]))

    def test_tick_rate_must_be_positive(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(scenario_document(tick_rate=0.0))

    def test_custom_table_needs_four_flags(self):
        with self.assertRaises(ScenarioError):
            GaitSchedule(pattern='custom', phase_duration=0.3, phase_table=[[True, False, True]])

    def test_payload_bookkeeping(self):
        scenario = resolve_scenario('payload_switching')

        masses = [scenario.parameters_at(scenario.event_tick(event)).m for event in scenario.payload_events]

        assert_allclose(masses, [17.252, 16.21, 18.7545, 16.21, 21.3155, 16.21], atol=1e-12)
        self.assertEqual(scenario.parameters_at(499).m, 16.21)

    def test_offcenter_payload_shifts_first_moment(self):
        scenario = resolve_scenario('offcenter_payload')

        pi = scenario.parameters_at(scenario.tick_count - 1)

        self.assertAlmostEqual(pi.h_x, 0.142648 + 0.25445, places=12)
        self.assertAlmostEqual(pi.h_y, 0.0, places=12)


class GaitTest(SimpleTestCase):
    def setUp(self):
        self.footprint = standing_footprint()
        self.motion    = MotionProfile(swing_apex=0.05, bob_amplitude=0.02)

    def test_stand_keeps_every_foot_down(self):
        schedule = GaitSchedule(pattern='stand', phase_duration=0.35)

        for t in np.linspace(0.0, 5.0, 37):
            sample = stepping_motion(schedule, t, self.footprint, self.motion)

            self.assertEqual(sample.stance, (True, True, True, True))
            assert_allclose(sample.foot_positions, self.footprint)
            assert_allclose(sample.base_acceleration, np.zeros(3))

    def test_trot_alternates_diagonal_pairs(self):
        schedule = GaitSchedule(pattern='trot', phase_duration=0.35)

        self.assertEqual(schedule.stance_at(0.10), (True, False, False, True))
        self.assertEqual(schedule.stance_at(0.45), (False, True, True, False))
        self.assertEqual(schedule.stance_at(0.80), (True, False, False, True))

    def test_swing_foot_lifts_and_lands_in_place(self):
        schedule = GaitSchedule(pattern='trot', phase_duration=0.4)

        middle = stepping_motion(schedule, 0.2, self.footprint, self.motion)
        start  = stepping_motion(schedule, 0.0, self.footprint, self.motion)

        lift = middle.foot_positions - (self.footprint - middle.base_offset)
        assert_allclose(lift[[1, 2], 2], [0.05, 0.05], atol=1e-12)
        assert_allclose(lift[[0, 3]], np.zeros((2, 3)), atol=1e-12)
        assert_allclose(start.foot_positions, self.footprint - start.base_offset, atol=1e-12)

    def test_bob_excites_vertical_acceleration(self):
        schedule = GaitSchedule(pattern='trot', phase_duration=0.4)

        peaks = [stepping_motion(schedule, t, self.footprint, self.motion).base_acceleration[2] for t in (0.1, 0.3)]

        assert_allclose(peaks, [0.02, -0.02], atol=1e-12)


class ForceDistributionTest(SimpleTestCase):
    def setUp(self):
        self.footprint = standing_footprint()

    def test_symmetric_stance_shares_the_weight(self):
        forces = distribute_forces(self.footprint, ParameterVector(16.21, 0.0, 0.0), np.zeros(3), GRAVITY)

        assert_allclose(forces[:, 2], np.full(4, 16.21 * 9.81 / 4), rtol=1e-12)
        assert_allclose(forces[:, :2], np.zeros((4, 2)), atol=1e-10)

    def test_forward_com_loads_the_front_feet(self):
        forces = distribute_forces(self.footprint, NOMINAL, np.zeros(3), GRAVITY)

        self.assertGreater(forces[0, 2], forces[2, 2])
        self.assertGreater(forces[1, 2], forces[3, 2])
        assert_allclose(forces.sum(axis=0), [0.0, 0.0, 16.21 * 9.81], atol=1e-9)
        assert_allclose(np.cross(self.footprint, forces).sum(axis=0), [0.0, -9.81 * 0.142648, 0.0], atol=1e-9)

    def test_com_beyond_the_support_line_is_infeasible(self):
        stance = np.array([[0.1, 0.0, -0.3], [-0.1, 0.0, -0.3]])

        with self.assertRaises(InfeasibleStanceError):
            distribute_forces(stance, ParameterVector(10.0, 2.0, 0.0), np.zeros(3), GRAVITY)

    def test_com_off_the_support_line_is_unreachable_without_sway(self):
        stance = self.footprint[[0, 3]]

        with self.assertRaises(DistributionError):
            distribute_forces(stance, ParameterVector(16.21, 0.0, 0.3), np.zeros(3), GRAVITY)

    def test_single_foot_is_rejected(self):
        with self.assertRaises(DistributionError):
            distribute_forces(self.footprint[:1], NOMINAL, np.zeros(3), GRAVITY)

    def test_balancing_sway_makes_a_diagonal_stance_reachable(self):
        stance       = self.footprint[[1, 2]]
        acceleration = balancing_acceleration(stance, NOMINAL, np.zeros(3), GRAVITY)
        forces       = distribute_forces(stance, NOMINAL, acceleration, GRAVITY)

        self.assertAlmostEqual(acceleration[2], 0.0, places=15)
        self.assertTrue(np.all(forces[:, 2] > 0.0))
        assert_allclose(forces.sum(axis=0), 16.21 * (acceleration + GRAVITY), atol=1e-9)

    def test_balancing_leaves_wider_stances_alone(self):
        assert_allclose(balancing_acceleration(self.footprint, NOMINAL, [0.0, 0.0, 0.1], GRAVITY), [0.0, 0.0, 0.1])

    def test_solution_is_the_pseudo_inverse_one(self):
        for stance in (self.footprint, self.footprint[[0, 1, 3]], self.footprint[[0, 3]]):
            pi     = ParameterVector(16.21, 0.0, 0.0) if len(stance) == 2 else NOMINAL
            wrench = np.concatenate([pi.m * GRAVITY, np.cross([pi.h_x / pi.m, pi.h_y / pi.m, 0.0], pi.m * GRAVITY)])

            forces = distribute_forces(stance, pi, np.zeros(3), GRAVITY)

            assert_allclose(forces.ravel(), np.linalg.pinv(contact_map(stance)) @ wrench, atol=1e-9)

    def test_coincident_feet_are_rank_deficient(self):
        stance = np.array([[0.2, 0.1, -0.3], [0.2, 0.1, -0.3]])

        with self.assertRaises(DistributionError) as context:
            distribute_forces(stance, ParameterVector(16.21, 3.242, 1.621), np.zeros(3), GRAVITY)

        self.assertEqual(context.exception.context['rank'], 3)


class EngineTest(SimpleTestCase):
    def test_clean_snapshots_satisfy_the_regressor(self):
        scenario = parse_scenario(scenario_document(
            duration       = 10.0,
            gait_timeline  = [{'pattern': 'stand', 'start_time': 0.0}, {'pattern': 'trot', 'start_time': 1.0}],
            payload_events = [{'time': 4.0, 'mass_delta': 2.5445, 'attach_point': [0.1, -0.05]}],
        ))

        for tick in islice(run_scenario(scenario), 1000):
            residual = regressor_residual(build_regressor(tick.clean), tick.pi_true)

            self.assertLessEqual(np.max(np.abs(residual)), 1e-8)
            self.assertTrue(np.all(tick.clean.foot_forces()[:, 2] >= 0.0))

    def test_standing_weight_matches_gravity(self):
        scenario = parse_scenario(scenario_document(gait_timeline=[{'pattern': 'stand', 'start_time': 0.0}]))

        for tick in run_scenario(scenario):
            self.assertAlmostEqual(tick.clean.foot_forces()[:, 2].sum(), 16.21 * 9.81, places=9)

    def test_noiseless_stand_repeats_the_same_forces(self):
        scenario = parse_scenario(scenario_document(
            gait_timeline = [{'pattern': 'stand', 'start_time': 0.0}],
            noise         = {'force_noise_std': 0.0, 'position_noise_std': 0.0, 'accel_noise_std': 0.0,
                             'standing_force_bias': [0.0, 0.0, 0.0]},
        ))

        forces = [tick.noisy.foot_forces() for tick in run_scenario(scenario)]

        for other in forces[1:]:
            np.testing.assert_array_equal(other, forces[0])

    def test_same_seed_gives_the_same_stream(self):
        scenario = parse_scenario(scenario_document())

        first  = [(tick.noisy.foot_forces(), tick.noisy.base.linear_acceleration) for tick in run_scenario(scenario)]
        second = [(tick.noisy.foot_forces(), tick.noisy.base.linear_acceleration) for tick in run_scenario(scenario)]

        for (forces, accel), (other_forces, other_accel) in zip(first, second):
            np.testing.assert_array_equal(forces, other_forces)
            np.testing.assert_array_equal(accel, other_accel)

    def test_different_seeds_differ(self):
        scenario = parse_scenario(scenario_document())

        first  = next(run_scenario(scenario.with_seed(1))).noisy.foot_forces()
        second = next(run_scenario(scenario.with_seed(2))).noisy.foot_forces()

        self.assertFalse(np.array_equal(first, second))

    def test_standing_bias_only_while_standing(self):
        scenario = parse_scenario(scenario_document(
            gait_timeline = [{'pattern': 'stand', 'start_time': 0.0}, {'pattern': 'trot', 'start_time': 1.0}],
            noise         = {'force_noise_std': 0.0, 'position_noise_std': 0.0, 'accel_noise_std': 0.0},
        ))

        for tick in run_scenario(scenario):
            offset   = tick.noisy.foot_forces() - tick.clean.foot_forces()
            expected = np.tile([0.0, 0.0, 4.0], (4, 1)) if tick.pattern == 'stand' else np.zeros((4, 3))
            assert_allclose(offset, expected, atol=1e-12)

    def test_contact_detection_lag(self):
        scenario = parse_scenario(scenario_document(noise={'seed': 0, 'detection_lag': 3}))
        ticks    = list(run_scenario(scenario))

        for index in range(3, len(ticks)):
            measured  = [foot.contact_measured for foot in ticks[index].noisy.feet]
            scheduled = [foot.contact_scheduled for foot in ticks[index - 3].noisy.feet]
            self.assertEqual(measured, scheduled)

    def test_phantom_swing_contacts(self):
        scenario = parse_scenario(scenario_document(noise={'seed': 0, 'phantom_swing_contacts': True}))

        tick = next(run_scenario(scenario))

        self.assertTrue(all(foot.contact_measured for foot in tick.noisy.feet))
        self.assertEqual([foot.contact_scheduled for foot in tick.noisy.feet], [True, False, False, True])

    def test_infeasible_tick_is_reported(self):
        scenario = parse_scenario(scenario_document(
            payload_events=[{'time': 0.5, 'mass_delta': 10.0, 'attach_point': [1.5, 0.0]}],
        ))

        with self.assertRaises(InfeasibleStanceError) as context:
            list(run_scenario(scenario))

        self.assertEqual(context.exception.context['tick'], 50)
        self.assertEqual(context.exception.exit_code, 3)

    def test_payload_events_follow_the_scenario_bookkeeping(self):
        scenario = resolve_scenario('payload_switching')

        for tick in run_scenario(scenario):
            self.assertEqual(tick.pi_true, scenario.parameters_at(tick.index))
            self.assertEqual(tick.events, tuple(event.label for event in scenario.events_at(tick.index)))

    def test_noisy_base_keeps_the_clean_pose(self):
        for tick in islice(run_scenario(parse_scenario(scenario_document())), 50):
            self.assertIs(tick.noisy.base.orientation, tick.clean.base.orientation)
            self.assertIs(tick.noisy.base.position, tick.clean.base.position)
            self.assertFalse(np.array_equal(tick.noisy.base.linear_acceleration, tick.clean.base.linear_acceleration))

    def test_force_noise_matches_its_deviation(self):
        rng   = np.random.default_rng(12)
        noise = NoiseModel(force_noise_std=5.0, position_noise_std=0.002, accel_noise_std=0.3)

        samples = np.array([draw_noise(rng, noise)[2] for _ in range(100000)])

        assert_allclose(samples.std(axis=0), np.full((4, 3), 5.0), rtol=0.02)


class ScenarioListViewTest(SimpleTestCase):
    def test_lists_bundled_scenarios(self):
        response = Client().get('/scenarios')

        self.assertEqual(response.status_code, 200)
        names = [scenario['name'] for scenario in response.json()['scenarios']]
        self.assertIn('stand_then_trot', names)
        self.assertEqual(len(names), 5)
