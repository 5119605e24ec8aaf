from dataclasses import replace

import numpy as np

from django.test         import SimpleTestCase
from numpy.testing       import assert_allclose

from adaptation.pipeline import (AdaptationConfig, adaptation_tick, gate_contacts, gated_mask,
                                 initial_published_model, should_publish, subtract_leg_contribution)
from core.exceptions     import DomainError
from dynamics.bodies     import FootState, ParameterVector, RigidBodyState, RobotSnapshot
from dynamics.legs       import standing_footprint
from dynamics.regressor  import build_regressor
from estimators.kalman   import initial_kf_state, kf_predict, kf_update
from simulator.engine    import run_scenario
from simulator.scenarios import resolve_scenario

CALIBRATED_R = np.full(6, 1e3)


def make_snapshot(time=0.0, measured=(True,) * 4, scheduled=(True,) * 4, weight=16.21 * 9.81):
    feet = [
        FootState(
            index             = index,
            position          = position,
            force             = [0.0, 0.0, weight / 4],
            contact_measured  = measured[index],
            contact_scheduled = scheduled[index],
        ) for index, position in enumerate(standing_footprint())
    ]
    return RobotSnapshot(time=time, base=RigidBodyState(position=[0.0, 0.0, 0.3]), feet=feet)


def replay(scenario, config, kf=None):
    kf     = kf or initial_kf_state(r=CALIBRATED_R)
    model  = initial_published_model(kf, config)
    result = []
    for tick in run_scenario(scenario):
        kf, model = adaptation_tick(tick.noisy, kf, config, model)
        result.append((tick, kf, model))
    return result


class AdaptationConfigTest(SimpleTestCase):
    def test_defaults_from_settings(self):
        config = AdaptationConfig.from_settings()

        assert_allclose(config.thresholds, [0.695, 0.12, 0.11])
        self.assertEqual(config.publish_policy, 'all-below')
        self.assertEqual(config.standing_r_scale, 50.0)
        self.assertFalse(config.latched)

    def test_rejects_invalid_values(self):
        with self.assertRaises(DomainError):
            AdaptationConfig.from_settings(publish_policy='sometimes')
        with self.assertRaises(DomainError):
            AdaptationConfig.from_settings(thresholds=[0.695, 0.0, 0.11])
        with self.assertRaises(DomainError):
            AdaptationConfig.from_settings(leg_contribution=[-1.0, 0.0, 0.0])


class GateContactsTest(SimpleTestCase):
    def test_feet_in_contact_keep_their_force(self):
        snapshot = make_snapshot()

        gated = gate_contacts(snapshot.feet)

        assert_allclose([foot.force for foot in gated], snapshot.foot_forces())
        self.assertEqual(gated_mask(snapshot.feet), 0)

    def test_swing_and_undetected_feet_are_zeroed(self):
        snapshot = make_snapshot(measured=(True, True, False, True), scheduled=(True, False, True, True))

        forces = np.array([foot.force for foot in gate_contacts(snapshot.feet)])

        assert_allclose(forces[[1, 2]], np.zeros((2, 3)))
        assert_allclose(forces[[0, 3]], snapshot.foot_forces()[[0, 3]])
        self.assertEqual(gated_mask(snapshot.feet), 0b0110)

    def test_gating_is_idempotent(self):
        snapshot = make_snapshot(measured=(False, True, True, True), scheduled=(True, True, False, True))

        once  = gate_contacts(snapshot.feet)
        twice = gate_contacts(once)

        for first, second in zip(once, twice):
            assert_allclose(first.force, second.force)


class PublicationDecisionTest(SimpleTestCase):
    def setUp(self):
        self.config = AdaptationConfig.from_settings()

    def test_all_below(self):
        self.assertTrue(should_publish(np.diag([0.5, 0.1, 0.1]), self.config))
        self.assertFalse(should_publish(np.diag([0.5, 0.13, 0.1]), self.config))
        self.assertFalse(should_publish(np.diag([0.695, 0.1, 0.1]), self.config))

    def test_per_parameter(self):
        config = replace(self.config, publish_policy='per-parameter')

        self.assertTrue(should_publish(np.diag([0.5, 0.13, 0.2]), config))
        self.assertFalse(should_publish(np.diag([0.9, 0.13, 0.2]), config))

    def test_infinite_thresholds_always_publish(self):
        config = replace(self.config, thresholds=np.full(3, np.inf))

        self.assertTrue(should_publish(np.diag([1e6, 1e6, 1e6]), config))

    def test_leg_contribution(self):
        config = replace(self.config, leg_contribution=ParameterVector(2.0, 0.01, 0.0))

        pi_base = subtract_leg_contribution(ParameterVector(16.21, 0.142648, 0.0), config)

        assert_allclose(pi_base.as_array(), [14.21, 0.132648, 0.0], atol=1e-15)
        with self.assertRaises(DomainError):
            subtract_leg_contribution(ParameterVector(1.5, 0.0, 0.0), config)


class AdaptationTickTest(SimpleTestCase):
    def setUp(self):
        self.config = AdaptationConfig.from_settings()
        self.kf     = initial_kf_state()
        self.model  = initial_published_model(self.kf, self.config)

    def test_uncertain_start_keeps_the_nominal_model(self):
        kf, model = adaptation_tick(make_snapshot(), self.kf, self.config, self.model)

        self.assertFalse(model.fresh)
        self.assertEqual(model.pi_total, self.kf.pi_hat)
        self.assertEqual(model.time, 0.0)
        self.assertTrue(np.all(np.diag(kf.P) > self.config.thresholds))

    def test_time_must_increase(self):
        kf, model = adaptation_tick(make_snapshot(time=1.0), self.kf, self.config, self.model)

        with self.assertRaises(DomainError):
            adaptation_tick(make_snapshot(time=1.0), kf, self.config, model)

    def test_same_inputs_give_the_same_outputs(self):
        snapshot = make_snapshot(weight=170.0)

        first  = adaptation_tick(snapshot, self.kf, self.config, self.model)
        second = adaptation_tick(snapshot, self.kf, self.config, self.model)

        assert_allclose(first[0].P, second[0].P)
        self.assertEqual(first[0].pi_hat, second[0].pi_hat)
        self.assertEqual(first[1], second[1])

    def test_publication_survives_a_shrinking_update(self):
        kf       = initial_kf_state(p0=[0.1, 0.01, 0.01], q=[0.0, 0.0, 0.0], r=CALIBRATED_R)
        stepping = (True, False, False, True)

        kf, first = adaptation_tick(make_snapshot(time=0.01, scheduled=stepping), kf, self.config,
                                    initial_published_model(kf, self.config))
        shrunk, second = adaptation_tick(make_snapshot(time=0.02, scheduled=stepping), kf, self.config, first)

        self.assertTrue(first.fresh)
        self.assertTrue(np.all(np.diag(shrunk.P) <= np.diag(kf.P)))
        self.assertTrue(second.fresh)
        self.assertEqual(second.time, 0.02)

    def test_airborne_ticks_only_predict_when_skipping(self):
        config   = replace(self.config, skip_when_airborne=True)
        snapshot = make_snapshot(measured=(False,) * 4, scheduled=(False,) * 4)

        kf, model = adaptation_tick(snapshot, self.kf, config, self.model)

        assert_allclose(kf.P, self.kf.P + self.kf.Q)
        self.assertEqual(kf.pi_hat, self.kf.pi_hat)
        self.assertEqual(model.pi_total, self.model.pi_total)

    def test_airborne_ticks_update_without_the_switch(self):
        snapshot = make_snapshot(measured=(False,) * 4, scheduled=(False,) * 4)

        kf, _ = adaptation_tick(snapshot, self.kf, self.config, self.model)

        self.assertLess(kf.pi_hat.m, self.kf.pi_hat.m)

    def test_standing_ticks_use_the_inflated_measurement_noise(self):
        snapshot = make_snapshot(weight=170.0)

        kf, _ = adaptation_tick(snapshot, self.kf, self.config, self.model)

        expected = kf_update(kf_predict(self.kf), build_regressor(snapshot), r_scale=50.0)
        assert_allclose(kf.P, expected.P)
        assert_allclose(kf.pi_hat.as_array(), expected.pi_hat.as_array())

    def test_stepping_ticks_use_the_nominal_measurement_noise(self):
        snapshot = make_snapshot(scheduled=(True, False, False, True))

        kf, _ = adaptation_tick(snapshot, self.kf, self.config, self.model)

        gated    = snapshot.with_feet(gate_contacts(snapshot.feet))
        expected = kf_update(kf_predict(self.kf), build_regressor(gated))
        assert_allclose(kf.P, expected.P)


class AdaptationReplayTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config     = AdaptationConfig.from_settings()
        cls.stand_trot = replay(resolve_scenario('stand_then_trot'), cls.config)
        cls.bias       = replay(resolve_scenario('standing_bias'), cls.config)

    def test_fresh_implies_covariance_below_thresholds(self):
        for _, kf, model in self.stand_trot:
            if model.fresh:
                self.assertTrue(should_publish(kf.P, self.config))

    def test_published_model_is_never_newer_than_the_last_publication(self):
        last = None
        for tick, kf, model in self.stand_trot:
            self.assertLessEqual(model.time, tick.noisy.time)
            if model.fresh:
                self.assertEqual(model.pi_total, kf.pi_hat)
                self.assertEqual(model.time, tick.noisy.time)
                last = model
            elif last is not None:
                self.assertEqual(model.pi_total, last.pi_total)
                self.assertEqual(model.time, last.time)

    def test_biased_standing_is_never_published(self):
        for tick, _, model in self.bias:
            if tick.noisy.time < 10.0:
                self.assertFalse(model.fresh)

    def test_stepping_publishes(self):
        fresh = [model.fresh for tick, _, model in self.stand_trot if tick.noisy.time >= 15.0]

        self.assertTrue(all(fresh))

    def test_final_standing_stops_publication(self):
        self.assertFalse(self.bias[-1][2].fresh)
        self.assertLess(self.bias[-1][2].time, 21.0)

    def test_latched_publication_continues_while_standing(self):
        scenario = replace(resolve_scenario('standing_bias'), duration=22.0)

        result = replay(scenario, replace(self.config, latched=True))

        self.assertTrue(all(model.fresh for tick, _, model in result if tick.noisy.time >= 15.0))

    def test_per_parameter_publication_keeps_uncertain_entries(self):
        config   = replace(self.config, publish_policy='per-parameter', thresholds=[0.695, 1e-9, 1e-9])
        scenario = replace(resolve_scenario('stand_then_trot'), duration=15.0)

        result = replay(scenario, config)
        _, kf, model = result[-1]

        self.assertTrue(model.fresh)
        self.assertEqual(model.pi_total.m, kf.pi_hat.m)
        self.assertEqual(model.pi_total.h_x, 0.142648)
        self.assertEqual(model.pi_total.h_y, 0.0)
