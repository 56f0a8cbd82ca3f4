import math
import random

import pytest

from echo_teleop.errors import (
    CalibrationMissing,
    CountsOutOfRange,
    ForceOutOfRange,
    NonPositiveResistance,
)
from echo_teleop.sensing import (
    DEFAULT_SCALE,
    FsrModel,
    adc_to_angle,
    angle_to_counts,
    default_calibration,
    force_to_voltage,
    fsr_model_of,
    linearized_voltage,
    load_calibration,
    save_calibration,
    voltage_to_force,
)
from echo_teleop.types import ChannelCalibration, ForceChannelParams

CAL = ChannelCalibration(
    offset=2048.0, scale=DEFAULT_SCALE, sign=1, limit_min=-2.6, limit_max=2.6
)
PARAMS = ForceChannelParams()  # r_g 10 kOhm, g0 0, c 5e-6 S/N, f_max 20 N
MODEL = fsr_model_of(PARAMS)


class TestAdcToAngle:
    def test_offset_maps_to_zero(self):
        assert adc_to_angle(2048, CAL) == 0.0

    def test_known_deflection(self):
        # independent degree-based computation: 683 counts * (300/4096) deg
        expected = math.radians(683 * 300.0 / 4096.0)
        assert expected == pytest.approx(0.8730907317715775, abs=1e-15)
        assert adc_to_angle(2048 + 683, CAL) == pytest.approx(expected, abs=1e-12)

    def test_sign_negates(self):
        flipped = ChannelCalibration(
            offset=2048.0, scale=DEFAULT_SCALE, sign=-1, limit_min=-2.6, limit_max=2.6
        )
        for counts in (0, 100, 2048, 3000, 4095):
            assert adc_to_angle(counts, flipped) == -adc_to_angle(counts, CAL)

    def test_rejects_out_of_range(self):
        with pytest.raises(CountsOutOfRange):
            adc_to_angle(4096, CAL)
        with pytest.raises(CountsOutOfRange):
            adc_to_angle(-1, CAL)

    def test_affine_property(self):
        rng = random.Random(11)
        for _ in range(500):
            a = rng.randrange(0, 4096)
            b = rng.randrange(0, 4096 - a)
            lhs = adc_to_angle(a + b, CAL)
            rhs = adc_to_angle(a, CAL) + adc_to_angle(b, CAL) - adc_to_angle(0, CAL)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_counts_round_trip(self):
        for counts in range(0, 4096, 37):
            assert angle_to_counts(adc_to_angle(counts, CAL), CAL) == counts


class TestLinearizedVoltage:
    def test_unity_ratio_gives_minus_vref(self):
        assert linearized_voltage(PARAMS.r_g, PARAMS) == pytest.approx(-3.3, abs=1e-12)

    def test_huge_resistance_approaches_zero(self):
        assert abs(linearized_voltage(1e9 * PARAMS.r_g, PARAMS)) < 1e-8

    def test_double_resistance_halves_magnitude(self):
        assert linearized_voltage(2 * PARAMS.r_g, PARAMS) == pytest.approx(-1.65, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(NonPositiveResistance):
            linearized_voltage(0.0, PARAMS)

    def test_magnitude_monotone_in_resistance(self):
        previous = None
        for i in range(1000):
            r_fs = 1e6 * (1.0 - i / 1001.0)  # strictly decreasing resistance
            magnitude = abs(linearized_voltage(r_fs, PARAMS))
            if previous is not None:
                assert magnitude > previous
            previous = magnitude


class TestForceChain:
    def test_zero_conductance_zero_force(self):
        assert force_to_voltage(0.0, MODEL, PARAMS) == 0.0

    def test_affine_in_force(self):
        model = FsrModel(g0=3e-5, c=4e-6)
        v0 = force_to_voltage(0.0, model, PARAMS)
        v1 = force_to_voltage(5.0, model, PARAMS)
        v2 = force_to_voltage(10.0, model, PARAMS)
        assert v2 - v0 == pytest.approx(2 * (v1 - v0), abs=1e-12)

    def test_default_midscale(self):
        # c chosen so f_max = 20 N maps to the full -3.3 V swing
        assert force_to_voltage(10.0, MODEL, PARAMS) == pytest.approx(-1.65, abs=1e-12)
        assert force_to_voltage(20.0, MODEL, PARAMS) == pytest.approx(-3.3, abs=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(ForceOutOfRange):
            force_to_voltage(-0.1, MODEL, PARAMS)
        with pytest.raises(ForceOutOfRange):
            force_to_voltage(20.1, MODEL, PARAMS)

    def test_full_scale_wire_value(self):
        assert voltage_to_force(3300, MODEL, PARAMS) == pytest.approx(20.0, abs=1e-9)

    def test_zero_millivolts(self):
        assert voltage_to_force(0, MODEL, PARAMS) == 0.0

    def test_round_trip_grid(self):
        for i in range(1001):
            force = PARAMS.f_max * i / 1000.0
            volts = force_to_voltage(force, MODEL, PARAMS)
            back = voltage_to_force(abs(volts) * 1000.0, MODEL, PARAMS)
            assert back == pytest.approx(force, abs=1e-9)

    def test_resistance_decreases_with_force(self):
        previous = None
        for i in range(100):
            r = MODEL.resistance(0.2 * i + 0.1)
            if previous is not None:
                assert r < previous
            previous = r


class TestCalibrationFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cal.cfg"
        calibration = default_calibration()
        save_calibration(path, calibration, PARAMS)
        loaded_cal, loaded_params = load_calibration(path)
        assert loaded_cal == calibration
        assert loaded_params == PARAMS

    def test_missing_file(self, tmp_path):
        with pytest.raises(CalibrationMissing):
            load_calibration(tmp_path / "nope.cfg")

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[joint0]\noffset = what\n")
        with pytest.raises(CalibrationMissing):
            load_calibration(path)
