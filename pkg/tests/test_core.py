import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzymon.core import (
    AmplitudeState,
    MeasurementSpec,
    Readout,
    SystemSpec,
    classify_regime,
    time_scales,
)

from conftest import T_R, driven_two_level, free_levels


class TestSystemSpec:
    def test_levels_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            SystemSpec([1.0, 1.0])
        with pytest.raises(ValueError, match="strictly increasing"):
            SystemSpec([2.0, 1.0])

    def test_requires_hermitian_coupling(self):
        with pytest.raises(ValueError, match="Hermitian"):
            SystemSpec([0.0, 1.0], [[0, 1e-6j], [1e-6j, 0]])
        # within tolerance is fine
        SystemSpec([0.0, 1.0], [[0, 1 + 1e-13j], [1 - 1e-13j, 0]])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="match"):
            SystemSpec([0.0, 1.0], np.zeros((3, 3)))

    def test_single_level_allowed(self):
        s = SystemSpec([2.5])
        assert s.n_levels == 1 and s.is_free()

    def test_arrays_immutable(self):
        s = driven_two_level()
        with pytest.raises(ValueError):
            s.levels[0] = 5.0
        with pytest.raises(ValueError):
            s.coupling[0, 1] = 0.0

    def test_two_level_v(self):
        assert driven_two_level(v=2.0).two_level_v() == 2.0
        assert free_levels([0.0, 1.0]).two_level_v() is None
        assert SystemSpec([0, 1, 2]).two_level_v() is None


class TestMeasurementSpec:
    def test_dt_must_divide_duration(self):
        m = MeasurementSpec(kappa=1.0, duration=1.0, dt=0.125)
        assert m.n_steps == 8
        with pytest.raises(ValueError, match="divide"):
            MeasurementSpec(kappa=1.0, duration=1.0, dt=0.3)

    def test_dt_bounds(self):
        with pytest.raises(ValueError):
            MeasurementSpec(kappa=1.0, duration=1.0, dt=2.0)
        with pytest.raises(ValueError):
            MeasurementSpec(kappa=1.0, duration=1.0, dt=0.0)

    def test_kappa_validation(self):
        with pytest.raises(ValueError):
            MeasurementSpec(kappa=-1.0, duration=1.0, dt=0.1)
        assert MeasurementSpec(kappa=0.0, duration=1.0, dt=0.1).delta_e_t == math.inf

    def test_grid(self):
        m = MeasurementSpec(kappa=1.0, duration=1.0, dt=0.25)
        assert np.allclose(m.grid(), [0.0, 0.25, 0.5, 0.75])


class TestReadout:
    def test_piecewise_constant(self):
        r = Readout([1.0, 2.0, 3.0], dt=0.5)
        assert r.at(0.0) == 1.0
        assert r.at(0.49) == 1.0
        assert r.at(0.5) == 2.0
        assert r.at(1.49) == 3.0
        assert r.at(1.5) == 3.0  # clamped to the last step

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            Readout([1.0, math.nan], dt=0.5)

    def test_mean_square_deflection(self):
        r = Readout([0.0, 2.0], dt=1.0)
        assert r.mean_square_deflection(0.0) == pytest.approx(2.0)
        assert r.mean_square_deflection([0.0, 2.0]) == 0.0


class TestAmplitudeState:
    def test_norm_and_normalize(self):
        s = AmplitudeState([3.0, 4.0j])
        assert s.norm_squared == pytest.approx(25.0)
        n = s.normalized()
        assert n.norm_squared == pytest.approx(1.0)
        assert np.allclose(n.populations(), [0.36, 0.64])

    def test_zero_state_rejected_on_normalize(self):
        with pytest.raises(ValueError):
            AmplitudeState([0.0, 0.0]).normalized()


class TestTimeScales:
    def test_unit_values(self):
        # kappa=1, T=1, gap=1: both scales are exactly 1
        ts = time_scales(free_levels([0.0, 1.0]), MeasurementSpec(1.0, 1.0, 0.1))
        assert ts.delta_e_t == 1.0
        assert ts.t_lr == 1.0
        assert ts.t_r is None and ts.nu is None

    def test_resolution_quarter_duration(self):
        # kappa=1, T=4: resolution 1/sqrt(4) = 0.5
        ts = time_scales(free_levels([0.0, 1.0]), MeasurementSpec(1.0, 4.0, 0.5))
        assert ts.delta_e_t == pytest.approx(0.5, abs=0, rel=1e-15)

    def test_nu_from_figure_setting(self):
        # t_lr = 0.8/(2 pi) * t_r with v=1 gives nu = pi*t_lr/t_r = 0.4
        t_lr = 0.8 / (2.0 * math.pi) * T_R
        kappa = 1.0 / t_lr
        ts = time_scales(driven_two_level(), MeasurementSpec(kappa, 1.0, 0.1))
        assert ts.t_r == pytest.approx(T_R, rel=1e-15)
        assert ts.nu == pytest.approx(0.4, rel=1e-12)

    def test_single_level_has_no_gap(self):
        with pytest.raises(ValueError, match="no level gap"):
            time_scales(SystemSpec([1.0]), MeasurementSpec(1.0, 1.0, 0.1))

    def test_gap_index_selection(self):
        s = SystemSpec([0.0, 1.0, 3.0])
        m = MeasurementSpec(1.0, 1.0, 0.1)
        assert time_scales(s, m, gap_index=0).t_lr == pytest.approx(1.0)
        assert time_scales(s, m, gap_index=1).t_lr == pytest.approx(0.25)
        with pytest.raises(ValueError, match="out of range"):
            time_scales(s, m, gap_index=2)

    def test_pure_function_bit_identical(self):
        s = driven_two_level(v=0.7, e2=1.3)
        m = MeasurementSpec(0.31, 2.7, 0.027)
        a, b = time_scales(s, m), time_scales(s, m)
        assert (a.delta_e_t, a.t_lr, a.t_r, a.nu) == (b.delta_e_t, b.t_lr, b.t_r, b.nu)

    @given(
        kappa=st.floats(1e-6, 1e6),
        t1=st.floats(1e-6, 1e6),
        factor=st.floats(1.0001, 1e3),
    )
    @settings(max_examples=50, deadline=None)
    def test_resolution_improves_with_duration(self, kappa, t1, factor):
        m1 = MeasurementSpec(kappa, t1, t1 / 4)
        m2 = MeasurementSpec(kappa, t1 * factor, t1 * factor / 4)
        assert m2.delta_e_t < m1.delta_e_t

    def test_scale_identities_hold_to_ulp(self):
        s = free_levels([0.0, 1.7])
        m = MeasurementSpec(0.37, 5.3, 0.053)
        ts = time_scales(s, m)
        assert ts.delta_e_t * ts.delta_e_t * m.kappa * m.duration == pytest.approx(
            1.0, rel=1e-14
        )
        assert ts.t_lr * m.kappa * 1.7**2 == pytest.approx(1.0, rel=1e-14)


class TestRegimeClassifier:
    def _scales(self, t_lr, t_r):
        from fuzzymon.core import TimeScales

        return TimeScales(delta_e_t=1.0, t_lr=t_lr, t_r=t_r, nu=None)

    def test_zeno_example(self):
        # t_lr = 0.01 t_r, duration 10 t_r
        assert classify_regime(10 * T_R, self._scales(0.01 * T_R, T_R)) == "ZENO"

    def test_strong_rabi_example(self):
        # t_r << T << t_lr
        assert classify_regime(100.0, self._scales(1e4, 1.0)) == "STRONG_RABI"

    def test_correlated_rabi_example(self):
        # t_r/(2 pi t_lr) = 0.8 and duration of the same order
        t_lr = T_R / (2 * math.pi * 0.8)
        assert (
            classify_regime(T_R, self._scales(t_lr, T_R)) == "CORRELATED_RABI"
        )

    def test_mixing(self):
        assert classify_regime(1e4, self._scales(100.0, 1.0)) == "MIXING"

    def test_free_system_labels(self):
        assert classify_regime(100.0, self._scales(1.0, None)) == "DECOHERENCE"
        assert classify_regime(0.01, self._scales(1.0, None)) == "FREE_UNRESOLVED"
        assert classify_regime(1.0, self._scales(1.0, None)) == "UNCLASSIFIED"

    def test_thresholds_overridable(self):
        sc = self._scales(1.0, None)
        assert classify_regime(5.0, sc) == "UNCLASSIFIED"
        assert classify_regime(5.0, sc, much_ratio=5.0) == "DECOHERENCE"
