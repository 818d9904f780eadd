import numpy as np
import pytest

from loopchern.errors import ConfigurationError, CoverageError
from loopchern.geometry import (
    BaseSpace,
    FourierField,
    LoopVariation,
    deform_loop,
    make_circle_loop,
    make_constant_loop,
    make_torus_loop,
)


class TestLoopConstruction:
    def test_fundamental_loop(self):
        loop = make_circle_loop(1, N=1024)
        assert loop.p == 1
        assert loop.samples.shape == (1025, 1)
        assert loop.is_closed_mod_lattice()

    def test_constant_loop(self):
        loop = make_circle_loop(0, N=64)
        assert np.abs(loop.samples - loop.samples[0]).max() == 0.0
        assert np.abs(loop.velocity_samples).max() == 0.0

    def test_two_chart_winding_two(self):
        loop = make_circle_loop(2, N=1024, atlas="two", p=4)
        assert loop.chart_assignment == (0, 1, 0, 1)

    def test_two_chart_p3(self):
        loop = make_circle_loop(1, N=96, atlas="two", p=3)
        assert len(loop.chart_assignment) == 3

    def test_velocity_matches_winding_by_finite_difference(self):
        for k in (-2, 1, 3):
            loop = make_circle_loop(k, N=256)
            fd = np.diff(loop.samples[:, 0]) * loop.N
            assert np.abs(fd - k).max() <= 1e-10

    def test_p_must_divide_n(self):
        with pytest.raises(ConfigurationError):
            make_circle_loop(1, N=100, p=3)

    def test_n_minimum(self):
        with pytest.raises(ConfigurationError):
            make_circle_loop(1, N=8)

    def test_chart_escape_detected(self):
        # winding 2 with p=2 forces each segment across a full turn
        with pytest.raises(CoverageError):
            make_circle_loop(2, N=64, atlas="two", p=2)

    def test_torus_loop(self):
        loop = make_torus_loop((1, 0), N=64, basepoint=(0.0, 0.3))
        assert loop.samples.shape == (65, 2)
        assert np.allclose(loop.velocity_samples, [1.0, 0.0])


class TestDeformation:
    def test_zero_step_is_identity(self):
        loop = make_circle_loop(1, N=64)
        v = LoopVariation.from_fourier({1: [0.25], -1: [0.25]}, dim=1, N=64)
        moved = deform_loop(loop, v, 0.0)
        assert np.allclose(moved.samples, loop.samples)

    def test_deform_then_undo(self):
        loop = make_circle_loop(1, N=64)
        v = LoopVariation.from_fourier({1: [0.1], -1: [0.1]}, dim=1, N=64)
        back = deform_loop(deform_loop(loop, v, 0.01), v, -0.01)
        assert np.abs(back.samples - loop.samples).max() <= 1e-15

    def test_constant_translation_on_torus(self):
        loop = make_constant_loop(BaseSpace.torus2(), (0.2, 0.5), N=64)
        v = LoopVariation.constant([1.0, -2.0], N=64)
        moved = deform_loop(loop, v, 0.125)
        # coordinate arithmetic oracle: every sample shifts by h * V
        assert np.allclose(moved.samples, loop.samples + 0.125 * np.array([1.0, -2.0]))

    def test_deformed_sample_contract(self):
        loop = make_circle_loop(1, N=128, atlas="two", p=2)
        v = LoopVariation.from_fourier({2: [0.05], -2: [0.05]}, dim=1, N=128)
        h = 1e-3
        moved = deform_loop(loop, v, h)
        assert np.allclose(moved.samples, loop.samples + h * v.components, atol=1e-15)
        assert moved.p == loop.p and moved.chart_assignment == loop.chart_assignment

    def test_deformation_chart_escape(self):
        loop = make_circle_loop(1, N=128, atlas="two", p=2)
        v = LoopVariation.constant([1.0], N=128)
        with pytest.raises(CoverageError):
            deform_loop(loop, v, 0.5)

    def test_complex_deformation_rejected(self):
        loop = make_circle_loop(1, N=64)
        v = LoopVariation.from_fourier({1: [1.0]}, dim=1, N=64)
        with pytest.raises(ConfigurationError):
            deform_loop(loop, v, 1e-3)


class TestVariations:
    def test_sample_fit_is_exact_interpolation(self):
        n = 64
        ts = np.arange(n + 1) / n
        samples = np.stack([np.cos(2 * np.pi * ts) + 0.3,
                            np.sin(4 * np.pi * ts)], axis=1)
        v = LoopVariation.from_samples(samples)
        assert np.abs(v.components - samples).max() <= 1e-12
        # derivative of the interpolant matches the analytic derivative
        dsamples = np.stack([-2 * np.pi * np.sin(2 * np.pi * ts),
                             4 * np.pi * np.cos(4 * np.pi * ts)], axis=1)
        assert np.abs(v.dcomponents - dsamples).max() <= 1e-9

    def test_periodicity_enforced(self):
        bad = np.linspace(0, 1, 65)[:, None]
        with pytest.raises(ConfigurationError):
            LoopVariation.from_samples(bad)


class TestCharts:
    def test_overlap_points_lie_in_both(self):
        base = BaseSpace.circle("two")
        pts = base.overlap_points(0, 1)[:, 0]
        for chart in base.charts:
            assert all(chart.contains_interval(p, p) for p in pts)

    def test_fourier_field_eval(self):
        f = FourierField(1, {1: np.array([1.0]), -1: np.array([1.0])})
        ts = np.linspace(0, 1, 9)
        assert np.allclose(f.eval(ts)[:, 0], 2 * np.cos(2 * np.pi * ts), atol=1e-12)
