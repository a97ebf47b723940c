"""Channel sampling, pilot design, and frame synthesis tests."""

import numpy as np
import numpy.testing as npt
import pytest

from ambc_chanest.array_model import ArrayConfig, dft_matrix
from ambc_chanest.signal_model import (
    ChannelParams,
    PilotFrame,
    composite_channel,
    generate_frame,
    make_pilots,
    sample_channel,
)

CFG = ArrayConfig(num_antennas=16, spacing_ratio=0.5)


def _params(**kw):
    base = dict(h0=0.7 + 0.2j, h_st=1.0 - 0.4j, h_tr=-0.3 + 0.9j,
                eta=0.5, theta0=-np.pi / 4, theta1=np.pi / 5)
    base.update(kw)
    return ChannelParams(**base)


class TestChannelParams:
    def test_cascade_gain(self):
        p = _params()
        npt.assert_allclose(p.h1, 0.5 * (1.0 - 0.4j) * (-0.3 + 0.9j))

    @pytest.mark.parametrize("eta", [0.0, -0.2, 1.5])
    def test_eta_range(self, eta):
        with pytest.raises(ValueError):
            _params(eta=eta)

    def test_angle_range(self):
        with pytest.raises(ValueError):
            _params(theta0=2.0)


class TestSampleChannel:
    def test_same_seed_reproduces(self):
        a = sample_channel(np.random.default_rng(123))
        b = sample_channel(np.random.default_rng(123))
        assert (a.h0, a.h_st, a.h_tr) == (b.h0, b.h_st, b.h_tr)

    def test_pinned_regression_values(self):
        # frozen from the first run with seed 2024: guards the draw order
        p = sample_channel(np.random.default_rng(2024))
        npt.assert_allclose(
            [p.h0, p.h_st, p.h_tr],
            [
                0.7275116724417824 - 0.688141834703904j,
                1.1610127949246623 - 0.9848583929853606j,
                0.8108531554968135 + 0.0475149983417919j,
            ],
            rtol=0,
            atol=1e-15,
        )

    def test_unit_variance_components(self):
        rng = np.random.default_rng(99)
        draws = np.array([sample_channel(rng).h0 for _ in range(100_000)])
        assert abs(np.var(draws.real) - 0.5) < 0.01
        assert abs(np.var(draws.imag) - 0.5) < 0.01
        assert abs(np.mean(draws.real)) < 0.01
        assert abs(np.mean(draws.imag)) < 0.01

    def test_random_angles_mode(self):
        rng = np.random.default_rng(5)
        p = sample_channel(rng, random_angles=True)
        assert -np.pi / 2 <= p.theta0 <= np.pi / 2
        assert -np.pi / 2 <= p.theta1 <= np.pi / 2


class TestCompositeChannel:
    def test_absorbing_state_is_direct_only(self):
        from ambc_chanest.array_model import steering_vector

        p = _params()
        npt.assert_allclose(
            composite_channel(p, CFG, 0), p.h0 * steering_vector(CFG, p.theta0), atol=1e-15
        )

    def test_zero_cascade_matches_absorbing(self):
        p = _params(h_st=0.0)
        npt.assert_allclose(composite_channel(p, CFG, 1), composite_channel(p, CFG, 0), atol=1e-15)

    def test_pure_backscatter_on_grid_peak(self):
        # h0 = 0, on-grid backscatter: single DFT peak of height eta*h_st*h_tr
        theta1 = np.arcsin(4 / (CFG.num_antennas * CFG.spacing_ratio))
        p = _params(h0=0.0, h_st=1.0, h_tr=1.0, eta=0.5, theta1=theta1)
        spec = dft_matrix(CFG.num_antennas) @ composite_channel(p, CFG, 1)
        assert int(np.argmax(np.abs(spec))) == 4
        npt.assert_allclose(spec[4], 0.5, atol=1e-12)

    def test_state_difference_is_backscatter_term(self):
        from ambc_chanest.array_model import steering_vector

        p = _params()
        diff = composite_channel(p, CFG, 1) - composite_channel(p, CFG, 0)
        npt.assert_allclose(diff, p.h1 * steering_vector(CFG, p.theta1), atol=1e-14)

    def test_bad_bit(self):
        with pytest.raises(ValueError):
            composite_channel(_params(), CFG, 2)


class TestMakePilots:
    def test_single_pilot(self):
        npt.assert_allclose(make_pilots(1, 4.0).symbols, [2.0])

    def test_alternating_pattern(self):
        npt.assert_allclose(make_pilots(4, 1.0).symbols, [1.0, -1.0, 1.0, -1.0])

    def test_energy_is_exact(self):
        for n in (1, 3, 8, 17):
            for power in (0.25, 1.0, 10.0):
                for pattern in ("alternating", "constant"):
                    s = make_pilots(n, power, pattern).symbols
                    assert np.sum(s**2) == pytest.approx(n * power, rel=1e-15)

    def test_constant_modulus(self):
        s = make_pilots(9, 2.5).symbols
        npt.assert_allclose(np.abs(s) ** 2, 2.5, atol=1e-15)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            make_pilots(0, 1.0)
        with pytest.raises(ValueError):
            make_pilots(4, -1.0)
        with pytest.raises(ValueError):
            make_pilots(4, 1.0, pattern="fancy")

    def test_pilot_frame_validates_modulus(self):
        with pytest.raises(ValueError):
            PilotFrame(symbols=np.array([1.0, 0.5]), power=1.0)


class TestGenerateFrame:
    def test_noiseless_is_exact_rank_one(self):
        p = _params()
        pilots = make_pilots(4, 2.0)
        frame = generate_frame(p, CFG, pilots, 0.0, np.random.default_rng(0))
        expected = np.outer(composite_channel(p, CFG, 0), pilots.symbols)
        npt.assert_allclose(frame.samples, expected, atol=0)
        assert np.linalg.matrix_rank(frame.samples) <= 1

    def test_tag_state_follows_pilots(self):
        p = _params()
        pilots = make_pilots(2, 1.0).with_tag_state(1)
        frame = generate_frame(p, CFG, pilots, 0.0, np.random.default_rng(0))
        assert frame.tag_state == 1

    def test_noise_variance_moment(self):
        # per-entry complex noise variance == sigma2
        p = _params(h0=0.0, h_st=0.0)
        pilots = make_pilots(1, 1.0)
        rng = np.random.default_rng(11)
        samples = []
        for _ in range(800):
            samples.append(generate_frame(p, CFG, pilots, 1.0, rng).samples.ravel())
        noise = np.concatenate(samples)  # 12800 entries
        assert abs(np.mean(np.abs(noise) ** 2) - 1.0) < 0.03

    def test_same_seed_bit_identical(self):
        p = _params()
        pilots = make_pilots(3, 1.0)
        f1 = generate_frame(p, CFG, pilots, 2.0, np.random.default_rng(42))
        f2 = generate_frame(p, CFG, pilots, 2.0, np.random.default_rng(42))
        assert np.array_equal(f1.samples, f2.samples)

    def test_negative_sigma2_rejected(self):
        with pytest.raises(ValueError):
            generate_frame(_params(), CFG, make_pilots(1, 1.0), -0.5, np.random.default_rng(0))
