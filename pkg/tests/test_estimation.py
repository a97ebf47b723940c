"""Tests for the LS / DFT-coarse / rotation-refine estimator chain."""

import numpy as np
import numpy.testing as npt
import pytest

from ambc_chanest.array_model import ArrayConfig, steering_vector
from ambc_chanest.estimation import (
    IllConditionedPilotError,
    dft_coarse,
    estimate_all,
    ls_estimate,
    rotation_refine,
)
from ambc_chanest.signal_model import (
    ChannelParams,
    PilotFrame,
    composite_channel,
    generate_frame,
    make_pilots,
)

CFG128 = ArrayConfig(num_antennas=128, spacing_ratio=0.5)


def _noiseless_frames(params, cfg, pilots):
    rng = np.random.default_rng(0)
    frame0 = generate_frame(params, cfg, pilots, 0.0, rng)
    frame1 = generate_frame(params, cfg, pilots.with_tag_state(1), 0.0, rng)
    return frame0, frame1


class TestLsEstimate:
    def test_noiseless_recovers_channel_exactly(self):
        params = ChannelParams(h0=0.3 - 1.2j, h_st=0.5, h_tr=2.0j, eta=0.7,
                               theta0=0.2, theta1=-0.9)
        pilots = make_pilots(5, 3.0)
        frame, _ = _noiseless_frames(params, CFG128, pilots)
        h_hat = ls_estimate(frame.samples, pilots)
        npt.assert_allclose(h_hat, composite_channel(params, CFG128, 0), atol=1e-12)

    def test_noise_only_variance(self):
        # h = 0, N = 1, P_s = 1: per-entry estimator variance sigma2/(N P_s) = 1
        pilots = make_pilots(1, 1.0)
        rng = np.random.default_rng(10)
        m, trials = 64, 1600  # 102400 scalar samples
        vals = []
        for _ in range(trials):
            w = (rng.standard_normal((m, 1)) + 1j * rng.standard_normal((m, 1))) * np.sqrt(0.5)
            vals.append(ls_estimate(w, pilots))
        v = np.mean(np.abs(np.concatenate(vals)) ** 2)
        assert 0.98 < v < 1.02

    def test_doubling_power_halves_variance(self):
        rng = np.random.default_rng(20)
        m, trials = 64, 1600

        def run(power):
            # received frame is pure noise; only the pilot correlation rescales
            pilots = make_pilots(1, power)
            acc = []
            for _ in range(trials):
                w = (rng.standard_normal((m, 1)) + 1j * rng.standard_normal((m, 1))) * np.sqrt(0.5)
                acc.append(ls_estimate(w, pilots))
            return np.mean(np.abs(np.concatenate(acc)) ** 2)

        ratio = run(1.0) / run(2.0)
        assert abs(ratio - 2.0) < 0.1

    def test_degenerate_pilots_rejected(self):
        # s = [sqrt(P), j sqrt(P)] has s^T s = 0 under the plain transpose
        pilots = PilotFrame(symbols=np.array([1.0, 1.0j]), power=1.0)
        y = np.ones((4, 2), dtype=complex)
        with pytest.raises(IllConditionedPilotError):
            ls_estimate(y, pilots)
        # the conjugate correlator handles the same pilots fine
        out = ls_estimate(y, pilots, mode="conjugate")
        assert out.shape == (4,)

    def test_conjugate_matches_transpose_for_real_pilots(self):
        pilots = make_pilots(4, 2.0)
        rng = np.random.default_rng(3)
        y = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        npt.assert_allclose(
            ls_estimate(y, pilots), ls_estimate(y, pilots, mode="conjugate"), atol=1e-13
        )


class TestDftCoarse:
    def test_on_grid_exact(self):
        # 64*sin(pi/6) = 32: bin 33, exact angle and gain
        est = dft_coarse(steering_vector(CFG128, np.pi / 6), CFG128)
        assert est.bin == 33
        assert est.theta_hat == pytest.approx(np.pi / 6, abs=1e-12)
        assert est.gain_hat == pytest.approx(1.0, abs=1e-12)

    def test_off_grid_negative_branch(self):
        # 64*sin(-pi/4) = -45.25 wraps to 82.75: argmax at bin 84,
        # mapped through the negative branch arcsin((83-128)/64)
        est = dft_coarse(steering_vector(CFG128, -np.pi / 4), CFG128)
        assert est.bin == 84
        assert est.theta_hat == pytest.approx(np.arcsin(-45 / 64), abs=1e-12)

    def test_zero_input_degenerates_to_first_bin(self):
        est = dft_coarse(np.zeros(128, dtype=complex), CFG128)
        assert est.bin == 1
        assert est.gain_hat == 0.0

    def test_on_grid_random_gains(self):
        rng = np.random.default_rng(8)
        m, ratio = 64, 0.5
        cfg = ArrayConfig(m, ratio)
        for q in (-25, -3, 0, 7, 18, 31):
            theta = np.arcsin(q / (m * ratio))
            gain = complex(rng.standard_normal(), rng.standard_normal())
            est = dft_coarse(gain * steering_vector(cfg, theta), cfg)
            assert est.bin == (q % m) + 1
            assert abs(est.theta_hat - theta) < 1e-10
            assert abs(est.gain_hat - gain) < 1e-10


class TestRotationRefine:
    def test_on_grid_refinement_is_neutral(self):
        theta = np.arcsin(16 / 64)
        h = (0.4 - 0.9j) * steering_vector(CFG128, theta)
        coarse = dft_coarse(h, CFG128)
        refined = rotation_refine(h, CFG128, coarse)
        assert refined.bin == coarse.bin
        assert abs(refined.delta) < 1e-7  # already aligned
        assert abs(refined.theta_hat - theta) < 1e-9

    def test_worked_off_grid_example(self):
        # true spectral position 64*sin(-pi/4)+128 = 82.7452; aligning bin 84
        # needs delta = (83 - 82.7452) * 2*pi/128 = 0.012509
        h = steering_vector(CFG128, -np.pi / 4)
        refined = rotation_refine(h, CFG128, dft_coarse(h, CFG128))
        expected_delta = (83 - (64 * np.sin(-np.pi / 4) + 128)) * 2 * np.pi / 128
        assert refined.delta == pytest.approx(expected_delta, abs=1e-6)
        assert refined.theta_hat == pytest.approx(-np.pi / 4, abs=1e-6)

    def test_off_grid_strict_improvement(self):
        h = steering_vector(CFG128, np.pi / 5)
        coarse = dft_coarse(h, CFG128)
        refined = rotation_refine(h, CFG128, coarse)
        assert abs(refined.theta_hat - np.pi / 5) < abs(coarse.theta_hat - np.pi / 5)

    def test_refinement_dominance_random_angles(self):
        # single noiseless path: refined error never exceeds coarse error,
        # and stays tiny.  Angles keep sin(theta) clear of the +-1 alias cell.
        rng = np.random.default_rng(77)
        worst = 0.0
        for _ in range(200):
            theta = float(rng.uniform(-1.3, 1.3))
            gain = complex(rng.standard_normal(), rng.standard_normal())
            if abs(gain) < 0.05:
                continue
            h = gain * steering_vector(CFG128, theta)
            coarse = dft_coarse(h, CFG128)
            refined = rotation_refine(h, CFG128, coarse)
            err_c = abs(coarse.theta_hat - theta)
            err_r = abs(refined.theta_hat - theta)
            assert err_r <= err_c + 1e-12
            worst = max(worst, err_r)
        assert worst < 1e-6

    def test_gain_consistency_complex(self):
        # noiseless single path: refined complex gain matches modulus and phase
        gain = 0.8 * np.exp(0.7j)
        h = gain * steering_vector(CFG128, -np.pi / 4)
        refined = rotation_refine(h, CFG128, dft_coarse(h, CFG128))
        assert abs(refined.gain_hat - gain) < 1e-8
        assert abs(abs(refined.gain_hat) - abs(gain)) < 1e-10

    def test_pruning_never_changes_the_winner(self, monkeypatch):
        # searching only competitive candidate bins must give the same result
        # as line-searching all three, across noisy inputs
        from ambc_chanest import estimation as est_mod

        rng = np.random.default_rng(1234)
        cases = []
        for _ in range(150):
            theta = float(rng.uniform(-1.3, 1.3))
            gain = complex(rng.standard_normal(), rng.standard_normal())
            noise = (rng.standard_normal(128) + 1j * rng.standard_normal(128)) * 0.3
            cases.append(gain * steering_vector(CFG128, theta) + noise)

        def run_all():
            out = []
            for h in cases:
                r = rotation_refine(h, CFG128, dft_coarse(h, CFG128))
                out.append((r.bin, r.delta, r.theta_hat, r.gain_hat))
            return out

        pruned = run_all()
        monkeypatch.setattr(est_mod, "_PRUNE_RATIO", 0.0)  # search every bin
        exhaustive = run_all()
        assert pruned == exhaustive

    def test_mismatched_length_rejected(self):
        with pytest.raises(ValueError, match="length-128"):
            dft_coarse(np.zeros(64, dtype=complex), CFG128)

    def test_bin_shift_consistency(self):
        # rotating an aligned path by a full bin (two half-bin rotations)
        # moves the coarse peak by exactly one bin
        from ambc_chanest.array_model import rotation_matrix

        m = 64
        cfg = ArrayConfig(m, 0.5)
        theta = np.arcsin(10 / 32)  # bin 11
        half = rotation_matrix(m, np.pi / m)
        shifted = half @ (half @ steering_vector(cfg, theta))
        est = dft_coarse(shifted, cfg)
        assert est.bin == 12


class TestEstimateAll:
    def test_noiseless_on_grid_exact(self):
        theta0, theta1 = np.arcsin(-32 / 64), np.arcsin(16 / 64)
        params = ChannelParams(h0=0.8 - 0.3j, h_st=1.1 + 0.2j, h_tr=0.7 - 0.5j,
                               eta=0.5, theta0=theta0, theta1=theta1)
        pilots = make_pilots(1, 1.0)
        f0, f1 = _noiseless_frames(params, CFG128, pilots)
        res = estimate_all(f0, f1, pilots, CFG128, 0.5)
        assert abs(res.direct.theta_hat - theta0) < 1e-9
        assert abs(res.backscatter.theta_hat - theta1) < 1e-9
        assert abs(abs(res.direct.gain_hat) - abs(params.h0)) < 1e-9
        assert abs(abs(res.backscatter_gain_over_eta) - abs(params.h1) / 0.5) < 1e-9

    def test_noiseless_off_grid_refined_accuracy(self):
        params = ChannelParams(h0=1.0, h_st=1.0, h_tr=1.0, eta=0.5,
                               theta0=-np.pi / 4, theta1=np.pi / 5)
        pilots = make_pilots(1, 1.0)
        f0, f1 = _noiseless_frames(params, CFG128, pilots)
        res = estimate_all(f0, f1, pilots, CFG128, 0.5)
        assert abs(res.direct.theta_hat + np.pi / 4) < 1e-4
        assert abs(res.backscatter.theta_hat - np.pi / 5) < 1e-3
        # the coarse stage sits at the half-bin quantization scale
        assert 1e-3 < abs(res.direct_coarse.theta_hat + np.pi / 4) < 2e-2
        assert 1e-3 < abs(res.backscatter_coarse.theta_hat - np.pi / 5) < 2e-2

    def test_missing_backscatter_path(self):
        params = ChannelParams(h0=0.9 + 0.1j, h_st=0.0, h_tr=1.0, eta=0.5,
                               theta0=-np.pi / 4, theta1=np.pi / 5)
        pilots = make_pilots(1, 1.0)
        f0, f1 = _noiseless_frames(params, CFG128, pilots)
        res = estimate_all(f0, f1, pilots, CFG128, 0.5)
        assert abs(res.direct.theta_hat + np.pi / 4) < 1e-4
        # residual is pure subtraction leakage, far below the direct gain
        assert abs(res.backscatter.gain_hat) < 1e-3 * abs(params.h0)

    def test_reconstruction_matches_refined_parameters(self):
        params = ChannelParams(h0=0.8, h_st=1.0, h_tr=1.0, eta=0.5,
                               theta0=-np.pi / 4, theta1=np.pi / 5)
        pilots = make_pilots(2, 1.0)
        f0, f1 = _noiseless_frames(params, CFG128, pilots)
        res = estimate_all(f0, f1, pilots, CFG128, 0.5)
        expected = res.direct.gain_hat * steering_vector(CFG128, res.direct.theta_hat) \
            + res.backscatter.gain_hat * steering_vector(CFG128, res.backscatter.theta_hat)
        npt.assert_allclose(res.reconstructed_channels[1], expected, atol=1e-13)

    def test_frame_order_enforced(self):
        params = ChannelParams(h0=1.0, h_st=1.0, h_tr=1.0, eta=0.5,
                               theta0=0.1, theta1=0.9)
        pilots = make_pilots(1, 1.0)
        f0, f1 = _noiseless_frames(params, CFG128, pilots)
        with pytest.raises(ValueError):
            estimate_all(f1, f0, pilots, CFG128, 0.5)

    def test_two_peaks_variant(self):
        # comparable-strength, well-separated paths: both variants agree
        params = ChannelParams(h0=1.0, h_st=1.6, h_tr=1.0, eta=0.9,
                               theta0=-np.pi / 4, theta1=np.pi / 5)
        pilots = make_pilots(1, 1.0)
        f0, f1 = _noiseless_frames(params, CFG128, pilots)
        res = estimate_all(f0, f1, pilots, CFG128, 0.9, path_split="two-peaks")
        assert abs(res.direct.theta_hat + np.pi / 4) < 1e-4
        assert abs(res.backscatter.theta_hat - np.pi / 5) < 1e-3

    def test_rotation_beats_ls_at_moderate_snr(self):
        # Monte-Carlo: per-element channel MSE of the refined reconstruction
        # beats the raw LS estimate at 10 dB transmit SNR
        power = 10.0
        pilots = make_pilots(1, power)
        mse_ls = mse_rot = 0.0
        trials = 200
        for t in range(trials):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=555, spawn_key=(t,)))
            from ambc_chanest.signal_model import sample_channel

            params = sample_channel(rng)
            f0 = generate_frame(params, CFG128, pilots, 1.0, rng)
            f1 = generate_frame(params, CFG128, pilots.with_tag_state(1), 1.0, rng)
            res = estimate_all(f0, f1, pilots, CFG128, 0.5)
            h_true = composite_channel(params, CFG128, 1)
            mse_ls += np.mean(np.abs(res.ls_channels[1] - h_true) ** 2)
            mse_rot += np.mean(np.abs(res.reconstructed_channels[1] - h_true) ** 2)
        assert mse_rot < mse_ls
