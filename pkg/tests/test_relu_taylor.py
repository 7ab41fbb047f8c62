import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relufreq import (
    CosineComponent,
    DegenerateInputError,
    MultiTone,
    NonZeroPhaseError,
    Signal,
    TaylorConfig,
    approximate_relu,
    convergence_report,
    dc_model,
    fluctuation_from_samples,
    harmonic_stack,
    mean_power,
    power_fluctuation,
    relu,
    spectrum,
    sqrt1p_series,
    sqrt_taylor_coefficients,
    synthesize,
)

PROBE = harmonic_stack(5.0, 4, [1.0, 1.0, 1.0, 1.0])


def exact_coefficient(n: int) -> Fraction:
    """Closed form (-1)^n (2n)! / ((1-2n) (n!)^2 4^n) in exact rationals."""
    return (
        Fraction((-1) ** n)
        * Fraction(math.factorial(2 * n))
        / (Fraction(1 - 2 * n) * Fraction(math.factorial(n)) ** 2 * Fraction(4**n))
    )


def random_zero_phase_tones(rng, max_components=6):
    n = rng.integers(1, max_components + 1)
    freqs = rng.choice(np.arange(1, 101), size=n, replace=False)
    amps = rng.uniform(0.2, 2.0, size=n)
    return MultiTone([CosineComponent(a, float(f)) for a, f in zip(amps, freqs)])


class TestRelu:
    def test_elementwise(self):
        sig = Signal(np.array([-1.0, 0.0, 2.0]), 1.0)
        assert np.array_equal(relu(sig).samples, [0.0, 0.0, 2.0])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_identities(self, seed):
        rng = np.random.default_rng(seed)
        x = Signal(rng.standard_normal(64), 1.0)
        y = relu(x)
        assert np.array_equal(relu(y).samples, y.samples)  # idempotent
        assert np.array_equal(y.samples, (x.samples + np.abs(x.samples)) / 2.0)
        neg = relu(Signal(-x.samples, 1.0))
        assert np.allclose(neg.samples + y.samples, np.abs(x.samples), atol=1e-15)


class TestMeanPower:
    def test_values(self):
        assert mean_power(MultiTone([CosineComponent(1.0, 3.0)])) == 0.5
        assert mean_power(PROBE) == 2.0
        two = MultiTone([CosineComponent(3.0, 1.0), CosineComponent(4.0, 2.0)])
        assert mean_power(two) == 12.5

    def test_degenerate(self):
        with pytest.raises(DegenerateInputError):
            mean_power(MultiTone([CosineComponent(0.0, 3.0)]))
        with pytest.raises(DegenerateInputError):
            mean_power(MultiTone([]))


class TestPowerFluctuation:
    def test_single_tone_is_doubled_frequency_cosine(self):
        tones = MultiTone([CosineComponent(1.0, 3.0)])
        fluct = power_fluctuation(tones, 64.0, 1.0)
        t = np.arange(64) / 64.0
        assert np.allclose(fluct.samples, np.cos(4.0 * np.pi * 3.0 * t), atol=1e-12)
        assert fluct.samples[0] == pytest.approx(1.0)

    def test_probe_value_at_zero(self):
        fluct = power_fluctuation(PROBE, 1024.0, 1.0)
        assert fluct.samples[0] == pytest.approx(7.0, abs=1e-12)

    def test_matches_samplewise_identity_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            tones = random_zero_phase_tones(rng)
            a = mean_power(tones)
            closed = power_fluctuation(tones, 256.0, 1.0)
            sampled = fluctuation_from_samples(synthesize(tones, 256.0, 1.0), a)
            assert np.allclose(closed.samples, sampled.samples, atol=1e-10)

    def test_rejects_nonzero_phase(self):
        tones = MultiTone([CosineComponent(1.0, 3.0, 0.5)])
        with pytest.raises(NonZeroPhaseError):
            power_fluctuation(tones, 64.0, 1.0)


class TestFluctuationFromSamples:
    def test_constant_sqrt_mean_power(self):
        a = 2.7
        sig = Signal(np.full(32, math.sqrt(a)), 1.0)
        assert np.allclose(fluctuation_from_samples(sig, a).samples, 0.0, atol=1e-12)

    def test_zero_signal(self):
        sig = Signal(np.zeros(8), 1.0)
        assert np.array_equal(fluctuation_from_samples(sig, 1.0).samples, -np.ones(8))

    def test_nonpositive_mean_power(self):
        with pytest.raises(DegenerateInputError):
            fluctuation_from_samples(Signal(np.ones(4), 1.0), 0.0)


class TestCoefficients:
    def test_first_eight_exact(self):
        expected = [
            1.0,
            0.5,
            -0.125,
            0.0625,
            -0.0390625,
            0.02734375,
            -0.0205078125,
            0.01611328125,
        ]
        assert np.allclose(sqrt_taylor_coefficients(8), expected, atol=0.0)

    def test_table_printed_precision(self):
        # tolerance is half an ulp of each printed value (e.g. -0.02 carries
        # two decimals, the three-decimal entries carry 0.0005)
        printed = [1.0, 0.5, -0.125, 0.0625, -0.039, 0.027, -0.02, 0.016]
        decimals = [3, 3, 3, 4, 3, 3, 2, 3]
        got = sqrt_taylor_coefficients(8)
        for value, target, nd in zip(got, printed, decimals):
            assert abs(value - target) <= 0.5 * 10.0 ** (-nd)

    def test_recurrence_matches_exact_rational_closed_form(self):
        got = sqrt_taylor_coefficients(21)
        for n in range(21):
            assert got[n] == pytest.approx(float(exact_coefficient(n)), abs=1e-12)

    def test_fourth_term_size_both_readings(self):
        # the raw coefficient is 0.0625 while its share of the first four
        # absolute terms is ~3.7%; both are recorded, neither equals the other
        coeffs = np.abs(sqrt_taylor_coefficients(4))
        assert coeffs[3] == pytest.approx(0.0625)
        share = coeffs[3] / coeffs.sum()
        assert share == pytest.approx(0.037037, abs=1e-4)
        assert not math.isclose(share, coeffs[3], rel_tol=0.2)

    def test_no_overflow_far_beyond_factorial_range(self):
        coeffs = sqrt_taylor_coefficients(200)
        assert np.all(np.isfinite(coeffs))
        assert abs(coeffs[199]) < abs(coeffs[100]) < abs(coeffs[10])


class TestSeries:
    def test_matches_sqrt_inside_radius(self):
        u = np.array([-0.9, -0.5, 0.0, 0.5, 0.9])
        got = sqrt1p_series(u, 50)
        assert np.all(np.abs(got - np.sqrt(1.0 + u)) < 1e-3)

    def test_tight_convergence_to_09(self):
        u = np.linspace(-0.9, 0.9, 181)
        err = np.abs(sqrt1p_series(u, 50) - np.sqrt(1.0 + u))
        assert err.max() < 1e-3

    def test_pointwise_convergence_to_099(self):
        u = np.array([-0.99, 0.99])
        errs = [np.abs(sqrt1p_series(u, n) - np.sqrt(1.0 + u)).max() for n in (50, 200, 800)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-4


class TestDecompositionIdentity:
    def test_squared_signal_equals_mean_power_times_one_plus_fluctuation(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            tones = random_zero_phase_tones(rng)
            a = mean_power(tones)
            x = synthesize(tones, 256.0, 1.0)
            fluct = power_fluctuation(tones, 256.0, 1.0)
            assert np.allclose(x.samples**2, a * (1.0 + fluct.samples), atol=1e-9)


class TestConvergenceReport:
    def test_zero_fluctuation(self):
        rep = convergence_report(Signal(np.zeros(16), 1.0))
        assert rep == type(rep)(0.0, 0.0, True)

    def test_single_tone_boundary(self):
        fluct = power_fluctuation(MultiTone([CosineComponent(1.0, 1.0)]), 64.0, 1.0)
        rep = convergence_report(fluct)
        assert rep.max_abs_fluctuation == pytest.approx(1.0)
        assert rep.fraction_violating > 0.0
        assert not rep.valid

    def test_probe(self):
        fluct = power_fluctuation(PROBE, 1024.0, 1.0)
        rep = convergence_report(fluct)
        assert rep.max_abs_fluctuation == pytest.approx(7.0, abs=1e-9)
        assert rep.fraction_violating > 0.0
        assert not rep.valid


class TestApproximateRelu:
    def test_error_decreases_with_terms_inside_radius(self):
        tones = MultiTone([CosineComponent(1.0, 1.0)])
        fs, duration = 64.0, 1.0
        x = synthesize(tones, fs, duration)
        target = relu(x)
        fluct = power_fluctuation(tones, fs, duration)
        inside = np.abs(fluct.samples) < 0.99
        assert inside.any()
        medians = []
        for terms in (5, 10, 25, 50):
            approx, _ = approximate_relu(tones, fs, duration, TaylorConfig(terms))
            medians.append(np.median(np.abs(approx.samples - target.samples)[inside]))
        assert medians[0] > medians[1] > medians[2] > medians[3]
        # well inside the radius the 50-term sum is essentially exact
        tight = np.abs(fluct.samples) <= 0.9
        approx, _ = approximate_relu(tones, fs, duration, TaylorConfig(50))
        assert np.abs(approx.samples - target.samples)[tight].max() < 1e-3

    def test_probe_report_flags_divergence(self):
        _, report = approximate_relu(PROBE, 1024.0, 1.0, TaylorConfig(50))
        assert report.max_abs_fluctuation == pytest.approx(7.0, abs=1e-9)
        assert report.fraction_violating > 0.0

    def test_prescale_invariance(self):
        a1, _ = approximate_relu(PROBE, 1024.0, 1.0, TaylorConfig(50, 1e-4))
        a2, _ = approximate_relu(PROBE, 1024.0, 1.0, TaylorConfig(50, 1e-2))
        scale = np.abs(a1.samples)
        rel = np.abs(a1.samples - a2.samples) / np.maximum(scale, 1.0)
        assert rel.max() < 1e-6

    def test_output_spectrum_lines(self):
        # single tone at f: approximation holds energy only at DC, f, and
        # even multiples of f (the fluctuation's harmonics)
        f0, fs = 1.0, 1024.0
        tones = MultiTone([CosineComponent(1.0, f0)])
        approx, _ = approximate_relu(tones, fs, 1.0, TaylorConfig(50))
        mags = np.abs(spectrum(approx).bins)
        half = len(mags) // 2
        allowed = {0, 1}
        allowed.update(2 * k for k in range(1, 50))
        peak = mags.max()
        for k in range(half + 1):
            if k not in allowed:
                assert mags[k] < 1e-9 * peak

    def test_degenerate_and_phase_errors(self):
        with pytest.raises(DegenerateInputError):
            approximate_relu(MultiTone([CosineComponent(0.0, 5.0)]), 64.0, 1.0)
        with pytest.raises(NonZeroPhaseError):
            approximate_relu(
                MultiTone([CosineComponent(1.0, 5.0, 0.3)]), 64.0, 1.0
            )


class TestDcModel:
    def test_examples(self):
        assert dc_model([1.0], [1.0]) == pytest.approx(math.sqrt(2.0) / 4.0)
        assert dc_model([1.0, 1.0], [1.0, 1.0]) == pytest.approx(0.5)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dc_model([1.0, 2.0], [1.0])

    def test_ratio_to_measured_dc_is_constant(self):
        # measured mean of relu(a cos) via dense quadrature is a/pi; the
        # model is the zeroth-order term, a constant sqrt(2) pi / 4 above it
        t = np.linspace(0.0, 1.0, 400_001)
        for amplitude in (0.5, 1.0, 2.0):
            measured = np.trapezoid(np.maximum(0.0, amplitude * np.cos(2 * np.pi * t)), t)
            ratio = dc_model([amplitude], [1.0]) / measured
            assert ratio == pytest.approx(math.sqrt(2.0) * math.pi / 4.0, abs=1e-4)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(0.0, 3.0), min_size=1, max_size=5),
        st.floats(0.0, 4.0),
    )
    def test_homogeneity(self, gains, alpha):
        amps = [1.0 + 0.5 * i for i in range(len(gains))]
        lhs = dc_model([alpha * a for a in amps], gains)
        rhs = alpha * dc_model(amps, gains)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_monotone_in_gains(self):
        amps = [1.0, 2.0, 0.5]
        base = dc_model(amps, [1.0, 1.0, 1.0])
        for i in range(3):
            gains = [1.0, 1.0, 1.0]
            gains[i] = 1.5
            assert dc_model(amps, gains) >= base
