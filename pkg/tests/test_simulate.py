import math

import numpy as np
import pytest

from sgmeasure.core import power_db
from sgmeasure.errors import DegenerateFit
from sgmeasure.safeguard import build_test_stream
from sgmeasure.simulate import (
    SimulationConfig,
    least_squares_line,
    nonlinearity,
    run_flooring_regression,
    run_max_deviation_sweep,
    run_random_response_experiment,
    simulate_chain,
    white_noise_period,
)

FS = 44100


def test_nonlinearity_linear_limit_is_exact():
    x = np.array([-3.0, 0.0, 0.5, 100.0])
    assert np.array_equal(nonlinearity(x, 0.0), x)


def test_nonlinearity_fixed_point_at_zero():
    assert nonlinearity(np.array([0.0]), 0.4)[0] == 0.0


def test_nonlinearity_direct_evaluation():
    # (e^0.4 - 1)/0.4
    expected = (math.exp(0.4) - 1.0) / 0.4
    assert nonlinearity(np.array([1.0]), 0.4)[0] == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(1.2295617, abs=1e-7)


def test_nonlinearity_taylor_control():
    # for |alpha*x| tiny, y ~ x + alpha*x^2/2 to 1e-10
    x = np.array([1e-5, -1e-5, 5e-5])
    alpha = 1e-2
    y = nonlinearity(x, alpha)
    assert np.max(np.abs(y - x - alpha * x**2 / 2.0)) < 1e-10


def test_nonlinearity_overflow():
    with pytest.raises(OverflowError):
        nonlinearity(np.array([4000.0]), 0.4)


def test_transparent_chain():
    stream = build_test_stream(white_noise_period(256, FS, seed=1), 3)
    out = simulate_chain(stream, SimulationConfig(input_level_db=-6.0))
    assert np.max(np.abs(out.samples - stream.samples * 10 ** (-6.0 / 20.0))) < 1e-12


def test_noise_power_bookkeeping():
    stream = build_test_stream(white_noise_period(16384, FS, seed=2), 8)
    config = SimulationConfig(snr_db=40.0, seed=3)
    out = simulate_chain(stream, config)
    noise_db = power_db(out.samples - stream.samples)
    assert noise_db == pytest.approx(power_db(stream.samples) - 40.0, abs=0.2)


def test_chain_is_deterministic():
    stream = build_test_stream(white_noise_period(512, FS, seed=4), 4)
    config = SimulationConfig(snr_db=30.0, alpha=0.2, seed=5)
    a = simulate_chain(stream, config)
    b = simulate_chain(stream, config)
    assert np.array_equal(a.samples, b.samples)


def test_chain_convolution_matches_oracle():
    from sgmeasure.core import circular_convolve

    period = white_noise_period(128, FS, seed=6)
    h = np.random.default_rng(7).standard_normal(16)
    config = SimulationConfig(impulse_response=tuple(h))
    out = simulate_chain(build_test_stream(period, 1), config)
    oracle = circular_convolve(period, h)
    assert np.max(np.abs(out.samples - oracle.samples)) < 1e-10


def test_fit_oracle_exact_line():
    x = np.array([-20.0, -10.0, 0.0, 10.0])
    slope, intercept = least_squares_line(x, 2.0 * x - 10.0)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(-10.0, abs=1e-12)


def test_fit_rejects_degenerate_input():
    with pytest.raises(DegenerateFit):
        least_squares_line(np.array([0.0, 1.0]), np.array([1.0, 2.0]))


def test_regression_degenerate_when_grid_unusable():
    # a grid entirely inside the saturated regime leaves < 3 usable points
    with pytest.raises(DegenerateFit):
        run_flooring_regression(
            seed=0, period_length=4096, theta_db_grid=(10.0, 15.0, 20.0)
        )


def test_regression_experiment_meets_reported_relation():
    result = run_flooring_regression(seed=0)
    assert result.slope == pytest.approx(1.995, abs=0.10)
    assert result.intercept == pytest.approx(-10.321, abs=1.0)
    assert result.metrics["bins_changed"][-1] == 100000  # +20 dB floors every bin


def test_max_deviation_noise_off_recovers_exactly():
    result = run_max_deviation_sweep(
        snr_db_list=(math.inf,), theta_db_list=(-50.0, 0.0, 20.0), seed=1,
        period_length=2048,
    )
    assert max(result.metrics["max_deviation_db_snrinf"]) < 1e-7


def test_max_deviation_flooring_benefit():
    result = run_max_deviation_sweep(
        snr_db_list=(40.0,), theta_db_list=(-50.0, 0.0), seed=2, period_length=16384
    )
    col = result.metrics["max_deviation_db_snr40"]
    assert col[1] < col[0]


def test_max_deviation_trend_over_grid():
    # medians over 5 seeds are non-increasing in the flooring level
    grid = (-50.0, -25.0, 0.0, 20.0)
    per_seed = [
        run_max_deviation_sweep(
            snr_db_list=(40.0,), theta_db_list=grid, seed=s, period_length=8192
        ).metrics["max_deviation_db_snr40"]
        for s in range(5)
    ]
    medians = np.median(np.array(per_seed), axis=0)
    assert np.all(np.diff(medians) <= 0)


def test_random_response_full_floor_recovers_noise_level():
    result = run_random_response_experiment(
        theta_db_list=(20.0,), snr_db=40.0, m_count=4, seed=3, period_length=16384
    )
    assert result.metrics["random_level_db"][0] == pytest.approx(-40.0, abs=1.0)


def test_random_response_noise_off_is_negligible():
    result = run_random_response_experiment(
        theta_db_list=(20.0,), snr_db=math.inf, m_count=4, seed=4, period_length=4096
    )
    assert result.metrics["random_level_db"][0] < -140.0


def test_full_floor_excitation_has_flat_magnitude():
    from sgmeasure.core import forward_dft
    from sgmeasure.safeguard import safeguard_signal, threshold_from_db

    signal = white_noise_period(4096, FS, seed=5)
    spectrum = forward_dft(signal)
    theta = threshold_from_db(spectrum, 20.0)
    safeguarded, report = safeguard_signal(signal, theta)
    assert report.bins_changed == 4096
    mags = np.abs(forward_dft(safeguarded).bins)
    assert np.max(np.abs(mags - theta.theta_linear)) < 1e-12 * theta.theta_linear
