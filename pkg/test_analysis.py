import math

import numpy as np
import pytest

from pcgmum.models.schemas import OutcomeDistribution
from pcgmum.services import analysis
from pcgmum.utils.errors import DomainError

LOG2_3 = math.log2(3)


def dist(*probs):
    return OutcomeDistribution(probs=list(probs))


def test_entropy_examples():
    assert analysis.shannon_entropy(dist(1 / 3, 1 / 3, 1 / 3)) == pytest.approx(LOG2_3, abs=1e-12)
    assert analysis.shannon_entropy(dist(1.0, 0.0, 0.0)) == 0.0
    assert analysis.shannon_entropy(dist(0.983, 0.0085, 0.0085)) == pytest.approx(0.141, abs=1e-3)


def test_kl_examples():
    assert analysis.kl_uniform(dist(1 / 3, 1 / 3, 1 / 3)) == pytest.approx(0.0, abs=1e-12)
    assert analysis.kl_uniform(dist(1.0, 0.0, 0.0)) == pytest.approx(LOG2_3, abs=1e-12)


def test_kl_entropy_identity():
    rng = np.random.default_rng(3)
    for d in [2, 3, 5, 8]:
        for _ in range(20):
            sample = OutcomeDistribution.from_weights(rng.random(d))
            total = analysis.kl_uniform(sample) + analysis.shannon_entropy(sample)
            assert total == pytest.approx(math.log2(d), abs=1e-12)
            assert 0 <= analysis.shannon_entropy(sample) <= math.log2(d) + 1e-12


def test_background_limits():
    base = dist(0.7, 0.2, 0.1)
    assert analysis.apply_background(base, 0.0).probs == pytest.approx(base.probs, abs=1e-15)
    assert analysis.apply_background(base, 1.0).probs == pytest.approx([1 / 3] * 3, abs=1e-15)
    with pytest.raises(DomainError):
        analysis.apply_background(base, 1.5)


def test_background_raises_entropy():
    base = dist(0.9, 0.1, 0.0)
    entropies = [analysis.shannon_entropy(analysis.apply_background(base, f)) for f in np.linspace(0, 1, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(entropies, entropies[1:]))


def test_leaked_background_on_certain_outcome():
    mixing = analysis.leak_to_mixing(0.02, 3)
    assert mixing == pytest.approx(0.03)
    noisy = analysis.apply_background(dist(1.0, 0.0, 0.0), mixing)
    assert noisy.probs[0] == pytest.approx(0.98)
    assert analysis.shannon_entropy(noisy) == pytest.approx(0.1614, abs=1e-3)
    with pytest.raises(DomainError):
        analysis.leak_to_mixing(0.9, 3)


def test_tables_reproduce_experiment(d3_config, full_grid):
    tables = analysis.reproduce_tables(d3_config, noise_fraction=0.02, grid=full_grid)
    for j in range(4):
        for k in range(4):
            if j == k:
                assert 0.13 <= tables.entropy[j][k] <= 0.19
                assert tables.kl[j][k] is None
            else:
                assert tables.entropy[j][k] >= 1.5840


def test_tables_noiseless(d3_config, full_grid):
    tables = analysis.reproduce_tables(d3_config, noise_fraction=0.0, grid=full_grid)
    for j in range(4):
        assert tables.entropy[j][j] == pytest.approx(0.0, abs=1e-6)
        for k in range(4):
            if j != k:
                assert tables.entropy[j][k] >= 1.5840
                assert tables.kl[j][k] <= 1.3e-3


def test_tables_frame(d3_config, full_grid):
    tables = analysis.reproduce_tables(d3_config, grid=full_grid)
    frame = analysis.tables_frame(tables)
    assert list(frame.columns) == ["prep", "meas", "entropy_bits", "kl_bits"]
    assert len(frame) == 16


def test_tables_with_outcome_spread(d3_config, full_grid):
    tables = analysis.reproduce_tables(d3_config, grid=full_grid, sensitivity=True)
    for j in range(4):
        for k in range(4):
            assert 0.0 <= tables.outcome_spread[j][k] <= 1e-3
    frame = analysis.tables_frame(tables)
    assert list(frame.columns) == ["prep", "meas", "entropy_bits", "kl_bits", "outcome_spread_bits"]


def test_outcome_sensitivity(d3_config, full_grid):
    entropies = analysis.outcome_sensitivity(d3_config, 0, 2, grid=full_grid)
    assert len(entropies) == 3
    assert min(entropies) >= 1.58


def test_convergence_study(d3_config):
    deviations = analysis.convergence_study(d3_config, 0, 2, sizes=(1024, 4096))
    assert set(deviations) == {1024, 4096}
    assert deviations[4096] < 1e-3
    frame = analysis.convergence_frame(deviations)
    assert list(frame["grid_size"]) == [1024, 4096]


def marker(result, m):
    return next(item for item in result.markers if item.m == m)


@pytest.fixture(scope="module")
def sweeps(d3_config, lab_scale):
    return {j: analysis.entropy_sweep(d3_config, j, 2, scale=lab_scale) for j in (0, 1, 3)}


def test_sweep_samples(sweeps):
    result = sweeps[0]
    periods = [sample.period_px for sample in result.samples]
    assert periods[0] == 20.0 and periods[-1] == 200.0
    assert len(periods) == 181
    for sample in result.samples:
        assert sample.error is None
        assert 0.0 <= sample.entropy_bits <= LOG2_3 + 1e-12


def test_sweep_markers_match_configuration(sweeps, d3_config, lab_scale):
    config_px = d3_config.periods[2] * lab_scale.pixels_per_unit
    assert marker(sweeps[0], 2).period_px == pytest.approx(config_px, abs=0.5)
    assert marker(sweeps[1], 1).period_px == pytest.approx(config_px, abs=0.5)
    assert marker(sweeps[0], 3).allowed is False
    assert marker(sweeps[0], 4).allowed is True


@pytest.mark.parametrize("j", [0, 1, 3])
def test_sweep_maxima_at_allowed_markers(sweeps, j):
    for m in (1, 2, 4):
        assert marker(sweeps[j], m).entropy_bits >= 1.58


@pytest.mark.parametrize("j", [0, 1, 3])
def test_sweep_dip_at_forbidden_marker(sweeps, j):
    dip = marker(sweeps[j], 3).entropy_bits
    assert dip <= marker(sweeps[j], 2).entropy_bits - 0.1
    assert dip <= marker(sweeps[j], 4).entropy_bits - 0.1
    assert dip <= LOG2_3 - 0.1


def test_sweep_frame(sweeps):
    frame = analysis.sweep_frame(sweeps[0])
    assert list(frame.columns) == ["period_px", "entropy_bits", "marker_m"]
    assert frame.loc[frame["period_px"] == 93.0, "marker_m"].iloc[0] == 2


def test_sweep_rejects_bad_range(d3_config):
    with pytest.raises(DomainError):
        analysis.entropy_sweep(d3_config, 0, 2, start_px=50, stop_px=40)
