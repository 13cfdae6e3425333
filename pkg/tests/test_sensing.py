import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calmkit.sensing import (
    AccelSample,
    EnergyWindow,
    LookbackFeature,
    ValidationError,
    compute_energy,
    lookback_mean,
    read_samples_csv,
    read_windows_csv,
    windows_from_samples,
    write_windows_csv,
)
from calmkit.timeutil import WINDOW_MS


def brute_force_rms(samples):
    """Independent oracle: explicit per-sample summation."""
    total = 0.0
    for s in samples:
        total += (s.ax ** 2 + s.ay ** 2 + s.az ** 2) / 3.0
    return math.sqrt(total / len(samples))


def mk_samples(values, start=0):
    return [AccelSample(start + i * 20, x, y, z) for i, (x, y, z) in enumerate(values)]


class TestComputeEnergy:
    def test_constant_magnitude_signal(self):
        a = 0.37
        samples = mk_samples([(a, a, a)] * 100)
        assert compute_energy(samples, 0).energy == pytest.approx(a, abs=1e-12)

    def test_empty_input_absent_window(self):
        w = compute_energy([], 0)
        assert w.absent
        assert w.sample_count == 0
        assert w.energy is None

    def test_two_unit_samples(self):
        # sqrt(((1/3) + (1/3)) / 2) = sqrt(1/3)
        samples = mk_samples([(1, 0, 0), (0, 1, 0)])
        w = compute_energy(samples, 0)
        assert w.energy == pytest.approx(math.sqrt(1 / 3), abs=1e-12)
        assert w.energy == pytest.approx(brute_force_rms(samples), abs=1e-12)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(1, 200))
            samples = mk_samples(rng.normal(0, 0.5, size=(n, 3)).tolist())
            got = compute_energy(samples, 0).energy
            assert got == pytest.approx(brute_force_rms(samples), rel=1e-12)

    def test_non_finite_sample_names_timestamp(self):
        samples = [AccelSample(0, 0.1, 0.1, 0.1), AccelSample(40, float("nan"), 0, 0)]
        with pytest.raises(ValidationError, match="t_ms=40"):
            compute_energy(samples, 0)

    def test_out_of_window_sample_rejected(self):
        with pytest.raises(ValidationError, match="outside window"):
            compute_energy([AccelSample(WINDOW_MS, 0.1, 0.1, 0.1)], 0)

    def test_sample_count_recorded(self):
        samples = mk_samples([(0.1, 0.2, 0.3)] * 7)
        assert compute_energy(samples, 0).sample_count == 7

    def test_integrated_variant(self):
        samples = mk_samples([(1, 0, 0), (0, 1, 0)])
        w = compute_energy(samples, 0, variant="integrated")
        assert w.energy == pytest.approx(1 / 3, abs=1e-12)

    @given(
        st.lists(
            st.tuples(*([st.floats(-4, 4, allow_nan=False)] * 3)), min_size=1, max_size=60
        ),
        st.randoms(),
    )
    @settings(max_examples=50, deadline=None)
    def test_permutation_insensitive(self, values, rnd):
        base = compute_energy(mk_samples(values), 0).energy
        shuffled = list(values)
        rnd.shuffle(shuffled)
        got = compute_energy(mk_samples(shuffled), 0).energy
        assert got == pytest.approx(base, abs=1e-12)

    @given(
        st.lists(
            st.tuples(*([st.floats(-2, 2, allow_nan=False)] * 3)), min_size=1, max_size=60
        ),
        st.floats(0.01, 50),
    )
    @settings(max_examples=50, deadline=None)
    def test_positive_homogeneity(self, values, k):
        base = compute_energy(mk_samples(values), 0).energy
        scaled = [(k * x, k * y, k * z) for x, y, z in values]
        got = compute_energy(mk_samples(scaled), 0).energy
        assert got == pytest.approx(k * base, rel=1e-9)


def win(start_ms, energy, pid="p", count=300):
    if energy is None:
        return EnergyWindow(pid, start_ms, None, 0)
    return EnergyWindow(pid, start_ms, energy, count)


class TestLookbackMean:
    def test_two_point_mean(self):
        ws = [win(0, 0.2), win(WINDOW_MS, 0.4)]
        f = lookback_mean(ws, 3_600_000)
        assert f.mean_energy == pytest.approx(0.3)
        assert f.windows_present == 2

    def test_empty_range_unusable(self):
        f = lookback_mean([win(0, 0.5)], 10_000_000)
        assert f.windows_present == 0
        assert not f.usable()

    def test_out_of_range_excluded(self):
        as_of = 7_200_000
        ws = [win(as_of - 3_600_000 + i * WINDOW_MS, 0.5) for i in range(12)]
        ws.append(win(as_of - 3_900_000, 9.9))  # before the hour
        oracle = [w.energy for w in ws if as_of - 3_600_000 <= w.window_start_ms < as_of]
        f = lookback_mean(ws, as_of)
        assert f.windows_present == 12
        assert f.mean_energy == pytest.approx(sum(oracle) / len(oracle))
        assert f.mean_energy == pytest.approx(0.5)

    def test_half_open_boundaries(self):
        as_of = 3_600_000
        at_as_of = win(as_of, 9.9)  # excluded: starts exactly at as_of
        at_lo = win(0, 0.25)  # included: starts exactly at as_of - 1h
        f = lookback_mean([at_as_of, at_lo], as_of)
        assert f.windows_present == 1
        assert f.mean_energy == pytest.approx(0.25)

    def test_absent_windows_excluded_entirely(self):
        ws = [win(0, 0.4), win(WINDOW_MS, None)]
        f = lookback_mean(ws, 3_600_000)
        assert f.windows_present == 1
        assert f.mean_energy == pytest.approx(0.4)

    @given(st.lists(st.floats(0, 5, allow_nan=False), min_size=1, max_size=12))
    @settings(max_examples=50, deadline=None)
    def test_mean_within_min_max(self, energies):
        ws = [win(i * WINDOW_MS, e) for i, e in enumerate(energies)]
        f = lookback_mean(ws, 3_600_000)
        assert min(energies) - 1e-12 <= f.mean_energy <= max(energies) + 1e-12

    def test_coverage_threshold(self):
        assert not LookbackFeature(0, 1.0, 5).usable()
        assert LookbackFeature(0, 1.0, 6).usable()


class TestCsv:
    def test_sample_round_trip(self):
        text = "t_ms,ax,ay,az\n0,0.1,-0.2,0.3\n20,0.0,0.0,1.0\n"
        samples = read_samples_csv(text)
        assert samples == [AccelSample(0, 0.1, -0.2, 0.3), AccelSample(20, 0.0, 0.0, 1.0)]

    def test_bad_header_rejected(self):
        with pytest.raises(ValidationError):
            read_samples_csv("time,x,y,z\n0,1,2,3\n")

    def test_window_round_trip_exact(self):
        ws = [win(0, 0.123456789012345), win(WINDOW_MS, None), win(2 * WINDOW_MS, 1.5)]
        assert read_windows_csv(write_windows_csv(ws)) == ws

    def test_windows_from_samples_grid(self):
        samples = mk_samples([(0.1, 0.1, 0.1)] * 10) + mk_samples(
            [(0.2, 0.2, 0.2)] * 10, start=WINDOW_MS
        )
        ws = windows_from_samples(samples, "p")
        assert [w.window_start_ms for w in ws] == [0, WINDOW_MS]
        assert ws[0].energy == pytest.approx(0.1, abs=1e-12)
        assert ws[1].energy == pytest.approx(0.2, abs=1e-12)
