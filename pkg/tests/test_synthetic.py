"""Synthetic hydrograph generator: conservation laws, tails, round trips."""
import numpy as np
import pytest

from flowcast.ingest import load_region
from flowcast.synthetic import (
    DAYS_PER_YEAR,
    SynthSpec,
    derive_statics,
    generate,
    generate_region,
    known_extremes,
    write_ingest_csvs,
)


def test_generate_deterministic():
    spec = SynthSpec(seed=5, length=500)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.precip, b.precip)
    assert np.array_equal(a.streamflow, b.streamflow)
    assert np.array_equal(a.tmin, b.tmin)


def test_seed_changes_series():
    a = generate(SynthSpec(seed=0, length=300))
    b = generate(SynthSpec(seed=1, length=300))
    assert not np.array_equal(a.streamflow, b.streamflow)


def test_series_passes_validation():
    s = generate(SynthSpec(seed=2, length=400))
    s.validate()
    assert len(s) == 400
    assert s.dates[0] == np.datetime64("1990-01-01")


def test_zero_storm_rate_gives_pure_baseflow():
    s = generate(SynthSpec(seed=3, length=200, storm_rate=0.0, baseflow=0.7))
    assert np.all(s.precip == 0.0)
    assert np.allclose(s.streamflow, 0.7, atol=1e-15)


def test_flow_never_below_baseflow():
    s = generate(SynthSpec(seed=4, length=1000, baseflow=0.3))
    assert np.all(s.streamflow >= 0.3 - 1e-12)
    assert np.all(s.precip >= 0.0)


def test_mass_balance_every_prefix():
    """Cumulative flow above baseflow never exceeds cumulative rainfall:
    the reservoir only delays water, it cannot create it."""
    spec = SynthSpec(seed=6, length=2000, baseflow=0.25)
    s = generate(spec)
    runoff = np.cumsum(s.streamflow - spec.baseflow)
    rain = np.cumsum(s.precip)
    assert np.all(runoff <= rain + 1e-9)


def test_long_run_yields_most_of_the_rain():
    """With recession 0.85 the storage drains fast, so total runoff
    approaches total rainfall over a long window."""
    spec = SynthSpec(seed=7, length=5000)
    s = generate(spec)
    runoff = float(np.sum(s.streamflow - spec.baseflow))
    rain = float(np.sum(s.precip))
    assert runoff <= rain + 1e-9
    assert runoff >= 0.98 * rain


def test_temperatures_ordered_and_seasonal():
    s = generate(SynthSpec(seed=8, length=1500, temp_amplitude=8.0))
    assert np.all(s.tmax > s.tmin)
    # seasonal swing visible: summer-vs-winter monthly means differ by several deg
    first_quarter = s.tmax[:90].mean()
    third_quarter = s.tmax[180:270].mean()
    assert abs(first_quarter - third_quarter) > 4.0


def test_heavier_tail_raises_extreme_ratio():
    """Smaller tail index must fatten the flood tail, measured by the ratio
    of the 99.9th flow percentile to the median."""
    ratios = []
    for tail in (4.0, 2.5, 1.5):
        spec = SynthSpec(seed=9, length=6000, tail_index=tail)
        flow = generate(spec).streamflow
        ratios.append(np.quantile(flow, 0.999) / np.median(flow))
    assert ratios[0] < ratios[1] < ratios[2]


def test_known_extremes_sorted_and_tie_broken():
    s = generate(SynthSpec(seed=10, length=800))
    top = known_extremes(s, 5)
    flows = s.streamflow[top]
    assert np.all(np.diff(flows) <= 0)
    assert flows[0] == s.streamflow.max()
    # ties resolve to the earliest day
    tied = generate(SynthSpec(seed=11, length=50, storm_rate=0.0))
    idx = known_extremes(tied, 3)  # all flows equal baseflow
    assert list(idx) == [0, 1, 2]


def test_known_extremes_bounds():
    s = generate(SynthSpec(seed=12, length=40))
    assert len(known_extremes(s, 40)) == 40
    with pytest.raises(ValueError, match=r"top_k must lie in \[1, 40\]"):
        known_extremes(s, 41)
    with pytest.raises(ValueError):
        known_extremes(s, 0)


def test_derive_statics_sanity():
    spec = SynthSpec(seed=13, length=3650)
    s = generate(spec)
    attrs = derive_statics(s)
    assert attrs.mean_streamflow == pytest.approx(float(s.streamflow.mean()))
    assert attrs.runoff_ratio == pytest.approx(
        float(s.streamflow.mean() / s.precip.mean()))
    assert attrs.zero_flow_freq == 0.0  # baseflow keeps the river wet
    assert attrs.high_flow_freq >= 0.0
    assert attrs.low_flow_freq >= 0.0
    assert attrs.streamflow_rainfall_sensitivity > 0.0  # rain drives flow
    years = len(s) / DAYS_PER_YEAR
    assert attrs.high_flow_freq <= len(s) / years


def test_generate_region_distinct_named_stations():
    stations, statics = generate_region(SynthSpec(seed=20, length=300), 3)
    assert [s.station_id for s in stations] == ["synth000", "synth001", "synth002"]
    assert [a.station_id for a in statics] == ["synth000", "synth001", "synth002"]
    assert not np.array_equal(stations[0].streamflow, stations[1].streamflow)
    # station i matches a solo run with the shifted seed
    solo = generate(SynthSpec(seed=21, length=300), station_id="synth001")
    assert np.array_equal(stations[1].streamflow, solo.streamflow)


def test_csv_round_trip_through_ingest(tmp_path):
    stations, statics = generate_region(SynthSpec(seed=22, length=120), 2)
    paths = write_ingest_csvs(tmp_path / "csvs", stations, statics)
    bundle, rejections = load_region(tmp_path / "csvs", paths["statics"])
    assert rejections == []
    assert bundle.station_ids == ("synth000", "synth001")
    for original, loaded in zip(stations, bundle.stations):
        assert np.array_equal(loaded.streamflow, original.streamflow)  # repr round trip
        assert np.array_equal(loaded.precip, original.precip)
        assert np.array_equal(loaded.dates, original.dates)
    assert bundle.statics["synth000"].mean_streamflow == pytest.approx(
        statics[0].mean_streamflow)


def test_spec_validation():
    with pytest.raises(ValueError, match="recession"):
        SynthSpec(recession=1.0)
    with pytest.raises(ValueError, match="storm_rate"):
        SynthSpec(storm_rate=-1.0)
    with pytest.raises(ValueError, match="tail_index"):
        SynthSpec(tail_index=1.0)
    with pytest.raises(ValueError, match="length"):
        SynthSpec(length=0)
    SynthSpec(storm_rate=0.0)  # a dry climate is allowed
