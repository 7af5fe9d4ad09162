"""Catchment strategy builders and the stacked-ensemble combiner."""
import numpy as np
import pytest

from flowcast.ingest import StationRejected, align_common
from flowcast.series import FEATURE_NAMES, SplitSpec, embed, feature_matrix
from flowcast.strategies import (
    BatchDataset,
    EnsembleCombiner,
    build_batch_indicator,
    build_batch_static,
    build_individual,
    concat_datasets,
    fit_combiner,
    fit_stacked_ensemble,
    fit_static_model,
    predict_stacked,
    prepare_station,
    scale_statics,
)
from flowcast.synthetic import SynthSpec, generate_region

N_FEAT = len(FEATURE_NAMES)


def make_region(n=3, length=200, seed=0, with_statics=True):
    stations, statics = generate_region(SynthSpec(seed=seed, length=length), n)
    return align_common(stations, {a.station_id: a for a in statics} if with_statics else None)


# ---------------------------------------------------------------------------
# individual strategy

def test_prepare_station_counts():
    region = make_region(1, length=100)
    built = prepare_station(region.stations[0], window=5, horizon=5,
                            split=SplitSpec(train_fraction=0.6))
    # T=100 embeds 91 samples; train needs origin <= 50, test origin >= 60
    assert built.train.n_samples == 51
    assert built.test.n_samples == 31
    assert built.train.n_features == N_FEAT


def test_prepare_station_too_short():
    region = make_region(1, length=9)
    with pytest.raises(StationRejected, match="too short"):
        prepare_station(region.stations[0], window=5, horizon=5)


def test_build_individual_reports_short_stations():
    good = make_region(2, length=200)
    short = make_region(1, length=12, seed=9)
    region = align_common(list(good.stations) + list(short.stations))
    built, rejected = build_individual(region, window=5, horizon=5)
    # alignment truncates everyone to the short station's 12-day overlap
    assert built == []
    assert len(rejected) == 3


def test_individual_scaled_inputs_in_unit_range_on_train():
    region = make_region(1, length=150)
    built = prepare_station(region.stations[0], 5, 5)
    assert built.train.inputs.min() >= -1e-12
    assert built.train.inputs.max() <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# batch pooling

def test_batch_indicator_one_hot_layout():
    region = make_region(3, length=120)
    batch = build_batch_indicator(region, window=5, horizon=5)
    assert batch.n_features == N_FEAT + 3
    hot = batch.train.inputs[:, :, N_FEAT:]
    # exactly one indicator column is set per timestep
    assert np.array_equal(hot.sum(axis=2), np.ones(hot.shape[:2]))
    # and it matches the recorded station index
    assert np.array_equal(hot.argmax(axis=2)[:, 0], batch.train_station)


def test_batch_indicator_integer_layout():
    region = make_region(3, length=120)
    batch = build_batch_indicator(region, window=5, horizon=5, encoding="integer")
    assert batch.n_features == N_FEAT + 1
    col = batch.train.inputs[:, :, N_FEAT]
    values = sorted(set(np.unique(col)))
    assert values == [0.0, 0.5, 1.0]  # rank / (S - 1)


def test_batch_indicator_bad_encoding_and_single_station():
    region = make_region(3, length=120)
    with pytest.raises(ValueError, match="encoding"):
        build_batch_indicator(region, 5, 5, encoding="thermometer")
    solo = make_region(1, length=120)
    with pytest.raises(ValueError, match="at least 2 stations"):
        build_batch_indicator(solo, 5, 5)


def test_batch_static_layout():
    region = make_region(3, length=120)
    batch = build_batch_static(region, window=5, horizon=5)
    assert batch.n_features == N_FEAT + 7
    # the appended rows are constant through time for each sample
    extra = batch.train.inputs[:, :, N_FEAT:]
    assert np.allclose(extra, extra[:, :1, :])


def test_batch_recovers_individual_samples_exactly():
    """Stripping the appended columns from pooled samples reproduces the
    individual-strategy samples bit for bit, for both batch builders."""
    region = make_region(3, length=150)
    built, _ = build_individual(region, window=5, horizon=5)
    for batch in (build_batch_indicator(region, 5, 5),
                  build_batch_indicator(region, 5, 5, encoding="integer"),
                  build_batch_static(region, 5, 5)):
        for idx, station in enumerate(built):
            mask = batch.train_station == idx
            pooled_inputs = batch.train.inputs[mask][:, :, :N_FEAT]
            assert np.array_equal(pooled_inputs, station.train.inputs)
            assert np.array_equal(batch.train.targets[mask], station.train.targets)
            test_ds = batch.station_test(station.station_id)
            assert np.array_equal(test_ds.inputs[:, :, :N_FEAT], station.test.inputs)
            assert np.array_equal(test_ds.targets, station.test.targets)


def test_batch_pool_sizes_add_up():
    region = make_region(3, length=150)
    built, _ = build_individual(region, 5, 5)
    batch = build_batch_indicator(region, 5, 5)
    assert batch.train.n_samples == sum(b.train.n_samples for b in built)
    assert batch.test.n_samples == sum(b.test.n_samples for b in built)


def test_concat_datasets_orders_samples():
    region = make_region(2, length=100)
    built, _ = build_individual(region, 5, 5)
    merged = concat_datasets([b.train for b in built])
    first = built[0].train.n_samples
    assert np.array_equal(merged.inputs[:first], built[0].train.inputs)
    assert np.array_equal(merged.inputs[first:], built[1].train.inputs)


# ---------------------------------------------------------------------------
# static attribute scaling

def test_scale_statics_unit_range():
    region = make_region(4, length=150)
    scaled, scaler = scale_statics(region)
    table = np.stack(list(scaled.values()))
    assert table.min() >= 0.0 and table.max() <= 1.0
    # each attribute hits both 0 and 1 across stations unless degenerate
    for j in range(7):
        col = table[:, j]
        if not scaler.degenerate[j]:
            assert col.min() == 0.0 and col.max() == 1.0


def test_scale_statics_degenerate_attribute_zeroed():
    region = make_region(3, length=150)
    # zero_flow_freq is 0 for every synthetic station -> degenerate -> scaled 0
    scaled, scaler = scale_statics(region)
    assert scaler.degenerate[6]
    assert all(vec[6] == 0.0 for vec in scaled.values())


def test_scale_statics_missing_station():
    region = make_region(2, length=150, with_statics=False)
    with pytest.raises(ValueError, match="missing static attributes"):
        scale_statics(region)


# ---------------------------------------------------------------------------
# static model and combiner

def test_static_model_closed_form_on_exact_linear_data():
    rng = np.random.default_rng(50)
    attrs = rng.random((40, 7))
    true_w = rng.normal(size=(7, 3))
    true_b = rng.normal(size=3)
    targets = attrs @ true_w + true_b
    model = fit_static_model(attrs, targets, ridge=1e-12)
    assert np.allclose(model.weights, true_w, atol=1e-6)
    assert np.allclose(model.bias, true_b, atol=1e-6)
    assert np.allclose(model.predict(attrs), targets, atol=1e-6)


def test_combiner_validation():
    with pytest.raises(ValueError, match=r"\(H, 2H\+1\)"):
        EnsembleCombiner(np.zeros((3, 5)))
    with pytest.raises(ValueError, match="non-finite"):
        EnsembleCombiner(np.full((2, 5), np.nan))
    assert EnsembleCombiner(np.zeros((2, 5))).horizon == 2


def test_predict_stacked_dot_product_oracle():
    rng = np.random.default_rng(51)
    h = 3
    coef = rng.normal(size=(h, 2 * h + 1))
    combiner = EnsembleCombiner(coef)
    temporal = rng.normal(size=(6, h))
    static = rng.normal(size=(6, h))
    out = predict_stacked(combiner, temporal, static)
    for m in range(6):
        design = np.concatenate([temporal[m], static[m], [1.0]])
        for step in range(h):
            want = float(design @ coef[step])
            assert out[m, step] == pytest.approx(want, rel=1e-12)
    # single-sample call gives the matching row
    row = predict_stacked(combiner, temporal[0], static[0])
    assert row.shape == (h,)
    assert np.allclose(row, out[0], rtol=1e-15)


def test_combiner_prefers_perfect_temporal_model():
    """If the temporal forecast equals the target, the fitted blend puts
    weight ~1 on it and ~0 elsewhere."""
    rng = np.random.default_rng(52)
    h = 2
    targets = rng.normal(size=(1000, h))
    temporal = targets.copy()
    static = rng.normal(size=(1000, h))  # uninformative
    combiner = fit_combiner(temporal, static, targets)
    for step in range(h):
        coef = combiner.coefficients[step]
        assert coef[step] == pytest.approx(1.0, abs=1e-2)
        others = np.delete(coef, step)
        assert np.all(np.abs(others) < 1e-2)


def test_combiner_with_identical_base_models_reproduces_them():
    """When both base forecasts coincide their weight split is not
    identified, but the blended prediction must equal a plain per-step
    regression on one copy."""
    rng = np.random.default_rng(53)
    h = 3
    fc = rng.normal(size=(300, h))
    targets = fc + rng.normal(scale=0.01, size=(300, h))
    combiner = fit_combiner(fc, fc, targets)
    out = predict_stacked(combiner, fc, fc)
    design = np.hstack([fc, np.ones((300, 1))])
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    single = design @ coef
    assert np.allclose(out, single, atol=1e-6)
    # the duplicated columns split the weight symmetrically (the solve is
    # ill-conditioned here, so only to ~1e-6)
    temporal_w = combiner.coefficients[:, :h]
    static_w = combiner.coefficients[:, h:2 * h]
    assert np.allclose(temporal_w, static_w, atol=1e-4)


def test_combiner_zero_targets_zero_coefficients():
    rng = np.random.default_rng(54)
    temporal = rng.normal(size=(200, 2))
    static = rng.normal(size=(200, 2))
    combiner = fit_combiner(temporal, static, np.zeros((200, 2)))
    assert np.allclose(combiner.coefficients, 0.0, atol=1e-8)


def test_combiner_shape_mismatch():
    with pytest.raises(ValueError, match="shapes differ"):
        fit_combiner(np.ones((5, 2)), np.ones((5, 3)), np.ones((5, 2)))


def test_stacked_fit_never_worse_than_either_base():
    """On its own training pool the least-squares blend cannot lose to
    either base model (they are feasible blends)."""
    region = make_region(3, length=220)
    built, _ = build_individual(region, window=5, horizon=5)
    scaled_attrs, _ = scale_statics(region)
    rng = np.random.default_rng(55)
    w = rng.normal(size=(5 * N_FEAT, 5)) * 0.1

    def temporal_predict(inputs):
        flat = inputs.reshape(inputs.shape[0], -1)
        return flat @ w

    station_data = [(b.train, scaled_attrs[b.station_id]) for b in built]
    attr_rows = np.concatenate([
        np.tile(scaled_attrs[b.station_id], (b.train.n_samples, 1)) for b in built])
    targets = np.concatenate([b.train.targets for b in built])
    static_model = fit_static_model(attr_rows, targets)
    combiner = fit_stacked_ensemble(temporal_predict, static_model, station_data)

    pooled_inputs = np.concatenate([b.train.inputs for b in built])
    temporal_fc = temporal_predict(pooled_inputs)
    static_fc = static_model.predict(attr_rows)
    blended = predict_stacked(combiner, temporal_fc, static_fc)

    def rmse_of(fc):
        return float(np.sqrt(np.mean((fc - targets) ** 2)))

    assert rmse_of(blended) <= min(rmse_of(temporal_fc), rmse_of(static_fc)) + 1e-9
