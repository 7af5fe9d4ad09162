"""Forward semantics of the four architectures against loop-level references."""
import numpy as np
import pytest

from flowcast.nn import NetSpec, backward, forward, init_params

F, N, H, HID = 5, 4, 2, 3


def make(kind, seed=0, hidden=HID):
    spec = NetSpec(kind=kind, input_features=F, window=N, horizon=H, hidden_units=hidden)
    return spec, init_params(spec, seed)


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def ref_cell(x, h, c, wx, wh, b):
    """One LSTM step for a single sample, gate blocks ordered i|f|g|o."""
    hid = wh.shape[0]
    z = b.copy()
    for k in range(len(x)):
        z = z + x[k] * wx[k]
    for k in range(hid):
        z = z + h[k] * wh[k]
    i = sigmoid(z[:hid])
    f = sigmoid(z[hid:2 * hid])
    g = np.tanh(z[2 * hid:3 * hid])
    o = sigmoid(z[3 * hid:])
    c_new = f * c + i * g
    return o * np.tanh(c_new), c_new


def ref_unroll(sample, wx, wh, b, reverse=False):
    hid = wh.shape[0]
    h, c = np.zeros(hid), np.zeros(hid)
    order = range(len(sample) - 1, -1, -1) if reverse else range(len(sample))
    for t in order:
        h, c = ref_cell(sample[t], h, c, wx, wh, b)
    return h


def ref_forward(spec, params, sample):
    if spec.kind == "LSTM":
        h = ref_unroll(sample, params.view("wx"), params.view("wh"), params.view("b"))
        return h @ params.view("head_w") + params.view("head_b")
    if spec.kind == "BD-LSTM":
        h_f = ref_unroll(sample, params.view("fwd_wx"), params.view("fwd_wh"),
                         params.view("fwd_b"))
        h_b = ref_unroll(sample, params.view("bwd_wx"), params.view("bwd_wh"),
                         params.view("bwd_b"), reverse=True)
        joint = np.concatenate([h_f, h_b])
        return joint @ params.view("head_w") + params.view("head_b")
    if spec.kind == "ED-LSTM":
        hid = spec.hidden_units
        h, c = np.zeros(hid), np.zeros(hid)
        for t in range(spec.window):
            h, c = ref_cell(sample[t], h, c, params.view("enc_wx"),
                            params.view("enc_wh"), params.view("enc_b"))
        y = np.zeros(1)
        outs = []
        for _ in range(spec.horizon):
            h, c = ref_cell(y, h, c, params.view("dec_wx"),
                            params.view("dec_wh"), params.view("dec_b"))
            y = h @ params.view("head_w") + params.view("head_b")
            outs.append(y[0])
        return np.array(outs)
    if spec.kind == "CNN1D":
        k, hid = spec.conv_kernel, spec.hidden_units
        n_pos = spec.window - k + 1
        conv_w, conv_b = params.view("conv_w"), params.view("conv_b")
        act = np.empty((n_pos, hid))
        for p in range(n_pos):
            for u in range(hid):
                s = conv_b[u]
                for dt in range(k):
                    for feat in range(spec.input_features):
                        s += sample[p + dt, feat] * conv_w[dt * spec.input_features + feat, u]
                act[p, u] = np.tanh(s)
        pooled = np.array([act[act[:, u].argmax(), u] for u in range(hid)])
        return pooled @ params.view("head_w") + params.view("head_b")
    raise AssertionError(spec.kind)


@pytest.mark.parametrize("kind", ["LSTM", "BD-LSTM", "ED-LSTM", "CNN1D"])
def test_forward_matches_reference(kind):
    spec, params = make(kind, seed=3)
    rng = np.random.default_rng(4)
    inputs = rng.normal(size=(6, N, F))
    preds = forward(spec, params, inputs)
    assert preds.shape == (6, H)
    for bi in range(6):
        want = ref_forward(spec, params, inputs[bi])
        assert np.allclose(preds[bi], want, rtol=1e-12, atol=1e-12), kind


@pytest.mark.parametrize("kind", ["LSTM", "BD-LSTM", "ED-LSTM", "CNN1D"])
def test_zero_params_give_zero_output(kind):
    spec, params = make(kind)
    params.flat[:] = 0.0
    preds = forward(spec, params, np.random.default_rng(0).normal(size=(4, N, F)))
    assert np.all(preds == 0.0)


@pytest.mark.parametrize("kind", ["LSTM", "BD-LSTM", "ED-LSTM", "CNN1D"])
def test_batch_rows_independent(kind):
    spec, params = make(kind, seed=5)
    inputs = np.random.default_rng(6).normal(size=(3, N, F))
    full = forward(spec, params, inputs)
    for bi in range(3):
        single = forward(spec, params, inputs[bi:bi + 1])
        assert np.allclose(full[bi], single[0], rtol=1e-12, atol=1e-14)


def test_forward_deterministic():
    spec, params = make("LSTM", seed=7)
    inputs = np.random.default_rng(8).normal(size=(2, N, F))
    assert np.array_equal(forward(spec, params, inputs), forward(spec, params, inputs))


def test_forward_shape_errors():
    spec, params = make("LSTM")
    with pytest.raises(ValueError, match="batch, window, features"):
        forward(spec, params, np.zeros((N, F)))
    with pytest.raises(ValueError, match="does not match spec"):
        forward(spec, params, np.zeros((2, N + 1, F)))
    with pytest.raises(ValueError, match="does not match spec"):
        forward(spec, params, np.zeros((2, N, F + 1)))


def test_ed_decoder_feeds_back_own_output():
    """Perturbing the head changes later decoder steps through the feedback input."""
    spec, params = make("ED-LSTM", seed=9)
    inputs = np.random.default_rng(10).normal(size=(1, N, F))
    base = forward(spec, params, inputs)
    bumped = params.copy()
    bumped.view("head_b")[:] += 0.5
    shifted = forward(spec, bumped, inputs)
    # step 1 moves by exactly the bias bump; step 2 moves by more than the bump
    assert shifted[0, 0] - base[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert abs(shifted[0, 1] - base[0, 1] - 0.5) > 1e-6


def test_cnn_pool_prefers_first_position_on_ties():
    """With zero conv weights every position ties; gradients must flow to patch 0."""
    spec, params = make("CNN1D", seed=11)
    params.view("conv_w")[:] = 0.0
    rng = np.random.default_rng(12)
    inputs = rng.normal(size=(1, N, F))
    preds, cache = forward(spec, params, inputs, return_cache=True)
    d_pred = np.ones_like(preds)
    grads = backward(spec, params, cache, d_pred)
    from flowcast.nn import NetParams
    gp = NetParams(grads, params.layout)
    patch0 = inputs[0, :spec.conv_kernel, :].reshape(-1)  # time-major flatten
    act0 = np.tanh(params.view("conv_b"))
    d_pooled = d_pred @ params.view("head_w").T
    expected = np.outer(patch0, d_pooled[0] * (1.0 - act0 * act0))
    assert np.allclose(gp.view("conv_w"), expected, rtol=1e-12, atol=1e-12)


def test_bd_uses_both_directions():
    """Zeroing the reverse head columns must not silence the forward direction."""
    spec, params = make("BD-LSTM", seed=13)
    inputs = np.random.default_rng(14).normal(size=(2, N, F))
    base = forward(spec, params, inputs)
    fwd_only = params.copy()
    fwd_only.view("head_w")[HID:, :] = 0.0
    bwd_only = params.copy()
    bwd_only.view("head_w")[:HID, :] = 0.0
    head_b = params.view("head_b")
    recombined = forward(spec, fwd_only, inputs) + forward(spec, bwd_only, inputs) - head_b
    assert np.allclose(recombined, base, rtol=1e-12, atol=1e-12)


def test_cnn_single_position_window():
    """window == kernel leaves one conv position, so pooling is the identity."""
    spec = NetSpec(kind="CNN1D", input_features=F, window=3, horizon=H,
                   hidden_units=4, conv_kernel=3)
    params = init_params(spec, 15)
    inputs = np.random.default_rng(16).normal(size=(2, 3, F))
    preds, cache = forward(spec, params, inputs, return_cache=True)
    assert np.all(cache["arg"] == 0)
    assert preds.shape == (2, H)
