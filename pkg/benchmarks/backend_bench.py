"""Compare the compiled LSTM kernels against the pure-numpy fallback.

Kernel-level timings run both implementations side by side in-process; the
full training comparison re-invokes this script in a subprocess with
FLOWCAST_PURE_PYTHON=1 so each run binds its backend at import time. Works
(numpy only) when the extension was not built.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def time_kernels(impl, batch: int, features: int, hidden: int, reps: int) -> tuple[float, float]:
    rng = np.random.default_rng(0)
    x = rng.normal(size=(batch, features))
    h = rng.normal(size=(batch, hidden))
    c = rng.normal(size=(batch, hidden))
    wx = rng.normal(size=(features, 4 * hidden))
    wh = rng.normal(size=(hidden, 4 * hidden))
    b = rng.normal(size=4 * hidden)
    dwx, dwh, db = np.zeros_like(wx), np.zeros_like(wh), np.zeros_like(b)
    dh = rng.normal(size=(batch, hidden))
    dc = np.zeros((batch, hidden))

    start = time.perf_counter()
    for _ in range(reps):
        h_new, c_new, gates = impl.lstm_cell_forward(x, h, c, wx, wh, b)
    fwd = (time.perf_counter() - start) / reps

    start = time.perf_counter()
    for _ in range(reps):
        impl.lstm_cell_backward(dh, dc, x, h, c, gates, c_new, wx, wh, dwx, dwh, db)
    bwd = (time.perf_counter() - start) / reps
    return fwd, bwd


def time_training(epochs: int) -> float:
    from flowcast.nn import LossSpec, NetSpec, TrainConfig, train
    from flowcast.series import embed

    rng = np.random.default_rng(1)
    matrix = rng.random((6, 1200))
    dataset = embed(matrix, window=5, horizon=5)
    spec = NetSpec(kind="LSTM", input_features=6, window=5, horizon=5, hidden_units=20)
    config = TrainConfig(max_epochs=epochs, batch_size=32, seed=0)
    start = time.perf_counter()
    train(spec, dataset, LossSpec(kind="MSE"), config)
    return time.perf_counter() - start


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--hidden", type=int, default=20)
    parser.add_argument("--reps", type=int, default=2000)
    parser.add_argument("--epochs", type=int, default=3,
                        help="epochs for the full-training comparison")
    parser.add_argument("--train-only", action="store_true",
                        help="print one training time (used by the subprocess mode)")
    args = parser.parse_args(argv)

    if args.train_only:
        print(f"{time_training(args.epochs):.4f}")
        return 0

    from flowcast.nn import backend, kernels_numpy
    impls = {"numpy": kernels_numpy}
    try:
        from flowcast.nn import _kernels
        impls["compiled"] = _kernels
    except ImportError:
        print("compiled extension not built; benchmarking numpy only")

    print(f"LSTM cell, batch={args.batch} features=6 hidden={args.hidden}, "
          f"mean over {args.reps} reps:")
    times = {}
    for name, impl in impls.items():
        fwd, bwd = time_kernels(impl, args.batch, 6, args.hidden, args.reps)
        times[name] = (fwd, bwd)
        print(f"  {name:>8}: forward {fwd * 1e6:8.2f} us   backward {bwd * 1e6:8.2f} us")
    if len(times) == 2:
        f_ratio = times["numpy"][0] / times["compiled"][0]
        b_ratio = times["numpy"][1] / times["compiled"][1]
        print(f"  speedup: forward {f_ratio:.2f}x, backward {b_ratio:.2f}x")

    print(f"\nfull training run ({args.epochs} epochs, T=1200, hidden=20), "
          f"one subprocess per backend:")
    for name, env_val in (("compiled", None), ("numpy", "1")):
        if name not in impls:
            continue
        env = dict(os.environ)
        env.pop("FLOWCAST_PURE_PYTHON", None)
        if env_val:
            env["FLOWCAST_PURE_PYTHON"] = env_val
        out = subprocess.run(
            [sys.executable, __file__, "--train-only", "--epochs", str(args.epochs)],
            env=env, capture_output=True, text=True, check=True)
        print(f"  {name:>8}: {float(out.stdout.strip()):.2f} s   (backend bound: "
              f"{'numpy' if env_val else backend.BACKEND_NAME})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
