"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported side by side, so the environment flag that picks
the runtime backend has no effect here. Outputs are cross-checked before
timing.
"""
import argparse
import timeit

import numpy as np

from mreinfer import _kernels as K


def cases(rng):
    logp = np.log(rng.dirichlet(np.ones(200)))
    A = np.ascontiguousarray(rng.normal(size=(3, 200)))
    lam = rng.normal(size=3) * 0.3
    w = np.full(6, 1 / 6)
    u = np.arange(1, 7, dtype=np.int64)
    return [
        ("tilt_stats n=200 m=3", "tilt_stats", (logp, A, lam)),
        ("power_convolutions r=5 N=48", "power_convolutions", (w, 48)),
        ("enumerate_first_marginal 6^7", "enumerate_first_marginal", (u, w, 7, 25)),
    ]


def _close(a, b):
    if isinstance(a, tuple):
        return all(_close(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-15)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for title, name, call_args in cases(rng):
        fnp = getattr(K, f"numpy_{name}")
        fnb = getattr(K, f"numba_{name}")
        if not _close(fnp(*call_args), fnb(*call_args)):  # also warms up the jit
            raise SystemExit(f"{name}: backends disagree")
        times = []
        for f in (fnp, fnb):
            number, _ = timeit.Timer(lambda: f(*call_args)).autorange()
            best = min(timeit.repeat(lambda: f(*call_args), number=number, repeat=args.repeat))
            times.append(1e3 * best / number)
        print(f"{title:32s} {times[0]:11.4f} {times[1]:11.4f} {times[0] / times[1]:7.1f}x")


if __name__ == "__main__":
    main()
