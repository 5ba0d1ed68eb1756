"""Time every raster kernel under the compiled and pure-Python backends.

    python benchmarks/bench_kernels.py --size 256 --repeat 3

Both backends see identical inputs; results are checked for equality before
the timings are reported.
"""

import argparse
import sys
import timeit

import numpy as np
from scipy import ndimage

from floodrisk import kernels


def make_inputs(size, seed):
    rng = np.random.default_rng(seed)
    z = ndimage.gaussian_filter(rng.normal(size=(size, size)), 2.0) * 30
    z += np.linspace(0, 50, size)[:, None]
    z = np.round(z, 1)
    valid = np.ones(z.shape, dtype=bool)
    ref = kernels.get("python")
    filled = ref.fill_depressions(z, valid)
    codes = ref.d8_directions(filled, valid, 30.0)
    mask = ref.mfd_masks(np.round(z / 2.0), valid)
    flats, n = ndimage.label((mask == 0) & valid, structure=np.ones((3, 3)))
    seeds = np.where(rng.random(z.shape) < 0.01, np.arange(z.size).reshape(z.shape) + 1, 0)
    sources = rng.random(z.shape) < 0.002
    sources.flat[0] = True
    vals = np.unique(np.round(z, 0))
    return {
        "d8_directions": (filled, valid, 30.0),
        "mfd_masks": (z, valid),
        "fill_depressions": (z, valid),
        "flow_accumulation": (codes, valid),
        "downstream_labels": (codes, valid, seeds),
        "mfd_grow": (mask, valid, flats, list(range(1, n + 1)), size * size / 50),
        "squared_edt": (sources,),
        "jenks_dp": (vals, np.ones(vals.size), 5),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256, help="grid edge length in cells")
    ap.add_argument("--repeat", type=int, default=3, help="best-of repeats per kernel")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not importable; only the python backend is timed", file=sys.stderr)
    inputs = make_inputs(args.size, args.seed)
    names = sorted(backends)
    print(f"grid {args.size}x{args.size}, best of {args.repeat}")
    print(f"{'kernel':<20}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speedup':>10}")
    for kernel, call_args in inputs.items():
        times, results = {}, {}
        for name in names:
            fn = getattr(kernels.get(name), kernel)
            results[name] = fn(*call_args)
            times[name] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
        if len(results) > 1 and not same(results["compiled"], results["python"]):
            print(f"{kernel}: backends disagree", file=sys.stderr)
            return 1
        speed = f"{times['python'] / times['compiled']:>9.1f}x" if "compiled" in times else f"{'-':>10}"
        print(f"{kernel:<20}" + "".join(f"{times[n] * 1e3:>16.2f}" for n in names) + speed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
