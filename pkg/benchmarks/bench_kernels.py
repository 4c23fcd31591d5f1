"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from dropcal import _pykernels

try:
    from dropcal import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    logits = rng.normal(0.0, 3.0, size=(5000, 25, 10))
    labels = rng.integers(0, 10, size=5000)
    values = rng.random(100_000)
    flags = (rng.random(100_000) < 0.2).astype(np.float64)
    idx = _pykernels.bin_index(values, 15)
    return {
        "mc_nll_grad (5000x25x10)": lambda k: k.mc_nll_grad(logits, labels, 1.3),
        "mc_integrate_batch (5000x25x10)": lambda k: k.mc_integrate_batch(logits, 1.3),
        "bin_index (1e5, m=15)": lambda k: k.bin_index(values, 15),
        "bin_sums (1e5, m=15)": lambda k: k.bin_sums(idx, values, flags, 15),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for name, fn in cases(np.random.default_rng(0)).items():
        times = {b: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for b, k in backends.items()}
        row = f"{name:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times.values())
        if len(times) == 2:
            row += f"  {times['python'] / times['cython']:9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
