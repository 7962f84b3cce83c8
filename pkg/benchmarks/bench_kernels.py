"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from tailrate.kernels import backends


def cases(rng):
    n = 200_000
    w, f = rng.uniform(1, 10, n), rng.uniform(-5, 5, n)
    x = np.sort(rng.uniform(-5, 5, 3000))
    fx = np.abs(x)
    m = 300_000
    eu = np.arange(m - 1, dtype=np.int64)
    ev = eu + 1
    mask = rng.random(m) < 0.7
    return {
        f"minimax_center n={n}": lambda k: k.minimax_center(w, f),
        f"moreau_coords n={x.size}": lambda k: k.moreau_coords(x, fx, 0.1),
        f"components n={m}": lambda k: k.components(m, eu, ev, mask),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    found = backends()
    rng = np.random.default_rng(0)
    names = sorted(found)
    print(f"{'kernel':<28}" + "".join(f"{n:>12}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for label, call in cases(rng).items():
        times = {}
        for name in names:
            mod = found[name]
            call(mod)  # warm up
            times[name] = min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
        row = f"{label:<28}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in names)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
