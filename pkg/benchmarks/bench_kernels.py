"""Time the compiled kernels against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Every workload
is checked for agreement between backends before it is timed.
"""
import argparse
import math
import timeit

import numpy as np

from qgraf.kernels import available_backends

TOL = 1e-15
CAP = 10000


def workloads():
    q = 0.8
    th = np.linspace(0.0, math.pi, 257)
    x = np.cos(th)
    u = np.vstack([0.6 * np.exp(1j * th), 0.6 * np.exp(-1j * th)])
    low = np.full((1, th.size), 0.25 + 0j)
    return {
        "qpoch_inf(a=0.5, q=0.99)": lambda k: k.qpoch_inf(0.5 + 0j, 0.99, TOL, CAP)[0],
        "phi_sum 2phi1, q=0.8": lambda k: k.phi_sum(
            [0.3 + 0j, 0.4 + 0j], [0.5 + 0j], 0.9 + 0j, q, 0, TOL, CAP, -1
        )[0],
        "phi_sum 1phi1, q=0.95": lambda k: k.phi_sum([0.3 + 0j], [0.2 + 0j], -5.0 + 0j, 0.95, 1, TOL, CAP, -1)[0],
        "phi_sum_vec 2phi1 x257": lambda k: k.phi_sum_vec(u, low, 0.7 + 0j, q, 0, TOL, CAP, -1)[0],
        "asc_table n=40 x257": lambda k: k.asc_table(x, 0.4, -0.3, q, 40),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not importable; timing the fallback only")
    names = sorted(backends, key=lambda n: n != "python")
    print(f"{'workload':32s}" + "".join(f"{n:>14s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in workloads().items():
        ref = np.asarray(fn(backends["python"]))
        for n in names[1:]:
            got = np.asarray(fn(backends[n]))
            assert np.allclose(got, ref, rtol=1e-12, atol=1e-14), f"{label}: backends disagree"
        times = []
        for n in names:
            k = backends[n]
            timer = timeit.Timer(lambda: fn(k))
            loops, _ = timer.autorange()
            best = min(timer.repeat(args.repeat, loops)) / loops
            times.append(best)
        row = f"{label:32s}" + "".join(f"{t * 1e6:12.1f}us" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
