"""Compare the compiled and pure-Python integration kernels.

    python3 benchmarks/bench_kernels.py --repeat 3

Each case integrates the augmented system (state plus variational matrix)
around one closed loop and reports the best wall time per backend.
"""
import argparse
import time

import numpy as np

from ziglin import kernel
from ziglin.cpath import loop_around
from ziglin.odeint import IntegratorOptions, integrate_augmented
from ziglin.systems import henon_heiles, oracle_harmonic, satellite

CASES = {
    "harmonic": (oracle_harmonic, [1, 0], 0.0, 1 + 1j),
    "henon_heiles": (henon_heiles, [1, -0.4, -1.25, -0.3], 1.0, 0.2 + 2.5j),
    "satellite": (satellite, [0, 1, 0.1, 0], 0.0, 4.8 + 0.8j),
}


def run_case(name, backend, repeat, rel_tol):
    build, x0, t0, center = CASES[name]
    sys_ = build()
    loop = loop_around(t0, center, 0.4)
    opts = IntegratorOptions(rel_tol=rel_tol, backend=backend)
    integrate_augmented(sys_, loop, x0, opts=opts)  # warm the expression cache
    best, res = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        res = integrate_augmented(sys_, loop, x0, opts=opts)
        best = min(best, time.perf_counter() - t)
    return best, res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rel-tol", type=float, default=1e-10)
    ap.add_argument("--case", choices=sorted(CASES), action="append")
    args = ap.parse_args(argv)
    backends = kernel.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'case':<14}{'backend':<9}{'steps':>8}{'best s':>11}{'speedup':>9}  |x_cy - x_py|")
    for name in args.case or sorted(CASES):
        rows = {b: run_case(name, b, args.repeat, args.rel_tol) for b in backends}
        ref = rows.get("python", next(iter(rows.values())))
        for b, (sec, res) in rows.items():
            diff = np.max(np.abs(res.end_state.x - ref[1].end_state.x))
            print(f"{name:<14}{b:<9}{res.accepted_steps:>8}{sec:>11.4f}"
                  f"{ref[0] / sec:>8.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
