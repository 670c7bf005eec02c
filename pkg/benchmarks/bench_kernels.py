"""Compare the compiled and numpy kernel backends on the Fermi stack.

    python3 benchmarks/bench_kernels.py [--grids 32 64 128] [--repeat 5]

Reports the best-of-N wall time for one stencil application and one full
steady-state solve per backend, plus the speedup of each backend over numpy.
"""
import argparse
import timeit

import numpy as np

from gputherm.fixtures import Scenario, fixture_report
from gputherm.floorplan import generate_layer0, generate_layer2
from gputherm.powertrace import default_mapping, map_to_units
from gputherm.stack import build_fermi_stack
from gputherm.thermal import discretize, steady_state
from gputherm.thermal.kernels import BACKENDS


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    fp0, fp2 = generate_layer0(), generate_layer2()
    stack = build_fermi_stack(fp0, fp2)
    report = fixture_report(Scenario("matmul_linear", 800))
    powers = map_to_units(report, default_mapping(fp0), fp0, fp2).mean_powers()
    names = sorted(BACKENDS)
    print(f"backends available: {', '.join(names)}")
    print(f"{'grid':>8} {'backend':>8} {'stencil us':>11} {'solve ms':>9} {'speedup':>8}")
    for n in args.grids:
        model = discretize(stack, n, n)
        x = np.random.default_rng(0).random(model.shape)
        ref = None
        for name in sorted(names, key=lambda b: b != "python"):
            kern = BACKENDS[name]
            t_op = best(lambda: kern.apply_operator(model.gx, model.gy, model.gz, model.g_sink, x),
                        args.repeat, 20)
            t_solve = best(lambda: steady_state(model, powers, backend=name), args.repeat, 1)
            ref = ref or t_solve
            print(f"{n:>4}x{n:<3} {name:>8} {t_op * 1e6:>11.1f} {t_solve * 1e3:>9.2f} {ref / t_solve:>7.1f}x")


if __name__ == "__main__":
    main()
