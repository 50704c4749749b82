"""Compare the numpy and numba kernel backends.

Part 1 times each kernel directly on random data for a few grid sizes.
Part 2 times whole CH and MBE steps in fresh interpreters with
PHASEFIELD_NUMBA=0 and =1, since the backend is bound at import.

    python benchmarks/bench_kernels.py [--sizes 72,132,264] [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from phasefield import _kernels

STEP_SNIPPET = """
import timeit
from phasefield import ModelConfig, GridSpec, RandomBandlimited, make_initial, resolve_A
from phasefield.stepper import StepperState, step
grid = GridSpec({N})
init = make_initial(RandomBandlimited(seed=0, band=8, normalize="{norm}"), grid)
cfg = ModelConfig("{kind}", 0.1)
plan = resolve_A(cfg, init)
st = StepperState(init, 0.01)
step(st, cfg, plan)  # warm-up (JIT compile / cache load)
t = min(timeit.repeat(lambda: step(st, cfg, plan), number={number}, repeat={repeat})) / {number}
print(t)
"""


def kernel_cases(M, rng):
    u, zx, zy = rng.standard_normal((3, M, M))
    uh = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    rh = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    keep = 1.0 + rng.random((M, M))
    lhs = keep + rng.random((M, M))
    return {
        "cubic": lambda impl: impl.cubic(u),
        "slope_cubic": lambda impl: impl.slope_cubic(zx, zy),
        "quartic_well_sum": lambda impl: impl.quartic_well_sum(u),
        "slope_well_sum": lambda impl: impl.slope_well_sum(zx, zy),
        "semi_implicit_solve": lambda impl: impl.semi_implicit_solve(uh, rh, keep, lhs, 0.1),
        "max_abs": lambda impl: impl.max_abs(u),
    }


def time_call(fn, repeat, number):
    fn()  # warm-up
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench_kernels(sizes, repeat):
    if _kernels.numba_impl is None:
        print("numba not importable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'M':>6}{'numpy [us]':>14}{'numba [us]':>14}{'speedup':>10}")
    for M in sizes:
        for name, call in kernel_cases(M, rng).items():
            t_np = time_call(lambda: call(_kernels.numpy_impl), repeat, 50)
            t_nb = time_call(lambda: call(_kernels.numba_impl), repeat, 50)
            print(f"{name:<22}{M:>6}{t_np * 1e6:>14.1f}{t_nb * 1e6:>14.1f}{t_np / t_nb:>10.2f}")


def bench_steps(Ns, repeat):
    print(f"\n{'model':<8}{'N':>5}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for kind, norm in (("ch", "value"), ("mbe", "gradient")):
        for N in Ns:
            times = {}
            for flag in ("0", "1"):
                code = STEP_SNIPPET.format(N=N, kind=kind, norm=norm, number=20, repeat=repeat)
                env = dict(os.environ, PHASEFIELD_NUMBA=flag)
                out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
                times[flag] = float(out.stdout.strip())
            print(f"{kind:<8}{N:>5}{times['0'] * 1e3:>14.3f}{times['1'] * 1e3:>14.3f}{times['0'] / times['1']:>10.2f}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="72,132,264", help="physical grid sizes M for kernel timings")
    p.add_argument("--Ns", default="16,32,64", help="mode cutoffs for whole-step timings")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    bench_kernels([int(s) for s in args.sizes.split(",")], args.repeat)
    bench_steps([int(s) for s in args.Ns.split(",")], args.repeat)


if __name__ == "__main__":
    main()
