"""Compare the compiled and pure-Python Monte-Carlo trial kernels.

Runs the same simulation workload through both kernels, reports wall-clock
times and the speedup, and checks that the outputs are bit-identical.

Usage: python3 benchmarks/bench_trialloop.py [--trials N] [--n N]
"""

import argparse
import time

import numpy as np

import fbcap as fb
import fbcap.coding as coding
from fbcap import _trialloop_py


def run(kernel, cfg):
    coding._kernel = kernel
    t0 = time.perf_counter()
    res = fb.simulate(cfg)
    return time.perf_counter() - t0, res


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--n", type=int, default=30)
    args = parser.parse_args()

    try:
        from fbcap import _trialloop
    except ImportError:
        print("compiled kernel not available; only timing the Python kernel")
        _trialloop = None

    channel = fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=fb.build_ma1(0.5))
    sol = fb.solve_capacity_scalar(channel)
    policy = fb.extract_policy(sol)
    cfg = fb.SchemeConfig(
        channel=channel, policy=policy, n=args.n,
        R=0.5 * sol.capacity_bits, seed=42, trials=args.trials,
    )
    print(f"workload: n={args.n}, trials={args.trials}, "
          f"warmup={cfg.warmup} steps per trial")

    saved = coding._kernel
    try:
        t_py, res_py = run(_trialloop_py, cfg)
        print(f"python kernel : {t_py:8.3f} s  (p_e={res_py.p_e:.4f})")
        if _trialloop is not None:
            t_cy, res_cy = run(_trialloop, cfg)
            print(f"compiled kernel: {t_cy:8.3f} s  (p_e={res_cy.p_e:.4f})")
            print(f"speedup: {t_py / t_cy:.1f}x")
            identical = (
                np.array_equal(res_py.msg_hat, res_cy.msg_hat)
                and res_py.avg_power == res_cy.avg_power
            )
            print(f"bit-identical outputs: {identical}")
            if not identical:
                raise SystemExit("kernel outputs diverged")
    finally:
        coding._kernel = saved


if __name__ == "__main__":
    main()
