"""Benchmark the RK4 stepping backends on the eight-agent reference case.

Integrates the disturbed output-feedback closed loop (54 stacked states)
with the compiled kernel and the numpy fallback, reporting wall time,
steps per second, speedup, and the worst deviation between the two
trajectories.

Run:  python benchmarks/bench_kernel.py [--horizon 200] [--repeats 3]
"""

import argparse
import time

import numpy as np

from poscon import refcase
from poscon.kernel import available_backends
from poscon.model import DisturbanceSignal
from poscon.sim import build_closed_loop, integrate
from poscon.topology import periodic_schedule


def build_system(horizon):
    agents = refcase.agents()
    gains = refcase.synthesize_reference()
    schedule = periodic_schedule(refcase.graphs(), [0, 1], period=10.0,
                                 horizon=horizon)
    rng = np.random.default_rng(refcase.DEFAULT_SEED)
    x0 = [rng.uniform(0.0, 7.0, a.state_dim) for a in agents]
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_closed_loop(
            agents, gains, refcase.pattern(), schedule,
            DisturbanceSignal.abs_sine([1.0], 0.01), "output_feedback", x0,
            w0=refcase.generator_initial_states())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=float, default=200.0)
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    system = build_system(args.horizon)
    n_steps = int(round(args.horizon / args.step))
    print(f"system: {system.layout.total_dim} states, "
          f"{n_steps} steps (h = {args.step})")

    results = {}
    final = {}
    for backend in available_backends():
        best = np.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            traj = integrate(system, horizon=args.horizon, step=args.step,
                             backend=backend)
            best = min(best, time.perf_counter() - t0)
        results[backend] = best
        final[backend] = traj.states[-1]
        print(f"{backend:>9}: {best:8.3f} s  ({n_steps / best:,.0f} steps/s)")

    if len(results) == 2:
        speedup = results["python"] / results["compiled"]
        dev = np.abs(final["compiled"] - final["python"]).max()
        print(f"speedup (python / compiled): {speedup:.1f}x")
        print(f"max final-state deviation between backends: {dev:.2e}")


if __name__ == "__main__":
    main()
