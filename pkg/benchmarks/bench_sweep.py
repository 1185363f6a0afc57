"""Compare the compiled and pure-Python amplitude sweep backends.

For a driven two-level system and a pair source this times the sweep
kernel alone (on the exact inputs a scattered-state assembly feeds it) and
the full assembly, checks that both backends agree, and prints a table.
Usage: python benchmarks/bench_sweep.py [--repeat N]
"""
import argparse
import time

import numpy as np

from wgscatter import kernels
from wgscatter.model import build_pair_source, build_tls
from wgscatter.propagator import TimeGrid, build_grid
from wgscatter.scattering import scattered_state


def cases():
    tls = build_tls(1.0, np.pi / 0.4, 0.2)
    yield "tls pi, dt=0.01, N=3", tls, build_grid(tls, TimeGrid.for_pulse(0.2, 0.01, 12.0)), 3
    pair = build_pair_source(1.0, 2.0, 0.4, 1.0, 1.0, 6)
    yield ("pair sigma=0.4, dt=0.05, N=2", pair,
           build_grid(pair, TimeGrid.for_pulse(pair.t_pulse, 0.05, pair.t_pulse + 12.0)), 2)


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def kernel_inputs(model, gridp, n):
    calls = []
    inner = kernels.sweep

    def spy(*args, **kw):
        calls.append(args)
        return inner(*args, **kw)

    kernels.sweep = spy
    try:
        scattered_state(model, gridp, n)
    finally:
        kernels.sweep = inner
    return calls


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    default = kernels.BACKEND
    backends = ["python"] + (["compiled"] if kernels._sweep_ext is not None else [])
    print(f"{'case':30s} {'stage':9s} " + " ".join(f"{b:>10s}" for b in backends) + "  speedup")
    try:
        for label, model, gridp, n in cases():
            calls = kernel_inputs(model, gridp, n)
            k_time, a_time, states = {}, {}, {}
            for b in backends:
                k_time[b], _ = best_of(lambda: [kernels.sweep(*c, backend=b) for c in calls],
                                       args.repeat)
                kernels.BACKEND = b
                a_time[b], states[b] = best_of(lambda: scattered_state(model, gridp, n),
                                               args.repeat)
            if len(backends) == 2:
                for key, s in states["python"].sectors.items():
                    other = states["compiled"].sectors[key]
                    assert np.array_equal(s.bins, other.bins), key
                    assert np.allclose(s.amps, other.amps, rtol=1e-12, atol=1e-15), key
            for stage, t in (("kernel", k_time), ("assembly", a_time)):
                speed = f"{t['python'] / t['compiled']:6.1f}x" if len(backends) == 2 else "     -"
                print(f"{label:30s} {stage:9s} " + " ".join(f"{t[b]:9.3f}s" for b in backends)
                      + "  " + speed)
    finally:
        kernels.BACKEND = default


if __name__ == "__main__":
    main()
