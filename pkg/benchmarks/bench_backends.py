"""Timing comparison of the numba kernels against the numpy fallback.

Runs each hot kernel on representative shapes under both implementations,
then times a short end-to-end solver run per backend in a subprocess (the
backend is fixed at import time, so in-process switching is not possible).

Usage: python benchmarks/bench_backends.py [--states 10] [--actions 10]
       [--repeats 200] [--skip-e2e]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def make_inputs(rng, S, n):
    r = rng.random((S, n))
    Pm = rng.random((S, n, S))
    Pm /= Pm.sum(axis=2, keepdims=True)
    x = rng.random((S, n))
    x /= x.sum(axis=1, keepdims=True)
    V = rng.random(S)
    qbar = rng.random((S, n))
    return r, Pm, x, V, qbar


def bench(fn, args, repeats):
    fn(*args)  # warm up (numba compiles here)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def kernel_table(S, A, B, repeats):
    from mgnash._kernels import numpy_impl

    try:
        from mgnash._kernels import numba_impl
    except ImportError:
        print("numba unavailable; nothing to compare")
        return

    rng = np.random.default_rng(0)
    r, Pm, x, V, qbar = make_inputs(rng, S, A)
    R = rng.random((S, A, B))
    P = rng.random((S, A, B, S))
    P /= P.sum(axis=3, keepdims=True)
    y = rng.random((S, B))
    y /= y.sum(axis=1, keepdims=True)
    M = rng.random((A, B))
    rows = rng.normal(size=(S, A))

    cases = [
        ("project_rows", (rows,)),
        ("marginal_min", (R, P, y)),
        ("marginal_max", (R, P, x)),
        ("policy_value", (r, Pm, 0.99, x)),
        ("bellman_q", (r, Pm, 0.99, V)),
        ("optimal_value", (r, Pm, 0.99, False)),
        ("visitation_solve", (np.einsum("sat,sa->st", Pm, x), 0.99, np.full(S, 1.0 / S))),
        ("ogda_step", (r, Pm, 0.99, 0.1, -1.0, x, x.copy(), False)),
        ("avg_ogda_step", (r, Pm, 0.99, 0.1, -1.0, 0.3, x, x.copy(), V, qbar, x.copy(), False)),
        ("actor_critic_step", (r, Pm, 0.99, 0.1, -1.0, 0.2, x, x.copy(), V)),
        ("matrix_game_solve", (M, 0.125, 1e-8, 5000, 10, np.full(A, 1.0 / A), np.full(B, 1.0 / B))),
    ]

    print(f"kernel timings, S={S} A={A} B={B}, {repeats} repeats (mean per call)")
    print(f"{'kernel':<20} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for name, args in cases:
        t_nb = bench(getattr(numba_impl, name), args, repeats)
        t_np = bench(getattr(numpy_impl, name), args, repeats)
        print(f"{name:<20} {t_nb * 1e6:>10.1f}us {t_np * 1e6:>10.1f}us {t_np / t_nb:>8.2f}x")


E2E_SNIPPET = """
import time
import mgnash as mg
game, z0 = mg.random_instance(mg.GenSpec({S}, {A}, {B}, 0.99, 0))
sched = mg.build_schedule({T}, "2", "4")
mg.run_homotopy(game, z0, 0.1, 0.1, sched, gap_every=500)  # warm the kernels
t0 = time.perf_counter()
mg.run_homotopy(game, z0, 0.1, 0.1, sched, gap_every=500)
print(f"{{mg.backend_name()}}: {{time.perf_counter() - t0:.2f}}s for {T} iterations")
"""


def end_to_end(S, A, B, T):
    print(f"\nend-to-end switching run, S={S} A={A} B={B} T={T}, gap every 500")
    for backend in ("numba", "numpy"):
        env = dict(os.environ, MGNASH_BACKEND=backend)
        snippet = E2E_SNIPPET.format(S=S, A=A, B=B, T=T)
        proc = subprocess.run([sys.executable, "-c", snippet],
                              capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(f"{backend}: failed\n{proc.stderr}")
        else:
            print(proc.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=10)
    ap.add_argument("--actions", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--iters", type=int, default=20_000,
                    help="iterations of the end-to-end run")
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    kernel_table(args.states, args.actions, args.actions, args.repeats)
    if not args.skip_e2e:
        end_to_end(args.states, args.actions, args.actions, args.iters)


if __name__ == "__main__":
    main()
