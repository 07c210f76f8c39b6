"""Timing comparison of the compiled and pure-numpy MLP kernels.

Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

from hann.backend import get_backend
from hann.net import init_xavier


def time_kernels(backend, sizes, batch, repeats=50):
    params = init_xavier(sizes, seed=0)
    tin = np.linspace(0.0, 1.0, batch)
    gy = np.ones((batch, sizes[-1]))

    out, acts = backend.mlp_forward(params.theta, sizes, tin)  # warm up
    backend.mlp_backward(params.theta, sizes, tin, acts, gy)

    t0 = time.perf_counter()
    for _ in range(repeats):
        out, acts = backend.mlp_forward(params.theta, sizes, tin)
    t_fwd = (time.perf_counter() - t0) / repeats

    t0 = time.perf_counter()
    for _ in range(repeats):
        backend.mlp_backward(params.theta, sizes, tin, acts, gy)
    t_bwd = (time.perf_counter() - t0) / repeats
    return t_fwd, t_bwd, out


def main():
    configs = [
        ("2x2 net, 5 points", (1, 2, 2, 10), 5),
        ("4x40 net, 100 points", (1, 40, 40, 40, 40, 2), 100),
        ("4x40 net, 1000 points", (1, 40, 40, 40, 40, 2), 1000),
    ]
    backends = {}
    for name in ("python", "compiled"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"[{name} backend unavailable]")
    print(f"{'case':<26} {'backend':<10} {'forward':>12} {'backward':>12}")
    for label, sizes, batch in configs:
        outs = {}
        for name, mod in backends.items():
            t_fwd, t_bwd, out = time_kernels(mod, sizes, batch)
            outs[name] = out
            print(f"{label:<26} {name:<10} {t_fwd*1e6:>10.1f}us "
                  f"{t_bwd*1e6:>10.1f}us")
        if len(outs) == 2:
            diff = float(np.max(np.abs(outs["python"] - outs["compiled"])))
            print(f"{'':<26} max |python - compiled| = {diff:.3e}")


if __name__ == "__main__":
    main()
