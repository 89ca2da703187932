"""Time the hot kernels under numba and under the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at import
time from LTBMAP_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from ltbmap import backend
from ltbmap._kernels import LUM, gk_integrate
from ltbmap.kernel import GeodesicState, LTBModel, eval_kernel
from ltbmap.luminosity import CosmoParams, LuminosityCurve
from ltbmap.critical import find_z_lambda

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
model = LTBModel.power_law(1.1, 2.0, 0.8, 0.0)
states = [GeodesicState(rng.uniform(0, 3), rng.uniform(0.3, 2), 0.0, rng.uniform(0.05, 1)) for _ in range(400)]
radii = rng.uniform(0.3, 2.5, 400)

def kernel():
    for s, R in zip(states, radii):
        eval_kernel(s, R, model)

def quad():
    for q in np.linspace(1.01, 30.0, 2000):
        gk_integrate(LUM, 1.0, q, 0.3, 0.0, 0.0, 1e-15, 1e-13, 60)

def curve():
    c = LuminosityCurve(CosmoParams(0.3))
    for z in np.linspace(0.01, 20, 2000):
        c.R(z); c.dRdz(z)

def zlambda():
    for om in np.linspace(0.0, 0.95, 20):
        find_z_lambda(CosmoParams(float(om)))

out = {"backend": backend()}
for name, fn in (("kernel_x400", kernel), ("quad_x2000", quad), ("curve_x2000", curve), ("zlambda_x20", zlambda)):
    fn()  # warm-up (compilation under numba)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter(); fn(); times.append(time.perf_counter() - t0)
    out[name] = min(times)
print(json.dumps(out))
"""


def run(flag: str, repeat: int) -> dict:
    env = dict(os.environ, LTBMAP_DISABLE_NUMBA=flag)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run("0", args.repeat), run("1", args.repeat)
    names = [k for k in fast if k != "backend"]
    print(f"{'case':<14}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for k in names:
        print(f"{k:<14}{fast[k] * 1e3:>10.2f}ms{slow[k] * 1e3:>10.2f}ms{slow[k] / fast[k]:>9.1f}x")


if __name__ == "__main__":
    main()
