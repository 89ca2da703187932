import os
import subprocess
import sys

import pytest

from ltbmap import backend

SNIPPET = """
from ltbmap import backend
from ltbmap.kernel import GeodesicState, LTBModel, eval_kernel
from ltbmap.luminosity import CosmoParams, LuminosityCurve
k = eval_kernel(GeodesicState(1.3, 0.8, 0.1, 0.4), 0.9, LTBModel.power_law(1.2, 2.0, 0.7, 0.0))
c = LuminosityCurve(CosmoParams(0.3))
print(backend(), repr(k.F), repr(k.G), repr(k.detU), repr(c.R(2.5)))
"""


def run_with(flag):
    env = dict(os.environ, LTBMAP_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_backend_name():
    assert backend() in ("numba", "numpy")


def test_backends_agree():
    jit, py = run_with("0"), run_with("1")
    assert py[0] == "numpy"
    vals_jit = [float(v) for v in jit[1:]]
    vals_py = [float(v) for v in py[1:]]
    assert vals_jit == pytest.approx(vals_py, rel=1e-13)
