import math
import os

import numpy as np
import pytest

os.environ.setdefault("VPL_WORKERS", "1")

from vpl import PacketParams, QuadratureConfig

PAPER_SIGMA = 0.02
PAPER_T = 3500.0
PBAR_2KEV = math.sqrt(2.0 * 2000.0 / 27.211386)
E0_FIG5 = 1.0e7 / 5.14220675e11
FIG_LAMBDA = {1: 30.0, 3: 0.2, 5: 0.007, 7: 2e-4, 2: 3.0, 4: 0.045, 6: 0.002, 8: 4e-5}


def paper_packet(l):
    return PacketParams(sigma=PAPER_SIGMA, pbar=PBAR_2KEV, l=l)


@pytest.fixture(scope="session")
def cfg():
    return QuadratureConfig()


@pytest.fixture(scope="session")
def cfg_tight():
    return QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16)


def gl_grid_3d(n, half, center=(0.0, 0.0, 0.0)):
    """Tensor Gauss-Legendre nodes/weights for brute 3D quadratures."""
    xg, wg = np.polynomial.legendre.leggauss(n)
    axes = [c + xg * half for c in center]
    w = wg * half
    return axes, w
