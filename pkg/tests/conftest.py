"""Shared fixtures; puts src/ on the import path"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(__file__)), "src"))

import pytest

from isoprofile.kernels import CurvatureParams


@pytest.fixture
def flat():
    """K=0, N=2, D=1: the closed-form reference case"""
    return CurvatureParams(K=0.0, N=2.0, D=1.0)


@pytest.fixture(params=[(-1.0, 2.0, 1.0), (0.0, 2.0, 1.0), (1.0, 2.0, 1.0), (2.0, 3.0, 2.0)],
                ids=["negative", "flat", "positive", "positive-N3"])
def curvature(request):
    K, N, D = request.param
    return CurvatureParams(K=K, N=N, D=D)
