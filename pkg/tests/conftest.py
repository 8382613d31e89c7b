# overall test configuration
import os
import shutil
import tempfile

import numpy as np
import pytest
from loguru import logger

from prgd import problems
from prgd.numerics import RngStream

# the OUTPUT level is registered by cli.setup_logging; api is called directly here
try:
    logger.level("OUTPUT", no=25, color="<white><dim>")
except (TypeError, ValueError):
    pass

data_dir = os.path.join(os.path.dirname(__file__), "data")


def data_file(filename):
    return os.path.join(data_dir, filename)


@pytest.fixture
def out_dir():
    directory = tempfile.mkdtemp(prefix="prgd")
    yield directory
    shutil.rmtree(directory)


@pytest.fixture
def rng():
    return RngStream(0)


@pytest.fixture
def pca31():
    """PCA on A = diag(3, 1): e_1 is the minimiser, e_2 a strict saddle"""
    return problems.PcaProblem(np.diag([3.0, 1.0]))


@pytest.fixture
def saddle02():
    """½xᵀHx with H = diag(−0.2, 1)"""
    return problems.QuadraticSaddle(np.diag([-0.2, 1.0]))
