import numpy as np
import pytest
from loguru import logger

from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.models.rpareto import BrownResnickField
from pareto_pipe.models.variogram import VariogramModel


@pytest.fixture
def grid_sites():
    """3 x 3 grid with unit spacing, ids s0..s8."""
    return SiteSet.grid(3, 3, 1.0)


@pytest.fixture
def pair_sites():
    """Two sites one length unit apart."""
    return SiteSet(("a", "b"), np.array([[0.0, 0.0], [1.0, 0.0]]))


@pytest.fixture
def power_model():
    return VariogramModel(family="power", beta=1.0, alpha=1.0)


@pytest.fixture
def grid_field(grid_sites, power_model):
    return BrownResnickField(power_model, grid_sites)


@pytest.fixture
def log_messages():
    """Collects loguru messages emitted during a test."""
    messages = []
    handler_id = logger.add(lambda m: messages.append(str(m)), level="DEBUG")
    yield messages
    logger.remove(handler_id)
