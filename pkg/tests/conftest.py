from functools import lru_cache
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from heatkernel.grassmann import GrPoint, baker, dual_wave, krichever_operator, load_grpoint
from heatkernel.hadamard import had_from_resolvent
from heatkernel.resolvent import res_exact

settings.register_profile(
    "default",
    deadline=None,
    max_examples=100,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"
EX71_TAU = "s1^2/2 + s2"


@lru_cache(maxsize=None)
def ex71_wave():
    return baker(GrPoint.from_tau(EX71_TAU), keep_params=True)


@lru_cache(maxsize=None)
def ex71_operator(N: int = 3):
    return krichever_operator(ex71_wave(), N).differential


@lru_cache(maxsize=None)
def ex71_resolvent():
    return res_exact(ex71_wave())


@lru_cache(maxsize=None)
def ex71_hadamard(N: int = 3, kappa: int = 1):
    return had_from_resolvent(ex71_resolvent(), N, kappa)


@lru_cache(maxsize=None)
def ex71_dual_wave():
    return dual_wave(ex71_wave())


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def ex71_point():
    return load_grpoint(DATA / "ex71.gr")
