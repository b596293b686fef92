"""Shared fixtures.

The assembled drive chain and the gang set are session-scoped because
six_gangs expands a common denominator once and every test that needs
them reads, never mutates.
"""

import math

import numpy as np
import pytest

from loopsmith import (
    ActuatorParams,
    DriveConfig,
    assemble_drive,
    electrical_tf,
    six_gangs,
)

F_S = 160e3
T_S = 1.0 / F_S
OMEGA_N = 2.0 * math.pi * 500.0
ZETA = 0.8


@pytest.fixture(scope="session")
def params() -> ActuatorParams:
    return ActuatorParams()


@pytest.fixture(scope="session")
def drive_config() -> DriveConfig:
    return DriveConfig()


@pytest.fixture(scope="session")
def blocks(params, drive_config):
    return assemble_drive(drive_config, electrical_tf(params))


@pytest.fixture(scope="session")
def gangs(blocks):
    return six_gangs(blocks)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)
