from __future__ import annotations

import numpy as np
import pytest

from vcmlab import AgentKind, AgentSpec, RunSpec, SessionConfig, Treatment
from vcmlab.game import GroupAssignment


@pytest.fixture
def config() -> SessionConfig:
    return SessionConfig()


@pytest.fixture
def session_config() -> SessionConfig:
    return SessionConfig(treatment=Treatment.SESSION)


@pytest.fixture
def blocks_assignment() -> GroupAssignment:
    """Subjects 0-3, 4-7, 8-11 in three fixed groups."""
    return GroupAssignment.from_groups(1, [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]])


@pytest.fixture
def free_rider_spec(config) -> RunSpec:
    return RunSpec(
        config=config,
        roster=tuple([AgentSpec(kind=AgentKind.FREE_RIDER)] * 12),
        seed=11,
        label="fr",
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)
