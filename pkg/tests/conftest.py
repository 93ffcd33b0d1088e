from __future__ import annotations

import numpy as np
import pytest

from cocstab import (
    CircleRotation,
    CocycleHandle,
    FullShift,
    Generator,
    SubshiftOfFiniteType,
    Suspension,
)

DIAG_MATRICES = [np.diag([0.9, 0.2]), np.diag([0.3, 0.8])]
# closed form for the diagonal Bernoulli(1/2,1/2) fixture:
# max over coordinates of the average per-symbol log entry
DIAG_EXPONENT = max(
    0.5 * (np.log(0.9) + np.log(0.3)),
    0.5 * (np.log(0.2) + np.log(0.8)),
)


@pytest.fixture(scope="session")
def bernoulli_half() -> FullShift:
    return FullShift(2, (0.5, 0.5))


@pytest.fixture(scope="session")
def no_11_sft() -> SubshiftOfFiniteType:
    return SubshiftOfFiniteType.from_matrix([[1, 1], [1, 0]])


@pytest.fixture(scope="session")
def diagonal_handle(bernoulli_half) -> CocycleHandle:
    return CocycleHandle(bernoulli_half, Generator.per_symbol(DIAG_MATRICES))


@pytest.fixture(scope="session")
def constant_half_handle(bernoulli_half) -> CocycleHandle:
    return CocycleHandle(bernoulli_half, Generator.constant([[0.5]]))


@pytest.fixture(scope="session")
def rotation_tenth() -> CircleRotation:
    return CircleRotation.from_string("0.1")


@pytest.fixture(scope="session")
def unit_suspension(rotation_tenth) -> Suspension:
    return Suspension(rotation_tenth, 1.0)


@pytest.fixture(scope="session")
def decay_flow_handle(unit_suspension) -> CocycleHandle:
    """Scalar field g = -1 over the unit-roof rotation suspension."""
    return CocycleHandle(
        unit_suspension, Generator.constant([[-1.0]]), time_kind="continuous", step_h=1e-3
    )


@pytest.fixture(scope="session")
def cosine_flow_handle(unit_suspension) -> CocycleHandle:
    """Scalar field g(q) = -1 + 0.5 cos(2 pi q) over the rotation suspension."""
    return CocycleHandle(
        unit_suspension,
        Generator.closed_form([["-1+0.5*cos(2*pi*q)"]]),
        time_kind="continuous",
        step_h=1e-3,
    )
