from importlib import resources

import pytest

from edskit.darboux import InvariantSet, build_projection
from edskit.decomposable import DecomposableSystem
from edskit.specfile import load_system_spec


def fixture_path(name: str) -> str:
    return str(resources.files("edskit") / "fixtures" / f"{name}.eds")


def load(name: str):
    return load_system_spec(fixture_path(name))


def system_of(spec) -> DecomposableSystem:
    return DecomposableSystem(spec.chart, spec.F, spec.G, spec.name)


def projection_of(spec):
    sys_ = system_of(spec)
    return sys_, build_projection(sys_, InvariantSet(tuple(spec.invariants_F), tuple(spec.invariants_G)))


@pytest.fixture(scope="session")
def wave():
    return load("wave")


@pytest.fixture(scope="session")
def liouville():
    return load("liouville")


@pytest.fixture(scope="session")
def goursat():
    return load("goursat_k2")


@pytest.fixture(scope="session")
def sine_gordon():
    return load("sine_gordon")


@pytest.fixture(scope="session")
def affine1():
    return load("affine1")


@pytest.fixture(scope="session")
def heisenberg():
    return load("heisenberg")
