import pytest

from escnav import NavFunction, load_bundled_scenario


@pytest.fixture(scope="session")
def reference_scenario():
    """Bundled static five-obstacle scenario used throughout the suite."""
    return load_bundled_scenario("particle_static")


@pytest.fixture(scope="session")
def reference_world(reference_scenario):
    return reference_scenario.world


@pytest.fixture(scope="session")
def reference_nav(reference_scenario):
    """Order-6 potential with every obstacle known."""
    return NavFunction(
        world=reference_scenario.world,
        source=reference_scenario.source,
        k=6,
        known_ids=reference_scenario.world.obstacle_ids,
    )
