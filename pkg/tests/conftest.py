import numpy as np
import pytest

from isopar import femcore, geometry as geo, isogeom, meshgen


@pytest.fixture(scope="session")
def domains():
    return {name: geo.get_domain(name) for name in geo.DOMAIN_NAMES}


@pytest.fixture(scope="session")
def mesh_cache(domains):
    cache = {}

    def get(name, h):
        key = (name, h)
        if key not in cache:
            cache[key] = meshgen.generate(domains[name].polygon, h)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def space_cache(mesh_cache):
    cache = {}

    def get(name, h, r):
        key = (name, h, r)
        if key not in cache:
            mesh = mesh_cache(name, h)
            _, elems = isogeom.elevate(mesh, r)
            cache[key] = femcore.build_space(mesh, elems, r)
        return cache[key]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
