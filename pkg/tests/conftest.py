import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.spatial.transform import Rotation

from catpose_eval.geometry import RigidTransform
from catpose_eval.sampling import TriMesh

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_pose(rng, spread=1.0):
    r = Rotation.random(random_state=rng).as_matrix()
    return RigidTransform.from_matrix(r, rng.uniform(-spread, spread, size=3))


def cube_mesh(side=1.0, center=(0.0, 0.0, 0.0)):
    from catpose_eval.datasets.fixtures import box_mesh

    m = box_mesh((side, side, side))
    return TriMesh(m.vertices + np.asarray(center, dtype=float), m.triangles)


def brute_nn(points, queries):
    d = np.sqrt(((queries[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    return d.argmin(axis=1), d.min(axis=1)


def sphere_points(n, radius, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n, 3))
    return radius * g / np.linalg.norm(g, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])
