import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from poststall.environment import (
    HallwaySpec,
    build_field,
    corner_map,
    corridor,
    distance_transform,
    load_map,
    segment_clear,
)
from poststall.errors import BoundaryError, ConfigError, EmptyWorld


@pytest.fixture(scope="module")
def straight():
    return build_field(corridor(length=6.0, width=1.75, height=3.0))


@pytest.fixture(scope="module")
def hallway():
    return build_field(load_map())


def brute_force_edt(occ, res):
    occupied = np.argwhere(occ).astype(float)
    out = np.zeros(occ.shape)
    for idx in np.argwhere(~occ):
        out[tuple(idx)] = np.sqrt(((occupied - idx) ** 2).sum(axis=1)).min() * res
    return out


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_distance_transform_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    occ = rng.random((20, 20, 20)) < 0.03
    occ[0, 0, 0] = True
    d = distance_transform(occ, 0.1, d_max=np.inf)
    assert np.array_equal(d[occ], np.zeros(occ.sum()))
    np.testing.assert_allclose(d, brute_force_edt(occ, 0.1), rtol=0, atol=1e-12)


def test_centerline_distance_is_half_width(straight):
    d = straight.min_distance([3.0, 0.875, -1.5])
    assert abs(d - 0.875) <= straight.resolution


def test_wall_and_outside_queries(straight):
    assert straight.min_distance([3.0, -0.2, -1.5]) == 0.0
    assert straight.min_distance([3.0, 0.875, 5.0]) == 0.0
    assert straight.min_distance([-10.0, 0.875, -1.5]) == 0.0


def test_occupied_voxel_center_is_zero(straight):
    i, j, k = np.argwhere(straight.occupancy)[10]
    c = [straight.centers(0)[i], straight.centers(1)[j], straight.centers(2)[k]]
    assert straight.min_distance(c) == 0.0


def test_empty_world():
    spec = HallwaySpec(segments=[], width=1.0, height=1.0, goal=(0, 0, 0), start=(0, 0, 0, 0, 1))
    with pytest.raises(EmptyWorld):
        build_field(spec)
    with pytest.raises(EmptyWorld):
        distance_transform(np.ones((4, 4, 4), bool), 0.1)


def test_hallway_spec_validation():
    with pytest.raises(ConfigError):
        HallwaySpec(segments=[(0, 0, 0, 1, 1, 1), (5, 5, 5, 6, 6, 6)], width=1, height=1,
                    goal=(0, 0, 0), start=(0, 0, 0, 0, 1))
    with pytest.raises(ConfigError):
        HallwaySpec(segments=[(0, 0, 0, 1, 1, 1)], width=-1, height=1, goal=(0, 0, 0), start=(0, 0, 0, 0, 1))


def test_map_round_trip(tmp_path):
    spec = load_map()
    path = tmp_path / "m.map"
    path.write_text(yaml.safe_dump(spec.to_dict()))
    assert load_map(path) == spec


def test_gradient_symmetric_centerline(straight):
    g = straight.distance_gradient([3.0, 0.875, -1.5])
    assert abs(g[1]) < 1e-9


def test_gradient_points_away_from_wall(straight):
    # 0.3 m from the y = 0 wall, far from the others
    g = straight.distance_gradient([3.0, 0.3, -1.5])
    assert g[1] > 0
    assert np.linalg.norm(g) == pytest.approx(1.0, abs=0.1)


def test_gradient_near_edge_raises(straight):
    with pytest.raises(BoundaryError):
        straight.distance_gradient(straight.origin + 0.01)


def test_gradient_matches_finite_difference(hallway):
    rng = np.random.default_rng(3)
    h = hallway.gradient_step()
    pts = []
    while len(pts) < 100:
        p = rng.uniform(hallway.origin + 0.1, hallway.upper - 0.1)
        if hallway.min_distance(p) > 0:
            pts.append(p)
    err = 0.0
    for p in pts:
        g = hallway.distance_gradient(p)
        fd = [(hallway.min_distance(p + e) - hallway.min_distance(p - e)) / (2 * h) for e in np.eye(3) * h]
        err = max(err, np.abs(g - fd).max())
    assert err < 1e-6


def test_gradient_norm_bounded(hallway):
    rng = np.random.default_rng(4)
    norms = []
    for p in rng.uniform(hallway.origin + 0.2, hallway.upper - 0.2, size=(200, 3)):
        if hallway.min_distance(p) > hallway.resolution:
            norms.append(np.linalg.norm(hallway.distance_gradient(p)))
    assert max(norms) <= 1 + hallway.resolution


def test_wall_gradient_pushes_out(hallway):
    g = hallway.distance_gradient([2.0, 2.1, -1.5])
    assert g[1] < 0  # nearer the y = 1.75 face


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_interpolation_containment(a, b, c):
    field = build_field(corner_map())
    p = field.origin + field.resolution * (np.array([30.5, 20.5, 30.5]) + [a, b, c])
    i, j, k = np.floor((p - field.origin) / field.resolution - 0.5).astype(int)
    cube = field.distance[i : i + 2, j : j + 2, k : k + 2]
    d = field.min_distance(p)
    assert cube.min() - 1e-12 <= d <= cube.max() + 1e-12


def test_distance_field_lipschitz(hallway):
    d = hallway.distance
    res = hallway.resolution
    for axis in range(3):
        assert np.abs(np.diff(d, axis=axis)).max() <= res + 1e-12


def test_conservativeness(hallway):
    rng = np.random.default_rng(5)
    r = 0.55
    occ = np.argwhere(hallway.occupancy)
    occ_centres = hallway.origin + (occ + 0.5) * hallway.resolution
    # only walls near the corridor matter; sample points in the first leg
    near = occ_centres[(occ_centres[:, 0] < 3.5) & (occ_centres[:, 1] < 2.5)]
    for p in rng.uniform([0.5, 0.0, -2.8], [3.0, 1.75, -0.2], size=(200, 3)):
        if hallway.min_distance(p) >= r + hallway.resolution * np.sqrt(3):
            # true distance to the occupied voxel cubes, not their centres
            gap = np.maximum(np.abs(near - p) - hallway.resolution / 2, 0.0)
            assert np.sqrt((gap**2).sum(axis=1)).min() >= r


def test_segment_clear(straight):
    assert segment_clear(straight, [1, 0.875, -1.5], [5, 0.875, -1.5], 0.55)
    assert not segment_clear(straight, [1, 0.875, -1.5], [5, 0.2, -1.5], 0.55)


def test_slice_csv(tmp_path, straight):
    path = tmp_path / "slice.csv"
    straight.slice_csv(path, -1.5)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,occupied,distance"
    assert len(lines) == 1 + straight.dims[0] * straight.dims[1]
