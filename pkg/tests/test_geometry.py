from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracdim.geometry import (
    AffineSubspace,
    BoxUnion,
    GeometryError,
    PointCloud,
    PointFamily,
    PointSet,
    RegionSpec,
    default_covering_constant,
    distance_to_region,
    distances_to_region,
    load_csv,
    product_factors,
    rescale_to_unit_cube,
    save_csv,
)

SEGMENT = AffineSubspace.coordinate_plane(2, [0])


def test_pointset_shape_and_readonly():
    ps = PointSet([0.0, 0.5, 1.0])
    assert ps.n == 3 and ps.dim == 1
    assert ps.points.shape == (3, 1)
    with pytest.raises(ValueError):
        ps.points[0, 0] = 2.0


@pytest.mark.parametrize("bad", [[[0.0, np.nan]], [[np.inf, 1.0]], np.zeros((0, 2))])
def test_pointset_rejects_bad_input(bad):
    with pytest.raises(GeometryError):
        PointSet(bad)


def test_content_hash_tracks_values_and_shape():
    a = PointSet([[0.0, 1.0], [2.0, 3.0]])
    assert a.content_hash == PointSet([[0.0, 1.0], [2.0, 3.0]]).content_hash
    assert a.content_hash != PointSet([[0.0, 1.0, 2.0, 3.0]]).content_hash
    assert a.content_hash != PointSet([[2.0, 3.0], [0.0, 1.0]]).content_hash
    assert a == PointSet([[0.0, 1.0], [2.0, 3.0]])


def test_duplicates_and_unique_keep_first_occurrence():
    ps = PointSet([[1, 1], [0, 0], [1, 1], [2, 2], [0, 0]])
    assert ps.duplicates() == [(0, 2), (1, 4)]
    assert ps.unique().points.tolist() == [[1, 1], [0, 0], [2, 2]]
    assert PointSet([[0, 1], [1, 0]]).duplicates() == []


def test_family_validation():
    a, b = PointSet([0.0, 1.0]), PointSet([0.0, 0.5, 1.0])
    fam = PointFamily((a, b))
    assert fam.sizes == [2, 3] and fam.dim == 1
    with pytest.raises(GeometryError):
        PointFamily((b, a))
    with pytest.raises(GeometryError):
        PointFamily((a, PointSet([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])))
    with pytest.raises(GeometryError):
        PointFamily(())


@pytest.mark.parametrize(
    "p, expected",
    [((0.5, 0.5), 0.5), ((0.25, 0.0), 0.0), ((2.0, 0.0), 1.0), ((-3.0, 4.0), 5.0)],
)
def test_distance_to_segment(p, expected):
    assert distance_to_region(p, SEGMENT) == pytest.approx(expected, abs=1e-15)


def test_distance_to_boxes_and_cloud():
    boxes = BoxUnion([[0, 0], [2, 2]], [[1, 1], [3, 3]])
    assert distance_to_region((0.5, 0.5), boxes) == 0.0
    assert distance_to_region((1.5, 1.5), boxes) == pytest.approx(math.sqrt(0.5))
    cloud = PointCloud(PointSet([[0, 0], [1, 0]]))
    assert distance_to_region((1, 0), cloud) == 0.0
    assert distance_to_region((0.5, 1), cloud) == pytest.approx(math.sqrt(1.25))


def test_distance_dimension_mismatch():
    with pytest.raises(GeometryError):
        distance_to_region((0.0, 0.0, 0.0), SEGMENT)


def test_cloud_distance_matches_brute_force_over_chunks():
    rng = np.random.default_rng(3)
    cloud = rng.random((9000, 2))
    pts = rng.random((50, 2))
    got = distances_to_region(pts, PointCloud(PointSet(cloud)))
    want = np.sqrt(((pts[:, None, :] - cloud[None]) ** 2).sum(-1)).min(1)
    np.testing.assert_array_equal(got, want)


coords = st.floats(-3, 3, allow_nan=False)


@given(st.tuples(coords, coords, coords), st.tuples(coords, coords, coords))
def test_distance_is_1_lipschitz(p, q):
    plane = AffineSubspace([0.1, 0.2, 0.3], [[1 / math.sqrt(2), 1 / math.sqrt(2), 0], [0, 0, 1]], [-1, 0], [1, 0.5])
    boxes = BoxUnion([[0, 0, 0], [1, -1, 2]], [[0.5, 0.5, 0.5], [2, 0, 2.5]])
    gap = math.dist(p, q)
    for shape in (plane, boxes):
        assert abs(distance_to_region(p, shape) - distance_to_region(q, shape)) <= gap + 1e-12
        assert distance_to_region(p, shape) >= 0


@given(st.floats(-1, 2), st.floats(-1, 2))
def test_point_on_plane_has_zero_distance(t, u):
    plane = AffineSubspace([0.5, 0.5, 0.5], [[0.6, 0.8, 0], [0, 0, 1]], [-1, -1], [2, 2])
    p = plane.base + t * plane.directions[0] + u * plane.directions[1]
    assert distance_to_region(p, plane) <= 1e-12


def test_affine_requires_orthonormal_directions():
    with pytest.raises(GeometryError):
        AffineSubspace([0, 0], [[1, 1]], [0], [1])
    with pytest.raises(GeometryError):
        AffineSubspace([0, 0], [[1, 0]], [1], [0])


def test_region_spec_validation_and_default_constant():
    assert default_covering_constant(1) == 2.0
    assert default_covering_constant(2) == pytest.approx(8.0, rel=1e-15)
    assert default_covering_constant(0.5) == pytest.approx(1.189207115002721, rel=1e-14)
    assert RegionSpec(SEGMENT, 1).covering_constant == 2.0
    with pytest.raises(GeometryError):
        RegionSpec(SEGMENT, 2)  # rank 1 subspace with k=2
    with pytest.raises(GeometryError):
        RegionSpec(SEGMENT, 0)
    with pytest.raises(GeometryError):
        RegionSpec(SEGMENT, 1, -1.0)
    with pytest.raises(GeometryError):
        default_covering_constant(0)
    # fractional k does not pin the rank
    assert RegionSpec(SEGMENT, 0.63).k == 0.63


@pytest.mark.parametrize(
    "region",
    [
        RegionSpec(SEGMENT, 1, 3.5),
        RegionSpec(BoxUnion([[0, 0]], [[1, 1]]), 2),
        RegionSpec(PointCloud(PointSet([[0, 0], [1, 1]])), 0.5),
    ],
)
def test_region_json_round_trip(region):
    back = RegionSpec.from_json(region.to_json())
    assert back.to_json() == region.to_json()


def test_region_json_errors():
    with pytest.raises(GeometryError):
        RegionSpec.from_json({"shape": {"kind": "sphere"}, "k": 1})
    with pytest.raises(GeometryError):
        RegionSpec.from_json({"k": 1})


def test_rescale_examples():
    out, amap = rescale_to_unit_cube(PointSet([[0, 0], [2, 0]]))
    assert out.points.tolist() == [[0, 0], [1, 0]]
    assert amap.scale == 0.5
    out, amap = rescale_to_unit_cube(PointSet([[1, 1], [3, 5]]))
    assert amap.scale == 0.25
    assert out.points.tolist() == [[0, 0], [0.5, 1]]
    np.testing.assert_allclose(amap.invert(out.points), [[1, 1], [3, 5]])
    unit = PointSet([[0, 0.5], [1, 0.7], [0.3, 0]])
    assert rescale_to_unit_cube(unit)[0] == unit
    with pytest.raises(GeometryError):
        rescale_to_unit_cube(PointSet([[1, 1], [1, 1]]))


@given(arrays(np.float64, (6, 3), elements=st.floats(-100, 100)))
def test_rescale_preserves_distance_ratios(pts):
    ps = PointSet(pts)
    lo, hi = ps.bounding_box()
    if np.max(hi - lo) < 1e-6:
        return
    out, amap = rescale_to_unit_cube(ps)
    assert out.points.min() >= 0 and out.points.max() <= 1
    d_in = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    d_out = np.linalg.norm(out.points[:, None] - out.points[None], axis=-1)
    np.testing.assert_allclose(d_out, d_in * amap.scale, rtol=1e-12, atol=1e-12 * d_in.max() * amap.scale)


def test_product_factors():
    grid = PointSet([[x, y] for x in (0, 1, 2) for y in (0, 5)])
    axes = product_factors(grid)
    assert [a.tolist() for a in axes] == [[0, 1, 2], [0, 5]]
    assert product_factors(PointSet([[0, 0], [1, 1]])) is None


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    ps = PointSet(rng.random((20, 3)) * 1e-7)
    path = tmp_path / "p.csv"
    save_csv(ps, path, header="x,y,z")
    assert load_csv(path) == ps


@pytest.mark.parametrize(
    "text",
    ["", "# only header\n", "0,1\n1\n", "0,abc\n", "0,1\n# late header\n"],
)
def test_csv_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(GeometryError):
        load_csv(path)
