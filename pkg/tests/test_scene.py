"""Scene loading, prism extrusion and the triangle index."""

import json
import math
from collections import Counter

import numpy as np
import pytest

from midband.core.errors import ConfigError, ParseError, ValidationError
from midband.scene.index import LEAF_SIZE
from midband.scene.schemas import Footprint, MaterialSpec, MeshTriangle, Origin, SceneFile
from midband.scene.store import build_index, check_outdoor, load_scene, scene_from_document
from midband.scene.synthetic import building_height, synthetic_deployment, synthetic_manhattan
from tests.conftest import DATA_DIR, box, make_scene


def _edge_counts(tris: np.ndarray) -> Counter:
    counts = Counter()
    for tri in tris:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            counts[tuple(sorted((tuple(tri[a]), tuple(tri[b]))))] += 1
    return counts


class TestExtrusion:
    """Footprints become walls plus an ear-clipped roof."""

    def test_square_footprint_triangle_count(self):
        """A 10 x 10 m square gives 8 wall triangles and 2 roof triangles."""
        scene = make_scene([box(0, 0, 10, 10, 20.0)])
        assert scene.n_triangles == 10
        assert len(scene.buildings) == 1
        assert np.all(scene.areas > 0)

    def test_concave_footprint_triangle_count(self):
        """An L-shaped footprint: 2 * 6 walls + (6 - 2) roof triangles."""
        l_shape = Footprint(polygon=[(0, 0), (20, 0), (20, 10), (10, 10), (10, 20), (0, 20)], height=15.0)
        scene = make_scene([l_shape])
        assert scene.n_triangles == 16
        roof = scene.triangles[np.all(scene.triangles[:, :, 2] == 15.0, axis=1)]
        assert float(np.sum(0.5 * np.linalg.norm(np.cross(roof[:, 1] - roof[:, 0], roof[:, 2] - roof[:, 0]), axis=1))) == pytest.approx(300.0)

    def test_prism_is_closed_above_ground(self):
        """Every edge off the ground is shared by exactly two triangles; the ground closes the floor."""
        scene = make_scene([box(0, 0, 10, 10, 20.0)])
        for (a, b), n in _edge_counts(scene.triangles).items():
            if a[2] == 0.0 and b[2] == 0.0:
                assert n == 1
            else:
                assert n == 2

    def test_clockwise_polygon_is_reoriented(self):
        cw = Footprint(polygon=[(0, 0), (0, 10), (10, 10), (10, 0)], height=5.0)
        scene = make_scene([cw])
        roof = scene.normals[np.all(scene.triangles[:, :, 2] == 5.0, axis=1)]
        assert np.allclose(roof, [0.0, 0.0, 1.0])

    def test_diffraction_edges(self):
        """Four roof edges and four vertical corners per box."""
        scene = make_scene([box(0, 0, 10, 10, 20.0)])
        assert len(scene.edge_a) == len(scene.edge_b) == 8
        vertical = np.isclose(scene.edge_a[:, 2], 0.0) & np.isclose(scene.edge_b[:, 2], 20.0)
        assert int(vertical.sum()) == 4

    def test_mesh_feature_edges_skip_ground(self):
        """Two faces folded at 90 degrees share one feature edge; flat ground-level seams are ignored."""
        mesh = [
            MeshTriangle(vertices=((0, 0, 0), (10, 0, 0), (10, 0, 10))),
            MeshTriangle(vertices=((0, 0, 0), (10, 0, 10), (0, 0, 10))),
            MeshTriangle(vertices=((0, 0, 10), (10, 0, 10), (10, 10, 10))),
        ]
        scene = make_scene(mesh=mesh)
        assert scene.n_triangles == 3
        assert len(scene.edge_a) == 1
        assert {tuple(scene.edge_a[0]), tuple(scene.edge_b[0])} == {(0.0, 0.0, 10.0), (10.0, 0.0, 10.0)}

    def test_origin_offset_is_applied(self):
        doc = SceneFile(origin=Origin(offset_m=(100.0, -50.0, 0.0)), footprints=[box(0, 0, 10, 10, 5.0)])
        scene = scene_from_document(doc)
        assert scene.bounds_min[:2] == (100.0, -50.0)
        assert scene.bounds_max[:2] == (110.0, -40.0)

    def test_empty_footprints_leave_only_ground(self):
        scene = make_scene([])
        assert scene.n_triangles == 0
        assert scene.ground is not None
        assert scene.ground.name == "concrete"

    def test_default_material_is_concrete(self):
        scene = make_scene([box(0, 0, 10, 10, 20.0)])
        material = scene.material_of(0)
        assert material.relative_permittivity == pytest.approx(5.24)
        assert material.conductivity == pytest.approx(0.0462)


class TestValidation:
    """Bad geometry fails loudly at load."""

    def test_bowtie_polygon_rejected(self):
        bowtie = Footprint(polygon=[(0, 0), (10, 10), (10, 0), (0, 10)], height=10.0)
        with pytest.raises(ValidationError):
            make_scene([bowtie])

    @pytest.mark.parametrize("height", [0.0, -5.0])
    def test_non_positive_height_rejected(self, height):
        with pytest.raises(ValidationError):
            make_scene([box(0, 0, 10, 10, height)])

    def test_too_few_vertices_rejected(self):
        with pytest.raises(ValidationError):
            make_scene([Footprint(polygon=[(0, 0), (10, 0)], height=10.0)])

    def test_unknown_material_rejected(self):
        with pytest.raises(ValidationError):
            make_scene([box(0, 0, 10, 10, 10.0, material="unobtainium")])

    def test_bad_material_parameters_rejected(self):
        doc = SceneFile(materials={"foam": MaterialSpec(relative_permittivity=1.0)}, footprints=[box(0, 0, 1, 1, 1.0, "foam")])
        with pytest.raises(ValidationError):
            scene_from_document(doc)

    def test_degenerate_mesh_triangle_rejected(self):
        with pytest.raises(ValidationError):
            make_scene(mesh=[MeshTriangle(vertices=((0, 0, 0), (1, 1, 1), (2, 2, 2)))])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_scene(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ParseError):
            load_scene(path)

    def test_unknown_field(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text(json.dumps({"buildings": []}), encoding="utf-8")
        with pytest.raises(ParseError):
            load_scene(path)

    def test_loading_twice_is_identical(self):
        path = DATA_DIR / "scenes" / "manhattan_grid.json"
        a = load_scene(path)
        b = load_scene(path)
        assert a.triangles.tobytes() == b.triangles.tobytes()
        assert a.material_ids == b.material_ids


class TestIndex:
    """The BVH answers exactly like brute force."""

    def test_single_triangle_random_rays(self):
        mesh = [MeshTriangle(vertices=((0, 0, 5), (10, 0, 5), (0, 10, 5)))]
        scene = make_scene(mesh=mesh, ground=False)
        rng = np.random.default_rng(11)
        for _ in range(1000):
            origin = rng.uniform(-5, 15, size=3)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            t_fast, _ = scene.first_hit(origin, direction, 1e-9, 100.0)
            t_ref, _ = scene.first_hit_brute(origin, direction, 1e-9, 100.0)
            assert t_fast == pytest.approx(t_ref, abs=1e-9) if math.isfinite(t_ref) else math.isinf(t_fast)

    def test_empty_scene_never_hits(self, free_space):
        rng = np.random.default_rng(5)
        for _ in range(50):
            d = rng.normal(size=3)
            t, idx = free_space.first_hit(rng.uniform(-10, 10, 3), d / np.linalg.norm(d), 0.0, 1e6)
            assert math.isinf(t) and idx == -1

    def test_manhattan_grid_matches_brute_force(self):
        scene = build_index(scene_from_document(synthetic_manhattan()))
        assert len(scene.buildings) >= 100
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            origin = np.array([rng.uniform(0, 1500), rng.uniform(0, 1500), rng.uniform(0, 80)])
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            t_fast, _ = scene.first_hit(origin, direction, 1e-9, 3000.0)
            t_ref, _ = scene.first_hit_brute(origin, direction, 1e-9, 3000.0)
            if math.isfinite(t_ref):
                assert t_fast == pytest.approx(t_ref, abs=1e-6)
            else:
                assert math.isinf(t_fast)

    def test_segment_clear_matches_brute_force(self):
        scene = build_index(scene_from_document(synthetic_manhattan(4, 4)))
        rng = np.random.default_rng(8)
        for _ in range(500):
            a = np.array([rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(0.5, 70)])
            b = np.array([rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(0.5, 70)])
            assert scene.segment_clear(a, b) == scene.segment_clear(a, b, brute=True)

    def test_batched_segments_match_single_queries(self):
        scene = build_index(scene_from_document(synthetic_manhattan()))
        rng = np.random.default_rng(31)
        a = np.column_stack([rng.uniform(0, 1500, 10_000), rng.uniform(0, 1500, 10_000), rng.uniform(0.5, 70, 10_000)])
        b = a + np.column_stack([rng.uniform(-300, 300, (10_000, 2)), rng.uniform(-30, 30, 10_000)])
        batched = scene.segments_clear(a, b)
        single = [scene.segment_clear(p, q, brute=True) for p, q in zip(a, b)]
        assert batched.tolist() == single
        assert 0 < batched.sum() < len(batched)

    def test_batched_segments_broadcast_one_start(self, wall_scene):
        ends = np.array([[100.0, 0.0, 10.0], [0.0, 40.0, 10.0], [0.0, 0.0, 30.0]])
        assert wall_scene.segments_clear([0.0, 0.0, 10.0], ends).tolist() == [False, True, True]

    def test_node_count_describes_a_full_binary_tree(self):
        scene = build_index(scene_from_document(synthetic_manhattan(4, 4)))
        bvh = scene.accel
        leaves = [i for i in range(bvh.n_nodes) if bvh.left[i] < 0]
        assert bvh.n_nodes == 2 * len(leaves) - 1
        assert sorted(int(t) for i in leaves for t in bvh.order[bvh.start[i]: bvh.start[i] + bvh.count[i]]) == list(
            range(scene.n_triangles)
        )
        assert all(bvh.count[i] <= LEAF_SIZE for i in leaves)


class TestBuildings:
    def test_inside_buildings_mask(self):
        scene = make_scene([box(0, 0, 10, 10, 20.0)])
        inside = scene.inside_buildings(np.array([5.0, 15.0, 5.0]), np.array([5.0, 5.0, 5.0]), 1.5)
        assert inside.tolist() == [True, False, True]
        assert not scene.inside_buildings(np.array([5.0]), np.array([5.0]), 25.0)[0]


class TestSynthetic:
    """The bundled scenario is exactly what the generators produce."""

    def test_generator_dimensions(self):
        doc = synthetic_manhattan()
        assert len(doc.footprints) == 144
        assert doc.extent.max == (1500.0, 1500.0)
        heights = {fp.height for fp in doc.footprints}
        assert min(heights) == 15.0 and max(heights) == 60.0

    def test_bundled_scene_matches_generator(self):
        scene = load_scene(DATA_DIR / "scenes" / "manhattan_grid.json")
        assert scene.n_triangles == 1440
        expected = [building_height(i, j) for i in range(12) for j in range(12)]
        assert [b.height for b in scene.buildings] == expected

    def test_bundled_deployment_matches_generator(self):
        bundled = json.loads((DATA_DIR / "deployments" / "manhattan_50.json").read_text(encoding="utf-8"))
        generated = synthetic_deployment(50)
        assert [g["id"] for g in bundled["gnbs"]] == [g["id"] for g in generated["gnbs"]]
        for got, want in zip(bundled["gnbs"], generated["gnbs"]):
            assert got["position"] == pytest.approx(want["position"])
            assert got["azimuth_deg"] == pytest.approx(want["azimuth_deg"])

    def test_too_many_gnbs(self):
        with pytest.raises(ValueError):
            synthetic_deployment(200)


class TestCheckOutdoor:
    @pytest.fixture
    def block(self):
        return make_scene([box(-10.0, -10.0, 10.0, 10.0, 20.0)], extent=100.0)

    @pytest.mark.parametrize("position", [(50.0, 50.0, 1.5), (0.0, 0.0, 25.0), (100.0, -100.0, 0.0)])
    def test_accepts_open_air(self, block, position):
        check_outdoor(block, position)

    @pytest.mark.parametrize(
        "position, message",
        [
            ((0.0, 0.0, 10.0), "inside a building"),
            ((150.0, 0.0, 10.0), "outside the scene bounds"),
            ((50.0, 50.0, -1.0), "outside the scene bounds"),
            ((50.0, float("nan"), 1.5), "finite"),
            ((50.0, 50.0), "finite"),
        ],
    )
    def test_rejects(self, block, position, message):
        with pytest.raises(ConfigError, match=message):
            check_outdoor(block, position, "incumbent")
