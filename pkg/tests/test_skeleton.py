import numpy as np
import pytest

from skelmotion.errors import DataError, ShapeError
from skelmotion.numerics import Tensor
from skelmotion.skeleton import (
    Group,
    Joint,
    PartitionScheme,
    SkeletonSpec,
    build_partition,
    gather,
    parse_skeleton_file,
    scatter,
    scheme_from_spec,
    write_skeleton_file,
)
from skelmotion.synthetic import default_skeleton


def toy_spec():
    joints = tuple(
        Joint(name, 3 * i, 3)
        for i, name in enumerate(["a", "b", "c", "d", "e"])
    )
    return SkeletonSpec(joints)


FIVE = {"a": "upper_left_arm", "b": "upper_right_arm", "c": "lower_left_leg",
        "d": "lower_right_leg", "e": "torso"}


def test_one_joint_per_group():
    scheme = build_partition(toy_spec(), FIVE, "five_part")
    assert scheme.group_sizes() == [3, 3, 3, 3, 3]
    for g, joint in zip(scheme.groups, "abcde"):
        start = 3 * "abcde".index(joint)
        assert g.indices == tuple(range(start, start + 3))


def test_unassigned_joint_is_named_in_error():
    bad = dict(FIVE)
    del bad["c"]
    with pytest.raises(DataError, match="'c'"):
        build_partition(toy_spec(), bad, "five_part")


def test_group_count_enforced_per_scheme():
    with pytest.raises(DataError):
        build_partition(toy_spec(), {k: "one" for k in FIVE}, "five_part")


def test_group_sizes_sum_to_retained_width():
    spec = default_skeleton()
    scheme = scheme_from_spec(spec, "five_part")
    assert sum(scheme.group_sizes()) == spec.total_dim == scheme.width


def test_retained_subset_reindexes_compactly():
    spec = toy_spec()
    retained = [i for i in range(15) if i not in (4, 10, 11)]
    scheme = build_partition(spec, FIVE, "five_part", retained)
    assert scheme.width == 12
    flat = sorted(i for g in scheme.groups for i in g.indices)
    assert flat == list(range(12))


def test_disjoint_cover_invariant_all_schemes():
    spec = default_skeleton()
    for name in ("five_part", "lr_three", "ud_three", "whole"):
        scheme = scheme_from_spec(spec, name)
        flat = sorted(i for g in scheme.groups for i in g.indices)
        assert flat == list(range(spec.total_dim))


def test_three_group_schemes_are_coarsenings_of_five_part():
    spec = default_skeleton()
    five = {g.name: set(g.indices) for g in scheme_from_spec(spec, "five_part").groups}
    lr = {g.name: set(g.indices) for g in scheme_from_spec(spec, "lr_three").groups}
    ud = {g.name: set(g.indices) for g in scheme_from_spec(spec, "ud_three").groups}
    assert lr["left"] == five["upper_left_arm"] | five["lower_left_leg"]
    assert lr["right"] == five["upper_right_arm"] | five["lower_right_leg"]
    assert ud["arms"] == five["upper_left_arm"] | five["upper_right_arm"]
    assert ud["legs"] == five["lower_left_leg"] | five["lower_right_leg"]
    assert lr["torso"] == ud["torso"] == five["torso"]


def test_scatter_gather_bit_identical_round_trip():
    spec = default_skeleton()
    rng = np.random.default_rng(0)
    frame = Tensor(rng.normal(size=(4, spec.total_dim)))
    for name in ("five_part", "lr_three", "ud_three", "whole"):
        scheme = scheme_from_spec(spec, name)
        parts = scatter(frame, scheme)
        assert [p.shape[1] for p in parts] == scheme.group_sizes()
        back = gather(parts, scheme)
        assert np.array_equal(back.data, frame.data)
        assert back.data.tobytes() == frame.data.tobytes()


def test_whole_scheme_scatter_is_identity_permutation():
    spec = default_skeleton()
    scheme = scheme_from_spec(spec, "whole")
    frame = Tensor(np.arange(spec.total_dim, dtype=float)[None, :])
    (part,) = scatter(frame, scheme)
    assert np.array_equal(part.data, frame.data)


def test_synthetic_five_part_group_widths():
    spec = default_skeleton()
    scheme = scheme_from_spec(spec, "five_part")
    sizes = dict(zip([g.name for g in scheme.groups], scheme.group_sizes()))
    assert sizes == {
        "torso": 9,
        "upper_left_arm": 6,
        "upper_right_arm": 6,
        "lower_left_leg": 6,
        "lower_right_leg": 6,
    }


def test_scatter_width_mismatch():
    scheme = scheme_from_spec(default_skeleton(), "five_part")
    with pytest.raises(ShapeError):
        scatter(Tensor(np.zeros((2, 5))), scheme)


def test_spec_rejects_gaps_and_overlaps():
    with pytest.raises(DataError):
        SkeletonSpec((Joint("a", 0, 3), Joint("b", 4, 3)))  # gap
    with pytest.raises(DataError):
        SkeletonSpec((Joint("a", 0, 3), Joint("b", 2, 3)))  # overlap


def test_partition_scheme_rejects_overlap_and_holes():
    with pytest.raises(DataError):
        PartitionScheme("whole", (Group("g", (0, 1, 1)),))
    with pytest.raises(DataError):
        PartitionScheme("whole", (Group("g", (0, 2)),))


class TestSkeletonFile:
    def test_round_trip(self, tmp_path):
        spec = default_skeleton()
        path = tmp_path / "skeleton.txt"
        write_skeleton_file(spec, path)
        again = parse_skeleton_file(path)
        assert again.joints == spec.joints
        assert again.group_maps == spec.group_maps

    def test_parser_reports_line_numbers(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("joint a 0 3\njoint b 5 3\n")
        with pytest.raises(DataError, match=":2"):
            parse_skeleton_file(path)
        path.write_text("joint a 0 3\njoint b 2 3\n")
        with pytest.raises(DataError, match=":2"):
            parse_skeleton_file(path)

    def test_parser_rejects_duplicate_group_assignment(self, tmp_path):
        path = tmp_path / "dup.txt"
        path.write_text(
            "joint a 0 3\njoint b 3 3\n"
            "group s g1 a b\ngroup s g2 a\n"
        )
        with pytest.raises(DataError, match="already assigned"):
            parse_skeleton_file(path)

    def test_parser_rejects_unknown_joint_in_group(self, tmp_path):
        path = tmp_path / "unk.txt"
        path.write_text("joint a 0 3\ngroup s g1 a zz\n")
        with pytest.raises(DataError, match="zz"):
            parse_skeleton_file(path)

    def test_global_flag_parsed(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("joint root 0 3 global\njoint a 3 3\n")
        spec = parse_skeleton_file(path)
        assert spec.joints[0].is_global and not spec.joints[1].is_global
        assert spec.global_indices == (0, 1, 2)
