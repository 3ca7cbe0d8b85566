"""Skeleton declaration and partitioning of the feature vector into
body-component groups.

Joint layout and group membership come from a line-oriented description
file rather than hard-coded indices, since joint orders differ per dataset:

    joint <name> <start> <len> [global]
    group <scheme> <group-name> <joint> <joint> ...

Canonical scheme names are five_part (5 groups), lr_three / ud_three
(3 groups) and whole (1 group).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError
from .numerics import Tensor, concat, take_columns

SCHEME_GROUP_COUNTS = {"five_part": 5, "lr_three": 3, "ud_three": 3, "whole": 1}


@dataclass(frozen=True)
class Joint:
    name: str
    start: int
    length: int
    is_global: bool = False

    @property
    def indices(self):
        return tuple(range(self.start, self.start + self.length))


@dataclass(frozen=True)
class SkeletonSpec:
    joints: tuple
    euler_convention: str = "zyx"
    # scheme name -> {group name -> [joint names]}, as declared in the file
    group_maps: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        seen = set()
        cursor = 0
        for joint in self.joints:
            if joint.name in seen:
                raise DataError(f"duplicate joint name {joint.name!r}")
            seen.add(joint.name)
            if joint.start != cursor:
                raise DataError(
                    f"joint {joint.name!r} starts at {joint.start}, expected {cursor} "
                    "(spans must be contiguous and non-overlapping)"
                )
            if joint.length <= 0:
                raise DataError(f"joint {joint.name!r} has non-positive span")
            cursor += joint.length

    @property
    def total_dim(self):
        last = self.joints[-1]
        return last.start + last.length

    def joint(self, name):
        for j in self.joints:
            if j.name == name:
                return j
        raise KeyError(name)

    @property
    def global_indices(self):
        out = []
        for j in self.joints:
            if j.is_global:
                out.extend(j.indices)
        return tuple(out)


@dataclass(frozen=True)
class Group:
    name: str
    indices: tuple  # positions in the (possibly compacted) frame vector


@dataclass(frozen=True)
class PartitionScheme:
    name: str
    groups: tuple

    def __post_init__(self):
        expected = SCHEME_GROUP_COUNTS.get(self.name)
        if expected is not None and len(self.groups) != expected:
            raise DataError(
                f"scheme {self.name!r} must have {expected} groups, "
                f"got {len(self.groups)}"
            )
        seen = set()
        for g in self.groups:
            if not g.indices:
                raise DataError(f"group {g.name!r} is empty")
            if len(set(g.indices)) != len(g.indices):
                raise DataError(f"group {g.name!r} lists a dimension twice")
            overlap = seen.intersection(g.indices)
            if overlap:
                raise DataError(
                    f"group {g.name!r} overlaps earlier groups at {sorted(overlap)}"
                )
            seen.update(g.indices)
        if seen != set(range(len(seen))) or (seen and max(seen) != len(seen) - 1):
            raise DataError("groups do not cover 0..width-1 exactly")

    @property
    def width(self):
        return sum(len(g.indices) for g in self.groups)

    @property
    def permutation(self):
        """Concatenation order of all group indices."""
        perm = []
        for g in self.groups:
            perm.extend(g.indices)
        return np.asarray(perm, dtype=np.intp)

    @property
    def inverse_permutation(self):
        perm = self.permutation
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        return inv

    def group_sizes(self):
        return [len(g.indices) for g in self.groups]


def build_partition(spec, group_map, scheme_name, retained=None):
    """Derive a PartitionScheme over the retained feature dimensions.

    ``group_map`` maps joint name -> group name and must assign every
    retained joint exactly once. ``retained`` lists the raw dimension
    indices that survive still-joint removal (default: all); group index
    lists are expressed in the compacted coordinate system.
    """
    if scheme_name == "whole" and group_map is None:
        group_map = {j.name: "whole" for j in spec.joints}
    if retained is None:
        retained = list(range(spec.total_dim))
    position = {raw: new for new, raw in enumerate(retained)}

    names_seen = set()
    group_order = []
    group_dims = {}
    for joint in spec.joints:
        live = [position[raw] for raw in joint.indices if raw in position]
        if joint.name not in group_map:
            if live:  # fully-still joints need no assignment
                raise DataError(f"joint {joint.name!r} is not assigned to any group")
            continue
        gname = group_map[joint.name]
        if gname not in group_dims:
            group_dims[gname] = []
            group_order.append(gname)
        names_seen.add(joint.name)
        group_dims[gname].extend(live)
    unknown = set(group_map) - names_seen
    if unknown:
        raise DataError(f"group map names unknown joints: {sorted(unknown)}")
    groups = []
    for gname in group_order:
        dims = group_dims[gname]
        if not dims:
            raise DataError(f"group {gname!r} has no retained dimensions")
        groups.append(Group(gname, tuple(dims)))
    return PartitionScheme(scheme_name, tuple(groups))


def scatter(frame, scheme):
    """Split a (batch, width) tensor into per-group tensors."""
    if frame.shape[-1] != scheme.width:
        raise ShapeError(
            f"frame width {frame.shape[-1]} does not match scheme width {scheme.width}"
        )
    return [take_columns(frame, g.indices) for g in scheme.groups]


def gather(group_tensors, scheme):
    """Exact inverse of scatter: reassemble the original column order."""
    stacked = concat(group_tensors, axis=1)
    if stacked.shape[-1] != scheme.width:
        raise ShapeError(
            f"group widths sum to {stacked.shape[-1]}, scheme width is {scheme.width}"
        )
    return take_columns(stacked, scheme.inverse_permutation)


def parse_skeleton_file(path):
    """Read the joint/group description; rejects overlaps and gaps by line."""
    joints = []
    group_maps = {}
    cursor = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "joint":
                if len(parts) not in (4, 5):
                    raise DataError(f"{path}:{lineno}: expected 'joint <name> <start> <len> [global]'")
                name = parts[1]
                try:
                    start, length = int(parts[2]), int(parts[3])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: start/len must be integers") from None
                is_global = False
                if len(parts) == 5:
                    if parts[4] != "global":
                        raise DataError(f"{path}:{lineno}: trailing token must be 'global'")
                    is_global = True
                if start < cursor:
                    raise DataError(f"{path}:{lineno}: joint {name!r} overlaps the previous span")
                if start > cursor:
                    raise DataError(f"{path}:{lineno}: gap before joint {name!r} (expected start {cursor})")
                joints.append(Joint(name, start, length, is_global))
                cursor = start + length
            elif parts[0] == "group":
                if len(parts) < 4:
                    raise DataError(f"{path}:{lineno}: expected 'group <scheme> <name> <joint>...'")
                scheme, gname = parts[1], parts[2]
                members = parts[3:]
                scheme_map = group_maps.setdefault(scheme, {})
                for member in members:
                    if member in scheme_map:
                        raise DataError(
                            f"{path}:{lineno}: joint {member!r} already assigned in scheme {scheme!r}"
                        )
                    scheme_map[member] = gname
            else:
                raise DataError(f"{path}:{lineno}: unknown directive {parts[0]!r}")
    if not joints:
        raise DataError(f"{path}: no joints declared")
    known = {j.name for j in joints}
    for scheme, mapping in group_maps.items():
        unknown = set(mapping) - known
        if unknown:
            raise DataError(f"{path}: scheme {scheme!r} references unknown joints {sorted(unknown)}")
    return SkeletonSpec(tuple(joints), group_maps=group_maps)


def write_skeleton_file(spec, path):
    lines = []
    for j in spec.joints:
        suffix = " global" if j.is_global else ""
        lines.append(f"joint {j.name} {j.start} {j.length}{suffix}")
    for scheme in sorted(spec.group_maps):
        mapping = spec.group_maps[scheme]
        by_group = {}
        order = []
        for j in spec.joints:
            if j.name in mapping:
                g = mapping[j.name]
                if g not in by_group:
                    by_group[g] = []
                    order.append(g)
                by_group[g].append(j.name)
        for g in order:
            lines.append(f"group {scheme} {g} " + " ".join(by_group[g]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def scheme_from_spec(spec, scheme_name, retained=None):
    """Build a named scheme from the spec's declared group maps."""
    if scheme_name == "whole":
        return build_partition(spec, None, "whole", retained)
    if scheme_name not in spec.group_maps:
        raise DataError(f"skeleton declares no scheme {scheme_name!r}")
    return build_partition(spec, spec.group_maps[scheme_name], scheme_name, retained)
