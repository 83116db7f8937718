"""Kinematic tree definition and the bundled desk humanoid.

A skeleton is a rooted tree of joints with per-joint offsets (meters, in the
parent frame) and a capsule radius for the bone ending at each joint.  The
world is z-up with the ground plane at z = 0; the humanoid faces +x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .validation import as_float_array


@dataclass(frozen=True)
class Skeleton:
    """Immutable kinematic tree.

    parents[j] is the parent joint index (-1 for the single root).  offsets[j]
    is the joint position in its parent's frame; radii[j] is the capsule
    radius of the bone from parent(j) to j (the root's radius models a pelvis
    sphere).
    """

    names: tuple[str, ...]
    parents: tuple[int, ...]
    offsets: np.ndarray  # (J, 3)
    radii: np.ndarray  # (J,)
    feet: tuple[int, ...]
    head: int
    end_effectors: tuple[int, ...] = field(default=())

    def __post_init__(self):
        offsets = as_float_array(self.offsets, "offsets", shape=(-1, 3))
        radii = as_float_array(self.radii, "radii", shape=(-1,))
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "radii", radii)
        j = len(self.names)
        if len(self.parents) != j or offsets.shape[0] != j or radii.shape[0] != j:
            raise ValidationError("skeleton field lengths disagree")
        roots = [i for i, p in enumerate(self.parents) if p < 0]
        if len(roots) != 1 or roots[0] != 0:
            raise ValidationError("skeleton must have exactly one root at index 0")
        for i, p in enumerate(self.parents):
            if i > 0 and not (0 <= p < i):
                raise ValidationError(
                    f"parent of joint {i} must precede it (topological order), got {p}"
                )
        if np.any(radii <= 0):
            raise ValidationError("all capsule radii must be > 0")
        norms = np.linalg.norm(offsets[1:], axis=-1)
        if np.any(norms <= 0):
            raise ValidationError("non-root offsets must have positive norm")

    @property
    def joint_count(self) -> int:
        return len(self.names)

    @property
    def dof_count(self) -> int:
        """Generalized DoF: root translation (3) + 3 exp-coords per joint."""
        return 6 + 3 * (self.joint_count - 1)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def bones(self) -> list[tuple[int, int]]:
        """(parent, child) pairs, one per non-root joint."""
        return [(self.parents[j], j) for j in range(1, self.joint_count)]

    def bone_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.offsets[1:], axis=-1)

    def bone_masses(self, density: float = 1000.0) -> np.ndarray:
        """Capsule masses (kg) per joint; index 0 is the root pelvis sphere."""
        lengths = np.concatenate([[0.0], self.bone_lengths()])
        r = self.radii
        volume = np.pi * r**2 * lengths + (4.0 / 3.0) * np.pi * r**3
        return volume * density

    def adjacent_bone_pairs(self) -> set[tuple[int, int]]:
        """Bone pairs (child-indexed) sharing a joint, plus self pairs."""
        pairs: set[tuple[int, int]] = set()
        bones = self.bones()
        for pa, a in bones:
            for pb, b in bones:
                if {pa, a} & {pb, b}:
                    pairs.add((a, b))
        return pairs


def load_skeleton(path: str | Path) -> Skeleton:
    """Load a skeleton from its JSON definition file."""
    with open(path) as fh:
        doc = json.load(fh)
    return skeleton_from_dict(doc)


def save_skeleton(skel: Skeleton, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(skeleton_to_dict(skel), fh, indent=1)


def skeleton_from_dict(doc: dict) -> Skeleton:
    joints = doc["joints"]
    names = tuple(j["name"] for j in joints)
    name_to_idx = {n: i for i, n in enumerate(names)}
    parents = []
    for j in joints:
        parent = j.get("parent")
        parents.append(-1 if parent in (None, "") else name_to_idx[parent])
    offsets = np.array([j["offset"] for j in joints], dtype=np.float64)
    radii = np.array([j["radius"] for j in joints], dtype=np.float64)
    feet = tuple(name_to_idx[n] for n in doc.get("feet", []))
    head = name_to_idx[doc["head"]] if "head" in doc else len(names) - 1
    ee = tuple(name_to_idx[n] for n in doc.get("end_effectors", []))
    return Skeleton(names, tuple(parents), offsets, radii, feet, head, ee)


def skeleton_to_dict(skel: Skeleton) -> dict:
    joints = []
    for i, name in enumerate(skel.names):
        joints.append(
            {
                "name": name,
                "parent": None if skel.parents[i] < 0 else skel.names[skel.parents[i]],
                "offset": list(map(float, skel.offsets[i])),
                "radius": float(skel.radii[i]),
            }
        )
    return {
        "joints": joints,
        "feet": [skel.names[i] for i in skel.feet],
        "head": skel.names[skel.head],
        "end_effectors": [skel.names[i] for i in skel.end_effectors],
    }


def desk_humanoid() -> Skeleton:
    """The bundled 22-joint humanoid used throughout tests and the demo."""
    ref = resources.files("motionrestore").joinpath("data/desk_humanoid.json")
    return skeleton_from_dict(json.loads(ref.read_text()))
