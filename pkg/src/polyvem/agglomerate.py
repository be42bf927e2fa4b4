"""Merge groups of elements into single polytopal virtual elements.

Internal faces (shared by exactly two group members with opposite
orientation) are removed; the union keeps the remaining boundary faces
verbatim, so face integration stays exact and nothing is re-triangulated.
"""

from __future__ import annotations

import numpy as np

from . import mesh as meshmod, quality
from .mesh import Element, Mesh, TAU_GEOM, ValidationError


class MergeError(ValidationError):
    """A group cannot be merged into a valid single element."""


def _merged_faces_3d(mesh, group):
    keyed = {}
    for e in group:
        for f in mesh.elements[e].faces:
            key = tuple(sorted(f))
            keyed.setdefault(key, []).append((e, f))
    boundary = []
    internal = set()
    for key, hits in keyed.items():
        if len(hits) == 1:
            boundary.append(hits[0][1])
        elif len(hits) == 2:
            (e1, f1), (e2, f2) = hits
            # Same cyclic orientation from both sides means overlap.
            if _same_cycle(f1, f2):
                raise MergeError(
                    f"elements {e1} and {e2} traverse shared face {key} "
                    "in the same direction (orientation mismatch)")
            internal.add(key)
        else:
            raise MergeError(f"face {key} shared by more than two elements")
    if not internal and len(group) > 1:
        raise MergeError("group elements share no faces (disconnected)")
    # Face-connectivity of the group must form one component.
    adj = {e: set() for e in group}
    for key, hits in keyed.items():
        if len(hits) == 2:
            (e1, _), (e2, _) = hits
            adj[e1].add(e2)
            adj[e2].add(e1)
    seen = set()
    stack = [next(iter(group))]
    while stack:
        e = stack.pop()
        if e in seen:
            continue
        seen.add(e)
        stack.extend(adj[e] - seen)
    if seen != set(group):
        raise MergeError("group is not face-connected")
    return tuple(boundary)


def _same_cycle(f1, f2):
    rot = [tuple(f2[k:]) + tuple(f2[:k]) for k in range(3)]
    return tuple(f1) in rot


def _merged_loop_2d(mesh, group):
    directed = {}
    for e in group:
        loop = mesh.elements[e].loop
        n = len(loop)
        for k in range(n):
            a, b = loop[k], loop[(k + 1) % n]
            if (b, a) in directed:
                directed.pop((b, a))
            elif (a, b) in directed:
                raise MergeError(
                    f"edge ({a},{b}) traversed twice in the same direction")
            else:
                directed[(a, b)] = e
    if not directed:
        raise MergeError("merged boundary is empty")
    succ = {}
    for a, b in directed:
        if a in succ:
            raise MergeError("merged region is not edge-connected or "
                             "touches itself at a vertex")
        succ[a] = b
    start = min(succ)
    loop = [start]
    cur = succ[start]
    while cur != start:
        loop.append(cur)
        if len(loop) > len(succ):
            raise MergeError("boundary does not close into a single loop")
        cur = succ[cur]
    if len(loop) != len(succ):
        raise MergeError("merged region has a hole or is disconnected")
    return tuple(loop)


def merge(mesh, group):
    """Replace a face-connected group by its union element.

    The union takes the slot of the smallest group index; other group
    elements are dropped (indices above them shift down).
    """
    group = sorted(set(int(g) for g in group))
    if not group:
        raise MergeError("empty merge group")
    if any(g < 0 or g >= mesh.num_elements for g in group):
        raise MergeError("merge group index out of range")
    if mesh.dimension == 2:
        loop = _merged_loop_2d(mesh, group)
        union = Element(loop=loop, kind="poly")
    else:
        faces = _merged_faces_3d(mesh, group)
        union = Element(faces=faces, kind="poly")
    slot = group[0]
    drop = set(group[1:])
    elements = []
    for i, el in enumerate(mesh.elements):
        if i == slot:
            elements.append(union)
        elif i not in drop:
            elements.append(el)
    merged = Mesh(mesh.dimension, mesh.vertices, elements, mesh.material)
    meshmod.validate_element(merged, elements.index(union))
    geom = meshmod.element_geometry(merged, elements.index(union))
    if geom.volume < TAU_GEOM * geom.diameter ** mesh.dimension:
        raise MergeError(
            "merged element volume vanishes; agglomerate with more "
            "neighbors so the polytope keeps finite measure")
    return merged


def merge_groups(mesh, groups):
    """Merge several disjoint groups in one pass.

    Group indices refer to the input mesh (no re-indexing between merges).
    Each union lands at its smallest member's slot.  Returns the new mesh
    and {new element id: tuple of original ids}.
    """
    cleaned = []
    seen = set()
    for group in groups:
        members = sorted(set(int(g) for g in group))
        if len(members) < 2:
            raise MergeError("merge groups need at least two elements")
        if any(g < 0 or g >= mesh.num_elements for g in members):
            raise MergeError("merge group index out of range")
        if seen & set(members):
            raise MergeError("merge groups overlap")
        seen |= set(members)
        cleaned.append(members)
    slot_of = {members[0]: members for members in cleaned}
    consumed = {g for members in cleaned for g in members[1:]}
    elements = []
    mapping = {}
    for i in range(mesh.num_elements):
        if i in consumed:
            continue
        if i in slot_of:
            elements.append(_union_element(mesh, slot_of[i]))
            mapping[len(elements) - 1] = tuple(slot_of[i])
        else:
            elements.append(mesh.elements[i])
            mapping[len(elements) - 1] = (i,)
    out = Mesh(mesh.dimension, mesh.vertices, elements, mesh.material)
    for new_id, members in mapping.items():
        if len(members) > 1:
            meshmod.validate_element(out, new_id)
            geom = meshmod.element_geometry(out, new_id)
            if geom.volume < TAU_GEOM * geom.diameter ** mesh.dimension:
                raise MergeError(
                    f"merged element {new_id} has vanishing measure")
    return out, mapping


def _shared_face_area(mesh, e1, e2):
    """Total area of faces/edges shared between two elements."""
    if mesh.dimension == 2:
        l1, l2 = mesh.elements[e1].loop, mesh.elements[e2].loop
        edges1 = {tuple(sorted((l1[k], l1[(k + 1) % len(l1)])))
                  for k in range(len(l1))}
        total = 0.0
        for k in range(len(l2)):
            key = tuple(sorted((l2[k], l2[(k + 1) % len(l2)])))
            if key in edges1:
                total += float(np.linalg.norm(
                    mesh.vertices[key[1]] - mesh.vertices[key[0]]))
        return total
    keys1 = {tuple(sorted(f)) for f in mesh.elements[e1].faces}
    total = 0.0
    for f in mesh.elements[e2].faces:
        if tuple(sorted(f)) in keys1:
            area, _ = meshmod.triangle_area_normal(mesh.vertices[list(f)])
            total += area
    return total


def _neighbors(mesh):
    """element -> set of face-adjacent elements."""
    owner = {}
    adj = [set() for _ in range(mesh.num_elements)]
    for i, el in enumerate(mesh.elements):
        if mesh.dimension == 2:
            loop = el.loop
            keys = [tuple(sorted((loop[k], loop[(k + 1) % len(loop)])))
                    for k in range(len(loop))]
        else:
            keys = [tuple(sorted(f)) for f in el.faces]
        for key in keys:
            if key in owner:
                j = owner[key]
                adj[i].add(j)
                adj[j].add(i)
            else:
                owner[key] = i
    return adj


def auto_agglomerate(mesh, thresholds=quality.DEFAULT_THRESHOLDS,
                     volume_floor=1e-3):
    """Merge every pathological element with neighbors, greedily.

    Each flagged element absorbs the neighbor sharing the largest contact
    area until its volume reaches volume_floor * h_E^dim.  Returns the new
    mesh and a mapping {new element id: tuple of original ids}.  Good meshes
    come back untouched with the identity mapping.
    """
    reports = quality.mesh_report(mesh, thresholds)
    bad = [r.element for r in reports
           if r.classification not in ("good", "not_applicable")]
    groups = {i: {i} for i in range(mesh.num_elements)}
    owner = list(range(mesh.num_elements))
    adj = _neighbors(mesh)
    unmerged = []

    def group_volume(members):
        total = 0.0
        pts = []
        for e in members:
            g = meshmod.element_geometry(mesh, e)
            total += g.volume
            pts.append(mesh.vertices[list(mesh.elements[e].node_ids())])
        h = meshmod._max_pairwise_distance(np.vstack(pts))
        return total, h

    for seed in bad:
        while True:
            root = owner[seed]
            members = groups[root]
            vol, h = group_volume(members)
            if len(members) > 1 and vol >= volume_floor * h ** mesh.dimension:
                break
            candidates = {}
            for e in members:
                for nb in adj[e]:
                    nroot = owner[nb]
                    if nroot == root:
                        continue
                    area = _shared_face_area(mesh, e, nb)
                    candidates[nroot] = candidates.get(nroot, 0.0) + area
            if not candidates:
                if len(members) == 1:
                    unmerged.append(seed)
                break
            best = max(sorted(candidates), key=lambda k: candidates[k])
            keep, drop = min(root, best), max(root, best)
            groups[keep] = groups[keep] | groups.pop(drop)
            for e in groups[keep]:
                owner[e] = keep

    # Rebuild in slot order: each group lands at its smallest member index.
    mapping = {}
    elements = []
    for root in sorted(set(owner), key=lambda r: min(groups[r])):
        members = sorted(groups[root])
        if len(members) == 1:
            elements.append(mesh.elements[members[0]])
        else:
            elements.append(_union_element(mesh, members))
        mapping[len(elements) - 1] = tuple(members)
    out = Mesh(mesh.dimension, mesh.vertices, elements, mesh.material)
    meshmod.validate_mesh(out)
    return out, mapping, unmerged


def _union_element(mesh, members):
    if mesh.dimension == 2:
        return Element(loop=_merged_loop_2d(mesh, members), kind="poly")
    return Element(faces=_merged_faces_3d(mesh, members), kind="poly")


def write_mapping_csv(mapping, path):
    with open(path, "w") as fh:
        fh.write("new_element_id,old_element_ids\n")
        for new_id in sorted(mapping):
            olds = ",".join(str(o) for o in mapping[new_id])
            fh.write(f"{new_id},\"{olds}\"\n")
