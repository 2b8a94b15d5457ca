"""Analytic multi-view test scenes with exact specular groundtruth.

Generates a box room with axis-aligned boxes, point lights, and a ring
of inward-looking cameras, then renders each view with direct Blinn-
Phong illumination and hard shadows.  Because the specular term is
computed analytically, the groundtruth specular map is exact by
construction, which is what makes the pipeline testable at desk scale.

Every scene contains at least one brightly lit white diffuse box (the
classic single-view false positive) and at least one dark glossy box
whose highlight moves between cameras.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from speclight import kernels
from speclight.colorspace import lab_l_from_y, linear_luminance, luminance_to_uint8
from speclight.geometry import CameraView, TriangleMesh, make_intrinsics

RAY_NEAR = 1e-4
SHADOW_EPS = 1e-4

ROOM_HALF_X = 2.0
ROOM_HALF_Y = 2.0
ROOM_HEIGHT = 3.0


@dataclass
class Material:
    albedo: np.ndarray  # (3,) linear RGB in [0, 1]
    specular: float     # k_s in [0, 1]
    shininess: float

    def __post_init__(self):
        self.albedo = np.asarray(self.albedo, dtype=np.float64)
        if not (0.0 <= self.specular <= 1.0):
            raise ValueError("specular coefficient must be in [0, 1]")


@dataclass
class PointLight:
    position: np.ndarray
    color: np.ndarray
    strength: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.color = np.asarray(self.color, dtype=np.float64)


@dataclass
class SyntheticScene:
    mesh: TriangleMesh
    materials: List[Material]
    face_material: np.ndarray       # (m,) int index into materials
    lights: List[PointLight]
    cameras: List[CameraView]
    face_object: np.ndarray         # (m,) int object id per face
    object_names: List[str]         # id -> name; "box_white", "box_gloss", ...
    seed: int = 0

    def __post_init__(self):
        if len(self.lights) < 1:
            raise ValueError("scene needs at least one light")
        if len(self.cameras) < 2:
            raise ValueError("scene needs at least two cameras")
        if self.face_material.shape[0] != self.mesh.num_faces:
            raise ValueError("every face needs a material")

    def faces_of_object(self, name: str) -> np.ndarray:
        oid = self.object_names.index(name)
        return np.nonzero(self.face_object == oid)[0]

    @property
    def white_box_faces(self) -> np.ndarray:
        return self.faces_of_object("box_white")

    @property
    def glossy_box_faces(self) -> np.ndarray:
        return self.faces_of_object("box_gloss")


@dataclass
class RenderBundle:
    """One rendered view plus its exact groundtruth maps."""

    image: np.ndarray             # (h, w, 3) uint8 sRGB
    specular_gt: np.ndarray       # (h, w) uint8, L* of the specular term x2.55
    depth: np.ndarray             # (h, w) float64 camera-space z, inf = miss
    normal: np.ndarray            # (h, w, 3) float64 camera-facing unit normals
    diffuse_linear: np.ndarray = field(repr=False, default=None)
    specular_linear: np.ndarray = field(repr=False, default=None)
    face_id: np.ndarray = field(repr=False, default=None)


def _box_mesh(center, size):
    """Axis-aligned box: 8 vertices, 12 triangles."""
    cx, cy, cz = center
    hx, hy, hz = size[0] / 2.0, size[1] / 2.0, size[2] / 2.0
    verts = np.array(
        [
            [cx - hx, cy - hy, cz - hz],
            [cx + hx, cy - hy, cz - hz],
            [cx + hx, cy + hy, cz - hz],
            [cx - hx, cy + hy, cz - hz],
            [cx - hx, cy - hy, cz + hz],
            [cx + hx, cy - hy, cz + hz],
            [cx + hx, cy + hy, cz + hz],
            [cx - hx, cy + hy, cz + hz],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],  # -y side
            [2, 3, 7], [2, 7, 6],  # +y side
            [1, 2, 6], [1, 6, 5],  # +x side
            [3, 0, 4], [3, 4, 7],  # -x side
        ],
        dtype=np.int32,
    )
    return verts, faces


def look_at_pose(position, target, up=(0.0, 0.0, 1.0)):
    """Camera-to-world pose looking from position toward target.

    Camera axes: +x right, +y down, +z forward.
    """
    position = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - position
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(up, dtype=np.float64))
    nr = np.linalg.norm(right)
    if nr < 1e-9:  # looking straight up/down; pick an arbitrary right
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / nr
    down = np.cross(fwd, right)
    pose = np.eye(4)
    pose[:3, 0] = right
    pose[:3, 1] = down
    pose[:3, 2] = fwd
    pose[:3, 3] = position
    return pose


def _aabb_overlap(a_lo, a_hi, b_lo, b_hi, margin=0.05):
    return all(a_lo[k] - margin < b_hi[k] and b_lo[k] - margin < a_hi[k] for k in range(2))


def build_scene(
    seed: int, num_cameras: int, width: int = 128, height: int = 128
) -> SyntheticScene:
    """Deterministic scene from a seed.

    4x4x3 room, 3-8 boxes on the floor (one guaranteed white diffuse,
    one guaranteed dark glossy), 2-3 point lights, and num_cameras on a
    jittered ring looking inward.

    Two lights are placed deliberately: one above the white box so its
    top reads near-saturated (the single-view false positive the
    cross-view filter is supposed to prune), and one on the mirror
    direction between the glossy box top and one camera so that camera
    sees a genuine highlight the other cameras miss.  The room shell is
    dark so the highlight's cross-view luminance drop clears the
    pairwise threshold.
    """
    if num_cameras < 2:
        raise ValueError("need at least 2 cameras")
    rng = np.random.default_rng(seed)

    verts_all = []
    faces_all = []
    face_mat = []
    face_obj = []
    names = []
    materials = []
    boxes_3d = []  # (lo, hi) corners of every placed box, for light placement

    def add_object(name, verts, faces, material):
        base = sum(v.shape[0] for v in verts_all)
        oid = len(names)
        names.append(name)
        materials.append(material)
        verts_all.append(verts)
        faces_all.append(faces + base)
        face_mat.extend([oid] * faces.shape[0])
        face_obj.extend([oid] * faces.shape[0])
        return oid

    room_v, room_f = _box_mesh(
        (0.0, 0.0, ROOM_HEIGHT / 2.0), (2 * ROOM_HALF_X, 2 * ROOM_HALF_Y, ROOM_HEIGHT)
    )
    wall_gray = rng.uniform(0.02, 0.045)
    add_object("room", room_v, room_f, Material(np.full(3, wall_gray), 0.0, 1.0))

    num_boxes = int(rng.integers(3, 9))
    placed = []

    def register_box(center, size):
        lo2 = (center[0] - size[0] / 2, center[1] - size[1] / 2)
        hi2 = (center[0] + size[0] / 2, center[1] + size[1] / 2)
        placed.append((lo2, hi2))
        boxes_3d.append(
            (
                np.array([lo2[0], lo2[1], 0.0]),
                np.array([hi2[0], hi2[1], size[2]]),
            )
        )

    def place_box(size, span):
        x = y = 0.0
        for _ in range(60):
            x = rng.uniform(-span, span)
            y = rng.uniform(-span, span)
            lo = (x - size[0] / 2, y - size[1] / 2)
            hi = (x + size[0] / 2, y + size[1] / 2)
            if all(not _aabb_overlap(lo, hi, p[0], p[1]) for p in placed):
                break
        center = (x, y, size[2] / 2.0)
        register_box(center, size)
        return center

    # Guaranteed white diffuse box: a low slab near the middle of the
    # room, so the faces the single-view detector flags (the strongly
    # lit top) are seen by every ring camera and can be pruned by
    # cross-view evidence.
    wsize = (rng.uniform(0.6, 0.9), rng.uniform(0.6, 0.9), rng.uniform(0.35, 0.6))
    wcenter = place_box(wsize, 0.35)
    wv, wf = _box_mesh(wcenter, wsize)
    add_object("box_white", wv, wf, Material(np.full(3, rng.uniform(0.86, 0.92)), 0.0, 1.0))

    # Guaranteed glossy box: very dark base with a lobe tight enough
    # that only the aimed camera catches the highlight, yet wide enough
    # to flood the whole (small) top face.
    gsize = (rng.uniform(0.28, 0.40), rng.uniform(0.28, 0.40), rng.uniform(0.4, 0.7))
    gcenter = place_box(gsize, 0.55)
    gv, gf = _box_mesh(gcenter, gsize)
    add_object(
        "box_gloss", gv, gf,
        Material(np.full(3, rng.uniform(0.015, 0.03)), rng.uniform(0.85, 0.95),
                 rng.uniform(80.0, 120.0)),
    )

    for b in range(num_boxes - 2):
        size = (rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.8))
        center = place_box(size, 1.3)
        bv, bf = _box_mesh(center, size)
        albedo = rng.uniform(0.02, 0.12, size=3)
        add_object(f"box_{b + 2}", bv, bf, Material(albedo, 0.0, 1.0))

    mesh = TriangleMesh(np.vstack(verts_all), np.vstack(faces_all))

    fov_scale = 0.85  # ~61 deg horizontal field of view
    fx = fy = fov_scale * width
    intrinsics = make_intrinsics(fx, fy, width / 2.0, height / 2.0)
    cameras = []
    ring_r = rng.uniform(1.5, 1.8)
    ring_z = rng.uniform(1.35, 1.75)
    for c in range(num_cameras):
        angle = 2 * np.pi * c / num_cameras + rng.uniform(-0.15, 0.15)
        pos = np.array(
            [ring_r * np.cos(angle), ring_r * np.sin(angle), ring_z + rng.uniform(-0.15, 0.15)]
        )
        target = np.array(
            [rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.4, 0.8)]
        )
        pose = look_at_pose(pos, target)
        cameras.append(CameraView(intrinsics.copy(), pose, width, height, view_id=f"{c:03d}"))

    lights = [
        # Above the white box: makes its top near-saturated in every view.
        PointLight(
            np.array([wcenter[0] + rng.uniform(-0.2, 0.2),
                      wcenter[1] + rng.uniform(-0.2, 0.2),
                      wsize[2] + rng.uniform(1.5, 1.8)]),
            rng.uniform(0.9, 1.0, size=3),
            float(rng.uniform(3.1, 3.5)),
        )
    ]
    aimed = _aim_highlight_light(rng, mesh, boxes_3d, gcenter, gsize, cameras)
    if aimed is not None:
        lights.append(aimed)
    if rng.random() < 0.5 or aimed is None:
        # Dim fill light; weak enough that even a chance mirror
        # alignment stays below the single-view threshold.
        lights.append(
            PointLight(
                np.array([rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4),
                          rng.uniform(2.2, 2.8)]),
                rng.uniform(0.9, 1.0, size=3),
                float(rng.uniform(0.25, 0.45)),
            )
        )

    return SyntheticScene(
        mesh=mesh,
        materials=materials,
        face_material=np.asarray(face_mat, dtype=np.int32),
        lights=lights,
        cameras=cameras,
        face_object=np.asarray(face_obj, dtype=np.int32),
        object_names=names,
        seed=seed,
    )


def _aim_highlight_light(rng, mesh, boxes_3d, gcenter, gsize, cameras):
    """Place a light on the mirror direction of one camera about the
    glossy box's top face, so that camera sees a specular peak there.

    The peak location only depends on the light's direction from the
    face, not its distance, so the distance is chosen to keep the light
    inside the room, high up, above the boxes, and unshadowed.  Height
    matters: a low light would graze the white box's side faces and push
    them over the single-view threshold, and with four ring cameras a
    side face may lack the second observation the cross-view filter
    needs.  Returns None when no valid placement is found (rare)."""
    from speclight import kernels

    top = np.array([gcenter[0], gcenter[1], gsize[2]])
    # Prefer steeply-elevated cameras: their mirror ray rises fast, so
    # the light ends up high, where oblique incidence keeps it from
    # saturating the white box's side faces.
    elev = []
    for ci, cam in enumerate(cameras):
        u = cam.position - top
        elev.append((u / np.linalg.norm(u))[2])
    order = sorted(range(len(cameras)), key=lambda ci: -elev[ci])
    for ci in order:
        if elev[ci] < 0.35:
            continue
        cam = cameras[ci]
        u = cam.position - top
        u = u / np.linalg.norm(u)
        mirror = np.array([-u[0], -u[1], u[2]])
        for _ in range(10):
            t_z = (rng.uniform(2.1, 2.7) - top[2]) / mirror[2]
            # Stay clear of the walls.
            t_xy = t_z
            for axis in range(2):
                if abs(mirror[axis]) > 1e-9:
                    bound = (np.sign(mirror[axis]) * 1.8 - top[axis]) / mirror[axis]
                    t_xy = min(t_xy, bound)
            t = min(t_z, t_xy)
            # A minimum standoff keeps the light direction near-constant
            # across the face, so the lobe floods it evenly.
            if t < 1.1:
                continue
            pos = top + t * mirror
            if pos[2] < 2.0:
                continue
            if any(
                (pos > lo - 0.05).all() and (pos < hi + 0.05).all()
                for lo, hi in boxes_3d
            ):
                continue
            probe = top + np.array([0.0, 0.0, 0.02])
            blocked = kernels.segments_occluded(
                probe[None, :], pos[None, :], mesh.vertices, mesh.faces,
                np.array([-1], dtype=np.int32), 1e-3,
            )[0]
            if blocked:
                continue
            return PointLight(pos, rng.uniform(0.9, 1.0, size=3),
                              float(rng.uniform(2.1, 2.6)))
    return None


def _linear_to_srgb_u8(lin: np.ndarray) -> np.ndarray:
    c = np.clip(lin, 0.0, 1.0)
    enc = np.where(c <= 0.0031308, 12.92 * c, 1.055 * np.power(c, 1.0 / 2.4) - 0.055)
    return np.floor(enc * 255.0 + 0.5).astype(np.uint8)


def render_direct(scene: SyntheticScene, cam_index: int) -> RenderBundle:
    """Render one view with direct Blinn-Phong lighting and hard shadows.

    Per pixel: nearest face along the center ray; for each unoccluded
    light, diffuse = albedo * color * strength * max(0, n.l) / d^2 and
    specular = k_s * color * strength * max(0, n.h)^shininess.  The
    image is clamp(diffuse + specular) encoded to sRGB; specular_gt is
    the 8-bit L* of the specular term alone.  Normals are two-sided
    (flipped toward the camera), matching how interiors are viewed.
    """
    if not (0 <= cam_index < len(scene.cameras)):
        raise IndexError(f"camera index {cam_index} out of range")
    cam = scene.cameras[cam_index]
    mesh = scene.mesh
    h, w = cam.height, cam.width

    dirs = cam.pixel_ray_dirs()
    fids, ts = kernels.raycast_nearest(cam.position, dirs, mesh.vertices, mesh.faces, RAY_NEAR)
    hit = fids >= 0

    n_pix = h * w
    diffuse = np.zeros((n_pix, 3))
    specular = np.zeros((n_pix, 3))
    normal_img = np.zeros((n_pix, 3))
    depth = np.full(n_pix, np.inf)

    if hit.any():
        hi = np.nonzero(hit)[0]
        f_hit = fids[hi]
        points = cam.position + dirs[hi] * ts[hi, None]
        depth[hi] = ts[hi] * (dirs[hi] @ cam.forward)

        normals = mesh.face_normals()
        normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
        n_eff = normals[f_hit]
        facing = (n_eff * dirs[hi]).sum(axis=1) > 0
        n_eff[facing] *= -1.0
        normal_img[hi] = n_eff

        mats = scene.face_material[f_hit]
        albedo = np.stack([m.albedo for m in scene.materials])[mats]
        ks = np.array([m.specular for m in scene.materials])[mats]
        shin = np.array([m.shininess for m in scene.materials])[mats]
        view = -dirs[hi]

        for light in scene.lights:
            lvec = light.position - points
            d2 = (lvec ** 2).sum(axis=1)
            l = lvec / np.sqrt(d2)[:, None]
            ndotl = np.maximum((n_eff * l).sum(axis=1), 0.0)

            ends = np.broadcast_to(light.position, points.shape)
            occluded = kernels.segments_occluded(
                points, ends, mesh.vertices, mesh.faces, f_hit, SHADOW_EPS
            )
            lit = (~occluded).astype(np.float64)

            half = l + view
            half = half / np.maximum(np.linalg.norm(half, axis=1, keepdims=True), 1e-12)
            ndoth = np.maximum((n_eff * half).sum(axis=1), 0.0)

            radiance = light.color[None, :] * light.strength
            diffuse[hi] += albedo * radiance * (lit * ndotl / d2)[:, None]
            specular[hi] += radiance * (lit * ks * ndoth ** shin)[:, None]

    image_lin = np.clip(diffuse + specular, 0.0, 1.0)
    spec_y = linear_luminance(specular)
    spec_l = np.clip(lab_l_from_y(np.minimum(spec_y, 1.0)), 0.0, 100.0)

    return RenderBundle(
        image=_linear_to_srgb_u8(image_lin).reshape(h, w, 3),
        specular_gt=luminance_to_uint8(spec_l).reshape(h, w),
        depth=depth.reshape(h, w),
        normal=normal_img.reshape(h, w, 3),
        diffuse_linear=diffuse.reshape(h, w, 3),
        specular_linear=specular.reshape(h, w, 3),
        face_id=fids.reshape(h, w),
    )
