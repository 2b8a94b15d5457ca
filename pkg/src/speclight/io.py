"""On-disk formats: PLY meshes, camera matrices, light JSON, PNG maps.

Scene directory contract (LIGHTS-style layout):

    <root>/
      Cam_Info/camera_<viewid>.txt      16 intrinsics + 16 pose reals,
                                        whitespace separated, row-major
      Light_info/lights.json            list of light dicts
      Mesh_info/scene.ply               triangle mesh
      Rendering_info/Image_<viewid>.png     8-bit sRGB render
      Rendering_info/Specular_<viewid>.png  8-bit specular groundtruth
      Rendering_info/Depth_<viewid>.png     16-bit depth (millimeters)
      Rendering_info/Normal_<viewid>.png    8-bit encoded normals

View ids are discovered from filenames; ordering is lexicographic by
view id.  The pose matrix is camera-to-world.
"""

import json
import logging
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
from PIL import Image

from speclight.geometry import CameraView, TriangleMesh

logger = logging.getLogger(__name__)

LIGHT_TYPES = ("Point", "Sun", "Spot", "Area")


class SceneLoadError(Exception):
    """Fatal problem with a scene directory or one of its files."""


@dataclass
class LightInfo:
    type: str
    position: np.ndarray
    orientation: np.ndarray
    color: np.ndarray
    strength: float


@dataclass
class ViewEntry:
    view_id: str
    image_path: Path
    camera_path: Path
    specular_path: Optional[Path]  # None disables evaluation for the view


@dataclass
class SceneManifest:
    root: Path
    views: List[ViewEntry]
    mesh_path: Path
    light_path: Optional[Path]

    @property
    def view_ids(self):
        return [v.view_id for v in self.views]


def load_scene(root) -> SceneManifest:
    """Discover a scene directory by filename convention.

    Missing mesh or a view without its camera file is fatal; missing
    specular groundtruth only disables evaluation for that view.
    """
    root = Path(root)
    if not root.is_dir():
        raise SceneLoadError(f"scene root {root} is not a directory")

    mesh_candidates = sorted((root / "Mesh_info").glob("*.ply"))
    if not mesh_candidates:
        raise SceneLoadError(f"no mesh found under {root / 'Mesh_info'}")
    mesh_path = mesh_candidates[0]

    render_dir = root / "Rendering_info"
    views = []
    for img_path in sorted(render_dir.glob("Image_*.png")):
        m = re.fullmatch(r"Image_(.+)\.png", img_path.name)
        view_id = m.group(1)
        cam_path = root / "Cam_Info" / f"camera_{view_id}.txt"
        if not cam_path.is_file():
            raise SceneLoadError(f"missing camera file {cam_path}")
        spec_path = render_dir / f"Specular_{view_id}.png"
        views.append(
            ViewEntry(
                view_id=view_id,
                image_path=img_path,
                camera_path=cam_path,
                specular_path=spec_path if spec_path.is_file() else None,
            )
        )
    if not views:
        raise SceneLoadError(f"no views found under {render_dir}")

    light_path = root / "Light_info" / "lights.json"
    return SceneManifest(
        root=root,
        views=views,
        mesh_path=mesh_path,
        light_path=light_path if light_path.is_file() else None,
    )


def load_camera(path, width: int, height: int, view_id: str = "") -> CameraView:
    """Read one camera text file: 16 intrinsics reals then 16 pose reals."""
    path = Path(path)
    try:
        values = np.loadtxt(path, dtype=np.float64).reshape(-1)
    except Exception as exc:
        raise SceneLoadError(f"malformed camera file {path}: {exc}") from exc
    if values.size != 32:
        raise SceneLoadError(
            f"malformed camera file {path}: expected 32 values, got {values.size}"
        )
    intr = values[:16].reshape(4, 4)
    pose = values[16:].reshape(4, 4)
    try:
        return CameraView(intr, pose, width, height, view_id=view_id or path.stem)
    except ValueError as exc:
        raise SceneLoadError(f"invalid camera in {path}: {exc}") from exc


def save_camera(cam: CameraView, path) -> None:
    path = Path(path)
    rows = []
    for mat in (cam.intrinsics, cam.cam_to_world):
        for r in range(4):
            rows.append(" ".join(f"{v:.17g}" for v in mat[r]))
    path.write_text("\n".join(rows) + "\n")


# -- PLY -------------------------------------------------------------------

_PLY_SCALARS = {
    "float": ("f", 4), "float32": ("f", 4),
    "double": ("d", 8), "float64": ("d", 8),
    "uchar": ("B", 1), "uint8": ("B", 1),
    "char": ("b", 1), "int8": ("b", 1),
    "ushort": ("H", 2), "uint16": ("H", 2),
    "short": ("h", 2), "int16": ("h", 2),
    "uint": ("I", 4), "uint32": ("I", 4),
    "int": ("i", 4), "int32": ("i", 4),
}


def _triangulate(indices, path):
    if len(indices) == 3:
        return [indices]
    if len(indices) == 4:
        return [indices[:3], [indices[0], indices[2], indices[3]]]
    raise SceneLoadError(
        f"{path}: face with {len(indices)} vertices (only triangles and quads supported)"
    )


def load_ply(path) -> TriangleMesh:
    """Parse an ASCII or binary-little-endian PLY triangle mesh.

    Quads are fan-triangulated as (0,1,2),(0,2,3).  Elements other than
    vertex/face are skipped with a warning; extra vertex properties are
    read past and ignored.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise SceneLoadError(f"{path}: not a PLY file")
        fmt = None
        elements = []  # (name, count, [(kind, ...), ...])
        while True:
            line = fh.readline()
            if not line:
                raise SceneLoadError(f"{path}: unterminated PLY header")
            tokens = line.decode("ascii", "replace").strip().split()
            if not tokens or tokens[0] == "comment":
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2]), []))
            elif tokens[0] == "property":
                if not elements:
                    raise SceneLoadError(f"{path}: property before element")
                if tokens[1] == "list":
                    elements[-1][2].append(("list", tokens[2], tokens[3], tokens[4]))
                else:
                    elements[-1][2].append(("scalar", tokens[1], tokens[2]))
            elif tokens[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise SceneLoadError(f"{path}: unsupported PLY format {fmt!r}")

        vertices = None
        faces = None
        for name, count, props in elements:
            if name == "vertex":
                vertices = _read_vertices(fh, fmt, count, props, path)
            elif name == "face":
                faces = _read_faces(fh, fmt, count, props, path)
            else:
                logger.warning("%s: skipping unsupported PLY element %r", path, name)
                _skip_element(fh, fmt, count, props, path)

    if vertices is None:
        raise SceneLoadError(f"{path}: no vertex element")
    if faces is None:
        raise SceneLoadError(f"{path}: no face element")
    return TriangleMesh(vertices, np.asarray(faces, dtype=np.int32))


def _read_vertices(fh, fmt, count, props, path):
    names = []
    fmts = []
    for p in props:
        if p[0] == "list":
            raise SceneLoadError(f"{path}: list property on vertex element")
        names.append(p[2])
        fmts.append(_PLY_SCALARS[p[1]][0])
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise SceneLoadError(f"{path}: vertex element lacks {axis}")
    idx = [names.index(a) for a in ("x", "y", "z")]

    out = np.empty((count, 3), dtype=np.float64)
    if fmt == "ascii":
        for i in range(count):
            parts = fh.readline().split()
            for j, k in enumerate(idx):
                out[i, j] = float(parts[k])
    else:
        rec = struct.Struct("<" + "".join(fmts))
        buf = fh.read(rec.size * count)
        if len(buf) != rec.size * count:
            raise SceneLoadError(f"{path}: truncated vertex data")
        for i, values in enumerate(rec.iter_unpack(buf)):
            out[i, 0] = values[idx[0]]
            out[i, 1] = values[idx[1]]
            out[i, 2] = values[idx[2]]
    return out


def _read_faces(fh, fmt, count, props, path):
    if len(props) != 1 or props[0][0] != "list":
        raise SceneLoadError(f"{path}: unsupported face element layout")
    _, count_type, index_type, _ = props[0]
    tris = []
    if fmt == "ascii":
        for _ in range(count):
            parts = fh.readline().split()
            n = int(parts[0])
            tris.extend(_triangulate([int(v) for v in parts[1:n + 1]], path))
    else:
        cf, cs = _PLY_SCALARS[count_type]
        vf, vs = _PLY_SCALARS[index_type]
        for _ in range(count):
            n = struct.unpack("<" + cf, fh.read(cs))[0]
            idx = struct.unpack(f"<{n}{vf}", fh.read(vs * n))
            tris.extend(_triangulate(list(idx), path))
    return tris


def _skip_element(fh, fmt, count, props, path):
    if fmt == "ascii":
        for _ in range(count):
            fh.readline()
        return
    fixed = 0
    lists = []
    for p in props:
        if p[0] == "list":
            lists.append((fixed, p[1], p[2]))
            fixed = 0
        else:
            fixed += _PLY_SCALARS[p[1]][1]
    if not lists:
        fh.read(fixed * count)
        return
    for _ in range(count):
        for pre, count_type, item_type in lists:
            fh.read(pre)
            cf, cs = _PLY_SCALARS[count_type]
            n = struct.unpack("<" + cf, fh.read(cs))[0]
            fh.read(_PLY_SCALARS[item_type][1] * n)
        fh.read(fixed)


def save_ply(mesh: TriangleMesh, path, binary: bool = True) -> None:
    """Write a triangle mesh; binary is double precision (exact round trip)."""
    path = Path(path)
    n_v = mesh.vertices.shape[0]
    n_f = mesh.faces.shape[0]
    if binary:
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {n_v}\n"
            "property double x\nproperty double y\nproperty double z\n"
            f"element face {n_f}\n"
            "property list uchar int vertex_indices\n"
            "end_header\n"
        )
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
            for f in mesh.faces:
                fh.write(struct.pack("<Biii", 3, int(f[0]), int(f[1]), int(f[2])))
    else:
        lines = [
            "ply", "format ascii 1.0",
            f"element vertex {n_v}",
            "property double x", "property double y", "property double z",
            f"element face {n_f}",
            "property list uchar int vertex_indices",
            "end_header",
        ]
        for v in mesh.vertices:
            lines.append(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
        for f in mesh.faces:
            lines.append(f"3 {f[0]} {f[1]} {f[2]}")
        path.write_text("\n".join(lines) + "\n")


# -- Lights ----------------------------------------------------------------

def load_light_info(path) -> List[LightInfo]:
    """Parse the lights JSON; unknown keys ignored, unknown types tagged."""
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    lights = []
    for entry in data:
        ltype = str(entry.get("type", "Point"))
        if ltype not in LIGHT_TYPES:
            logger.warning("%s: unknown light type %r", path, ltype)
            ltype = f"Other({ltype})"
        strength = float(entry.get("strength", 0.0))
        if strength < 0:
            raise ValueError(f"{path}: negative light strength {strength}")
        color = np.asarray(entry.get("color", [1.0, 1.0, 1.0]), dtype=np.float64)
        if (color < 0).any():
            raise ValueError(f"{path}: negative color component")
        lights.append(
            LightInfo(
                type=ltype,
                position=np.asarray(entry.get("position", [0, 0, 0]), dtype=np.float64),
                orientation=np.asarray(entry.get("orientation", [0, 0, -1]), dtype=np.float64),
                color=color,
                strength=strength,
            )
        )
    return lights


def save_light_info(lights, path) -> None:
    data = [
        {
            "type": li.type,
            "position": [float(x) for x in li.position],
            "orientation": [float(x) for x in li.orientation],
            "color": [float(x) for x in li.color],
            "strength": float(li.strength),
        }
        for li in lights
    ]
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# -- Rasters ---------------------------------------------------------------

def load_rgb_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def load_gray_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def save_png(arr: np.ndarray, path) -> None:
    """Write uint8 RGB/gray, uint16 gray, or a bool mask as PNG."""
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    if arr.dtype == np.uint16:
        Image.fromarray(arr, mode="I;16").save(path)
    else:
        Image.fromarray(arr).save(path)


def load_mask_png(path) -> np.ndarray:
    return load_gray_png(path) > 127


# -- Scene emission --------------------------------------------------------

def write_scene_layout(scene, bundles, root) -> None:
    """Write a synthetic scene plus its renders as a LIGHTS-layout tree."""
    root = Path(root)
    for sub in ("Cam_Info", "Light_info", "Mesh_info", "Rendering_info"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    save_ply(scene.mesh, root / "Mesh_info" / "scene.ply")
    save_light_info(
        [
            LightInfo("Point", li.position, np.array([0.0, 0.0, -1.0]), li.color, li.strength)
            for li in scene.lights
        ],
        root / "Light_info" / "lights.json",
    )
    for cam, bundle in zip(scene.cameras, bundles):
        vid = cam.view_id
        save_camera(cam, root / "Cam_Info" / f"camera_{vid}.txt")
        rdir = root / "Rendering_info"
        save_png(bundle.image, rdir / f"Image_{vid}.png")
        save_png(bundle.specular_gt, rdir / f"Specular_{vid}.png")
        depth_mm = np.where(np.isfinite(bundle.depth), bundle.depth * 1000.0, 0.0)
        save_png(np.clip(depth_mm, 0, 65535).astype(np.uint16), rdir / f"Depth_{vid}.png")
        normal_u8 = np.floor((bundle.normal * 0.5 + 0.5) * 255.0 + 0.5).astype(np.uint8)
        save_png(normal_u8, rdir / f"Normal_{vid}.png")
