"""Mesh, CSV and report emission.

Grid quadrilaterals are triangulated along their shorter projected
diagonal; any cell touching a masked or unprojectable node drops out.
OBJ is ASCII (1-based indices), PLY is binary little-endian with float64
coordinates and a per-vertex quality channel carrying |H|.  All writers
are deterministic: vertex order is row-major, floats are printed with
repr precision, and no timestamps or environment state enter the output.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .surfaces import GeometryKind, SurfaceSample

POLE_EPS = 1e-9


def _proj_euclid_123(x):
    return x[..., (1, 2, 3)], np.ones(x.shape[:-1], dtype=bool)


def _proj_lorentz_120(x):
    return x[..., (1, 2, 0)], np.ones(x.shape[:-1], dtype=bool)


def _proj_isotropic(x):
    out = np.stack([x[..., 1], x[..., 2], 0.5 * (x[..., 0] - x[..., 3])], axis=-1)
    return out, np.ones(x.shape[:-1], dtype=bool)


def _proj_poincare(x):
    den = 1.0 + x[..., 0]
    ok = np.abs(den) > POLE_EPS
    with np.errstate(all="ignore"):
        out = x[..., 1:4] / den[..., None]
    return out, ok


def _proj_desitter(x):
    den = 1.0 + x[..., 3]
    ok = np.abs(den) > POLE_EPS
    with np.errstate(all="ignore"):
        out = x[..., 0:3] / den[..., None]
    return out, ok


def _proj_lightcone(x):
    den = x[..., 0]
    ok = den > POLE_EPS
    with np.errstate(all="ignore"):
        out = x[..., 1:4] / den[..., None]
    return out, ok


PROJECTIONS = {
    "euclid-123": _proj_euclid_123,
    "lorentz-120": _proj_lorentz_120,
    "isotropic-slice": _proj_isotropic,
    "poincare-ball": _proj_poincare,
    "desitter-stereo": _proj_desitter,
    "lightcone-slice": _proj_lightcone,
}

DEFAULT_PROJECTION = {
    GeometryKind.AFFINE_E3: "euclid-123",
    GeometryKind.AFFINE_L3: "lorentz-120",
    GeometryKind.AFFINE_ISOTROPIC: "isotropic-slice",
    GeometryKind.QUADRIC_H3: "poincare-ball",
    GeometryKind.QUADRIC_DESITTER: "desitter-stereo",
    GeometryKind.QUADRIC_LIGHTCONE: "lightcone-slice",
    GeometryKind.LW_BRYANT: "poincare-ball",
}


def project_surface(surface: SurfaceSample, model="default"):
    """3D chart of the 4D positions: (points, ok) with per-node validity."""
    if model in (None, "default"):
        model = DEFAULT_PROJECTION[surface.kind]
    try:
        fn = PROJECTIONS[model]
    except KeyError:
        raise ValueError(f"unknown projection model {model!r}") from None
    pts, ok = fn(surface.x)
    return pts, ok & np.isfinite(pts).all(axis=-1)


def triangulate(mask, points):
    """Triangles over valid grid cells, split along the shorter diagonal.

    mask/points are (nv, nu)[, 3]; returns (vertex_index_map, triangles)
    where triangles index into the row-major enumeration of valid nodes.
    """
    nv, nu = mask.shape
    index = -np.ones((nv, nu), dtype=int)
    index[mask] = np.arange(int(mask.sum()))
    tris = []
    for iv in range(nv - 1):
        for iu in range(nu - 1):
            a = (iv, iu)
            b = (iv, iu + 1)
            c = (iv + 1, iu + 1)
            d = (iv + 1, iu)
            if not (mask[a] and mask[b] and mask[c] and mask[d]):
                continue
            diag_ac = np.sum((points[a] - points[c]) ** 2)
            diag_bd = np.sum((points[b] - points[d]) ** 2)
            if diag_ac <= diag_bd:
                tris.append((index[a], index[b], index[c]))
                tris.append((index[a], index[c], index[d]))
            else:
                tris.append((index[b], index[c], index[d]))
                tris.append((index[b], index[d], index[a]))
    return index, np.asarray(tris, dtype=int).reshape(-1, 3)


class MeshExportError(RuntimeError):
    """Nothing meshable: every node is masked or unprojectable."""


def export_mesh(surface: SurfaceSample, path, *, projection="default",
                mesh_format="obj", quality=None):
    """Write the projected surface as OBJ (ascii) or PLY (binary LE).

    quality is an optional per-node scalar channel (|H| in the pipeline);
    PLY carries it per vertex, OBJ ignores it.  Returns (vertex_count,
    face_count).
    """
    pts, ok = project_surface(surface, projection)
    mask = surface.mask & ok
    if not np.any(mask):
        raise MeshExportError("no unmasked projectable nodes to mesh")
    index, tris = triangulate(mask, pts)
    verts = pts[mask]
    if quality is None:
        qual = np.zeros(len(verts))
    else:
        qual = np.abs(np.asarray(quality)[mask])
        qual = np.where(np.isfinite(qual), qual, 0.0)

    if mesh_format == "obj":
        _write_obj(path, verts, tris)
    elif mesh_format == "ply":
        _write_ply(path, verts, tris, qual)
    else:
        raise ValueError(f"unknown mesh format {mesh_format!r}")
    return len(verts), len(tris)


def _fmt(x):
    return repr(float(x))


def _write_obj(path, verts, tris):
    lines = []
    for v in verts:
        lines.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for t in tris:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_ply(path, verts, tris, qual):
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {len(verts)}\n"
        "property double x\n"
        "property double y\n"
        "property double z\n"
        "property double quality\n"
        f"element face {len(tris)}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for v, q in zip(verts, qual):
            fh.write(struct.pack("<4d", float(v[0]), float(v[1]), float(v[2]),
                                 float(q)))
        for t in tris:
            fh.write(struct.pack("<B3i", 3, int(t[0]), int(t[1]), int(t[2])))


def write_curvature_csv(surface: SurfaceSample, report, path):
    """Per-vertex CSV: u, v, re_z, im_z, x0..x3, H, K, then residual columns."""
    grid = surface.grid
    zs = grid.zs()
    nanfield = np.full(grid.shape, np.nan)
    named = [("H", report.fields.get("H", nanfield)),
             ("K", report.fields.get("K", nanfield))]
    if "K_int" in report.fields:
        named.append(("K_int", report.fields["K_int"]))
    for key in sorted(report.stats):
        named.append((key, report.fields[key]))
    cols = ["u", "v", "re_z", "im_z", "x0", "x1", "x2", "x3"]
    cols += [name for name, _ in named]
    lines = [",".join(cols)]
    for iv in range(grid.nv):
        for iu in range(grid.nu):
            if not surface.mask[iv, iu]:
                continue
            z = zs[iv, iu]
            row = [str(iu), str(iv), _fmt(z.real), _fmt(z.imag)]
            row += [_fmt(c) for c in surface.x[iv, iu]]
            for _name, field in named:
                val = field[iv, iu]
                row.append("nan" if not np.isfinite(val) else _fmt(val))
            lines.append(",".join(row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report(report, path, extra=None):
    """Serialize a verification report as deterministic JSON."""
    doc = report.to_dict()
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
