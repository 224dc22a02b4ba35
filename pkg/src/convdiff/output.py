"""Writers for CSV, legacy ASCII VTK and minimal SVG line plots."""

from __future__ import annotations

import csv
import functools

import numpy as np

from .assembly import Solution


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    """Header and rows, with numeric fields converted to float."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            parsed = []
            for v in row:
                try:
                    parsed.append(float(v))
                except ValueError:
                    parsed.append(v)
            rows.append(parsed)
    return header, rows


@functools.lru_cache(maxsize=None)
def _sub_triangles(p: int, nodes_key: tuple):
    """Split the degree-p node lattice of the reference triangle into p^2 linear triangles."""
    nodes = np.array(nodes_key).reshape(-1, 2)
    lookup = {(int(round(x * p)), int(round(y * p))): k for k, (x, y) in enumerate(nodes)}
    tris = []
    for j in range(p):
        for i in range(p - j):
            tris.append((lookup[i, j], lookup[i + 1, j], lookup[i, j + 1]))
            if i + j <= p - 2:
                tris.append((lookup[i + 1, j], lookup[i + 1, j + 1], lookup[i, j + 1]))
    return np.array(tris, dtype=np.int64)


def linear_subdivision(solution: Solution) -> np.ndarray:
    """Linear sub-cells over all DOF points (segments in 1D, triangles in 2D)."""
    dm = solution.dofmap
    elem = dm.element
    if elem.cell_type == "interval":
        order = np.argsort(elem.nodes[:, 0], kind="stable")
        local = np.column_stack([order[:-1], order[1:]])
    else:
        local = _sub_triangles(dm.degree, tuple(elem.nodes.ravel()))
    return dm.cell_dofs[:, local].reshape(-1, local.shape[1])


def write_vtk(path, solution: Solution, title: str = "convection-diffusion solution"):
    """Legacy ASCII UNSTRUCTURED_GRID with point scalars ``u`` at every DOF."""
    coords = solution.coords
    cells = linear_subdivision(solution)
    npts = len(coords)
    xyz = np.zeros((npts, 3))
    xyz[:, : coords.shape[1]] = coords
    nv = cells.shape[1]
    vtk_type = 3 if nv == 2 else 5  # VTK_LINE / VTK_TRIANGLE
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {npts} double",
    ]
    lines += [" ".join(fmt(v) for v in row) for row in xyz]
    lines.append(f"CELLS {len(cells)} {len(cells) * (nv + 1)}")
    lines += [f"{nv} " + " ".join(str(int(i)) for i in c) for c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(vtk_type)] * len(cells)
    lines += [f"POINT_DATA {npts}", "SCALARS u double 1", "LOOKUP_TABLE default"]
    lines += [fmt(v) for v in solution.values]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_svg(path, series, title="", xlabel="x", ylabel="u", width=640, height=420):
    """Line plot of ``series``: a list of (label, xs, ys, colour) tuples."""
    ml, mr, mt, mb = 60, 20, 36, 48
    pw, ph = width - ml - mr, height - mt - mb
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = min(0.0, float(ys_all.min())), max(1.0, float(ys_all.max()))
    if x1 == x0:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for t in np.linspace(x0, x1, 6):
        out.append(f'<line x1="{sx(t):.2f}" y1="{mt + ph}" x2="{sx(t):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{mt + ph + 18}" text-anchor="middle" font-size="11">{t:.2f}</text>')
    for t in np.linspace(y0, y1, 6):
        out.append(f'<line x1="{ml - 5}" y1="{sy(t):.2f}" x2="{ml}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{sy(t) + 4:.2f}" text-anchor="end" font-size="11">{t:.2f}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{ylabel}</text>')
    for k, (label, xs, ys, colour) in enumerate(series):
        pts = " ".join(f"{sx(float(x)):.3f},{sy(float(y)):.3f}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 + 16 * k
        out.append(f'<line x1="{ml + pw - 130}" y1="{ly}" x2="{ml + pw - 105}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw - 100}" y="{ly + 4}" font-size="11">{label}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
