"""
Grid evaluation, nodal-line extraction, and vortex bookkeeping.

A ``FieldMap`` holds one complex-valued transverse cross-section of a
selected wave function (unperturbed, first-order, or total) at fixed
(t, z).  On top of it this module provides

* zero-level contours of Re and Im by marching squares (their crossings
  are the wave-function zeros),
* zero localization: sign-change candidate cells refined by a 2D Newton
  iteration on (Re psi, Im psi) against the *exact* evaluator (never map
  interpolation), deduplicated, and charged via winding numbers,
* winding numbers from accumulated unwrapped phase around circles,
* inversion-symmetry measurement, azimuthal peak counting, and the CSV /
  binary / JSON artifact formats.

Map evaluation parallelizes over row blocks with worker processes when
requested; every point is a pure function of the inputs, so results are
independent of the worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .delta_pt import DeltaPerturbation, psi1_delta_batch
from .homogeneous import HomogeneousField, psi_homogeneous_grid
from .lg_core import PacketParams, psi_free_grid
from .numerics import QuadratureConfig
from .xfield_pt import XFieldPerturbation, psi1_xfield_batch

WHICH_CHOICES = ("zeroth", "first", "total")


class MapEvaluationError(RuntimeError):
    """Point evaluation failed; message carries the point coordinates."""


class AsymmetricGridError(ValueError):
    """Symmetry checks need an origin-symmetric grid with odd node counts."""


class ZeroOnContourError(RuntimeError):
    """A wave-function zero (numerically) lies on the sampling circle."""


class UnresolvedWindingError(RuntimeError):
    """Phase steps stayed >= pi at the sampling cap."""


class NewtonStallWarning(UserWarning):
    """A zero candidate failed to converge and was dropped."""


@dataclass(frozen=True)
class GridSpec:
    """Rectangular transverse grid at fixed time and longitudinal slice."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    t: float
    z: float
    which: str = "total"

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid extents must satisfy min < max")
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8 nodes per axis")
        if self.which not in WHICH_CHOICES:
            raise ValueError(f"which must be one of {WHICH_CHOICES}")

    @classmethod
    def centered(cls, half_extent, n, t, z, which="total"):
        return cls(-half_extent, half_extent, -half_extent, half_extent, n, n, t, z, which)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self):
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def cell(self):
        return (
            (self.x_max - self.x_min) / (self.nx - 1),
            (self.y_max - self.y_min) / (self.ny - 1),
        )


@dataclass
class FieldMap:
    """Complex amplitudes on a GridSpec plus provenance metadata."""

    grid: GridSpec
    values: np.ndarray  # shape (ny, nx)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("values shape must be (ny, nx)")


@dataclass(frozen=True)
class VortexZero:
    x: float
    y: float
    charge: int
    residual: float


@dataclass
class VortexSet:
    """Located wave-function zeros with charges, sorted by (x, y)."""

    zeros: list
    dedupe_radius: float
    search_radius: float
    metadata: dict = field(default_factory=dict)

    @property
    def total_charge(self):
        return sum(z.charge for z in self.zeros)


def _fingerprint(*parts):
    text = "|".join(repr(p) for p in parts)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def make_evaluator(which, params: PacketParams, pert, cfg: QuadratureConfig, t, z):
    """Vectorized (x, y) -> complex evaluator of the selected wave function."""

    def zeroth(x, y):
        return psi_free_grid(t, x, y, np.broadcast_to(z, np.shape(x)), params)

    if which == "zeroth" or pert is None:
        if which != "zeroth":
            raise ValueError("first/total evaluation needs a perturbation")
        return zeroth

    if isinstance(pert, DeltaPerturbation):
        def first(x, y):
            return psi1_delta_batch(t, x, y, z, params, pert, cfg)
    elif isinstance(pert, XFieldPerturbation):
        def first(x, y):
            return psi1_xfield_batch(t, x, y, z, params, pert, cfg)
    elif isinstance(pert, HomogeneousField):
        def first(x, y):
            return psi_homogeneous_grid(t, x, y, np.broadcast_to(z, np.shape(x)), params, pert) - zeroth(x, y)
    else:
        raise TypeError(f"unsupported perturbation type {type(pert).__name__}")

    if which == "first":
        return first
    return lambda x, y: zeroth(x, y) + first(x, y)


def _eval_rows(which, params, pert, cfg, t, z, xs, ys, mask_radius):
    """Evaluate one block of rows; points beyond mask_radius stay zero."""
    ev = make_evaluator(which, params, pert, cfg, t, z)
    out = np.zeros((ys.size, xs.size), dtype=complex)
    X, Y = np.meshgrid(xs, ys)
    flat_x, flat_y = X.ravel(), Y.ravel()
    if mask_radius is not None:
        keep = np.hypot(flat_x, flat_y) <= mask_radius
    else:
        keep = np.ones(flat_x.size, dtype=bool)
    if np.any(keep):
        try:
            vals = ev(flat_x[keep], flat_y[keep])
        except Exception as exc:
            i = int(np.flatnonzero(keep)[0])
            raise MapEvaluationError(
                f"evaluation failed in block starting at (x={flat_x[i]:g}, y={flat_y[i]:g}): {exc}"
            ) from exc
        buf = np.zeros(flat_x.size, dtype=complex)
        buf[keep] = vals
        out = buf.reshape(ys.size, xs.size)
    return out


def default_workers():
    env = os.environ.get("VPL_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def evaluate_map(grid: GridSpec, params: PacketParams, pert, cfg: QuadratureConfig,
                 workers=None, mask_radius=None) -> FieldMap:
    """Evaluate the selected wave function on the grid.

    ``mask_radius`` restricts evaluation to the disk rho <= mask_radius
    (outside points are stored as exactly zero); meant for zero-search
    maps where the far corners are never inspected.
    """
    if workers is None:
        workers = default_workers()
    xs, ys = grid.x, grid.y
    args = (grid.which, params, pert, cfg, grid.t, grid.z)

    if workers <= 1 or grid.ny < 4 * workers:
        values = _eval_rows(*args, xs, ys, mask_radius)
    else:
        blocks = np.array_split(np.arange(grid.ny), workers * 2)
        values = np.empty((grid.ny, grid.nx), dtype=complex)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_eval_rows, *args, xs, ys[b], mask_radius) for b in blocks if b.size
            ]
            for b, fut in zip([b for b in blocks if b.size], futures):
                values[b] = fut.result()

    meta = {
        "which": grid.which,
        "t": grid.t,
        "z": grid.z,
        "params": repr(params),
        "perturbation": repr(pert),
        "quadrature": repr(cfg),
        "mask_radius": mask_radius,
        "fingerprint": _fingerprint(grid, params, pert, cfg, mask_radius),
    }
    return FieldMap(grid=grid, values=values, metadata=meta)


# ---------------------------------------------------------------------------
# marching squares

_EDGES = {  # case index -> list of (edge_a, edge_b) segments
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)],
    7: [(3, 2)], 8: [(2, 3)], 9: [(2, 0)], 11: [(2, 1)], 12: [(1, 3)],
    13: [(1, 0)], 14: [(0, 3)],
}


def _edge_point(edge, i, j, xs, ys, f):
    """Linear zero crossing on a cell edge (cell corner (i, j) lower-left)."""
    if edge == 0:  # bottom: (i,j)-(i+1,j)
        a, b = f[j, i], f[j, i + 1]
        frac = a / (a - b)
        return (xs[i] + frac * (xs[i + 1] - xs[i]), ys[j])
    if edge == 1:  # right
        a, b = f[j, i + 1], f[j + 1, i + 1]
        frac = a / (a - b)
        return (xs[i + 1], ys[j] + frac * (ys[j + 1] - ys[j]))
    if edge == 2:  # top
        a, b = f[j + 1, i], f[j + 1, i + 1]
        frac = a / (a - b)
        return (xs[i] + frac * (xs[i + 1] - xs[i]), ys[j + 1])
    a, b = f[j, i], f[j + 1, i]  # left
    frac = a / (a - b)
    return (xs[i], ys[j] + frac * (ys[j + 1] - ys[j]))


def nodal_lines(fmap: FieldMap, part: str):
    """Zero-level contours of Re or Im as a list of polylines.

    Marching squares with linear edge interpolation; saddle cells are
    disambiguated by the cell-center average.  Returns a list of (N, 2)
    arrays; empty when the component has uniform sign.
    """
    if part not in ("real", "imag"):
        raise ValueError("part must be 'real' or 'imag'")
    f = fmap.values.real if part == "real" else fmap.values.imag
    xs, ys = fmap.grid.x, fmap.grid.y
    segments = []
    pos = f >= 0.0
    for j in range(fmap.grid.ny - 1):
        for i in range(fmap.grid.nx - 1):
            case = (
                int(pos[j, i])
                | int(pos[j, i + 1]) << 1
                | int(pos[j + 1, i + 1]) << 2
                | int(pos[j + 1, i]) << 3
            )
            if case in (0, 15):
                continue
            if case in (5, 10):
                center_pos = (f[j, i] + f[j, i + 1] + f[j + 1, i] + f[j + 1, i + 1]) >= 0.0
                if case == 5:
                    pairs = [(3, 0), (1, 2)] if center_pos else [(3, 2), (1, 0)]
                else:
                    pairs = [(0, 1), (2, 3)] if center_pos else [(0, 3), (2, 1)]
            else:
                pairs = _EDGES[case]
            for ea, eb in pairs:
                p1 = _edge_point(ea, i, j, xs, ys, f)
                p2 = _edge_point(eb, i, j, xs, ys, f)
                segments.append((p1, p2))

    # chain segments into polylines by shared endpoints
    def key(p):
        return (round(p[0], 9), round(p[1], 9))

    adj = {}
    for si, (p1, p2) in enumerate(segments):
        adj.setdefault(key(p1), []).append(si)
        adj.setdefault(key(p2), []).append(si)
    used = [False] * len(segments)
    polylines = []
    for si in range(len(segments)):
        if used[si]:
            continue
        used[si] = True
        chain = [segments[si][0], segments[si][1]]
        for end in (1, 0):
            while True:
                k = key(chain[-1] if end else chain[0])
                nxt = [m for m in adj.get(k, []) if not used[m]]
                if not nxt:
                    break
                m = nxt[0]
                used[m] = True
                p1, p2 = segments[m]
                new = p2 if key(p1) == k else p1
                if end:
                    chain.append(new)
                else:
                    chain.insert(0, new)
        polylines.append(np.array(chain))
    return polylines


# ---------------------------------------------------------------------------
# winding numbers and zero refinement

def winding_number_full(evaluator, center, radius, n_samples=64, n_cap=4096,
                        zero_rtol=1e-12):
    """Accumulated phase / 2pi around a circle, with sampling diagnostics.

    Returns (charge, residue, n_used).  Doubles the sampling until every
    per-step phase jump is below pi (or the cap is hit).
    """
    cx, cy = center
    n = n_samples
    while True:
        phi = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        vals = np.asarray(
            evaluator(cx + radius * np.cos(phi), cy + radius * np.sin(phi)), dtype=complex
        )
        amax = np.abs(vals).max()
        if amax == 0.0 or np.abs(vals).min() <= zero_rtol * amax:
            raise ZeroOnContourError(
                f"|psi| ~ 0 on the sampling circle at ({cx:g}, {cy:g}), r={radius:g}"
            )
        steps = np.angle(np.roll(vals, -1) / vals)
        if np.abs(steps).max() < 0.999 * math.pi:
            total = steps.sum() / (2.0 * math.pi)
            charge = int(round(total))
            return charge, abs(total - charge), n
        if n >= n_cap:
            raise UnresolvedWindingError(
                f"phase step >= pi with {n} samples at ({cx:g}, {cy:g}), r={radius:g}"
            )
        n *= 2


def winding_number(evaluator, center, radius, n_samples=64, n_cap=4096):
    """Integer topological charge on the circle (see winding_number_full)."""
    charge, residue, _ = winding_number_full(evaluator, center, radius, n_samples, n_cap)
    if residue > 0.05:
        warnings.warn(
            f"winding residue {residue:.3f} at ({center[0]:g}, {center[1]:g})",
            stacklevel=2,
        )
    return charge


def _newton_refine(evaluator, x0, y0, step_scale, map_scale, max_iter=60):
    """2D Newton on (Re psi, Im psi) with finite-difference Jacobian."""
    x, y = float(x0), float(y0)
    h = max(1e-9, 0.02 * step_scale)
    for _ in range(max_iter):
        xs = np.array([x, x + h, x - h, x, x])
        ys = np.array([y, y, y, y + h, y - h])
        v = np.asarray(evaluator(xs, ys), dtype=complex)
        f0 = v[0]
        if abs(f0) <= 1e-12 * map_scale:
            return x, y, abs(f0)
        dfdx = (v[1] - v[2]) / (2.0 * h)
        dfdy = (v[3] - v[4]) / (2.0 * h)
        jac = np.array([[dfdx.real, dfdy.real], [dfdx.imag, dfdy.imag]])
        try:
            dx, dy = np.linalg.solve(jac, [-f0.real, -f0.imag])
        except np.linalg.LinAlgError:
            return None
        limit = 3.0 * step_scale
        norm = math.hypot(dx, dy)
        if norm > limit:
            dx, dy = dx * limit / norm, dy * limit / norm
        x, y = x + dx, y + dy
        if norm < 1e-13 * max(step_scale, 1.0):
            break
    val = abs(complex(np.asarray(evaluator(np.array([x]), np.array([y])))[0]))
    if val <= 1e-8 * map_scale:
        return x, y, val
    return None


def find_zeros(fmap: FieldMap, params: PacketParams, pert, cfg: QuadratureConfig,
               search_radius=None, dedupe_radius=None, winding_cells=2.0,
               zero_residual_tol=1e-8) -> VortexSet:
    """Locate and charge the wave-function zeros seen by the map.

    Candidate cells (both Re and Im change sign across the cell) are
    refined by Newton iteration against the exact evaluator, merged
    within ``dedupe_radius`` (default: half the cell diagonal), filtered
    to rho <= search_radius (default: three times the initial transverse
    width 1/sigma), and assigned winding charges on circles of
    ``winding_cells`` grid cells.
    """
    grid = fmap.grid
    ev = make_evaluator(grid.which, params, pert, cfg, grid.t, grid.z)
    cell_diag = math.hypot(*grid.cell)
    if dedupe_radius is None:
        dedupe_radius = 0.5 * cell_diag
    if search_radius is None:
        search_radius = 3.0 / params.sigma

    f = fmap.values
    re, im = f.real, f.imag
    map_scale = np.abs(f).max()
    xs, ys = grid.x, grid.y

    def straddles(comp):
        c = np.stack([comp[:-1, :-1], comp[:-1, 1:], comp[1:, :-1], comp[1:, 1:]])
        return (c.min(axis=0) < 0.0) & (c.max(axis=0) > 0.0)

    cand = straddles(re) & straddles(im)
    jj, ii = np.nonzero(cand)
    cx = 0.5 * (xs[ii] + xs[ii + 1])
    cy = 0.5 * (ys[jj] + ys[jj + 1])
    inside = np.hypot(cx, cy) <= search_radius
    order = np.lexsort((cy[inside], cx[inside]))
    candidates = list(zip(cx[inside][order], cy[inside][order]))

    refined = []
    for x0, y0 in candidates:
        res = _newton_refine(ev, x0, y0, cell_diag, map_scale)
        if res is None:
            warnings.warn(
                f"zero candidate at ({x0:.3g}, {y0:.3g}) failed to converge; dropped",
                NewtonStallWarning,
                stacklevel=2,
            )
            continue
        x, y, residual = res
        if math.hypot(x, y) <= search_radius and residual <= zero_residual_tol * map_scale:
            refined.append((x, y, residual))

    refined.sort(key=lambda r: (r[0], r[1]))
    merged = []
    for x, y, residual in refined:
        for k, (mx, my, mres) in enumerate(merged):
            if math.hypot(x - mx, y - my) < dedupe_radius:
                if residual < mres:
                    merged[k] = (x, y, residual)
                break
        else:
            merged.append((x, y, residual))

    r_w = winding_cells * cell_diag / math.sqrt(2.0)
    zeros = []
    for x, y, residual in merged:
        charge = None
        for scale in (1.0, 1.3, 0.7):
            try:
                charge = winding_number(ev, (x, y), r_w * scale)
                break
            except (ZeroOnContourError, UnresolvedWindingError):
                continue
        if charge is None:
            warnings.warn(
                f"could not charge the zero at ({x:.3g}, {y:.3g}); dropped",
                NewtonStallWarning,
                stacklevel=2,
            )
            continue
        if charge != 0:
            zeros.append(VortexZero(x=x, y=y, charge=charge, residual=residual))

    zeros.sort(key=lambda zc: (zc.x, zc.y))
    return VortexSet(
        zeros=zeros,
        dedupe_radius=dedupe_radius,
        search_radius=search_radius,
        metadata={"fingerprint": fmap.metadata.get("fingerprint", "")},
    )


def check_symmetry(fmap: FieldMap, expected_sign: int):
    """Max relative deviation of psi(-x,-y) from expected_sign * psi(x,y).

    Requires an origin-symmetric grid with odd node counts so every node
    has an inversion partner.
    """
    g = fmap.grid
    if (
        not math.isclose(g.x_min, -g.x_max)
        or not math.isclose(g.y_min, -g.y_max)
        or g.nx % 2 == 0
        or g.ny % 2 == 0
    ):
        raise AsymmetricGridError("inversion check needs symmetric extents and odd nx, ny")
    v = fmap.values
    inv = v[::-1, ::-1]
    return float(np.abs(inv - expected_sign * v).max() / np.abs(v).max())


def count_ring_maxima(evaluator, r_lo, r_hi, n_phi=720, n_r=24, threshold=0.5):
    """Count azimuthal density maxima above threshold * (ring maximum).

    The density is maximized over radius within [r_lo, r_hi] per azimuth,
    then strict circular local maxima of that profile are counted.
    """
    phi = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    rr = np.linspace(r_lo, r_hi, n_r)
    X = rr[:, None] * np.cos(phi)[None, :]
    Y = rr[:, None] * np.sin(phi)[None, :]
    dens = np.abs(evaluator(X.ravel(), Y.ravel()).reshape(n_r, n_phi)) ** 2
    prof = dens.max(axis=0)
    cutoff = threshold * prof.max()
    left = np.roll(prof, 1)
    right = np.roll(prof, -1)
    idx = np.flatnonzero((prof > left) & (prof >= right) & (prof > cutoff))
    if idx.size == 0:
        return 0
    # near-flat peak tops can fire on adjacent samples; cluster anything
    # closer than ~6 degrees into one peak (true peaks of an l-fold
    # pattern are >= 360/l >= 45 degrees apart for l <= 8)
    min_sep = max(2, n_phi // 64)
    clusters = 1
    last = idx[0]
    for i in idx[1:]:
        if i - last >= min_sep:
            clusters += 1
        last = i
    # circular wrap: first and last cluster may be the same peak
    if clusters > 1 and (idx[0] + n_phi - idx[-1]) < min_sep:
        clusters -= 1
    return clusters


# ---------------------------------------------------------------------------
# serialization

def to_csv(fmap: FieldMap, path):
    """CSV artifact: '#' metadata header then x,y,re,im,density,phase rows.

    Floats are written with 17 significant digits so identical inputs
    produce byte-identical files.
    """
    g = fmap.grid
    with open(path, "w") as fh:
        fh.write("# vpl-fieldmap 1\n")
        grid_desc = {
            "x_min": g.x_min, "x_max": g.x_max, "y_min": g.y_min, "y_max": g.y_max,
            "nx": g.nx, "ny": g.ny, "t": g.t, "z": g.z, "which": g.which,
        }
        fh.write("# grid " + json.dumps(grid_desc, sort_keys=True) + "\n")
        for key in sorted(fmap.metadata):
            fh.write(f"# meta {key} {fmap.metadata[key]}\n")
        fh.write("x,y,re,im,density,phase\n")
        xs, ys = g.x, g.y
        v = fmap.values
        for j in range(g.ny):
            for i in range(g.nx):
                c = v[j, i]
                fh.write(
                    f"{xs[i]:.17g},{ys[j]:.17g},{c.real:.17g},{c.imag:.17g},"
                    f"{abs(c) ** 2:.17g},{math.atan2(c.imag, c.real):.17g}\n"
                )


def from_csv(path) -> FieldMap:
    grid_desc = None
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# grid "):
                grid_desc = json.loads(line[len("# grid "):])
            elif line.startswith("# meta "):
                key, _, val = line[len("# meta "):].rstrip("\n").partition(" ")
                meta[key] = val
            elif line.startswith("#") or line.startswith("x,"):
                continue
            else:
                rows.append(line)
    if grid_desc is None:
        raise ValueError(f"{path} lacks the '# grid' header")
    grid = GridSpec(**grid_desc)
    data = np.loadtxt(rows, delimiter=",").reshape(grid.ny, grid.nx, 6)
    return FieldMap(grid=grid, values=data[:, :, 2] + 1j * data[:, :, 3], metadata=meta)


def to_binary(fmap: FieldMap, path):
    """Row-major little-endian complex128 values plus a JSON sidecar."""
    g = fmap.grid
    fmap.values.astype("<c16").tofile(path)
    sidecar = {
        "format": "vpl-fieldmap-binary 1",
        "dtype": "<c16",
        "shape": [g.ny, g.nx],
        "order": "C",
        "grid": {
            "x_min": g.x_min, "x_max": g.x_max, "y_min": g.y_min, "y_max": g.y_max,
            "nx": g.nx, "ny": g.ny, "t": g.t, "z": g.z, "which": g.which,
        },
        "metadata": {k: str(v) for k, v in fmap.metadata.items()},
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)


def from_binary(path) -> FieldMap:
    with open(str(path) + ".json") as fh:
        sidecar = json.load(fh)
    grid = GridSpec(**sidecar["grid"])
    values = np.fromfile(path, dtype=sidecar["dtype"]).reshape(*sidecar["shape"])
    return FieldMap(grid=grid, values=values, metadata=sidecar.get("metadata", {}))


def vortex_set_to_json(vs: VortexSet, path):
    payload = {
        "zeros": [
            {"x": z.x, "y": z.y, "charge": z.charge, "residual": z.residual}
            for z in vs.zeros
        ],
        "dedupe_radius": vs.dedupe_radius,
        "search_radius": vs.search_radius,
        "metadata": {k: str(v) for k, v in vs.metadata.items()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def vortex_set_from_json(path) -> VortexSet:
    with open(path) as fh:
        payload = json.load(fh)
    zeros = [VortexZero(**z) for z in payload["zeros"]]
    return VortexSet(
        zeros=zeros,
        dedupe_radius=payload["dedupe_radius"],
        search_radius=payload["search_radius"],
        metadata=payload.get("metadata", {}),
    )


def nodal_lines_to_json(polylines_by_part: dict, path):
    payload = {
        part: [[[float(x), float(y)] for x, y in poly] for poly in polys]
        for part, polys in polylines_by_part.items()
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
