"""Command-line front end: ``nilweier analyze|generate|verify --config PATH [--out DIR]``.

Config files are sectioned key = value text read with configparser. Complex
numbers are written ``re+imi`` (``0.5+0.7638i``, ``-1``, ``2i``), polynomial
coefficients and matrices as comma-separated lists.

Exit codes: 0 success, 2 configuration error, 3 numeric failure (including a
verification residual above its tolerance).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dpw import (
    dirac_residual,
    frame_at,
    frame_grid,
    mean_curvature_nil3,
    metric_factor,
    normal_from_gauss_map,
    surface_from_frames,
    surface_quantities,
)
from .equivariant import (
    EquivClass,
    Monodromy,
    analyze,
    boost_loop,
    classify,
    closing_check,
    diagonalizer,
    helicoidal_params,
    rho_from_monodromy,
)
from .errors import ConfigError, NilweierError, NumericError
from .factorization import COND_MAX, DELTA_CELL
from .loop_core import TwistedLoop, identity_loop, reality_residual_su11
from .nil3 import iso_apply, left_invariant_components
from .potentials import DegreeOnePotential, GeneralPotential, NormalizedPotential, det_at_one

CSV_COLUMNS = ["z_re", "z_im", "x1", "x2", "x3", "e_u", "h", "g_re", "g_im", "cell"]
SPINOR_COLUMNS = ["psi1_re", "psi1_im", "psi2_re", "psi2_im"]
FD_TOLERANCES = ("h_tol", "conformal_tol", "metric_tol", "dirac_tol")
VERIFY_CHECKS = ("mean_curvature", "conformality", "metric", "gauss_map", "dirac",
                 "equivariance", "reality")

NUMERIC_DEFAULTS = {
    "n": 32,
    "m": 256,
    "delta_cell": DELTA_CELL,
    "cond_max": COND_MAX,
    "classify_delta": 1e-10,
    # literal b values in config files carry only a few digits
    "catenoid_tol": 1e-4,
    "closing_tol": 1e-8,
    # finite-difference checks default to fd_constant * spacing^2
    "fd_constant": 100.0,
    "h_tol": None,
    "conformal_tol": None,
    "metric_tol": None,
    "dirac_tol": None,
    "equivariance_tol": 1e-6,
    "reality_tol": 1e-8,
}


# parsing ------------------------------------------------------------------

def parse_complex(text: str) -> complex:
    """Parse ``re+imi``; a lone imaginary part such as ``2i`` or ``-i`` is accepted."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ConfigError("empty complex literal")
    if s.endswith("i"):
        body = s[:-1]
        if body in ("", "+", "-"):
            body += "1"
        elif body[-1] in "+-" and (len(body) == 1 or body[-2] not in "eE"):
            body += "1"
        s = body + "j"
    try:
        return complex(s)
    except ValueError:
        raise ConfigError(f"cannot parse complex literal {text!r}") from None


def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def _complex_list(text: str) -> list[complex]:
    return [parse_complex(part) for part in text.split(",") if part.strip()]


def _matrix(text: str) -> np.ndarray:
    vals = _complex_list(text)
    if len(vals) != 4:
        raise ConfigError(f"matrix needs four entries m11, m12, m21, m22, got {text!r}")
    return np.array(vals, dtype=complex).reshape(2, 2)


@dataclass
class JobConfig:
    potential: object
    dressing_kind: str
    dressing: dict
    xs: np.ndarray
    ys: np.ndarray
    numerics: dict
    outputs: dict
    checks: tuple[str, ...] = VERIFY_CHECKS
    extra: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return int(self.numerics["n"])

    @property
    def grid_size(self) -> int:
        return int(self.numerics["m"])


def _get_float(section, key: str, default=None) -> float:
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key {key!r} in [{section.name}]")
        return float(default)
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} is not a number: {section[key]!r}") from None


def _get_int(section, key: str, default=None) -> int:
    val = _get_float(section, key, default)
    if val != int(val):
        raise ConfigError(f"[{section.name}] {key} must be an integer")
    return int(val)


def _parse_potential(sec) -> object:
    kind = sec.get("kind", "degree_one").strip()
    if kind == "degree_one":
        c = parse_complex(sec.get("c", "0"))
        if abs(c.imag) > 0:
            raise ConfigError("degree_one c must be real")
        try:
            return DegreeOnePotential(parse_complex(sec.get("a", "")), parse_complex(sec.get("b", "0")), c.real)
        except ValueError as exc:
            raise ConfigError(f"potential: {exc}") from None
    if kind == "normalized":
        if "p" not in sec or "b" not in sec:
            raise ConfigError("normalized potential needs p and B polynomial coefficients")
        p = _complex_list(sec["p"])
        if not any(p):
            raise ConfigError("normalized potential: p is identically zero")
        return NormalizedPotential(p, _complex_list(sec["b"]))
    if kind == "general":
        terms: dict[int, dict[int, np.ndarray]] = {}
        for key, value in sec.items():
            if key == "kind":
                continue
            m = re.fullmatch(r"z(\d+)_l(-?\d+)", key)
            if m is None:
                raise ConfigError(f"general potential key {key!r} is not of the form z<k>_l<n>")
            terms.setdefault(int(m.group(1)), {})[int(m.group(2))] = _matrix(value)
        if not terms:
            raise ConfigError("general potential has no terms")
        return terms
    raise ConfigError(f"unknown potential kind {kind!r}")


def load_config(path: str | Path) -> JobConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    known = {"potential", "dressing", "grid", "numerics", "outputs", "verify"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if "potential" not in parser or "grid" not in parser:
        raise ConfigError("config needs [potential] and [grid] sections")

    numerics = dict(NUMERIC_DEFAULTS)
    if "numerics" in parser:
        sec = parser["numerics"]
        for key in sec:
            if key not in NUMERIC_DEFAULTS and key != "tau":
                raise ConfigError(f"unknown numerics key {key!r}")
            numerics[key] = _get_float(sec, key)
    for key, val in numerics.items():
        if val is not None and not val > 0:
            raise ConfigError(f"numerics {key} must be positive")
    order, grid_size = int(numerics["n"]), int(numerics["m"])
    if order != numerics["n"] or grid_size != numerics["m"]:
        raise ConfigError("numerics N and M must be integers")
    if grid_size & (grid_size - 1) or grid_size < 4 * order + 4:
        raise ConfigError(f"M = {grid_size} must be a power of two with M >= 4N + 4")

    g = parser["grid"]
    x_min, x_max = _get_float(g, "x_min"), _get_float(g, "x_max")
    y_min, y_max = _get_float(g, "y_min"), _get_float(g, "y_max")
    nx, ny = _get_int(g, "nx"), _get_int(g, "ny")
    if not (x_min < x_max and y_min < y_max):
        raise ConfigError("grid ranges must be nonempty")
    if nx < 2 or ny < 2:
        raise ConfigError("grid needs nx, ny >= 2")

    potential = _parse_potential(parser["potential"])
    dressing = dict(parser["dressing"]) if "dressing" in parser else {}
    dressing_kind = dressing.pop("kind", "auto_diagonalizer").strip()
    if dressing_kind not in ("auto_diagonalizer", "identity", "boost", "explicit"):
        raise ConfigError(f"unknown dressing kind {dressing_kind!r}")

    outputs = {"formats": "obj, csv", "mesh": "surface.obj", "csv": "surface.csv",
               "spinors": "spinors.csv", "report": "report.txt", "verify": "verify.txt"}
    if "outputs" in parser:
        for key, val in parser["outputs"].items():
            if key not in outputs:
                raise ConfigError(f"unknown outputs key {key!r}")
            outputs[key] = val.strip()
    checks = VERIFY_CHECKS
    if "verify" in parser and "checks" in parser["verify"]:
        checks = tuple(c.strip() for c in parser["verify"]["checks"].split(",") if c.strip())
        bad = set(checks) - set(VERIFY_CHECKS)
        if bad:
            raise ConfigError(f"unknown verify checks {sorted(bad)}")
    return JobConfig(potential, dressing_kind, dressing,
                     np.linspace(x_min, x_max, nx), np.linspace(y_min, y_max, ny),
                     numerics, outputs, checks)


def build_potential(cfg: JobConfig):
    if isinstance(cfg.potential, dict):
        loops = {k: TwistedLoop.from_dict(v, cfg.order, cfg.grid_size)
                 for k, v in cfg.potential.items()}
        try:
            return GeneralPotential(loops)
        except ValueError as exc:
            raise ConfigError(f"potential: {exc}") from None
    return cfg.potential


def build_dressing(cfg: JobConfig) -> TwistedLoop:
    order, grid = cfg.order, cfg.grid_size
    kind = cfg.dressing_kind
    if kind == "identity":
        return identity_loop(order, grid)
    if kind == "boost":
        p = parse_complex(cfg.dressing.get("p", "0")).real
        q = parse_complex(cfg.dressing.get("q", "0")).real
        S = boost_loop(p, q, order, grid)
        if _auto_class(cfg) in (EquivClass.HELICOIDAL, EquivClass.HORIZONTAL_PLANE_FAMILY):
            S = S @ diagonalizer(cfg.potential, order, grid)
        return S
    if kind == "explicit":
        terms = {}
        for key, value in cfg.dressing.items():
            m = re.fullmatch(r"l(-?\d+)", key)
            if m is None:
                raise ConfigError(f"explicit dressing key {key!r} is not of the form l<n>")
            terms[int(m.group(1))] = _matrix(value)
        S = TwistedLoop.from_dict(terms, order, grid)
        if S.twist_residual() > 0:
            raise ConfigError("explicit dressing violates the twist parity")
        return S
    # auto_diagonalizer
    if _auto_class(cfg) in (EquivClass.HELICOIDAL, EquivClass.HORIZONTAL_PLANE_FAMILY):
        return diagonalizer(cfg.potential, order, grid)
    return identity_loop(order, grid)


def _auto_class(cfg: JobConfig) -> EquivClass | None:
    if not isinstance(cfg.potential, DegreeOnePotential):
        return None
    return classify(cfg.potential, cfg.numerics["classify_delta"])


# analyze ------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_analyze(cfg: JobConfig, out: Path) -> list[str]:
    P = cfg.potential
    if not isinstance(P, DegreeOnePotential):
        raise ConfigError("analyze needs a degree_one potential")
    num = cfg.numerics
    try:
        rep = analyze(P, num["classify_delta"], num["catenoid_tol"], cfg.order, cfg.grid_size)
    except NumericError as exc:
        raise type(exc)(f"analyze: {exc}") from exc
    lines = [f"class: {rep.cls.value}", f"det_at_one: {_fmt(det_at_one(P))}"]
    lines.append(f"ell: {_fmt(rep.ell)}")
    if rep.cls in (EquivClass.HELICOIDAL, EquivClass.HORIZONTAL_PLANE_FAMILY):
        lines.append(f"alpha: {format_complex(rep.alpha)}")
        lines.append(f"pitch: {_fmt(rep.pitch)}")
        if P.a == 1 and P.c == 2:
            try:
                _, alpha_cf, pitch_cf = helicoidal_params(P.b)
                lines.append(f"alpha_closed_form: {format_complex(alpha_cf)}")
                lines.append(f"pitch_closed_form: {_fmt(pitch_cf)}")
            except NumericError as exc:
                lines.append(f"closed_form: unavailable ({type(exc).__name__})")
    lines.append(f"catenoid: {'true' if rep.catenoid else 'false'}")
    if rep.direction is not None:
        lines.append("direction: " + " ".join(_fmt(v) for v in rep.direction))
    if rep.rho_generator is not None:
        for t in (0.1, 1.0):
            rho = rep.rho_generator(t)
            lines.append(f"rho_{t}: " + " ".join(_fmt(v) for v in (*rho.t, rho.theta)))
        tau = num.get("tau")
        if tau is None:
            tau = 1.0 if rep.cls is EquivClass.TRANSLATION else 2 * math.pi / rep.ell
        S = build_dressing(cfg)
        try:
            diag = closing_check(Monodromy(P, S), tau, num["closing_tol"])
        except NumericError as exc:
            raise type(exc)(f"closing_check: {exc}") from exc
        lines += [f"closing_tau: {_fmt(tau)}",
                  f"closing_monodromy_residual: {_fmt(diag.monodromy_residual)}",
                  f"closing_x_residual: {_fmt(diag.x_residual)}",
                  f"closing_y_residual: {_fmt(diag.y_residual)}",
                  f"closed: {'true' if diag.closed else 'false'}"]
    out.mkdir(parents=True, exist_ok=True)
    (out / cfg.outputs["report"]).write_text("\n".join(lines) + "\n")
    return lines


# generate -----------------------------------------------------------------

def _num(x: float) -> str:
    return "nan" if not np.isfinite(x) else f"{x:.17g}"


def write_csv(path: Path, xs, ys, surf, quantities, cells) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                f = surf.f[iy, ix]
                g = quantities["g"][iy, ix]
                w.writerow([_num(x), _num(y), *(_num(v) for v in f),
                            _num(quantities["e_u"][iy, ix]), _num(quantities["h"][iy, ix]),
                            _num(g.real), _num(g.imag), cells[iy, ix]])


def write_spinors(path: Path, surf) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPINOR_COLUMNS)
        for p1, p2 in zip(surf.psi1.ravel(), surf.psi2.ravel()):
            w.writerow([_num(p1.real), _num(p1.imag), _num(p2.real), _num(p2.imag)])


def write_obj(path: Path, f: np.ndarray, valid: np.ndarray) -> tuple[int, int]:
    """Vertices of valid samples; quads where all four corners survive, triangles where three do."""
    ny, nx = valid.shape
    index = -np.ones((ny, nx), dtype=int)
    lines = []
    count = 0
    for iy in range(ny):
        for ix in range(nx):
            if valid[iy, ix]:
                count += 1
                index[iy, ix] = count
                lines.append("v " + " ".join(_num(v) for v in f[iy, ix]))
    faces = 0
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            corners = [index[iy, ix], index[iy, ix + 1], index[iy + 1, ix + 1], index[iy + 1, ix]]
            kept = [c for c in corners if c > 0]
            if len(kept) >= 3:
                lines.append("f " + " ".join(str(c) for c in kept))
                faces += 1
    Path(path).write_text("\n".join(lines) + "\n")
    return count, faces


def _pointwise_quantities(surf) -> dict[str, np.ndarray]:
    ny, nx = surf.psi1.shape
    out = {"e_u": np.full((ny, nx), np.nan), "h": np.full((ny, nx), np.nan),
           "g": np.full((ny, nx), np.nan, dtype=complex)}
    ok = np.isfinite(surf.psi1) & np.isfinite(surf.psi2)
    if np.any(ok):
        q = surface_quantities(surf.psi1[ok], surf.psi2[ok], 0.0, 0.0)
        for key in out:
            out[key][ok] = q[key]
    return out


def cmd_generate(cfg: JobConfig, out: Path) -> list[str]:
    eta = build_potential(cfg)
    S = build_dressing(cfg)
    num = cfg.numerics
    fg = frame_grid(eta, cfg.xs, cfg.ys, S, order=cfg.order, grid_size=cfg.grid_size,
                    delta_cell=num["delta_cell"], cond_max=num["cond_max"])
    surf = surface_from_frames(fg)
    quantities = _pointwise_quantities(surf)
    out.mkdir(parents=True, exist_ok=True)
    formats = {f.strip() for f in cfg.outputs["formats"].split(",")}
    lines = []
    if "csv" in formats:
        write_csv(out / cfg.outputs["csv"], cfg.xs, cfg.ys, surf, quantities, fg.cells)
        write_spinors(out / cfg.outputs["spinors"], surf)
        lines.append(f"csv: {out / cfg.outputs['csv']}")
    if "obj" in formats:
        nv, nf = write_obj(out / cfg.outputs["mesh"], surf.f, surf.valid)
        lines.append(f"mesh: {out / cfg.outputs['mesh']} ({nv} vertices, {nf} faces)")
    boundary = int(np.sum(~surf.valid))
    lines.append(f"boundary_samples: {boundary}")
    return lines


# verify -------------------------------------------------------------------

@dataclass
class CsvSurface:
    xs: np.ndarray
    ys: np.ndarray
    f: np.ndarray
    e_u: np.ndarray
    h: np.ndarray
    g: np.ndarray
    cells: np.ndarray
    psi1: np.ndarray | None = None
    psi2: np.ndarray | None = None


def read_csv_surface(path: Path, spinor_path: Path | None = None) -> CsvSurface:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read surface CSV: {exc}") from None
    if not rows or rows[0] != CSV_COLUMNS:
        raise ConfigError(f"{path} does not have the surface CSV header")
    body = rows[1:]
    try:
        data = np.array([[float(v) for v in r[:9]] for r in body])
    except (ValueError, IndexError):
        raise ConfigError(f"{path} has malformed rows") from None
    cells = np.array([r[9] for r in body])
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if len(xs) * len(ys) != len(body):
        raise ConfigError(f"{path} is not a full rectangular grid")
    order = np.lexsort((data[:, 0], data[:, 1]))
    data, cells = data[order], cells[order]
    shape = (len(ys), len(xs))
    surf = CsvSurface(xs, ys, data[:, 2:5].reshape(*shape, 3), data[:, 5].reshape(shape),
                      data[:, 6].reshape(shape), (data[:, 7] + 1j * data[:, 8]).reshape(shape),
                      cells.reshape(shape))
    if spinor_path is not None and spinor_path.exists():
        with open(spinor_path, newline="") as fh:
            srows = list(csv.reader(fh))[1:]
        if len(srows) == len(body):
            s = np.array([[float(v) for v in r] for r in srows])[order]
            surf.psi1 = (s[:, 0] + 1j * s[:, 1]).reshape(shape)
            surf.psi2 = (s[:, 2] + 1j * s[:, 3]).reshape(shape)
    return surf


def _interior_valid(arr: np.ndarray) -> np.ndarray:
    ok = np.all(np.isfinite(arr.reshape(*arr.shape[:2], -1)), axis=-1)
    return ok[1:-1, 1:-1] & ok[:-2, 1:-1] & ok[2:, 1:-1] & ok[1:-1, :-2] & ok[1:-1, 2:] \
        & ok[:-2, :-2] & ok[:-2, 2:] & ok[2:, :-2] & ok[2:, 2:]


def _masked_max(values: np.ndarray, mask: np.ndarray) -> float:
    vals = np.abs(values[mask])
    return float(vals.max()) if vals.size else 0.0


def verify_surface(cfg: JobConfig, surf: CsvSurface) -> list[tuple[str, float | None, float, str]]:
    """Rows (name, value, tolerance, status) with status pass, fail, skipped or flagged."""
    hx = float(surf.xs[1] - surf.xs[0])
    hy = float(surf.ys[1] - surf.ys[0])
    num = dict(cfg.numerics)
    for key in FD_TOLERANCES:
        if num[key] is None:
            num[key] = num["fd_constant"] * max(hx, hy) ** 2
    rows = []
    checks = set(cfg.checks)
    f = np.where(np.isfinite(surf.f), surf.f, np.nan)
    mask = _interior_valid(f)

    def add(name, value, tol):
        status = "pass" if value is not None and value <= tol else "fail"
        rows.append((name, value, tol, status))

    if "mean_curvature" in checks:
        with np.errstate(divide="ignore", invalid="ignore"):
            H = mean_curvature_nil3(np.nan_to_num(f), hx, hy, tol=-1.0)
        add("mean_curvature", _masked_max(H, mask), num["h_tol"])
    if "conformality" in checks:
        c, fx, fy = _tangent_components(np.nan_to_num(f), hx, hy)
        E = np.sum(fx * fx, -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.abs(np.sum(fx * fy, -1)) / E
            r2 = np.abs(E - np.sum(fy * fy, -1)) / E
        add("conformality", max(_masked_max(r1, mask), _masked_max(r2, mask)), num["conformal_tol"])
    if "metric" in checks:
        emb = metric_factor(np.nan_to_num(f), hx, hy)
        with np.errstate(invalid="ignore"):
            ref = np.sqrt(surf.e_u[1:-1, 1:-1])
            rel = np.abs(emb - ref) / ref
        m = mask & np.isfinite(rel)
        add("metric", _masked_max(rel, m) if np.any(m) else None, num["metric_tol"])
    vertical = bool(np.any(np.isfinite(surf.h) & (np.abs(surf.h) <= 1e-10)))
    if "gauss_map" in checks:
        ok = np.isfinite(surf.g) & ~(np.abs(surf.h) <= 1e-10)
        gmax = float(np.max(np.abs(surf.g[ok]))) if np.any(ok) else None
        if gmax is None:
            rows.append(("gauss_map", None, 1.0, "skipped"))
        else:
            rows.append(("gauss_map", gmax, 1.0, "pass" if gmax < 1.0 else "fail"))
        # unit normal of the sampled surface against the normal encoded by g
        c, fx, fy = _tangent_components(np.nan_to_num(f), hx, hy)
        n = np.cross(fx, fy)
        with np.errstate(invalid="ignore", divide="ignore"):
            n = n / np.linalg.norm(n, axis=-1)[..., None]
        gi = surf.g[1:-1, 1:-1]
        m = mask & np.isfinite(gi) & ok[1:-1, 1:-1] if np.any(ok) else np.zeros_like(mask)
        if np.any(m):
            ref = np.stack([normal_from_gauss_map(complex(v)) for v in gi[m]])
            dev = np.linalg.norm(n[m] - ref, axis=-1)
            dev = np.minimum(dev, np.linalg.norm(n[m] + ref, axis=-1))
            add("normal", float(dev.max()), num["conformal_tol"])
    if vertical:
        rows.append(("spinors", None, 0.0, "flagged VerticalPoint"))
    if "dirac" in checks:
        if vertical or surf.psi1 is None:
            rows.append(("dirac", None, num["dirac_tol"], "skipped"))
        else:
            sub = _finite_block(surf.psi1, surf.psi2)
            if sub is None:
                rows.append(("dirac", None, num["dirac_tol"], "skipped"))
            else:
                add("dirac", dirac_residual(*sub, hx, hy), num["dirac_tol"])
    if "equivariance" in checks:
        rows.append(_equivariance_row(cfg, surf, hx))
    if "reality" in checks:
        rows.append(_reality_row(cfg))
    return rows


def _tangent_components(f, hx, hy):
    c = f[1:-1, 1:-1]
    fx = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * hx)
    fy = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * hy)
    return c, left_invariant_components(c, fx), left_invariant_components(c, fy)


def _finite_block(psi1, psi2):
    ok = np.isfinite(psi1) & np.isfinite(psi2)
    if np.all(ok):
        return psi1, psi2
    rows = np.where(np.all(ok, axis=1))[0]
    if len(rows) >= 3 and np.all(np.diff(rows) == 1):
        return psi1[rows], psi2[rows]
    return None


def _equivariance_row(cfg: JobConfig, surf: CsvSurface, hx: float):
    tol = cfg.numerics["equivariance_tol"]
    P = cfg.potential
    cls = _auto_class(cfg)
    if cls not in (EquivClass.TRANSLATION, EquivClass.HELICOIDAL, EquivClass.HORIZONTAL_PLANE_FAMILY):
        return ("equivariance", None, tol, "skipped")
    k = max(1, int(round(0.1 / hx)))
    if k >= len(surf.xs):
        return ("equivariance", None, tol, "skipped")
    t = k * hx
    try:
        rho = rho_from_monodromy(Monodromy(P, build_dressing(cfg)), t)
    except NumericError:
        return ("equivariance", None, tol, "skipped")
    moved = iso_apply(rho, np.nan_to_num(surf.f[:, :-k]))
    err = np.abs(surf.f[:, k:] - moved)
    ok = np.all(np.isfinite(surf.f[:, k:]), -1) & np.all(np.isfinite(surf.f[:, :-k]), -1)
    value = float(err[ok].max()) if np.any(ok) else None
    return ("equivariance", value, tol, "pass" if value is not None and value <= tol else "fail")


def _reality_row(cfg: JobConfig):
    tol = cfg.numerics["reality_tol"]
    eta = build_potential(cfg)
    S = build_dressing(cfg)
    xs = cfg.xs[np.linspace(0, len(cfg.xs) - 1, min(4, len(cfg.xs))).astype(int)]
    ys = cfg.ys[np.linspace(0, len(cfg.ys) - 1, min(4, len(cfg.ys))).astype(int)]
    worst = 0.0
    for y in ys:
        for x in xs:
            try:
                res = frame_at(eta, complex(x, y), S)
            except NumericError:
                continue
            worst = max(worst, reality_residual_su11(res.F))
    return ("reality", worst, tol, "pass" if worst <= tol else "fail")


def cmd_verify(cfg: JobConfig, out: Path) -> tuple[list[str], bool]:
    surf = read_csv_surface(out / cfg.outputs["csv"], out / cfg.outputs["spinors"])
    if len(surf.xs) < 3 or len(surf.ys) < 3:
        raise ConfigError("verify needs at least a 3 x 3 grid")
    rows = verify_surface(cfg, surf)
    lines = ["check value tolerance status"]
    for name, value, tol, status in rows:
        val = "-" if value is None else _fmt(value)
        lines.append(f"{name} {val} {_fmt(tol)} {status.replace(' ', '_')}")
    ok = all(status != "fail" for *_, status in rows)
    lines.append(f"result {'pass' if ok else 'fail'}")
    (out / cfg.outputs["verify"]).write_text("\n".join(lines) + "\n")
    return lines, ok


# entry point --------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nilweier", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["analyze", "generate", "verify"])
    parser.add_argument("--config", required=True, help="job configuration file")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        if args.command == "analyze":
            lines, ok = cmd_analyze(cfg, out), True
        elif args.command == "generate":
            lines, ok = cmd_generate(cfg, out), True
        else:
            lines, ok = cmd_verify(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except NilweierError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print("\n".join(lines))
    if not ok:
        print("verification failed", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
