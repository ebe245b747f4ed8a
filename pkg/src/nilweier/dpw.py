"""Surface generation: integrate the potential, split, and apply the Sym formulas.

The frame used for the Sym formulas is F in cell E and F omega0 in cell OMEGA;
in both cases it equals S C Vplus^{-1}. Spinors are recovered from that frame
with the scale read off the Maurer-Cartan form, which for C' = C eta is
Vplus_0 eta_{-1} Vplus_0^{-1} in degree -1 and needs no differentiation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BoundaryCell,
    CellMismatch,
    DegenerateMetric,
    NumericError,
    OutsideBigCell,
    StepUnderflow,
    VerticalPoint,
)
from .factorization import COND_MAX, DELTA_CELL, Cell, IwasawaResult, iwasawa_su11
from .loop_core import (
    DEFAULT_GRID,
    DEFAULT_ORDER,
    SIGMA3,
    TwistedLoop,
    chop,
    exp_degree_one,
    identity_loop,
    lambda_moments,
)
from .nil3 import Isometry, iso_apply, left_invariant_components
from .potentials import DegreeOnePotential, Potential

SQRT_I = np.exp(1j * np.pi / 4)
LORENTZ = np.diag([1.0, 1.0, -1.0])


def _thread_count() -> int:
    env = os.environ.get("NILWEIER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


# integration ------------------------------------------------------------

def _rk4_step(c, z, dz, h, coef):
    k1 = c @ coef(z)
    k2 = (c + 0.5 * h * k1) @ coef(z + 0.5 * h * dz)
    k3 = (c + 0.5 * h * k2) @ coef(z + 0.5 * h * dz)
    k4 = (c + h * k3) @ coef(z + h * dz)
    return c + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(eta: Potential, path: Sequence[complex], C0: TwistedLoop | None = None,
              rtol: float = 1e-10, h_min: float = 1e-10, order: int | None = None,
              grid_size: int | None = None) -> TwistedLoop:
    """Solve dC = C eta along a polyline, starting from C0 at path[0].

    Constant degree-one potentials use the exact exponential; otherwise a
    classical RK4 with step doubling runs independently at every grid lambda.
    """
    if C0 is None:
        C0 = identity_loop(order or DEFAULT_ORDER, grid_size or DEFAULT_GRID)
    order = C0.order
    grid_size = C0.grid_size
    path = [complex(z) for z in path]
    if isinstance(eta, DegreeOnePotential):
        shift = path[-1] - path[0]
        return C0 @ exp_degree_one(eta.loop(order, grid_size), shift)

    def coef(z):
        return eta.coefficient(z, order, grid_size).values() * dz

    c = C0.values()
    for z_start, z_end in zip(path[:-1], path[1:]):
        dz = z_end - z_start
        if dz == 0:
            continue
        s, h = 0.0, 0.1
        while s < 1.0 - 1e-15:
            h = min(h, 1.0 - s)
            z = z_start + s * dz
            full = _rk4_step(c, z, dz, h, coef)
            half = _rk4_step(c, z, dz, 0.5 * h, coef)
            half = _rk4_step(half, z + 0.5 * h * dz, dz, 0.5 * h, coef)
            err = np.max(np.abs(full - half)) / max(1.0, np.max(np.abs(half)))
            if err <= rtol:
                c = half + (half - full) / 15.0
                s += h
                h *= min(4.0, 0.9 * (rtol / max(err, 1e-300)) ** 0.2)
            else:
                h *= max(0.1, 0.9 * (rtol / err) ** 0.2)
                if h < h_min:
                    raise StepUnderflow(f"step {h:.2e} below minimum near z = {z}")
    return TwistedLoop.from_values(c, order, C0.twisted, C0.tail_tol)


# frame grids ------------------------------------------------------------

@dataclass
class FrameGrid:
    """Iwasawa results on a rectangular grid z = x + iy, indexed [iy, ix]."""

    xs: np.ndarray
    ys: np.ndarray
    potential: Potential
    S: TwistedLoop
    z0: complex
    C0: TwistedLoop
    results: list = field(default_factory=list)
    cells: np.ndarray = None

    @property
    def hx(self) -> float:
        return float(self.xs[1] - self.xs[0]) if len(self.xs) > 1 else 0.0

    @property
    def hy(self) -> float:
        return float(self.ys[1] - self.ys[0]) if len(self.ys) > 1 else 0.0

    def z(self, iy: int, ix: int) -> complex:
        return complex(self.xs[ix], self.ys[iy])

    def result(self, iy: int, ix: int) -> IwasawaResult | None:
        return self.results[iy][ix]


def frame_at(eta: Potential, z: complex, S: TwistedLoop, C0: TwistedLoop | None = None,
             z0: complex = 0j, C: TwistedLoop | None = None) -> IwasawaResult:
    """Iwasawa split of S C(z) for a single point."""
    if C is None:
        C = integrate(eta, [z0, z], C0, order=S.order, grid_size=S.grid_size)
    return iwasawa_su11(S @ C)


class _located:
    """Context manager that prefixes numeric errors with a grid location."""

    def __init__(self, iy: int, ix: int, z: complex):
        self.where = f"grid point iy={iy}, ix={ix}, z={z.real:.6g}{z.imag:+.6g}i"

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, NumericError) and not getattr(exc, "located", False):
            err = type(exc)(f"{self.where}: {exc}")
            err.located = True
            raise err from exc
        return False


def frame_grid(eta: Potential, xs, ys, S: TwistedLoop | None = None,
               C0: TwistedLoop | None = None, z0: complex = 0j,
               order: int = DEFAULT_ORDER, grid_size: int = DEFAULT_GRID,
               threads: int | None = None, delta_cell: float = DELTA_CELL,
               cond_max: float = COND_MAX) -> FrameGrid:
    """Frames on the grid; boundary samples are stored as None with cell BOUNDARY.

    Any other numeric failure is re-raised with the grid location attached.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if S is None:
        S = identity_loop(order, grid_size)
    if C0 is None:
        C0 = identity_loop(S.order, S.grid_size)
    threads = threads or _thread_count()

    # serial continuation along the first column, then rows in parallel
    first_col = []
    if isinstance(eta, DegreeOnePotential):
        first_col = [None] * len(ys)
    else:
        c = C0
        for iy in range(len(ys)):
            start = z0 if iy == 0 else complex(xs[0], ys[iy - 1])
            with _located(iy, 0, complex(xs[0], ys[iy])):
                c = integrate(eta, [start, complex(xs[0], ys[iy])], c)
            first_col.append(c)

    def run_row(iy: int):
        row, cells = [], []
        c_prev = first_col[iy]
        for ix, x in enumerate(xs):
            z = complex(x, ys[iy])
            with _located(iy, ix, z):
                if isinstance(eta, DegreeOnePotential):
                    c = integrate(eta, [z0, z], C0)
                elif ix == 0:
                    c = c_prev
                else:
                    c = integrate(eta, [complex(xs[ix - 1], ys[iy]), z], c_prev)
                c_prev = c
                try:
                    res = iwasawa_su11(S @ c, delta_cell, cond_max)
                except (BoundaryCell, OutsideBigCell):
                    res = None
            row.append(res)
            cells.append(Cell.BOUNDARY.value if res is None else res.cell.value)
        return row, cells

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_row, range(len(ys))))
    else:
        rows = [run_row(iy) for iy in range(len(ys))]
    fg = FrameGrid(xs, ys, eta, S, z0, C0)
    fg.results = [r for r, _ in rows]
    fg.cells = np.array([c for _, c in rows])
    return fg


# Sym formulas -----------------------------------------------------------

def su11_coordinates(X: np.ndarray) -> np.ndarray:
    """Coefficients (x1, x2, x3) of X in the basis
    E1 = ((0, i), (-i, 0))/2, E2 = ((0, -1), (-1, 0))/2, E3 = ((-i, 0), (0, i))/2."""
    x1 = -1j * (X[..., 0, 1] - X[..., 1, 0])
    x2 = -(X[..., 0, 1] + X[..., 1, 0])
    x3 = 2j * X[..., 0, 0]
    return np.real(np.stack([x1, x2, x3], axis=-1))


def su11_matrix(x) -> np.ndarray:
    x1, x2, x3 = x
    return 0.5 * np.array([[-1j * x3, 1j * x1 - x2], [-1j * x1 - x2, 1j * x3]])


def lorentz_inner(X: np.ndarray, Y: np.ndarray) -> float:
    """<X, Y> = 2 tr(XY), so that E1, E2 have norm 1 and E3 has norm -1."""
    return float(np.real(2 * np.trace(X @ Y)))


def _sym_data(F: TwistedLoop, lam: complex = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(f_L3, l d f_L3, N) at lam from the first three lambda-moments of F.

    With L = (l dF) F^{-1}:
    f_L3 = -i L - (i/2) F s3 F^{-1},
    l d f_L3 = -i ((l d)^2 F F^{-1} - L^2) - (i/2) ((l dF) s3 F^{-1} - F s3 F^{-1} L).
    """
    F0, F1, F2 = lambda_moments(chop(F), lam, 3)
    F0inv = np.linalg.inv(F0)
    L = F1 @ F0inv
    rot = F0 @ SIGMA3 @ F0inv
    f_l3 = -1j * L - 0.5j * rot
    df_l3 = -1j * (F2 @ F0inv - L @ L) - 0.5j * (F1 @ SIGMA3 @ F0inv - rot @ L)
    return f_l3, df_l3, 0.5j * rot


def sym_L3(F: TwistedLoop, lam: complex = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(f_L3, N) with f_L3 = -i l dF F^{-1} - (i/2) F s3 F^{-1}, N = (i/2) F s3 F^{-1}."""
    f_l3, _, N = _sym_data(F, lam)
    return f_l3, N


def _frame_sign(F: TwistedLoop) -> int:
    F1 = F.at_one()
    return 1 if np.real((np.conj(F1.T) @ SIGMA3 @ F1)[0, 0]) > 0 else -1


def sym_nil(F: TwistedLoop, cell: Cell | str | None = None, lam: complex = 1.0) -> np.ndarray:
    """Nil3 point: off-diagonal of f_L3 minus (i/2) times the diagonal of l d f_L3.

    Pass F in cell E and F omega0 in cell OMEGA; if ``cell`` is given it is
    checked against the frame, which is sigma3-unitary in cell E and
    anti-unitary after the omega0 shift.
    """
    if cell is not None:
        cell = Cell(cell) if not isinstance(cell, Cell) else cell
        expected = 1 if cell is Cell.E else -1
        if _frame_sign(F) != expected:
            raise CellMismatch(f"frame does not belong to cell {cell.value}")
    val, dval, _ = _sym_data(F, lam)
    off = val * np.array([[0, 1], [1, 0]])
    diag = dval * np.eye(2)
    return su11_coordinates(off - 0.5j * diag)


# spinors and induced data -----------------------------------------------

def maurer_cartan_entry(res: IwasawaResult, eta_minus1: np.ndarray) -> complex:
    """Upper-right lambda^{-1} entry of the (1,0)-part of frame^{-1} d frame."""
    v0 = res.Vplus.coeff(0)
    return complex((v0 @ eta_minus1 @ np.linalg.inv(v0))[0, 1])


def spinors_from_result(res: IwasawaResult, eta_minus1: np.ndarray,
                        tol: float = 1e-10) -> tuple[complex, complex, float]:
    """(psi1, psi2, h) from a split frame and the potential's lambda^{-1} part.

    The frame is rotated by a constant unitary diagonal so that the
    Maurer-Cartan entry becomes -i|m|; then h = 4|m| and the spinors are
    sqrt(i) (F11, F12) sqrt(h/2).
    """
    m = maurer_cartan_entry(res, eta_minus1)
    frame = res.sym_frame.at_one()
    sign = 1 if np.real(abs(frame[0, 0]) ** 2 - abs(frame[0, 1]) ** 2) > 0 else -1
    h = 4 * abs(m) * sign
    if abs(h) <= tol:
        raise VerticalPoint(f"support h = {h:.3e}")
    phase = np.exp(1j * (np.pi / 4 + 0.5 * np.angle(m)))
    scale = np.sqrt(abs(h) / 2)
    psi1 = SQRT_I * frame[0, 0] * phase * scale
    psi2 = SQRT_I * frame[0, 1] / phase * scale
    return complex(psi1), complex(psi2), float(h)


def spinors_from_frame(fg: FrameGrid, iy: int, ix: int) -> tuple[complex, complex]:
    res = fg.result(iy, ix)
    if res is None:
        raise BoundaryCell(f"grid point ({iy}, {ix}) is on the cell boundary")
    eta = fg.potential.coefficient(fg.z(iy, ix), res.F.order, res.F.grid_size)
    psi1, psi2, _ = spinors_from_result(res, eta.coeff(-1))
    return psi1, psi2


@dataclass(frozen=True)
class SurfaceSample:
    z: complex
    f: np.ndarray
    fL3: np.ndarray
    N: np.ndarray
    psi1: complex
    psi2: complex
    e_u: float
    h: float
    g: complex
    U_dirac: complex
    Bcoef: complex | None = None


def _d(arr: np.ndarray, hx: float, hy: float) -> tuple[np.ndarray, np.ndarray]:
    """Central differences on interior points: (d/dx, d/dy)."""
    dx = (arr[1:-1, 2:] - arr[1:-1, :-2]) / (2 * hx)
    dy = (arr[2:, 1:-1] - arr[:-2, 1:-1]) / (2 * hy)
    return dx, dy


def wirtinger(arr: np.ndarray, hx: float, hy: float) -> tuple[np.ndarray, np.ndarray]:
    """(d, dbar) with d = (d/dx - i d/dy)/2 on interior points."""
    dx, dy = _d(arr, hx, hy)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def surface_quantities(psi1: np.ndarray, psi2: np.ndarray, hx: float, hy: float,
                       tol: float = 1e-10) -> dict[str, np.ndarray]:
    """Metric, support, Gauss map, Dirac potential and Hopf data from spinor grids.

    e_u, h, g and U_dirac are returned on the full grid; A and Bcoef, which
    need derivatives, on the interior.
    """
    psi1 = np.asarray(psi1, dtype=complex)
    psi2 = np.asarray(psi2, dtype=complex)
    n1, n2 = np.abs(psi1) ** 2, np.abs(psi2) ** 2
    h = 2 * (n1 - n2)
    if np.min(np.abs(h)) <= tol:
        raise VerticalPoint("support function vanishes on the grid")
    e_u = 4 * (n1 + n2) ** 2
    g = psi2 / np.conj(psi1)
    out = {"e_u": e_u, "h": h, "g": g, "U_dirac": 0.25j * h}
    if psi1.ndim == 2 and min(psi1.shape) >= 3:
        d1, _ = wirtinger(psi1, hx, hy)
        _, dbar2 = wirtinger(psi2, hx, hy)
        p1 = psi1[1:-1, 1:-1]
        p2b = np.conj(psi2[1:-1, 1:-1])
        A = 2 * (p1 * np.conj(dbar2) - p2b * d1) + 4j * p1**2 * p2b**2
        phi3 = 2 * p1 * p2b
        out["A"] = A
        out["Bcoef"] = 0.25j * A + 0.25 * phi3**2
    return out


def dirac_residual(psi1: np.ndarray, psi2: np.ndarray, hx: float, hy: float) -> float:
    """max over interior points of |d psi2 + U psi1| and |-dbar psi1 + V psi2|, U = V = (i/4) h."""
    psi1 = np.asarray(psi1, dtype=complex)
    psi2 = np.asarray(psi2, dtype=complex)
    h = 2 * (np.abs(psi1) ** 2 - np.abs(psi2) ** 2)
    U = 0.25j * h[1:-1, 1:-1]
    d2, _ = wirtinger(psi2, hx, hy)
    _, dbar1 = wirtinger(psi1, hx, hy)
    r1 = np.abs(d2 + U * psi1[1:-1, 1:-1])
    r2 = np.abs(-dbar1 + U * psi2[1:-1, 1:-1])
    return float(max(r1.max(), r2.max()))


def _gamma(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """sum u^i v^j nabla_{e_i} e_j for the left-invariant Levi-Civita connection."""
    return np.stack([
        0.5 * (u[..., 1] * v[..., 2] + u[..., 2] * v[..., 1]),
        -0.5 * (u[..., 0] * v[..., 2] + u[..., 2] * v[..., 0]),
        0.5 * (u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]),
    ], axis=-1)


def _fd_derivatives(f: np.ndarray, hx: float, hy: float):
    c = f[1:-1, 1:-1]
    fx = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * hx)
    fy = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * hy)
    fxx = (f[1:-1, 2:] - 2 * c + f[1:-1, :-2]) / hx**2
    fyy = (f[2:, 1:-1] - 2 * c + f[:-2, 1:-1]) / hy**2
    fxy = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4 * hx * hy)
    return c, fx, fy, fxx, fyy, fxy


def _third_component_derivative(c, u, v, uv):
    """d/dv of the e3-component of the left-invariant form applied to u."""
    return uv[..., 2] + 0.5 * (v[..., 1] * u[..., 0] + c[..., 1] * uv[..., 0]
                               - v[..., 0] * u[..., 1] - c[..., 0] * uv[..., 1])


def mean_curvature_nil3(f: np.ndarray, hx: float, hy: float, tol: float = 1e-12) -> np.ndarray:
    """Mean curvature on interior points of a sampled immersion f[iy, ix, :] into Nil3."""
    f = np.asarray(f, dtype=float)
    c, fx, fy, fxx, fyy, fxy = _fd_derivatives(f, hx, hy)
    a = left_invariant_components(c, fx)
    b = left_invariant_components(c, fy)
    da_x = np.concatenate([fxx[..., :2], _third_component_derivative(c, fx, fx, fxx)[..., None]], -1)
    db_y = np.concatenate([fyy[..., :2], _third_component_derivative(c, fy, fy, fyy)[..., None]], -1)
    db_x = np.concatenate([fxy[..., :2], _third_component_derivative(c, fy, fx, fxy)[..., None]], -1)
    normal = np.cross(a, b)
    nn = np.linalg.norm(normal, axis=-1)
    E = np.sum(a * a, -1)
    G = np.sum(b * b, -1)
    Fm = np.sum(a * b, -1)
    det = E * G - Fm**2
    if np.min(det) <= tol or np.min(nn) <= tol:
        raise DegenerateMetric("induced metric degenerates on the grid")
    n = normal / nn[..., None]
    L = np.sum((da_x + _gamma(a, a)) * n, -1)
    Nn = np.sum((db_y + _gamma(b, b)) * n, -1)
    M = np.sum((db_x + _gamma(a, b)) * n, -1)
    return (E * Nn - 2 * Fm * M + G * L) / (2 * det)


def conformality_residual(f: np.ndarray, hx: float, hy: float) -> tuple[float, float]:
    """(max |<fx, fy>| / |fx|^2, max | |fx|^2 - |fy|^2 | / |fx|^2) in the Nil3 metric."""
    f = np.asarray(f, dtype=float)
    c, fx, fy, *_ = _fd_derivatives(f, hx, hy)
    a = left_invariant_components(c, fx)
    b = left_invariant_components(c, fy)
    E = np.sum(a * a, -1)
    return (float(np.max(np.abs(np.sum(a * b, -1)) / E)),
            float(np.max(np.abs(E - np.sum(b * b, -1)) / E)))


def metric_factor(f: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """sqrt(|fx|^2) in the Nil3 metric on interior points, i.e. e^{u/2} for conformal f."""
    c, fx, *_ = _fd_derivatives(np.asarray(f, dtype=float), hx, hy)
    a = left_invariant_components(c, fx)
    return np.sqrt(np.sum(a * a, -1))


def mean_curvature_minkowski(x: np.ndarray, N: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Mean curvature of a sampled spacelike surface x[iy, ix, :] in Minkowski space.

    Coordinates are in the basis E1, E2, E3 with metric diag(1, 1, -1); N is the
    unit timelike normal at the interior points. The sign convention is
    H = <(1/2) Laplace-Beltrami x, N>, so that the Sym normal gives H = +1/2.
    """
    c, fx, fy, fxx, fyy, fxy = _fd_derivatives(np.asarray(x, dtype=float), hx, hy)

    def ip(u, v):
        return np.einsum("...i,ij,...j->...", u, LORENTZ, v)

    E, G, Fm = ip(fx, fx), ip(fy, fy), ip(fx, fy)
    L, Nn, M = ip(fxx, N), ip(fyy, N), ip(fxy, N)
    return (E * Nn - 2 * Fm * M + G * L) / (2 * (E * G - Fm**2))


def normal_from_gauss_map(g: complex) -> np.ndarray:
    """Left-translated unit normal (2 Re g, 2 Im g, 1 - |g|^2) / (1 + |g|^2)."""
    d = 1 + abs(g) ** 2
    return np.array([2 * g.real, 2 * g.imag, 1 - abs(g) ** 2]) / d


# whole-surface driver -----------------------------------------------------

@dataclass
class SurfaceGrid:
    """Sampled surface; arrays are indexed [iy, ix] and NaN on boundary samples."""

    frames: FrameGrid
    f: np.ndarray
    fL3: np.ndarray
    N: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    h: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.frames.cells != Cell.BOUNDARY.value


def surface_from_frames(fg: FrameGrid) -> SurfaceGrid:
    ny, nx = len(fg.ys), len(fg.xs)
    f = np.full((ny, nx, 3), np.nan)
    fl3 = np.full((ny, nx, 3), np.nan)
    nrm = np.full((ny, nx, 3), np.nan)
    psi1 = np.full((ny, nx), np.nan, dtype=complex)
    psi2 = np.full((ny, nx), np.nan, dtype=complex)
    h = np.full((ny, nx), np.nan)
    for iy in range(ny):
        for ix in range(nx):
            res = fg.result(iy, ix)
            if res is None:
                continue
            frame = res.sym_frame
            f[iy, ix] = sym_nil(frame)
            x_l3, n_l3 = sym_L3(frame)
            fl3[iy, ix] = su11_coordinates(x_l3)
            nrm[iy, ix] = su11_coordinates(n_l3)
            eta = fg.potential.coefficient(fg.z(iy, ix), frame.order, frame.grid_size)
            try:
                p1, p2, hv = spinors_from_result(res, eta.coeff(-1))
            except VerticalPoint:
                continue
            psi1[iy, ix], psi2[iy, ix], h[iy, ix] = p1, p2, hv
    return SurfaceGrid(fg, f, fl3, nrm, psi1, psi2, h)


def generate(eta: Potential, xs, ys, S: TwistedLoop | None = None, **kwargs) -> SurfaceGrid:
    return surface_from_frames(frame_grid(eta, xs, ys, S, **kwargs))


def surface_point(eta: Potential, z: complex, S: TwistedLoop, C0: TwistedLoop | None = None,
                  z0: complex = 0j) -> np.ndarray:
    """Nil3 point of the surface at a single z."""
    return sym_nil(frame_at(eta, z, S, C0, z0).sym_frame)


# rigid-motion alignment -----------------------------------------------------

def align_rigid(f_gen: np.ndarray, f_ref: np.ndarray) -> tuple[Isometry, float]:
    """Fit rho in Iso0(Nil3) with rho.f_gen ~ f_ref; returns (rho, max vertex error).

    The rotation comes from a least-squares fit of the centered horizontal
    parts, the horizontal translation from their means and the vertical
    translation from the mean of the remaining x3 offset.
    """
    g = np.asarray(f_gen, dtype=float).reshape(-1, 3)
    r = np.asarray(f_ref, dtype=float).reshape(-1, 3)
    ok = np.all(np.isfinite(g), axis=1) & np.all(np.isfinite(r), axis=1)
    g, r = g[ok], r[ok]
    gh = g[:, 0] + 1j * g[:, 1]
    rh = r[:, 0] + 1j * r[:, 1]
    gc, rc = gh - gh.mean(), rh - rh.mean()
    cross = np.sum(np.conj(gc) * rc)
    theta = float(np.angle(cross)) if abs(cross) > 0 else 0.0
    rot = np.exp(1j * theta) * gh
    alpha = np.mean(rh - rot)
    t3 = np.mean(r[:, 2] - g[:, 2] - 0.5 * np.imag(np.conj(alpha) * rot))
    rho = Isometry(np.array([alpha.real, alpha.imag, t3]), theta)
    err = float(np.max(np.abs(iso_apply(rho, g) - r)))
    return rho, err
