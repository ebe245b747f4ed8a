"""Truncated Laurent loops of 2x2 complex matrices.

A loop g(lambda) = sum_{|n| <= N} c_n lambda^n is stored as its coefficient
array together with the size M of the equispaced unit-circle grid used for
pointwise products. Twisted loops satisfy g(-lambda) = s3 g(lambda) s3: the
diagonal lives in even degrees and the off-diagonal in odd degrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import SingularLoop, TailOverflow

DEFAULT_ORDER = 32
DEFAULT_GRID = 256
DEFAULT_TAIL_TOL = 1e-10

SIGMA3 = np.diag([1.0 + 0j, -1.0 + 0j])
IDENTITY = np.eye(2, dtype=complex)

_DIAG = np.array([[True, False], [False, True]])


def _twist_mask(order: int) -> np.ndarray:
    """Boolean mask of the entries forbidden by the twist, shape (2N+1, 2, 2)."""
    degrees = np.arange(-order, order + 1)
    odd = (degrees % 2 != 0)[:, None, None]
    return np.where(odd, _DIAG[None], ~_DIAG[None])


@dataclass(frozen=True, eq=False)
class TwistedLoop:
    """Laurent polynomial loop with coefficients for degrees -N..N.

    ``coeffs[n + N]`` is the coefficient of lambda**n. ``twisted`` records
    whether the twist parity is an invariant of this loop; derivatives with
    respect to lambda break it. ``tail`` is the relative Frobenius mass that
    was discarded when the loop was produced from grid values.
    """

    coeffs: np.ndarray
    grid_size: int = DEFAULT_GRID
    twisted: bool = True
    tail: float = 0.0
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1:] != (2, 2) or c.shape[0] % 2 != 1:
            raise ValueError(f"coefficient array must have shape (2N+1, 2, 2), got {c.shape}")
        if self.grid_size < 2 * c.shape[0] + 2:
            raise ValueError(f"grid of size {self.grid_size} too small for order {(c.shape[0] - 1) // 2}")
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, terms: Mapping[int, np.ndarray], order: int = DEFAULT_ORDER,
                  grid_size: int = DEFAULT_GRID, twisted: bool = True,
                  tail_tol: float = DEFAULT_TAIL_TOL) -> "TwistedLoop":
        coeffs = np.zeros((2 * order + 1, 2, 2), dtype=complex)
        for n, mat in terms.items():
            if abs(n) > order:
                raise ValueError(f"degree {n} exceeds truncation order {order}")
            coeffs[n + order] = np.asarray(mat, dtype=complex)
        return cls(coeffs, grid_size, twisted, 0.0, tail_tol)

    @classmethod
    def constant(cls, mat, order: int = DEFAULT_ORDER, grid_size: int = DEFAULT_GRID,
                 tail_tol: float = DEFAULT_TAIL_TOL) -> "TwistedLoop":
        mat = np.asarray(mat, dtype=complex)
        twisted = bool(np.all(mat[~_DIAG] == 0))
        return cls.from_dict({0: mat}, order, grid_size, twisted, tail_tol)

    @classmethod
    def from_values(cls, values: np.ndarray, order: int, twisted: bool = True,
                    tail_tol: float = DEFAULT_TAIL_TOL) -> "TwistedLoop":
        """Build a loop from samples on the M-point grid, checking the tail."""
        values = np.asarray(values, dtype=complex)
        m = values.shape[0]
        full = np.fft.fft(values, axis=0) / m
        total = np.linalg.norm(full)
        kept = np.concatenate([full[m - order:], full[: order + 1]])
        tail_part = full[order + 1: m - order]
        tail = float(np.linalg.norm(tail_part) / total) if total > 0 else 0.0
        if tail > tail_tol:
            raise TailOverflow(f"tail mass {tail:.3e} exceeds tolerance {tail_tol:.1e} at order {order}")
        if twisted:
            kept[_twist_mask(order)] = 0.0
        return cls(kept, m, twisted, tail, tail_tol)

    # basic accessors ----------------------------------------------------

    @property
    def order(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def coeff(self, n: int) -> np.ndarray:
        if abs(n) > self.order:
            return np.zeros((2, 2), dtype=complex)
        return self.coeffs[n + self.order]

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)

    def values(self) -> np.ndarray:
        """Samples at lambda_k = exp(2 pi i k / M), shape (M, 2, 2)."""
        m, n = self.grid_size, self.order
        buf = np.zeros((m, 2, 2), dtype=complex)
        buf[: n + 1] = self.coeffs[n:]
        buf[m - n:] = self.coeffs[:n]
        return np.fft.ifft(buf, axis=0) * m

    def grid_points(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.grid_size) / self.grid_size)

    def __call__(self, lam: complex) -> np.ndarray:
        return loop_eval(self, lam)

    def at_one(self) -> np.ndarray:
        return self.coeffs.sum(axis=0)

    def twist_residual(self) -> float:
        """Largest coefficient entry that violates the twist parity."""
        return float(np.max(np.abs(self.coeffs[_twist_mask(self.order)]), initial=0.0))

    def with_order(self, order: int) -> "TwistedLoop":
        """Re-truncate (or zero-pad) to a different order."""
        if order >= self.order:
            pad = order - self.order
            coeffs = np.pad(self.coeffs, ((pad, pad), (0, 0), (0, 0)))
            grid = max(self.grid_size, _grid_for(order))
            return TwistedLoop(coeffs, grid, self.twisted, self.tail, self.tail_tol)
        cut = self.order - order
        kept = self.coeffs[cut: self.coeffs.shape[0] - cut]
        total = np.linalg.norm(self.coeffs)
        dropped = np.sqrt(max(total**2 - np.linalg.norm(kept) ** 2, 0.0))
        tail = float(dropped / total) if total > 0 else 0.0
        if tail > self.tail_tol:
            raise TailOverflow(f"tail mass {tail:.3e} exceeds tolerance at order {order}")
        return TwistedLoop(kept, self.grid_size, self.twisted, tail, self.tail_tol)

    # arithmetic ---------------------------------------------------------

    def _like(self, coeffs: np.ndarray, twisted: bool | None = None) -> "TwistedLoop":
        return TwistedLoop(coeffs, self.grid_size, self.twisted if twisted is None else twisted,
                           0.0, self.tail_tol)

    def __add__(self, other: "TwistedLoop") -> "TwistedLoop":
        a, b = _match_orders(self, other)
        return a._like(a.coeffs + b.coeffs, a.twisted and b.twisted)

    def __sub__(self, other: "TwistedLoop") -> "TwistedLoop":
        a, b = _match_orders(self, other)
        return a._like(a.coeffs - b.coeffs, a.twisted and b.twisted)

    def __neg__(self) -> "TwistedLoop":
        return self._like(-self.coeffs)

    def scale(self, s: complex) -> "TwistedLoop":
        return self._like(self.coeffs * s)

    def __matmul__(self, other: "TwistedLoop") -> "TwistedLoop":
        return loop_mul(self, other)

    def conj_by(self, mat) -> "TwistedLoop":
        """mat * g * mat^{-1} for a constant matrix."""
        mat = np.asarray(mat, dtype=complex)
        inv = np.linalg.inv(mat)
        return self._like(mat @ self.coeffs @ inv, self.twisted and _is_diagonal(mat))

    def left(self, mat) -> "TwistedLoop":
        mat = np.asarray(mat, dtype=complex)
        return self._like(mat @ self.coeffs, self.twisted and _is_diagonal(mat))

    def right(self, mat) -> "TwistedLoop":
        mat = np.asarray(mat, dtype=complex)
        return self._like(self.coeffs @ mat, self.twisted and _is_diagonal(mat))

    def inv(self) -> "TwistedLoop":
        return loop_inv(self)

    def diagonal_part(self) -> "TwistedLoop":
        return self._like(self.coeffs * _DIAG)

    def off_diagonal_part(self) -> "TwistedLoop":
        return self._like(self.coeffs * ~_DIAG)

    def max_abs_diff(self, other: "TwistedLoop") -> float:
        a, b = _match_orders(self, other)
        return float(np.max(np.abs(a.coeffs - b.coeffs)))


def _is_diagonal(mat: np.ndarray) -> bool:
    return bool(np.all(mat[~_DIAG] == 0))


def _grid_for(order: int) -> int:
    m = 4
    while m < 4 * order + 4:
        m *= 2
    return m


def _match_orders(a: TwistedLoop, b: TwistedLoop) -> tuple[TwistedLoop, TwistedLoop]:
    if a.order == b.order and a.grid_size == b.grid_size:
        return a, b
    order = max(a.order, b.order)
    a2, b2 = a.with_order(order), b.with_order(order)
    grid = max(a2.grid_size, b2.grid_size)
    a2 = TwistedLoop(a2.coeffs, grid, a2.twisted, a2.tail, a2.tail_tol)
    b2 = TwistedLoop(b2.coeffs, grid, b2.twisted, b2.tail, b2.tail_tol)
    return a2, b2


def identity_loop(order: int = DEFAULT_ORDER, grid_size: int = DEFAULT_GRID) -> TwistedLoop:
    return TwistedLoop.constant(IDENTITY, order, grid_size)


def omega0(order: int = DEFAULT_ORDER, grid_size: int = DEFAULT_GRID) -> TwistedLoop:
    """The loop ((0, lambda), (-1/lambda, 0)) separating the two Iwasawa cells."""
    return TwistedLoop.from_dict({1: [[0, 1], [0, 0]], -1: [[0, 0], [-1, 0]]}, order, grid_size)


def loop_eval(g: TwistedLoop, lam: complex) -> np.ndarray:
    """Sum of coeff(n) * lam**n; any nonzero lam is accepted."""
    powers = np.asarray(lam, dtype=complex) ** g.degrees
    return np.einsum("n,nij->ij", powers, g.coeffs)


def loop_mul(g: TwistedLoop, h: TwistedLoop) -> TwistedLoop:
    """Product via pointwise multiplication on the grid."""
    g, h = _match_orders(g, h)
    values = g.values() @ h.values()
    return TwistedLoop.from_values(values, g.order, g.twisted and h.twisted, g.tail_tol)


def _inv2(values: np.ndarray) -> np.ndarray:
    a, b = values[..., 0, 0], values[..., 0, 1]
    c, d = values[..., 1, 0], values[..., 1, 1]
    det = a * d - b * c
    if np.min(np.abs(det)) < 1e-12:
        raise SingularLoop(f"|det| = {np.min(np.abs(det)):.3e} at a grid point")
    out = np.empty_like(values)
    out[..., 0, 0] = d / det
    out[..., 0, 1] = -b / det
    out[..., 1, 0] = -c / det
    out[..., 1, 1] = a / det
    return out


def loop_inv(g: TwistedLoop) -> TwistedLoop:
    """Pointwise 2x2 inverse on the grid."""
    return TwistedLoop.from_values(_inv2(g.values()), g.order, g.twisted, g.tail_tol)


def reality_residual_su11(g: TwistedLoop) -> float:
    """max over the grid of ||g* s3 g - s3|| (Frobenius); zero for SU(1,1) loops."""
    v = g.values()
    gram = np.conj(np.swapaxes(v, -1, -2)) @ SIGMA3 @ v
    return float(np.max(np.linalg.norm(gram - SIGMA3, axis=(-2, -1))))


def lambda_derivative(g: TwistedLoop) -> TwistedLoop:
    """d/dlambda, exact on coefficients; the result is not twisted."""
    n = g.order
    coeffs = np.zeros((2 * (n + 1) + 1, 2, 2), dtype=complex)
    deg = g.degrees
    # degree k of g contributes k * c_k to degree k - 1; stored order is N + 1
    coeffs[deg - 1 + n + 1] = deg[:, None, None] * g.coeffs
    grid = max(g.grid_size, _grid_for(n + 1))
    return TwistedLoop(coeffs, grid, False, 0.0, g.tail_tol)


def lambda_euler(g: TwistedLoop) -> TwistedLoop:
    """lambda * d/dlambda, which keeps degrees and twist parity."""
    return g._like(g.degrees[:, None, None] * g.coeffs)


def _sinhc(delta: np.ndarray) -> np.ndarray:
    small = np.abs(delta) < 1e-4
    safe = np.where(small, 1.0, delta)
    d2 = delta * delta
    return np.where(small, 1 + d2 / 6 + d2 * d2 / 120, np.sinh(safe) / safe)


def exp_traceless_values(x: np.ndarray) -> np.ndarray:
    """exp of traceless 2x2 matrices via cosh(d) id + sinh(d)/d x, d^2 = -det x."""
    det = x[..., 0, 0] * x[..., 1, 1] - x[..., 0, 1] * x[..., 1, 0]
    delta = np.sqrt(-det + 0j)
    return np.cosh(delta)[..., None, None] * IDENTITY + _sinhc(delta)[..., None, None] * x


def exp_degree_one(D, z: complex, order: int | None = None,
                   grid_size: int | None = None) -> TwistedLoop:
    """exp(z D(lambda)) for a traceless loop D (or an object with ``loop()``)."""
    if not isinstance(D, TwistedLoop):
        D = D.loop(order or DEFAULT_ORDER, grid_size or DEFAULT_GRID)
    elif order is not None and order != D.order:
        D = D.with_order(order)
    if grid_size is not None and grid_size != D.grid_size:
        D = TwistedLoop(D.coeffs, grid_size, D.twisted, D.tail, D.tail_tol)
    values = exp_traceless_values(z * D.values())
    return TwistedLoop.from_values(values, D.order, D.twisted, D.tail_tol)


def chop(g: TwistedLoop, rel: float = 1e-15) -> TwistedLoop:
    """Zero every degree beyond the last one whose coefficient exceeds rel * max.

    Grid round trips leave noise of order machine epsilon in all coefficients;
    removing it keeps high-order lambda-derivatives from amplifying it.
    """
    mags = np.max(np.abs(g.coeffs), axis=(1, 2))
    top = mags.max()
    if top == 0:
        return g
    keep = np.nonzero(mags > rel * top)[0]
    lo, hi = keep.min(), keep.max()
    # keep a symmetric band so that degrees stay centred
    width = max(g.order - lo, hi - g.order)
    coeffs = g.coeffs.copy()
    coeffs[: g.order - width] = 0.0
    coeffs[g.order + width + 1:] = 0.0
    return g._like(coeffs)


def lambda_moments(g: TwistedLoop, lam: complex = 1.0, count: int = 3) -> list[np.ndarray]:
    """[g, (l d/dl) g, (l d/dl)^2 g, ...] evaluated at lam, exact on coefficients."""
    deg = g.degrees
    powers = np.asarray(lam, dtype=complex) ** deg
    return [np.einsum("n,nij->ij", powers * deg.astype(float) ** k, g.coeffs) for k in range(count)]
