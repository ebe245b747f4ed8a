"""Birkhoff splitting of twisted loops and the two-cell SU(1,1) Iwasawa splitting.

The Iwasawa factors are obtained from a single Birkhoff factorization of
Q = phi(C)^{-1} C, where phi is the anti-holomorphic involution fixing the
twisted SU(1,1) loop group. The sign of the middle factor of Q decides the cell.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BoundaryCell, NumericError, OutsideBigCell
from .loop_core import (
    IDENTITY,
    SIGMA3,
    TwistedLoop,
    omega0,
)

COND_MAX = 1e12
DELTA_CELL = 1e-8


class Cell(enum.Enum):
    E = "E"
    OMEGA = "OMEGA"
    BOUNDARY = "BOUNDARY"


@dataclass(frozen=True)
class BirkhoffFactors:
    """X = minus * middle * plus with minus(inf) = id and plus(0) = id."""

    minus: TwistedLoop
    middle: np.ndarray
    plus: TwistedLoop
    plus_inv: TwistedLoop
    residual: float
    condition: float


@dataclass(frozen=True)
class IwasawaResult:
    """Normalized Iwasawa factors of a loop C.

    Cell E: C = F * Vplus. Cell OMEGA: C = F * omega0 * Vplus. ``l`` is the
    constant positive diagonal absorbed into Vplus (called k in cell OMEGA).
    """

    cell: Cell
    F: TwistedLoop
    Vplus: TwistedLoop
    l: np.ndarray
    middle: np.ndarray
    birkhoff_residual: float

    @property
    def sym_frame(self) -> TwistedLoop:
        """The frame fed to the Sym formulas: F, or F * omega0 in cell OMEGA."""
        if self.cell is Cell.OMEGA:
            return self.F @ omega0(self.F.order, self.F.grid_size)
        return self.F


def _block(mat_coeffs: np.ndarray, order: int, n: int) -> np.ndarray:
    if abs(n) > order:
        return np.zeros((2, 2), dtype=complex)
    return mat_coeffs[n + order]


def _toeplitz_solve(X: TwistedLoop, cond_max: float) -> tuple[np.ndarray, float]:
    """Coefficients of Y = plus^{-1} (Y_0 = id) making X * Y free of positive degrees."""
    n_ord = X.order
    k_ord = n_ord
    rows = n_ord + k_ord
    c = X.coeffs
    T = np.zeros((2 * rows, 2 * k_ord), dtype=complex)
    rhs = np.zeros((2 * rows, 2), dtype=complex)
    for n in range(1, rows + 1):
        r = 2 * (n - 1)
        rhs[r: r + 2] = -_block(c, n_ord, n)
        for m in range(max(1, n - n_ord), min(k_ord, n + n_ord) + 1):
            T[r: r + 2, 2 * (m - 1): 2 * m] = c[n - m + n_ord]
    q, r_mat, perm = scipy.linalg.qr(T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_mat))
    cond = float(diag[0] / diag[-1]) if diag[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > cond_max:
        raise OutsideBigCell(f"Toeplitz system condition estimate {cond:.3e} exceeds {cond_max:.1e}")
    sol_perm = scipy.linalg.solve_triangular(r_mat, q.conj().T @ rhs)
    sol = np.empty_like(sol_perm)
    sol[perm] = sol_perm
    y_coeffs = np.zeros_like(c)
    y_coeffs[n_ord] = IDENTITY
    y_coeffs[n_ord + 1: n_ord + 1 + k_ord] = sol.reshape(k_ord, 2, 2)
    return y_coeffs, cond


def _middle(X: TwistedLoop, y_coeffs: np.ndarray) -> np.ndarray:
    """Degree-0 coefficient of X * Y by direct convolution."""
    n = X.order
    return np.einsum("mij,mjk->ik", X.coeffs[n::-1], y_coeffs[n:])


def _finish(X: TwistedLoop, y_coeffs: np.ndarray, cond: float) -> BirkhoffFactors:
    n_ord = X.order
    Y = TwistedLoop(y_coeffs, X.grid_size, X.twisted, 0.0, X.tail_tol)
    xm = X @ Y
    middle = xm.coeff(0).copy()
    middle_inv = np.linalg.inv(middle)
    minus_coeffs = xm.coeffs.copy()
    minus_coeffs[n_ord + 1:] = 0.0
    minus = TwistedLoop(minus_coeffs @ middle_inv, X.grid_size, X.twisted, xm.tail, X.tail_tol)
    plus = Y.inv()
    recon = minus @ TwistedLoop.constant(middle, n_ord, X.grid_size) @ plus
    residual = float(np.max(np.abs(recon.coeffs - X.coeffs)))
    return BirkhoffFactors(minus, middle, plus, Y, residual, cond)


def birkhoff(X: TwistedLoop, cond_max: float = COND_MAX) -> BirkhoffFactors:
    """Factor X = minus * middle * plus by a block-Toeplitz least-squares solve.

    The unknowns are the coefficients Y_1..Y_K of Y = plus^{-1} (Y_0 = id),
    fixed by requiring X * Y to have no positive degrees.
    """
    y_coeffs, cond = _toeplitz_solve(X, cond_max)
    return _finish(X, y_coeffs, cond)


def real_form_involution(g: TwistedLoop) -> TwistedLoop:
    """phi(g)(lambda) = s3 (conj(g(1/conj(lambda)))^T)^{-1} s3 for unit-determinant g.

    On SL2 the inverse is the adjugate, so phi acts on coefficients by
    phi(g)_n = ((conj d, conj c), (conj b, conj a)) with (a, b, c, d) the
    entries of g_{-n}. No arithmetic is involved and phi(phi(g)) == g exactly.
    """
    src = g.coeffs[::-1]
    coeffs = np.empty_like(src)
    coeffs[:, 0, 0] = np.conj(src[:, 1, 1])
    coeffs[:, 0, 1] = np.conj(src[:, 1, 0])
    coeffs[:, 1, 0] = np.conj(src[:, 0, 1])
    coeffs[:, 1, 1] = np.conj(src[:, 0, 0])
    return TwistedLoop(coeffs, g.grid_size, g.twisted, g.tail, g.tail_tol)


def _star(g: TwistedLoop) -> TwistedLoop:
    """Coefficientwise conj(g(1/conj(lambda)))^T: reindex n -> -n and conjugate-transpose."""
    coeffs = np.conj(np.swapaxes(g.coeffs[::-1], -1, -2))
    return TwistedLoop(coeffs, g.grid_size, g.twisted, g.tail, g.tail_tol)


def _positive_sqrt_diag(value: float) -> np.ndarray:
    s = np.sqrt(value)
    return np.diag([s, 1.0 / s]).astype(complex)


def iwasawa_su11(C: TwistedLoop, delta_cell: float = DELTA_CELL,
                 cond_max: float = COND_MAX) -> IwasawaResult:
    """Two-cell Iwasawa splitting of a unit-determinant twisted loop."""
    # phi(C)^{-1} = s3 C^* s3 needs no inversion
    q_loop = _star(C).conj_by(SIGMA3) @ C
    y_coeffs, cond = _toeplitz_solve(q_loop, cond_max)
    # decide the cell before forming factors, which lose band-limitation near the boundary
    b11 = _middle(q_loop, y_coeffs)[0, 0]
    if abs(b11.imag) > 1e-8 * max(1.0, abs(b11)):
        raise NumericError(f"middle factor is not real: B11 = {b11}")
    b11 = b11.real
    if abs(b11) <= delta_cell:
        raise BoundaryCell(f"|B11| = {abs(b11):.3e} within {delta_cell:.1e} of the cell boundary")
    bf = _finish(q_loop, y_coeffs, cond)
    b11 = bf.middle[0, 0].real
    if b11 > 0:
        cell = Cell.E
        l = _positive_sqrt_diag(b11)
        F = (C @ bf.plus_inv).right(np.linalg.inv(l))
    else:
        cell = Cell.OMEGA
        l = _positive_sqrt_diag(-b11)
        w = omega0(C.order, C.grid_size)
        F = (C @ bf.plus_inv).right(np.linalg.inv(l)) @ w.scale(-1.0)
    Vplus = bf.plus.left(l)
    return IwasawaResult(cell, F, Vplus, l, bf.middle, bf.residual)


def meromorphic_frame(C: TwistedLoop, result: IwasawaResult | None = None) -> TwistedLoop:
    """U = C V_+^{-1}; equals F l in cell E and F omega0 k in cell OMEGA."""
    if result is None:
        result = iwasawa_su11(C)
    return result.sym_frame.right(result.l)
