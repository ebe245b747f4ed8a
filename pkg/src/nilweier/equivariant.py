"""Symmetry classification and monodromy data for degree-one potentials.

The potential D dz is invariant under z -> z + t, so with an initial dressing S
the frames obey F(z + t) = M_t F(z) with M_t = S exp(tD) S^{-1}. The value of
M_t and its first two lambda-derivatives at lambda = 1 determine the Nil3
isometry rho_t that moves the surface.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateEll,
    NonUnimodularMonodromy,
    NullEigenvector,
    NumericError,
    PoleAtMinusOne,
)
from .loop_core import (
    DEFAULT_GRID,
    DEFAULT_ORDER,
    IDENTITY,
    SIGMA3,
    TwistedLoop,
    chop,
    exp_degree_one,
    lambda_euler,
    lambda_moments,
    omega0,
    reality_residual_su11,
)
from .nil3 import Isometry, decompose_isometry, helicoidal_motion
from .potentials import DegreeOnePotential, det_at_one

CLASSIFY_DELTA = 1e-10


class EquivClass(enum.Enum):
    TRANSLATION = "Translation"
    HELICOIDAL = "Helicoidal"
    HORIZONTAL_PLANE_FAMILY = "HorizontalPlaneFamily"
    NONSYMMETRIC_DET_ZERO = "NonSymmetric(detZero)"
    NONSYMMETRIC_DET_NEGATIVE = "NonSymmetric(detNegative)"


def classify(P: DegreeOnePotential, delta: float = CLASSIFY_DELTA) -> EquivClass:
    if np.max(np.abs(P.matrix(1.0))) <= delta:
        return EquivClass.TRANSLATION
    det = det_at_one(P)
    if det < -delta:
        return EquivClass.NONSYMMETRIC_DET_NEGATIVE
    if det <= delta:
        return EquivClass.NONSYMMETRIC_DET_ZERO
    if abs(P.b) <= delta:
        return EquivClass.HORIZONTAL_PLANE_FAMILY
    return EquivClass.HELICOIDAL


def _sigma3_norm(v: np.ndarray) -> float:
    return float(np.real(np.conj(v) @ SIGMA3 @ v))


def diagonalizing_matrix(P: DegreeOnePotential, tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Columns (e1, e2): sigma3-orthonormal eigenvectors of D(1), e1 of positive norm.

    Returns the matrix and the eigenvalue rate mu with D(1) e1 = i mu e1.
    The free phase of e1 is fixed by requiring e1[0] * e1[1] to be a negative
    multiple of i; e2 is then determined by the SU(1,1) structure.
    """
    D1 = P.matrix(1.0)
    evals, evecs = np.linalg.eig(D1)
    norms = [_sigma3_norm(evecs[:, k]) for k in range(2)]
    if min(abs(n) for n in norms) <= tol:
        raise NullEigenvector("an eigenvector of D(1) is null for the sigma3 form")
    k = int(np.argmax(norms))
    e1 = evecs[:, k] / np.sqrt(norms[k])
    prod = e1[0] * e1[1]
    if abs(prod) > tol:
        e1 = e1 * np.sqrt(-1j * abs(prod) / prod)
    else:
        e1 = e1 * np.exp(-1j * np.angle(e1[np.argmax(np.abs(e1))]))
    e2 = np.array([np.conj(e1[1]), np.conj(e1[0])])
    mu = float(np.real(evals[k] / 1j))
    return np.column_stack([e1, e2]), mu


def _split_loop(E: np.ndarray, order: int, grid_size: int) -> TwistedLoop:
    """diag(l^{1/2}, l^{-1/2}) E diag(l^{-1/2}, l^{1/2}) as a twisted loop."""
    return TwistedLoop.from_dict(
        {0: np.diag(np.diag(E)), 1: [[0, E[0, 1]], [0, 0]], -1: [[0, 0], [E[1, 0], 0]]},
        order, grid_size)


def diagonalizer(P: DegreeOnePotential, order: int = DEFAULT_ORDER,
                 grid_size: int = DEFAULT_GRID) -> TwistedLoop:
    """Dressing S with S D(1) S^{-1} diagonal; S^{-1} is built from the eigenvectors."""
    E, _ = diagonalizing_matrix(P)
    return _split_loop(E, order, grid_size).inv()


def boost_loop(p: float, q: float, order: int = DEFAULT_ORDER,
               grid_size: int = DEFAULT_GRID) -> TwistedLoop:
    """Loop whose value at lambda = 1 is the boost ((cosh p, e^{iq} sinh p), (e^{-iq} sinh p, cosh p))."""
    E = np.array([[np.cosh(p), np.exp(1j * q) * np.sinh(p)],
                  [np.exp(-1j * q) * np.sinh(p), np.cosh(p)]])
    return _split_loop(E, order, grid_size)


@dataclass(frozen=True)
class Monodromy:
    """One-parameter family M_t = S exp(tD) S^{-1}."""

    P: DegreeOnePotential
    S: TwistedLoop
    S_inv: TwistedLoop = field(default=None)

    def __post_init__(self):
        if self.S_inv is None:
            object.__setattr__(self, "S_inv", self.S.inv())

    @property
    def order(self) -> int:
        return self.S.order

    def at(self, t: float) -> TwistedLoop:
        C = exp_degree_one(self.P.loop(self.S.order, self.S.grid_size), t)
        return self.S @ C @ self.S_inv

    def generator_at_one(self) -> np.ndarray:
        return self.S.at_one() @ self.P.matrix(1.0) @ self.S_inv.at_one()


def _rotation_rate(M: Monodromy, Mt1: np.ndarray, tol: float) -> float:
    """mu such that theta_t = 2 mu t, from the generator S D(1) S^{-1}."""
    G = M.generator_at_one()
    if max(abs(G[0, 1]), abs(G[1, 0])) <= tol:
        return float(np.real(G[0, 0] / 1j))
    if np.max(np.abs(Mt1 - IDENTITY)) <= 1e-8 or np.max(np.abs(Mt1 + IDENTITY)) <= 1e-8:
        evals, evecs = np.linalg.eig(G)
        norms = [_sigma3_norm(evecs[:, k]) for k in range(2)]
        return float(np.real(evals[int(np.argmax(norms))] / 1j))
    raise NumericError("monodromy at lambda = 1 is neither diagonal nor +-id")


def monodromy_xy(M: Monodromy, t: float, tol: float = 1e-8) -> tuple[float, np.ndarray, np.ndarray]:
    """(theta_t, X, Y) at lambda = 1 with X = -i l dM M^{-1}, Y = -1/2 l d(l dM M^{-1})."""
    Mt = M.at(t)
    Mt1 = Mt.at_one()
    evals = np.linalg.eigvals(Mt1)
    if np.max(np.abs(np.abs(evals) - 1.0)) > tol:
        raise NonUnimodularMonodromy(f"|eigenvalues| = {np.abs(evals)} at lambda = 1")
    theta = 2.0 * _rotation_rate(M, Mt1, 1e-10) * t
    X, Y = _xy_from_moments(Mt)
    return theta, X, Y


def _xy_from_moments(Mt: TwistedLoop) -> tuple[np.ndarray, np.ndarray]:
    M0, M1, M2 = lambda_moments(chop(Mt), 1.0, 3)
    L = M1 @ np.linalg.inv(M0)
    return -1j * L, -0.5 * (M2 @ np.linalg.inv(M0) - L @ L)


def monodromy_xy_v(M: Monodromy, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) via v-derivatives, lambda = e^{iv}: X = -M' M^{-1}, Y = (M'' M^{-1} - (M' M^{-1})^2)/2.

    Evaluated with loop products on the grid, independently of monodromy_xy.
    """
    Mt = M.at(t)
    d1 = lambda_euler(Mt).scale(1j)
    d2 = lambda_euler(lambda_euler(Mt)).scale(-1.0)
    a = (d1 @ Mt.inv()).at_one()
    b = (d2 @ Mt.inv()).at_one()
    return -a, 0.5 * (b - a @ a)


def isometry_from_xy(theta: float, X: np.ndarray, Y: np.ndarray) -> Isometry:
    """Read X = 1/2 ((*, -q + ip), (-q - ip, *)) and Y = 1/2 ((-ir, *), (*, ir))."""
    pq = -2j * X[0, 1]
    r = 2j * Y[0, 0]
    return Isometry(np.array([pq.real, pq.imag, r.real]), theta)


def rho_from_monodromy(M: Monodromy, t: float) -> Isometry:
    theta, X, Y = monodromy_xy(M, t)
    return isometry_from_xy(theta, X, Y)


def helicoidal_params(b: complex, delta: float = 1e-10) -> tuple[float, complex, float]:
    """(ell, alpha, pitch) for the normalized potential a = 1, c = 2."""
    b = complex(b)
    ell2 = 3 - 2 * b.real - abs(b) ** 2
    if ell2 <= delta**2:
        raise DegenerateEll(f"ell^2 = {ell2} is not positive")
    ell = float(np.sqrt(ell2))
    if ell <= delta or ell >= 2 - delta:
        raise DegenerateEll(f"ell = {ell} outside (0, 2)")
    if abs(1 + b) <= delta:
        raise PoleAtMinusOne("axis formula has a pole at b = -1")
    num = (2 + ell) * (-6 + np.conj(b) + b * (3 + 2 * b.real) + 4 * ell)
    alpha = 1j * num / (ell**2 * (1 + b) * np.sqrt(4 - ell**2))
    pitch = -2 * (3 * b.real - b.real**2 - abs(b) ** 2 * b.real - abs(b) ** 2) / ell**4
    return ell, complex(alpha), float(pitch)


def helicoidal_rho(b: complex) -> Callable[[float], Isometry]:
    """t -> rho_t from the closed forms, a screw motion with fiber angle 2 ell t."""
    ell, alpha, pitch = helicoidal_params(b)
    return lambda t: helicoidal_motion(pitch, alpha, 2 * ell * t)


def catenoid_residual(b: complex) -> float:
    b = complex(b)
    x, m2 = b.real, abs(b) ** 2
    return 3 * x - x**2 - m2 * x - m2


def catenoid_check(b: complex, tol: float = 1e-10) -> bool:
    return abs(catenoid_residual(b)) <= tol


def catenoid_imag_part(re_b: float) -> float:
    """Positive y with catenoid_residual(re_b + iy) = 0."""
    y2 = (3 * re_b - re_b**2) / (1 + re_b) - re_b**2
    if y2 < 0:
        raise ValueError(f"no catenoid with Re b = {re_b}")
    return float(np.sqrt(y2))


def translation_oracle(p: float, z: complex) -> tuple[np.ndarray, float]:
    """Closed-form translation-invariant surface for the boost p (q = 0).

    The second value is the tabulated conformal factor 2 cosh 2p cosh 4y.
    Array z gives arrays with the coordinate axis first.
    """
    x, y = np.real(z), np.imag(z)
    f = np.array([
        4 * x * np.cosh(2 * p) + np.cosh(4 * y) * np.sinh(2 * p),
        np.sinh(4 * y),
        -2 * y * np.sinh(2 * p) + 2 * x * np.cosh(2 * p) * np.sinh(4 * y),
    ])
    factor = 2 * np.cosh(2 * p) * np.cosh(4 * y)
    return f, float(factor) if np.ndim(factor) == 0 else factor


@dataclass(frozen=True)
class ClosingDiagnostics:
    closed: bool
    sign: int
    monodromy_residual: float
    x_residual: float
    y_residual: float
    rho: Isometry | None


def closing_check(M: Monodromy, tau: float, tol: float = 1e-8) -> ClosingDiagnostics:
    """M_tau(1) = +-id, X^o(1) = 0 and Y^d(1) = 0."""
    Mt = M.at(tau)
    M1 = Mt.at_one()
    res_p = float(np.max(np.abs(M1 - IDENTITY)))
    res_m = float(np.max(np.abs(M1 + IDENTITY)))
    sign = 1 if res_p <= res_m else -1
    m_res = min(res_p, res_m)
    X, Y = _xy_from_moments(Mt)
    x_res = float(max(abs(X[0, 1]), abs(X[1, 0])))
    y_res = float(max(abs(Y[0, 0]), abs(Y[1, 1])))
    rho = None
    if m_res <= tol:
        rho = isometry_from_xy(2 * np.pi * (0 if sign == 1 else 1), X, Y)
    closed = m_res <= tol and x_res <= tol and y_res <= tol
    return ClosingDiagnostics(closed, sign, m_res, x_res, y_res, rho)


def periodic_dressing(P: DegreeOnePotential, p: float, q: float, order: int = DEFAULT_ORDER,
                      grid_size: int = DEFAULT_GRID) -> TwistedLoop:
    """S_hat = B0 S for the two-parameter periodic family."""
    return boost_loop(p, q, order, grid_size) @ diagonalizer(P, order, grid_size)


@dataclass
class EquivariantReport:
    cls: EquivClass
    ell: float = 0.0
    alpha: complex = 0j
    pitch: float = 0.0
    catenoid: bool = False
    rho_generator: Callable[[float], Isometry] | None = None
    direction: np.ndarray | None = None


def analyze(P: DegreeOnePotential, delta: float = CLASSIFY_DELTA,
            catenoid_tol: float = 1e-10, order: int = DEFAULT_ORDER,
            grid_size: int = DEFAULT_GRID) -> EquivariantReport:
    """Classify P and attach its symmetry data."""
    cls = classify(P, delta)
    report = EquivariantReport(cls)
    if cls is EquivClass.TRANSLATION:
        M = Monodromy(P, TwistedLoop.constant(IDENTITY, order, grid_size))
        report.rho_generator = lambda t: rho_from_monodromy(M, t)
        report.direction = rho_from_monodromy(M, 1.0).t
    elif cls in (EquivClass.HELICOIDAL, EquivClass.HORIZONTAL_PLANE_FAMILY):
        M = Monodromy(P, diagonalizer(P, order, grid_size))
        report.ell = float(np.sqrt(det_at_one(P)))
        report.rho_generator = lambda t: rho_from_monodromy(M, t)
        # axis and pitch from the monodromy itself; closed forms are a cross-check
        t_ref = np.pi / (2 * report.ell)
        pitch_t, alpha, q = decompose_isometry(rho_from_monodromy(M, t_ref))
        report.alpha = alpha
        report.pitch = pitch_t / q
        report.catenoid = catenoid_check(P.b, catenoid_tol) if _is_normalized(P) else False
    return report


def _is_normalized(P: DegreeOnePotential) -> bool:
    return P.a == 1 and P.c == 2


@dataclass(frozen=True)
class Mono2Diagnostics:
    plus_membership: float
    reality: float
    commutation: float
    unimodular: float
    ok: bool


def _negative_mass(g: TwistedLoop) -> float:
    neg = g.degrees < 0
    return float(np.max(np.abs(g.coeffs[neg]), initial=0.0))


def mono2_predicate(L: TwistedLoop, b_plus: TwistedLoop, C_samples: Sequence[TwistedLoop],
                    cell: str = "E", tol: float = 1e-8) -> Mono2Diagnostics:
    """Check the four conditions characterizing a monodromy of the second kind.

    (a) b_plus is a plus-loop (after conjugation by omega0 in cell OMEGA),
    (b) L b_plus^{-1} (cell E) or L b_plus (cell OMEGA) lies in the real form,
    (c) B_plus = C^{-1} b_plus C is a plus-loop at every sample,
    (d) the eigenvalues of that product at lambda = 1 are unimodular.
    """
    w = omega0(b_plus.order, b_plus.grid_size)
    if cell == "OMEGA":
        member = _negative_mass(w.inv() @ b_plus @ w)
        rho = L @ b_plus
    else:
        member = _negative_mass(b_plus)
        rho = L @ b_plus.inv()
    reality = reality_residual_su11(rho)
    comm = 0.0
    for C in C_samples:
        comm = max(comm, _negative_mass(C.inv() @ b_plus @ C))
    evals = np.linalg.eigvals(rho.at_one())
    unimod = float(np.max(np.abs(np.abs(evals) - 1.0)))
    ok = member <= tol and reality <= tol and comm <= tol and unimod <= tol
    return Mono2Diagnostics(member, reality, comm, unimod, ok)
