"""Heisenberg group Nil3 and its identity component of isometries.

Points are float arrays with last axis of length 3 (exponential coordinates).
Isometries act by rotating the horizontal part about the x3-axis and then
left-translating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoRotationPart


def nil_mul(a, x) -> np.ndarray:
    """(a1+x1, a2+x2, a3+x3 + (a1 x2 - a2 x1)/2), broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    out = a + x
    out[..., 2] = a[..., 2] + x[..., 2] + 0.5 * (a[..., 0] * x[..., 1] - a[..., 1] * x[..., 0])
    return out


def nil_inv(a) -> np.ndarray:
    return -np.asarray(a, dtype=float)


def rotate(theta: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = x.copy()
    out[..., 0] = c * x[..., 0] - s * x[..., 1]
    out[..., 1] = s * x[..., 0] + c * x[..., 1]
    return out


@dataclass(frozen=True)
class Isometry:
    """The element ((t1, t2, t3), e^{i theta}) of Iso0(Nil3).

    theta is stored unreduced so that one-parameter groups stay smooth.
    """

    t: np.ndarray
    theta: float = 0.0

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.shape != (3,):
            raise ValueError("translation part must have three components")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.zeros(3), 0.0)

    @classmethod
    def from_shorthand(cls, alpha: complex, c: float, theta: float = 0.0) -> "Isometry":
        return cls(np.array([alpha.real, alpha.imag, c]), theta)

    @property
    def alpha(self) -> complex:
        return complex(self.t[0], self.t[1])

    @property
    def center(self) -> float:
        return float(self.t[2])

    def __call__(self, x) -> np.ndarray:
        return iso_apply(self, x)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return iso_compose(self, other)

    def inverse(self) -> "Isometry":
        beta = -np.exp(-1j * self.theta) * self.alpha
        return Isometry.from_shorthand(beta, -self.center, -self.theta)

    def differential(self) -> np.ndarray:
        """Constant Jacobian of the affine map x -> rho.x."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return left_translation_differential(self.t) @ rot

    def distance(self, other: "Isometry") -> float:
        """Max of the translation difference and the angle difference mod 2 pi."""
        dtheta = np.angle(np.exp(1j * (self.theta - other.theta)))
        return float(max(np.max(np.abs(self.t - other.t)), abs(dtheta)))


def iso_apply(rho: Isometry, x) -> np.ndarray:
    return nil_mul(np.broadcast_to(rho.t, np.shape(x)), rotate(rho.theta, x))


def iso_compose(rho: Isometry, sigma: Isometry) -> Isometry:
    """(alpha c e^{i th})(beta d e^{i tau}) = (alpha + e^{i th} beta)(c + d + Im(conj(alpha) e^{i th} beta)/2) e^{i(th + tau)}."""
    rb = np.exp(1j * rho.theta) * sigma.alpha
    alpha = rho.alpha + rb
    center = rho.center + sigma.center + 0.5 * (np.conj(rho.alpha) * rb).imag
    return Isometry.from_shorthand(alpha, center, rho.theta + sigma.theta)


def helicoidal_motion(pitch: float, alpha: complex, t: float) -> Isometry:
    """Screw motion about the vertical axis through alpha, angle t and pitch `pitch`."""
    horiz = alpha * (1 - np.exp(1j * t))
    return Isometry.from_shorthand(horiz, pitch * t - 0.5 * abs(alpha) ** 2 * np.sin(t), t)


def translation_motion(alpha: complex, c: float, t: float) -> Isometry:
    return Isometry.from_shorthand(t * alpha, t * c, 0.0)


def decompose_isometry(rho: Isometry, tol: float = 1e-12) -> tuple[float, complex, float]:
    """Write rho = alpha o ((0,0,c) e^{iq}) o alpha^{-1}; returns (c, alpha, q).

    Here alpha is the horizontal translation to the screw axis.
    """
    q = rho.theta
    denom = 1 - np.exp(1j * q)
    if abs(denom) <= tol:
        raise NoRotationPart(f"rotation angle {q} is a multiple of 2 pi")
    alpha = rho.alpha / denom
    c = rho.center + 0.5 * abs(alpha) ** 2 * np.sin(q)
    return float(c), complex(alpha), float(q)


def recompose_isometry(c: float, alpha: complex, q: float) -> Isometry:
    shift = Isometry.from_shorthand(alpha, 0.0)
    screw = Isometry(np.array([0.0, 0.0, c]), q)
    return shift @ screw @ shift.inverse()


def left_translation_differential(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-0.5 * a[1], 0.5 * a[0], 1.0]])


def killing_fields(x) -> np.ndarray:
    """Rows E1..E4 as coordinate components at x, shape (4, 3)."""
    x1, x2, _ = np.asarray(x, dtype=float)
    return np.array([
        [1.0, 0.0, -0.5 * x2],
        [0.0, 1.0, 0.5 * x1],
        [0.0, 0.0, 1.0],
        [-x2, x1, 0.0],
    ])


# the Killing fields are affine in x, so their Jacobians are constant
KILLING_JACOBIANS = np.array([
    [[0, 0, 0], [0, 0, 0], [0, -0.5, 0]],
    [[0, 0, 0], [0, 0, 0], [0.5, 0, 0]],
    [[0, 0, 0], [0, 0, 0], [0, 0, 0]],
    [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
], dtype=float)


def killing_bracket(i: int, j: int, x) -> np.ndarray:
    """[Ei, Ej] at x with the convention [X, Y] = DY.X - DX.Y (indices 0-based)."""
    fields = killing_fields(x)
    return KILLING_JACOBIANS[j] @ fields[i] - KILLING_JACOBIANS[i] @ fields[j]


def translation_killing_fields(x) -> np.ndarray:
    """Generators of left translations, d/ds (s a).x at s = 0, for a = e1, e2, e3.

    These differ from the first two rows of killing_fields in the sign of the
    vertical term; they are the fields whose flows preserve metric_eval.
    """
    x1, x2, _ = np.asarray(x, dtype=float)
    return np.array([[1.0, 0.0, 0.5 * x2], [0.0, 1.0, -0.5 * x1], [0.0, 0.0, 1.0]])


def left_invariant_components(x, u) -> np.ndarray:
    """Components of the tangent vector u at x in the orthonormal frame e1, e2, e3."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u)
    out = np.array(u, dtype=np.result_type(u, float), copy=True)
    out[..., 2] = u[..., 2] + 0.5 * (x[..., 1] * u[..., 0] - x[..., 0] * u[..., 1])
    return out


def metric_eval(x, u, v) -> np.ndarray:
    """ds^2 = dx1^2 + dx2^2 + (dx3 + (x2 dx1 - x1 dx2)/2)^2 applied to u, v."""
    cu = left_invariant_components(x, u)
    cv = left_invariant_components(x, v)
    return np.sum(cu * cv, axis=-1)
