"""Holomorphic potentials: degree-one, normalized and general.

Every potential exposes ``coefficient(z, order, grid_size)`` returning the
dz-coefficient as a TwistedLoop, so integrators and gauge actions never need
to know which kind they hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .errors import PoleSample, ZeroA
from .loop_core import DEFAULT_GRID, DEFAULT_ORDER, SIGMA3, TwistedLoop


class Potential(Protocol):
    def coefficient(self, z: complex, order: int = DEFAULT_ORDER,
                    grid_size: int = DEFAULT_GRID) -> TwistedLoop: ...


@dataclass(frozen=True)
class DegreeOnePotential:
    """Constant potential D dz with D = ((ic, a/l + l conj(b)), (b/l + l conj(a), -ic))."""

    a: complex
    b: complex
    c: float

    def __post_init__(self):
        if self.a == 0:
            raise ZeroA("degree-one potential needs a != 0")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "c", float(self.c))

    def loop(self, order: int = DEFAULT_ORDER, grid_size: int = DEFAULT_GRID) -> TwistedLoop:
        return degree_one_matrix(self, order, grid_size)

    def coefficient(self, z: complex, order: int = DEFAULT_ORDER,
                    grid_size: int = DEFAULT_GRID) -> TwistedLoop:
        return self.loop(order, grid_size)

    def matrix(self, lam: complex = 1.0) -> np.ndarray:
        a, b, c = self.a, self.b, self.c
        return np.array([[1j * c, a / lam + lam * np.conj(b)],
                         [b / lam + lam * np.conj(a), -1j * c]])

    def rotated(self, phi: float) -> "DegreeOnePotential":
        """Conjugate by diag(e^{i phi}, e^{-i phi}): a -> e^{2i phi} a, b -> e^{-2i phi} b."""
        return DegreeOnePotential(self.a * np.exp(2j * phi), self.b * np.exp(-2j * phi), self.c)


def degree_one_matrix(P: DegreeOnePotential, order: int = DEFAULT_ORDER,
                      grid_size: int = DEFAULT_GRID) -> TwistedLoop:
    a, b, c = P.a, P.b, P.c
    return TwistedLoop.from_dict(
        {-1: [[0, a], [b, 0]], 0: [[1j * c, 0], [0, -1j * c]], 1: [[0, np.conj(b)], [np.conj(a), 0]]},
        order, grid_size)


def det_at_one(P: DegreeOnePotential) -> float:
    """det D(1) = c^2 - |a + conj(b)|^2."""
    return P.c**2 - abs(P.a + np.conj(P.b)) ** 2


def su11_algebra_residual(D: TwistedLoop) -> float:
    """max over the grid of ||D* s3 + s3 D||; zero for su(1,1)-valued loops."""
    v = D.values()
    r = np.conj(np.swapaxes(v, -1, -2)) @ SIGMA3 + SIGMA3 @ v
    return float(np.max(np.linalg.norm(r, axis=(-2, -1))))


def _as_function(f) -> Callable[[complex], complex]:
    if callable(f):
        return f
    coeffs = np.asarray(f, dtype=complex)
    return lambda z: np.polynomial.polynomial.polyval(z, coeffs)


@dataclass(frozen=True)
class NormalizedPotential:
    """xi = lambda^{-1} ((0, -p), (B/p, 0)) dz.

    ``p`` and ``B`` are callables or ascending polynomial coefficient lists.
    Zeros of p are poles of the potential; samples closer than ``pole_tol``
    are rejected.
    """

    p: object
    B: object
    pole_tol: float = 1e-10

    def coefficient(self, z: complex, order: int = DEFAULT_ORDER,
                    grid_size: int = DEFAULT_GRID) -> TwistedLoop:
        pz = complex(_as_function(self.p)(z))
        if abs(pz) <= self.pole_tol:
            raise PoleSample(f"p vanishes at z = {z}")
        bz = complex(_as_function(self.B)(z))
        return TwistedLoop.from_dict({-1: [[0, -pz], [bz / pz, 0]]}, order, grid_size)

    def is_pole(self, z: complex) -> bool:
        return abs(complex(_as_function(self.p)(z))) <= self.pole_tol


@dataclass(frozen=True)
class GeneralPotential:
    """eta(z) = sum_k z^k A_k dz with each A_k a loop of degrees >= -1."""

    terms: Mapping[int, TwistedLoop] = field(default_factory=dict)

    def __post_init__(self):
        for k, A in self.terms.items():
            if k < 0:
                raise ValueError("polynomial powers must be nonnegative")
            low = A.degrees < -1
            if np.any(A.coeffs[low] != 0):
                raise ValueError(f"term z^{k} has lambda-degrees below -1")

    def coefficient(self, z: complex, order: int = DEFAULT_ORDER,
                    grid_size: int = DEFAULT_GRID) -> TwistedLoop:
        out = TwistedLoop.from_dict({}, order, grid_size)
        for k, A in self.terms.items():
            out = out + A.with_order(order).scale(z**k)
        return out

    def immersion_residual(self, samples: Sequence[complex]) -> float:
        """Smallest |upper-right lambda^{-1} entry| over samples; must stay away from 0."""
        return min(abs(self.coefficient(z).coeff(-1)[0, 1]) for z in samples)


@dataclass(frozen=True)
class CallbackPotential:
    """Potential given by an arbitrary callable z -> TwistedLoop."""

    func: Callable[[complex], TwistedLoop]

    def coefficient(self, z: complex, order: int = DEFAULT_ORDER,
                    grid_size: int = DEFAULT_GRID) -> TwistedLoop:
        out = self.func(z)
        if out.order != order:
            out = out.with_order(order)
        return out


def contour_derivative(W: Callable[[complex], TwistedLoop], z: complex,
                       radius: float = 1e-2, points: int = 16) -> TwistedLoop:
    """dW/dz of a holomorphic loop-valued map by the trapezoidal Cauchy integral."""
    nodes = np.exp(2j * np.pi * np.arange(points) / points)
    acc = None
    for w in nodes:
        term = W(z + radius * w).scale(1.0 / (points * radius * w))
        acc = term if acc is None else acc + term
    return acc


def gauge(eta: Potential, Wplus: Callable[[complex], TwistedLoop],
          dWplus: Callable[[complex], TwistedLoop] | None = None) -> CallbackPotential:
    """eta # W = W^{-1} eta W + W^{-1} dW."""

    def func(z: complex) -> TwistedLoop:
        W = Wplus(z)
        dW = dWplus(z) if dWplus is not None else contour_derivative(Wplus, z)
        Winv = W.inv()
        eta_z = eta.coefficient(z, W.order, W.grid_size)
        return Winv @ eta_z @ W + Winv @ dW

    return CallbackPotential(func)


def invariance_residual(eta: Potential, alpha: complex, beta: complex,
                        samples: Sequence[complex]) -> float:
    """max over samples of ||eta(gamma z) gamma'(z) - eta(z)|| for gamma(z) = alpha z + beta."""
    worst = 0.0
    for z in samples:
        moved = eta.coefficient(alpha * z + beta).scale(alpha)
        worst = max(worst, moved.max_abs_diff(eta.coefficient(z)))
    return worst
