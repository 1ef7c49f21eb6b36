"""Separable Hamiltonians H(q, p) = T(p) + V(q) with exact derivatives.

A Hamiltonian is a sum of one-coordinate terms, one kinetic and one potential
term per degree of freedom.  Each term is a polynomial of degree <= 4 plus an
optional cosine, so sums, differences and scalar multiples stay inside the
family and all derivatives reduce to exact coefficient arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

MAX_POLY_DEGREE = 4


def _trimmed(coeffs) -> tuple[float, ...]:
    """Canonical coefficient tuple: floats, trailing zeros removed."""
    out = [float(c) for c in coeffs]
    while len(out) > 1 and out[-1] == 0.0:
        out.pop()
    return tuple(out) if out else (0.0,)


@dataclass(frozen=True)
class CoordFunction:
    """Function of a single coordinate: polynomial plus A*cos(x).

    ``coeffs`` are polynomial coefficients in increasing order,
    ``cos_amp`` the amplitude of an additional cosine term.
    """

    coeffs: tuple[float, ...] = (0.0,)
    cos_amp: float = 0.0

    def __post_init__(self) -> None:
        coeffs = _trimmed(self.coeffs)
        if len(coeffs) > MAX_POLY_DEGREE + 1:
            raise ValueError(
                f"polynomial degree {len(coeffs) - 1} exceeds supported "
                f"maximum {MAX_POLY_DEGREE}"
            )
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "cos_amp", float(self.cos_amp))

    def value(self, x):
        out = npoly.polyval(x, self.coeffs)
        if self.cos_amp:
            out = out + self.cos_amp * np.cos(x)
        return out

    def d1(self, x):
        c = self.coeffs
        dc = [k * c[k] for k in range(1, len(c))] or [0.0]
        out = npoly.polyval(x, dc)
        if self.cos_amp:
            out = out - self.cos_amp * np.sin(x)
        return out

    def d2(self, x):
        c = self.coeffs
        d2c = [k * (k - 1) * c[k] for k in range(2, len(c))] or [0.0]
        out = npoly.polyval(x, d2c)
        if self.cos_amp:
            out = out - self.cos_amp * np.cos(x)
        return out

    @property
    def is_zero(self) -> bool:
        return self.cos_amp == 0.0 and all(c == 0.0 for c in self.coeffs)

    @property
    def degree(self) -> int:
        """Polynomial degree (cosine ignored)."""
        return len(self.coeffs) - 1

    def __add__(self, other: "CoordFunction") -> "CoordFunction":
        if not isinstance(other, CoordFunction):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0.0,) * (n - len(self.coeffs))
        b = other.coeffs + (0.0,) * (n - len(other.coeffs))
        return CoordFunction(
            tuple(x + y for x, y in zip(a, b)), self.cos_amp + other.cos_amp
        )

    def __mul__(self, factor: float) -> "CoordFunction":
        if not isinstance(factor, (int, float)):
            return NotImplemented
        return CoordFunction(
            tuple(factor * c for c in self.coeffs), factor * self.cos_amp
        )

    __rmul__ = __mul__

    def __neg__(self) -> "CoordFunction":
        return self * -1.0

    def __sub__(self, other: "CoordFunction") -> "CoordFunction":
        return self + (-other)


def polynomial_term(*coeffs: float) -> CoordFunction:
    """Polynomial c0 + c1*x + ... from coefficients in increasing order."""
    return CoordFunction(tuple(coeffs))


def quadratic_kinetic(mass: float = 1.0) -> CoordFunction:
    """Kinetic term p**2 / (2m)."""
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    return CoordFunction((0.0, 0.0, 0.5 / mass))


def harmonic_potential(k: float = 1.0, center: float = 0.0) -> CoordFunction:
    """Potential (k/2) (q - center)**2, expanded to exact coefficients."""
    return CoordFunction((0.5 * k * center**2, -k * center, 0.5 * k))


def cosine_potential(amplitude: float) -> CoordFunction:
    """Kick potential A*cos(q)."""
    return CoordFunction((0.0,), cos_amp=amplitude)


ZERO_TERM = CoordFunction((0.0,))


@dataclass(frozen=True)
class SeparableHamiltonian:
    """H(q, p) = sum_d [T_d(p_d) + V_d(q_d)], one term pair per coordinate.

    All evaluation methods accept arrays whose last axis runs over the
    coordinates (a bare scalar is accepted when dims == 1) and broadcast
    over any leading axes.
    """

    kinetic: tuple[CoordFunction, ...]
    potential: tuple[CoordFunction, ...]

    def __post_init__(self) -> None:
        kinetic = tuple(self.kinetic)
        potential = tuple(self.potential)
        if not kinetic:
            raise ValueError("at least one degree of freedom required")
        if len(kinetic) != len(potential):
            raise ValueError("kinetic and potential need one term per coordinate")
        object.__setattr__(self, "kinetic", kinetic)
        object.__setattr__(self, "potential", potential)

    @property
    def dims(self) -> int:
        return len(self.kinetic)

    def _coords(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1] != self.dims:
            raise ValueError(
                f"coordinate array has {x.shape[-1]} components, expected {self.dims}"
            )
        return x

    def kinetic_value(self, p):
        p = self._coords(p)
        return sum(t.value(p[..., d]) for d, t in enumerate(self.kinetic))

    def potential_value(self, q):
        q = self._coords(q)
        return sum(t.value(q[..., d]) for d, t in enumerate(self.potential))

    def value(self, q, p):
        return self.kinetic_value(p) + self.potential_value(q)

    def kinetic_d1(self, p):
        p = self._coords(p)
        return np.stack(
            [t.d1(p[..., d]) for d, t in enumerate(self.kinetic)], axis=-1
        )

    def potential_d1(self, q):
        q = self._coords(q)
        return np.stack(
            [t.d1(q[..., d]) for d, t in enumerate(self.potential)], axis=-1
        )

    def kinetic_d2(self, p):
        p = self._coords(p)
        return np.stack(
            [t.d2(p[..., d]) for d, t in enumerate(self.kinetic)], axis=-1
        )

    def potential_d2(self, q):
        q = self._coords(q)
        return np.stack(
            [t.d2(q[..., d]) for d, t in enumerate(self.potential)], axis=-1
        )

    @property
    def is_zero(self) -> bool:
        return all(t.is_zero for t in self.kinetic + self.potential)

    def __add__(self, other: "SeparableHamiltonian") -> "SeparableHamiltonian":
        if not isinstance(other, SeparableHamiltonian):
            return NotImplemented
        if other.dims != self.dims:
            raise ValueError("dimension mismatch in Hamiltonian sum")
        return SeparableHamiltonian(
            tuple(a + b for a, b in zip(self.kinetic, other.kinetic)),
            tuple(a + b for a, b in zip(self.potential, other.potential)),
        )

    def __mul__(self, factor: float) -> "SeparableHamiltonian":
        if not isinstance(factor, (int, float)):
            return NotImplemented
        return SeparableHamiltonian(
            tuple(t * factor for t in self.kinetic),
            tuple(t * factor for t in self.potential),
        )

    __rmul__ = __mul__

    def __sub__(self, other: "SeparableHamiltonian") -> "SeparableHamiltonian":
        return self + other * -1.0


def hamiltonian_1d(kinetic: CoordFunction, potential: CoordFunction) -> SeparableHamiltonian:
    return SeparableHamiltonian((kinetic,), (potential,))


def product_hamiltonian(h: SeparableHamiltonian, dims: int) -> SeparableHamiltonian:
    """Replicate a one-dimensional Hamiltonian over ``dims`` uncoupled coordinates."""
    if h.dims != 1:
        raise ValueError("product_hamiltonian expects a one-dimensional Hamiltonian")
    return SeparableHamiltonian(h.kinetic * dims, h.potential * dims)


@dataclass(frozen=True)
class HamiltonianPair:
    """Unperturbed/perturbed pair with derived average and difference.

    ``average`` = (h' + h'')/2 drives the reference dynamics, ``delta`` =
    h'' - h' generates the accumulated phase of the estimators.
    """

    h_prime: SeparableHamiltonian
    h_double_prime: SeparableHamiltonian
    average: SeparableHamiltonian
    delta: SeparableHamiltonian

    @property
    def dims(self) -> int:
        return self.h_prime.dims

    def swapped(self) -> "HamiltonianPair":
        return make_pair(self.h_double_prime, self.h_prime)


def make_pair(
    h_prime: SeparableHamiltonian, h_double_prime: SeparableHamiltonian
) -> HamiltonianPair:
    """Build a pair with exact average and difference Hamiltonians."""
    if h_prime.dims != h_double_prime.dims:
        raise ValueError(
            f"dimension mismatch: {h_prime.dims} vs {h_double_prime.dims}"
        )
    average = (h_prime + h_double_prime) * 0.5
    delta = h_double_prime - h_prime
    return HamiltonianPair(h_prime, h_double_prime, average, delta)


def expansion_remainder(pair: HamiltonianPair, x, dx, order: int):
    """Error of the truncated average/difference expansion at a phase-space point.

    Evaluates H''(x + dx/2) - H'(x - dx/2) minus its truncation in powers of
    the displacement ``dx``: order 0 keeps delta-H at the midpoint, order 1
    adds the first derivatives of the average Hamiltonian contracted with
    ``dx``, order 2 adds 1/8 of the second derivatives of delta-H contracted
    with ``dx**2``.  The remainder is O(|dx|**(order+1)).

    Parameters
    ----------
    x, dx : tuple of arrays
        Phase-space point ``(q, p)`` and displacement ``(dq, dp)``, last axis
        running over coordinates.
    order : int
        Truncation order, one of 0, 1, 2.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"unsupported expansion order {order}")
    q, p = x
    dq, dp = dx
    avg, delta = pair.average, pair.delta
    q = avg._coords(q)
    p = avg._coords(p)
    dq = avg._coords(dq)
    dp = avg._coords(dp)

    lhs = pair.h_double_prime.value(q + dq / 2, p + dp / 2) - pair.h_prime.value(
        q - dq / 2, p - dp / 2
    )
    trunc = delta.value(q, p)
    if order >= 1:
        trunc = trunc + np.sum(avg.kinetic_d1(p) * dp, axis=-1)
        trunc = trunc + np.sum(avg.potential_d1(q) * dq, axis=-1)
    if order >= 2:
        trunc = trunc + np.sum(delta.kinetic_d2(p) * dp**2, axis=-1) / 8.0
        trunc = trunc + np.sum(delta.potential_d2(q) * dq**2, axis=-1) / 8.0
    return lhs - trunc
