"""Classical symplectic map generated by a separable Hamiltonian.

One step is drift-then-kick: positions advance with the old momenta, momenta
are kicked with the gradient at the *new* positions.  This ordering mirrors
the quantum kicked-map splitting exactly, so classical and quantum evolutions
stay step-for-step comparable; no symmetric variant is offered.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import SeparableHamiltonian

ESCAPE_LIMIT = 1e12


class TrajectoryEscapeError(RuntimeError):
    """Raised when a trajectory leaves the numerically safe region."""


def map_step(q, p, h: SeparableHamiltonian, tau: float):
    """Advance one kick-map step: q' = q + tau T'(p), then p' = p - tau V'(q').

    ``q`` and ``p`` carry coordinates on the last axis and may hold whole
    ensembles in leading axes.  Returns the new ``(q, p)``.
    """
    q = h._coords(q)
    p = h._coords(p)
    q_new = q + tau * h.kinetic_d1(p)
    p_new = p - tau * h.potential_d1(q_new)
    return q_new, p_new


def check_escape(q, p) -> None:
    """Abort when an ensemble member escapes beyond the overflow guard."""
    bad = not (
        np.all(np.abs(q) < ESCAPE_LIMIT) and np.all(np.abs(p) < ESCAPE_LIMIT)
    )
    if bad:
        raise TrajectoryEscapeError(
            f"trajectory escaped: |x| exceeded {ESCAPE_LIMIT:g} "
            "(unbounded potential or too large a step)"
        )


@dataclass(frozen=True)
class Trajectory:
    """Kick-map orbit x_0 .. x_N with the step and generating Hamiltonian."""

    qs: np.ndarray  # (n_steps + 1, dims)
    ps: np.ndarray
    tau: float
    hamiltonian: SeparableHamiltonian

    def __len__(self) -> int:
        return self.qs.shape[0]

    def point(self, n: int):
        return self.qs[n], self.ps[n]


def trajectory(
    x0, h: SeparableHamiltonian, n_steps: int, tau: float
) -> Trajectory:
    """Iterate the map from ``x0 = (q0, p0)`` for ``n_steps`` steps."""
    q0, p0 = x0
    q = h._coords(q0).astype(float)
    p = h._coords(p0).astype(float)
    qs = np.empty((n_steps + 1, h.dims))
    ps = np.empty((n_steps + 1, h.dims))
    qs[0], ps[0] = q, p
    for n in range(1, n_steps + 1):
        q, p = map_step(q, p, h, tau)
        check_escape(q, p)
        qs[n], ps[n] = q, p
    return Trajectory(qs, ps, tau, h)
