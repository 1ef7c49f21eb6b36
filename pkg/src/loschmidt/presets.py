"""Named scenarios: Hamiltonian pair, initial state and run parameters.

Each scenario records which estimators are predicted to be exact on it, a
prediction that is tied to the order at which the average/difference
expansion terminates for that pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hamiltonians import (
    HamiltonianPair,
    SeparableHamiltonian,
    cosine_potential,
    hamiltonian_1d,
    harmonic_potential,
    make_pair,
    polynomial_term,
    quadratic_kinetic,
    ZERO_TERM,
)
from .states import InitialState

SCENARIO_NAMES = (
    "linear_gradient",
    "displaced_ho",
    "ho_diff_k",
    "cubic_perturbation",
    "kicked_rotor",
    "morse_like",
)

EXACT = "exact"
APPROXIMATE = "approximate"


@dataclass(frozen=True)
class Scenario:
    """Fully specified benchmark system."""

    name: str
    pair: HamiltonianPair
    state: InitialState
    tau: float
    n_steps: int
    hbar: float
    exactness: dict = field(default_factory=dict)
    description: str = ""
    # grid hints for the exact reference
    grid_extent: tuple[float, float] | None = None
    grid_points: int = 4096
    periodic: bool = False


def displaced_ho_pair(
    k: float = 1.0, mass: float = 1.0, displacement: float = 1.0, dims: int = 1
) -> HamiltonianPair:
    """Identical harmonic wells displaced by ``displacement`` along each axis.

    The unperturbed well sits at +displacement/2, the perturbed one at
    -displacement/2, so the perturbation is +k*displacement*q per coordinate.
    """
    kin = (quadratic_kinetic(mass),) * dims
    v_prime = (harmonic_potential(k, +displacement / 2.0),) * dims
    v_double = (harmonic_potential(k, -displacement / 2.0),) * dims
    return make_pair(
        SeparableHamiltonian(kin, v_prime), SeparableHamiltonian(kin, v_double)
    )


def _linear_gradient() -> Scenario:
    delta_beta = 1.0
    h_lo = hamiltonian_1d(ZERO_TERM, polynomial_term(0.0, -0.5 * delta_beta))
    h_hi = hamiltonian_1d(ZERO_TERM, polynomial_term(0.0, +0.5 * delta_beta))
    state = InitialState.gaussian([0.0], [0.0], [1.0])
    return Scenario(
        name="linear_gradient",
        pair=make_pair(h_lo, h_hi),
        state=state,
        tau=0.05,
        n_steps=252,
        hbar=1.0,
        exactness={"f0": EXACT, "f1": EXACT, "f2_mc": EXACT, "f2_gaussian": EXACT},
        description="opposite linear gradients, vanishing average Hamiltonian",
    )


def _displaced_ho() -> Scenario:
    pair = displaced_ho_pair(k=1.0, mass=1.0, displacement=1.0)
    # ground state of the unperturbed well (centred at +a/2, width 1)
    state = InitialState.gaussian([0.5], [0.0], [1.0])
    return Scenario(
        name="displaced_ho",
        pair=pair,
        state=state,
        tau=0.05,
        n_steps=252,
        hbar=1.0,
        exactness={
            "f0": APPROXIMATE,
            "f1": EXACT,
            "f2_mc": EXACT,
            "f2_gaussian": EXACT,
        },
        description="displaced harmonic oscillators, m = k = displacement = 1",
    )


def _ho_diff_k() -> Scenario:
    kin = quadratic_kinetic(1.0)
    h_lo = hamiltonian_1d(kin, harmonic_potential(1.0))
    h_hi = hamiltonian_1d(kin, harmonic_potential(1.21))
    state = InitialState.gaussian([0.0], [0.0], [1.0])
    return Scenario(
        name="ho_diff_k",
        pair=make_pair(h_lo, h_hi),
        state=state,
        tau=0.05,
        n_steps=100,
        hbar=1.0,
        exactness={
            "f0": APPROXIMATE,
            "f1": APPROXIMATE,
            "f2_mc": EXACT,
            "f2_gaussian": EXACT,
        },
        description="harmonic oscillators with force constants 1 and 1.21",
    )


def _cubic_perturbation() -> Scenario:
    delta_phi = 0.05
    kin = quadratic_kinetic(1.0)
    h_lo = hamiltonian_1d(
        kin, harmonic_potential(1.0) + polynomial_term(0.0, 0.0, 0.0, -0.5 * delta_phi)
    )
    h_hi = hamiltonian_1d(
        kin, harmonic_potential(1.0) + polynomial_term(0.0, 0.0, 0.0, +0.5 * delta_phi)
    )
    state = InitialState.gaussian([0.0], [0.0], [1.0])
    return Scenario(
        name="cubic_perturbation",
        pair=make_pair(h_lo, h_hi),
        state=state,
        tau=0.05,
        n_steps=252,
        hbar=1.0,
        exactness={
            "f0": APPROXIMATE,
            "f1": APPROXIMATE,
            "f2_mc": EXACT,
            "f2_gaussian": APPROXIMATE,  # closed form needs a quadratic perturbation
        },
        description="harmonic average with a weak cubic perturbation",
    )


def _kicked_rotor() -> Scenario:
    kick = 5.0
    delta_kick = 0.01 * kick
    kin = quadratic_kinetic(1.0)
    h_lo = hamiltonian_1d(kin, cosine_potential(kick - delta_kick / 2.0))
    h_hi = hamiltonian_1d(kin, cosine_potential(kick + delta_kick / 2.0))
    state = InitialState.gaussian([np.pi], [0.0], [0.5])
    return Scenario(
        name="kicked_rotor",
        pair=make_pair(h_lo, h_hi),
        state=state,
        tau=1.0,
        n_steps=50,
        hbar=1.0,
        exactness={
            "f0": APPROXIMATE,
            "f1": APPROXIMATE,
            "f2_mc": APPROXIMATE,
            "f2_gaussian": APPROXIMATE,
        },
        description="kicked rotor, K = 5 with a 1% kick-strength perturbation",
        grid_extent=(0.0, 2.0 * np.pi),
        grid_points=1024,
        periodic=True,
    )


def _morse_like() -> Scenario:
    # quartic-truncated anharmonic wells; quartic coefficients keep both
    # branches confining
    kin = quadratic_kinetic(1.0)
    v_lo = polynomial_term(0.0, 0.0, 0.5, -0.10, 0.05)
    v_hi = polynomial_term(0.0, 0.0, 0.55, -0.12, 0.055)
    state = InitialState.gaussian([0.0], [0.0], [1.0])
    return Scenario(
        name="morse_like",
        pair=make_pair(hamiltonian_1d(kin, v_lo), hamiltonian_1d(kin, v_hi)),
        state=state,
        tau=0.05,
        n_steps=252,
        hbar=1.0,
        exactness={
            "f0": APPROXIMATE,
            "f1": APPROXIMATE,
            "f2_mc": APPROXIMATE,
            "f2_gaussian": APPROXIMATE,
        },
        description="anharmonic (quartic-truncated) wells, all orders approximate",
    )


_BUILDERS = {
    "linear_gradient": _linear_gradient,
    "displaced_ho": _displaced_ho,
    "ho_diff_k": _ho_diff_k,
    "cubic_perturbation": _cubic_perturbation,
    "kicked_rotor": _kicked_rotor,
    "morse_like": _morse_like,
}


def load(name: str) -> Scenario:
    """Load a named scenario; raises KeyError for unknown names."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(
            f"unknown scenario {name!r}; available: {', '.join(SCENARIO_NAMES)}"
        ) from None
    return builder()
