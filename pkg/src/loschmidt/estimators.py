"""Phase-space estimators of the fidelity amplitude.

Three approximations of increasing order are provided: ``f0`` averages static
phases of the perturbation over the initial Wigner density, ``f1_dr`` is the
dephasing representation (phases accumulated along classical trajectories of
the reference Hamiltonian), and ``f2_mc`` replaces the deterministic momentum
update by a stochastic draw weighted with a smeared (complex Gaussian) delta
function.  ``f2_gaussian_chain`` evaluates the same second-order object in
closed form when the dynamics is quadratic and the perturbation is a
quadratic potential.

All Monte Carlo reductions run over fixed, index-ordered batches so results
are reproducible bit-for-bit for a given seed regardless of how work is
scheduled.  Within one series the time steps reuse a single path ensemble,
so errors are correlated across time (flagged in the metadata).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import check_escape
from .hamiltonians import HamiltonianPair
from .states import InitialState, sample

DEFAULT_ERROR_BATCHES = 32
_SINGULAR_RTOL = 1e-12


class SingularExponentError(RuntimeError):
    """Raised when the quadratic-form matrix of the chain integral is singular."""


@dataclass(frozen=True)
class FidelitySeries:
    """Complex fidelity amplitude on a uniform time grid.

    ``stderr`` holds the statistical error per time step (zero for
    deterministic evaluations).  ``meta`` records estimator name, trajectory
    count, seed and related run parameters.
    """

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        stderr = np.asarray(self.stderr, dtype=float)
        if not (times.shape == values.shape == stderr.shape):
            raise ValueError("times, values and stderr must have equal length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stderr", stderr)

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def abs_sq(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def deviation_from(self, other: "FidelitySeries") -> np.ndarray:
        return np.abs(self.values - other.values)


@dataclass(frozen=True)
class EstimatorConfig:
    """Run parameters shared by the Monte Carlo estimators."""

    n_traj: int
    seed: int
    tau: float
    n_steps: int
    hbar: float = 1.0
    proposal_width_factor: float = 2.0
    degenerate_a_threshold: float = 1e-10
    n_error_batches: int = DEFAULT_ERROR_BATCHES

    def __post_init__(self) -> None:
        if self.n_traj < 1:
            raise ValueError("n_traj must be positive")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        for name in ("tau", "hbar", "proposal_width_factor", "degenerate_a_threshold"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.n_error_batches < 2:
            raise ValueError("n_error_batches must be at least 2")

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)


# ---------------------------------------------------------------------------
# fixed-order reductions


def _batch_starts(n: int, n_batches: int) -> np.ndarray:
    b = min(n_batches, n)
    return (np.arange(b) * n) // b


def _ordered_sum(x: np.ndarray, starts: np.ndarray):
    """Sum in fixed index order via per-batch partial sums."""
    if len(starts) == 1:
        return x.sum()
    return np.add.reduceat(x, starts).sum()


def _mean_stderr(z: np.ndarray, starts: np.ndarray):
    """Mean of complex samples and the standard error of that mean
    (real/imaginary sample variances combined in quadrature)."""
    n = z.shape[0]
    mean = _ordered_sum(z, starts) / n
    if n < 2:
        return mean, 0.0
    spread = _ordered_sum(np.abs(z - mean) ** 2, starts)
    return mean, float(np.sqrt(spread / (n - 1) / n))


_BOOTSTRAP_RESAMPLES = 400
_BOOTSTRAP_SEED = 202406  # fixed plan: part of the estimator definition


@lru_cache(maxsize=8)
def _bootstrap_plan(n_batches: int) -> np.ndarray:
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence([_BOOTSTRAP_SEED, n_batches]))
    )
    return rng.integers(0, n_batches, size=(_BOOTSTRAP_RESAMPLES, n_batches))


def _weighted_mean_stderr(w: np.ndarray, z: np.ndarray, starts: np.ndarray):
    """Self-normalised weighted complex mean with bootstrap error bars.

    The value is sum(w z) / sum(w), whose numerator and denominator share
    the heavy weights, so the ratio stays on the right scale even when the
    weight distribution degenerates.  The error bar resamples the fixed
    per-batch partial sums (a batch bootstrap of the ratio), which tracks the
    skewed sampling distribution better than the per-batch spread alone.
    """
    wz = w * z
    if len(starts) > 1:
        num = np.add.reduceat(wz, starts)
        den = np.add.reduceat(w, starts)
    else:
        num = np.array([wz.sum()])
        den = np.array([w.sum()])
    value = num.sum() / den.sum()
    b = len(starts)
    if b < 2:
        return value, 0.0
    idx = _bootstrap_plan(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        boots = num[idx].sum(axis=1) / den[idx].sum(axis=1)
    boots = boots[np.isfinite(boots)]
    if boots.size < 2:
        return value, float("inf")
    spread = np.mean(np.abs(boots - boots.mean()) ** 2)
    return value, float(np.sqrt(spread))


# ---------------------------------------------------------------------------
# zeroth order: static phase average


def f0(state: InitialState, pair: HamiltonianPair, config: EstimatorConfig) -> FidelitySeries:
    """Static average exp(-i t dH(x0) / hbar) over the initial Wigner density.

    No trajectories are run; the estimator is exact whenever the average
    Hamiltonian is constant and the perturbation affine in phase space.
    """
    times = config.times
    meta = {
        "estimator": "f0",
        "n_traj": config.n_traj,
        "seed": config.seed,
        "tau": config.tau,
        "n_steps": config.n_steps,
        "hbar": config.hbar,
        "correlated_time_steps": True,
    }
    if pair.delta.is_zero:
        return FidelitySeries(times, np.ones_like(times, dtype=complex),
                              np.zeros_like(times), meta)
    q, p = sample(state, config.n_traj, config.seed, config.hbar)
    phi = pair.delta.value(q, p)
    starts = _batch_starts(config.n_traj, config.n_error_batches)
    values = np.empty(len(times), dtype=complex)
    stderr = np.empty(len(times))
    for n, t in enumerate(times):
        z = np.exp(-1j * t / config.hbar * phi)
        values[n], stderr[n] = _mean_stderr(z, starts)
    return FidelitySeries(times, values, stderr, meta)


# ---------------------------------------------------------------------------
# first order: dephasing representation


def _drift(q, p, h, tau):
    return q + tau * h.kinetic_d1(p)


def f1_dr(
    state: InitialState,
    pair: HamiltonianPair,
    config: EstimatorConfig,
    reference: str = "average",
) -> FidelitySeries:
    """Dephasing representation: phase average along classical trajectories.

    Each sampled point follows the kick map of the reference Hamiltonian;
    the accumulated phase is tau * sum_j dH(q_{j+1}, p_j), i.e. the potential
    part of the perturbation is evaluated at the new position and the kinetic
    part at the old momentum.  ``reference='h_prime'`` propagates with the
    unperturbed Hamiltonian instead of the average one, which demonstrably
    breaks exactness even for displaced harmonic oscillators.
    """
    if reference not in ("average", "h_prime"):
        raise ValueError(f"unknown reference {reference!r}")
    h_ref = pair.average if reference == "average" else pair.h_prime
    times = config.times
    tau, hbar = config.tau, config.hbar
    q, p = sample(state, config.n_traj, config.seed, config.hbar)
    starts = _batch_starts(config.n_traj, config.n_error_batches)
    phi = np.zeros(config.n_traj)
    values = np.empty(len(times), dtype=complex)
    stderr = np.empty(len(times))
    values[0], stderr[0] = 1.0 + 0.0j, 0.0
    for n in range(1, len(times)):
        q_new = _drift(q, p, h_ref, tau)
        phi = phi + pair.delta.value(q_new, p)
        p = p - tau * h_ref.potential_d1(q_new)
        q = q_new
        check_escape(q, p)
        z = np.exp(-1j * tau / hbar * phi)
        values[n], stderr[n] = _mean_stderr(z, starts)
    meta = {
        "estimator": "f1",
        "reference": reference,
        "n_traj": config.n_traj,
        "seed": config.seed,
        "tau": tau,
        "n_steps": config.n_steps,
        "hbar": hbar,
        "correlated_time_steps": True,
    }
    return FidelitySeries(times, values, stderr, meta)


# ---------------------------------------------------------------------------
# second order: smeared-momentum Monte Carlo


def _require_position_perturbation(state, pair):
    if state.dims != 1 or pair.dims != 1:
        raise ValueError("second-order estimators support one degree of freedom only")
    if not all(t.is_zero for t in pair.delta.kinetic):
        raise ValueError("perturbation must be momentum independent")


def f2_mc(state: InitialState, pair: HamiltonianPair, config: EstimatorConfig) -> FidelitySeries:
    """Second-order estimator with stochastic (smeared) momentum propagation.

    Positions advance classically.  Whenever the local curvature of the
    perturbing potential matters (|a_n| above the degeneracy threshold) the
    momentum is drawn from a Gaussian proposal centred on the classical
    update and the path weight picks up the ratio of the smeared delta
    function to the proposal density; otherwise the momentum update is the
    classical one with unit weight, which reproduces the dephasing
    representation path by path.

    The proposal width is calibrated so the Fresnel phase b**2/(4a) sweeps
    at least 4*pi across +-2 sigma at the default width factor of 2:
    sigma_prop = proposal_width_factor * hbar * sqrt(pi * |a_n|).
    """
    _require_position_perturbation(state, pair)
    h_avg = pair.average
    times = config.times
    tau, hbar = config.tau, config.hbar
    n = config.n_traj
    q, p = sample(state, n, config.seed, hbar)
    # proposal draws come from a child stream so they can never collide with
    # the initial-condition sampler stream
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence([config.seed, 1]))
    )
    starts = _batch_starts(n, config.n_error_batches)

    phi = np.zeros(n)
    weight = np.ones(n, dtype=complex)
    values = np.empty(len(times), dtype=complex)
    stderr = np.empty(len(times))
    values[0], stderr[0] = 1.0 + 0.0j, 0.0
    planck = 2.0 * np.pi * hbar

    for step in range(1, len(times)):
        q_new = _drift(q, p, h_avg, tau)
        phi = phi + pair.delta.value(q_new, p)
        vp = h_avg.potential_d1(q_new)
        p_class = p - tau * vp
        check_escape(q_new, p_class)
        # record with the weight accumulated so far: the current step's
        # momentum factor integrates to one and would only add variance
        z = np.exp(-1j * tau / hbar * phi)
        values[step], stderr[step] = _weighted_mean_stderr(weight, z, starts)

        a = tau / (8.0 * hbar) * pair.delta.potential_d2(q_new)[..., 0]
        smear = np.abs(a) >= config.degenerate_a_threshold
        if np.any(smear):
            a_safe = np.where(smear, a, 1.0)
            abs_a = np.abs(a_safe)
            sigma_prop = config.proposal_width_factor * hbar * np.sqrt(np.pi * abs_a)
            draw = p_class[..., 0] + sigma_prop * rng.standard_normal(n)
            b = (draw - p[..., 0] + tau * vp[..., 0]) / hbar
            smeared_delta = (
                np.sqrt(np.pi / abs_a)
                / planck
                * np.exp(1j * (b**2 / (4.0 * a_safe) - np.pi * np.sign(a_safe) / 4.0))
            )
            proposal = np.exp(-((draw - p_class[..., 0]) ** 2) / (2.0 * sigma_prop**2)) / (
                sigma_prop * np.sqrt(2.0 * np.pi)
            )
            weight = weight * np.where(smear, smeared_delta / proposal, 1.0)
            p = np.where(smear, draw, p_class[..., 0])[:, None]
            # rescale to dodge overflow in the products; the reported value
            # and error are ratios in the weights, so a common factor
            # cancels exactly
            peak = np.max(np.abs(weight))
            if peak > 1e250:
                weight = weight / peak
        else:
            p = p_class
        q = q_new

    mags = np.abs(weight)
    peak = mags.max()
    if peak > 0 and np.isfinite(peak):
        r = mags / peak
        ess = r.sum() ** 2 / (r**2).sum()
    else:
        ess = 0.0
    if ess < 0.01 * n:
        warnings.warn(
            f"second-order path weights degenerated: effective sample size "
            f"{ess:.1f} of {n}; the reported error bars are wide but honest",
            RuntimeWarning,
            stacklevel=2,
        )
    meta = {
        "estimator": "f2_mc",
        "n_traj": n,
        "seed": config.seed,
        "tau": tau,
        "n_steps": config.n_steps,
        "hbar": hbar,
        "proposal_width_factor": config.proposal_width_factor,
        "degenerate_a_threshold": config.degenerate_a_threshold,
        "effective_sample_size": float(ess),
        "correlated_time_steps": True,
    }
    return FidelitySeries(times, values, stderr, meta)


# ---------------------------------------------------------------------------
# second order, closed form for quadratic chains


def _quadratic_coeffs(term, what: str, max_degree: int = 2):
    if term.cos_amp != 0.0 or term.degree > max_degree:
        raise ValueError(f"{what} must be polynomial of degree <= {max_degree}")
    c = term.coeffs + (0.0,) * (max_degree + 1 - len(term.coeffs))
    return c[: max_degree + 1]


def _gaussian_log_integral(quad: np.ndarray, lin: np.ndarray):
    """log of the m-dimensional integral of exp(z^T quad z + lin . z).

    ``quad`` is the complex symmetric matrix of the quadratic form (its real
    part must be negative semidefinite for convergence).  The square-root
    branch is the one reached by continuous deformation from the identity,
    obtained here as the product of principal-branch factors over the
    eigenvalues, all of which stay in the closed right half plane.
    """
    m = quad.shape[0]
    a_mat = -2.0 * quad
    lam = np.linalg.eigvals(a_mat)
    mags = np.abs(lam)
    if mags.min() <= _SINGULAR_RTOL * mags.max():
        cond = np.inf if mags.min() == 0.0 else mags.max() / mags.min()
        raise SingularExponentError(
            f"singular exponent matrix (condition number {cond:.3e})"
        )
    log_det = np.sum(np.log(lam))
    sol = np.linalg.solve(a_mat, lin)
    return 0.5 * m * np.log(2.0 * np.pi) - 0.5 * log_det + 0.5 * (lin @ sol)


def _chain_value(n, comp, t1, t2, v1, v2, dv, a, tau, hbar, degenerate):
    """Fidelity amplitude after ``n`` steps of the quadratic chain."""
    d0, d1, d2 = dv
    planck = 2.0 * np.pi * hbar
    sq, sp = comp.sigma[0], hbar / comp.sigma[0]
    qbar, pbar = comp.center_q[0], comp.center_p[0]

    if degenerate:
        # momentum updates collapse to the classical map: positions are an
        # affine function of (q0, p0) only
        m = 2
        rows = np.empty((n, m))
        offs = np.empty(n)
        rq, rp = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        sq_off, sp_off = 0.0, 0.0
        for k in range(n):
            rq = rq + 2.0 * tau * t2 * rp
            sq_off = sq_off + tau * (t1 + 2.0 * t2 * sp_off)
            rp = rp - 2.0 * tau * v2 * rq
            sp_off = sp_off - tau * (v1 + 2.0 * v2 * sq_off)
            rows[k], offs[k] = rq, sq_off
        n_fresnel = 0
    else:
        # variables: z = (q0, p0, p_1 .. p_{n-1}); the final momentum
        # integrates out exactly since its smeared delta is normalised
        m = n + 1
        rows = np.zeros((n, m))
        rows[:, 0] = 1.0
        rows[:, 1:] = 2.0 * tau * t2 * np.tril(np.ones((n, n)))
        offs = tau * t1 * np.arange(1, n + 1)
        n_fresnel = n - 1

    quad = np.zeros((m, m), dtype=complex)
    lin = np.zeros(m, dtype=complex)
    const = 0.0 + 0.0j

    def add_square(c, vec, shift):
        # contribution c * (vec . z + shift)**2 to the exponent
        nonlocal const
        quad[...] += c * np.outer(vec, vec)
        lin[...] += 2.0 * c * shift * vec
        const += c * shift**2

    # initial Wigner density
    e0 = np.zeros(m)
    e0[0] = 1.0
    e1 = np.zeros(m)
    e1[1] = 1.0
    add_square(-1.0 / sq**2, e0, -qbar)
    add_square(-1.0 / sp**2, e1, -pbar)

    # accumulated perturbation phase over q_1 .. q_n
    for k in range(n):
        vec, shift = rows[k], offs[k]
        if d2 != 0.0:
            add_square(-1j * tau * d2 / hbar, vec, shift)
        lin[...] += -1j * tau * d1 / hbar * vec
        const += -1j * tau / hbar * (d1 * shift + d0)

    # Fresnel factors of the intermediate momentum updates
    for k in range(1, n_fresnel + 1):
        vec = 2.0 * tau * v2 * rows[k - 1].astype(complex)
        vec[1 + k] += 1.0
        vec[k] -= 1.0
        shift = tau * (v1 + 2.0 * v2 * offs[k - 1])
        add_square(1j / (4.0 * a * hbar**2), vec, shift)

    log_val = np.log(2.0 / planck) + const + _gaussian_log_integral(quad, lin)
    if n_fresnel:
        log_c = (
            -np.log(planck)
            + 0.5 * np.log(np.pi / abs(a))
            - 1j * np.pi * np.sign(a) / 4.0
        )
        log_val = log_val + n_fresnel * log_c
    return np.exp(log_val)


def f2_gaussian_chain(
    state: InitialState, pair: HamiltonianPair, config: EstimatorConfig
) -> FidelitySeries:
    """Closed-form second-order fidelity for quadratic chains.

    Requires a single Gaussian initial state, quadratic kinetic and potential
    parts of the average Hamiltonian and a quadratic perturbing potential.
    Every time step is then a multivariate complex Gaussian integral that is
    evaluated exactly (deterministically, stderr = 0), which makes this the
    reference implementation the Monte Carlo version is validated against.
    """
    _require_position_perturbation(state, pair)
    if len(state.components) != 1:
        raise ValueError("closed-form chain needs a single Gaussian component")
    comp = state.components[0]
    _, t1, t2 = _quadratic_coeffs(pair.average.kinetic[0], "kinetic part")
    _, v1, v2 = _quadratic_coeffs(pair.average.potential[0], "average potential")
    dv = _quadratic_coeffs(pair.delta.potential[0], "perturbing potential")
    # both branch potentials must individually be quadratic as well
    _quadratic_coeffs(pair.h_prime.potential[0], "unperturbed potential")

    tau, hbar = config.tau, config.hbar
    a = tau * dv[2] / (4.0 * hbar)
    degenerate = abs(a) < config.degenerate_a_threshold

    times = config.times
    values = np.empty(len(times), dtype=complex)
    values[0] = 1.0
    for n in range(1, len(times)):
        values[n] = _chain_value(
            n, comp, t1, t2, v1, v2, dv, a, tau, hbar, degenerate
        )
    meta = {
        "estimator": "f2_gaussian",
        "n_traj": None,
        "seed": None,
        "tau": tau,
        "n_steps": config.n_steps,
        "hbar": hbar,
        "degenerate_chain": bool(degenerate),
    }
    return FidelitySeries(times, values, np.zeros(len(times)), meta)
