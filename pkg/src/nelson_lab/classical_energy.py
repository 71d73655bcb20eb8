"""Classical energy functional, meson elimination, and constrained minimum.

The classical system is a pair z = (z1, z2): z1 sampled on grid.x with
|z1|_x held at lambda, z2 sampled on grid.k.  The energy is

    h(z) = <z1, h1 z1>_x + sum_m dk omega_m |z2_m|^2
           + int A(x; z2) |z1(x)|^2 dx,

where A(x; z2) = 2 Re sum_m dk (chi/sqrt(omega))_m z2_m e^{i k_m x} is the
(real) meson field profile seen by the nucleons.

Minimising h over z2 at fixed z1 is explicit (eliminate_meson); the
remaining functional of z1 alone is minimised over the sphere |z1|_x =
lambda by projected gradient descent with Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import Grid, ModelParams, coupling_weight, dispersion, one_body_hamiltonian
from .errors import MaxIterationsExceeded


@dataclass
class EnergyBreakdown:
    """Classical energy split into its three contributions."""

    one_body: float
    field: float
    interaction: float

    @property
    def total(self) -> float:
        return self.one_body + self.field + self.interaction


@dataclass
class MinimizationResult:
    """Outcome of the constrained energy minimisation."""

    z1: np.ndarray
    z2: np.ndarray
    energy: float
    gradient_norm: float
    iterations: int
    converged: bool
    start_energies: np.ndarray  # best energy reached from each start
    history: np.ndarray  # accepted energies along the winning run


def density_fourier(grid: Grid, z1: np.ndarray) -> np.ndarray:
    """Fourier transform of the nucleon density: rho_m = sum_j dx
    e^{-i k_m x_j} |z1_j|^2."""
    return grid.dx * (grid.phases @ (np.abs(z1) ** 2))


def field_profile(grid: Grid, params: ModelParams, z2: np.ndarray) -> np.ndarray:
    """Real meson field profile A(x_j; z2) seen by the nucleons."""
    weight = coupling_weight(grid, params)
    return 2.0 * np.real((grid.dk * weight * z2) @ np.conj(grid.phases))


def evaluate_h(grid: Grid, params: ModelParams, state) -> EnergyBreakdown:
    """Classical energy of a field state (anything with .z1/.z2 arrays)."""
    z1, z2 = np.asarray(state.z1), np.asarray(state.z2)
    h1 = one_body_hamiltonian(grid, params)
    omega = dispersion(grid.k, params.meson_mass)
    one_body = float(np.real(grid.inner_x(z1, h1 @ z1)))
    field = float(grid.dk * np.sum(omega * np.abs(z2) ** 2))
    prof = field_profile(grid, params, z2)
    interaction = float(grid.dx * np.sum(prof * np.abs(z1) ** 2))
    return EnergyBreakdown(one_body, field, interaction)


def eliminate_meson(grid: Grid, params: ModelParams, z1: np.ndarray) -> np.ndarray:
    """Minimiser of h over z2 at fixed z1:
    z2*_m = -chi_m rho_m / omega_m^{3/2}."""
    omega = dispersion(grid.k, params.meson_mass)
    weight = coupling_weight(grid, params)  # chi/sqrt(omega), 0 where chi=0
    return -weight * density_fourier(grid, z1) / omega


def reduced_functional(
    grid: Grid, params: ModelParams, z1: np.ndarray
) -> tuple[float, np.ndarray]:
    """Energy after meson elimination, and its gradient.

    Value:  <z1, h1 z1>_x - sum_m dk (chi^2/omega^2) |rho_m|^2.
    The gradient g is defined by dE = 2 Re sum_j dx conj(dz1_j) g_j, i.e.
    g = h1 z1 + A(.; z2*(z1)) z1.
    """
    h1 = one_body_hamiltonian(grid, params)
    omega = dispersion(grid.k, params.meson_mass)
    weight = coupling_weight(grid, params)
    rho = density_fourier(grid, z1)
    c2 = weight**2 / omega  # chi^2 / omega^2, 0 where chi=0
    value = float(np.real(grid.inner_x(z1, h1 @ z1)))
    value -= float(grid.dk * np.sum(c2 * np.abs(rho) ** 2))
    prof = -2.0 * np.real((grid.dk * c2 * rho) @ np.conj(grid.phases))
    grad = h1 @ z1 + prof * z1
    return value, grad


def binding_lower_bound(grid: Grid, params: ModelParams) -> float:
    """Lower bound -lambda^4 |chi/omega|_k^2 on the reduced functional
    (valid whenever h1 >= 0, e.g. nonnegative potentials)."""
    omega = dispersion(grid.k, params.meson_mass)
    weight = coupling_weight(grid, params)
    return -params.charge**4 * float(grid.dk * np.sum(weight**2 / omega))


def _fix_phase(z1: np.ndarray) -> np.ndarray:
    s = np.sum(z1)
    if np.abs(s) > 0.0:
        z1 = z1 * np.exp(-1j * np.angle(s))
    return z1


def _tangent_gradient(grid: Grid, z1: np.ndarray, grad: np.ndarray, lam: float):
    """Project the gradient onto the tangent space of the sphere |z1| = lam."""
    radial = np.real(grid.inner_x(z1, grad)) / lam**2
    return grad - radial * z1


def minimize_constrained(
    grid: Grid,
    params: ModelParams,
    seed: int = 0,
    n_starts: int = 3,
    max_iter: int = 5000,
    grad_tol: float = 1e-7,
) -> MinimizationResult:
    """Minimise the reduced functional over the sphere |z1|_x = lambda.

    Projected gradient descent with Armijo backtracking, restarted from
    n_starts random initial fields; the best run wins.  Convergence means
    the tangential gradient norm falls below grad_tol * max(1, |E|).
    Raises MaxIterationsExceeded (carrying the best iterate) if no start
    converges within max_iter accepted steps.
    """
    lam = params.charge
    rng = np.random.default_rng(seed)
    g = grid.n_sites

    best = None  # (energy, z1, grad_norm, iters, converged, history)
    start_energies = []
    for _ in range(n_starts):
        z1 = rng.standard_normal(g) + 1j * rng.standard_normal(g)
        z1 *= lam / grid.norm_x(z1)
        energy, grad = reduced_functional(grid, params, z1)
        history = [energy]
        step = 1.0
        converged = False
        stagnant = 0
        it = 0
        while it < max_iter:
            it += 1
            tangent = _tangent_gradient(grid, z1, grad, lam)
            tnorm = grid.norm_x(tangent)
            scale = max(1.0, abs(energy))
            if tnorm <= grad_tol * scale:
                converged = True
                break
            # Armijo backtracking along the projected descent direction.
            accepted = False
            while step > 1e-16:
                trial = z1 - step * tangent
                trial *= lam / grid.norm_x(trial)
                e_trial, g_trial = reduced_functional(grid, params, trial)
                if e_trial <= energy - 1e-4 * step * tnorm**2:
                    stagnant = stagnant + 1 if energy - e_trial < 1e-15 * scale else 0
                    z1, energy, grad = trial, e_trial, g_trial
                    history.append(energy)
                    step = min(step * 1.5, 1e3)
                    accepted = True
                    break
                step *= 0.5
            if not accepted or stagnant >= 3:
                # Progress hit the floating-point floor: accept as stationary
                # if the gradient is within an order of the target.
                converged = tnorm <= 10.0 * grad_tol * scale
                break
        tangent = _tangent_gradient(grid, z1, grad, lam)
        tnorm = grid.norm_x(tangent)
        start_energies.append(energy)
        if best is None or energy < best[0]:
            best = (energy, z1, tnorm, it, converged, np.array(history))

    energy, z1, tnorm, iters, converged, history = best
    z1 = _fix_phase(z1)
    z2 = eliminate_meson(grid, params, z1)
    result = MinimizationResult(
        z1=z1,
        z2=z2,
        energy=energy,
        gradient_norm=tnorm,
        iterations=iters,
        converged=converged,
        start_energies=np.array(start_energies),
        history=history,
    )
    if not converged:
        raise MaxIterationsExceeded(
            f"projected gradient did not reach tolerance in {max_iter} steps "
            f"(best gradient norm {tnorm:.3e})",
            best=result,
        )
    return result
