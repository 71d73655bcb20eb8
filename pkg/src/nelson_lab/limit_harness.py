"""Convergence of the quantum dynamics onto the classical flow.

The interaction-picture characteristic function <W(xi)> of the evolved
coherent state is compared with exp(i sqrt(2) Re <xi, z(t)>) evaluated on
the freely-pulled-back classical trajectory; the distance between the two
shrinks with eps.  First moments of the field operators track the
classical fields themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classical_dynamics import FieldState, flow, free_flow
from .discretization import coupling_weight
from .errors import TruncationInsufficient
from .fock_space import (coherent_state, ladder, occupation_cap,
                         tensor_state, truncated_basis)
from .quantum_dynamics import assemble, full_weyl, interaction_picture, propagate


def characteristic_function(state, handle):
    """<psi, W psi> for a normalised state and a Weyl handle."""
    return complex(np.vdot(state.vec, handle.apply(state.vec)))


def coherent_target(grid, xi1, xi2, z):
    """Classical-limit value exp(i sqrt(2) Re[<xi1,z1>_x + <xi2,z2>_k])."""
    overlap = (grid.inner_x(np.asarray(xi1, complex), z.z1)
               + grid.inner_k(np.asarray(xi2, complex), z.z2))
    return complex(np.exp(1j * np.sqrt(2.0) * overlap.real))


def default_xi_panel(grid, modes):
    """Six pinned test functions: nucleon-only, meson-only, and mixed."""
    g = grid.n_sites
    x = grid.x
    modes = np.asarray(modes)
    bump = np.exp(-x ** 2)
    wave = np.exp(1j * x) * (0.5 + 0.2 * np.cos(x))
    panel = []
    xi2 = np.zeros(g, dtype=complex)
    panel.append((0.5 * bump.astype(complex), xi2))
    panel.append((0.4 * wave, xi2.copy()))
    xi2_one = np.zeros(g, dtype=complex)
    xi2_one[modes[0]] = 0.5 - 0.3j
    panel.append((np.zeros(g, dtype=complex), xi2_one))
    xi2_all = np.zeros(g, dtype=complex)
    xi2_all[modes] = 0.4 * np.exp(1j * np.arange(modes.size))
    panel.append((np.zeros(g, dtype=complex), xi2_all))
    panel.append((0.3 * bump * np.exp(1j * x), 0.5 * xi2_one))
    panel.append((0.25 * wave.conj(), -0.4 * xi2_all))
    return panel


@dataclass
class CharFnSample:
    """One characteristic-function comparison point."""

    eps: float
    t: float
    xi_index: int
    value: complex
    target: complex
    error: float


@dataclass
class Theorem1Report:
    """Characteristic-function errors over an eps/time/test-function panel."""

    eps_values: tuple
    t_values: tuple
    n_xi: int
    errors: np.ndarray  # (n_eps, n_t, n_xi)
    samples: list = field(repr=False)
    dims: tuple = ()
    caps: tuple = ()
    deficits: tuple = ()


def _covered_modes(grid, params, z2):
    """Modes the meson basis must carry: coupling support plus initial
    field support."""
    w = coupling_weight(grid, params)
    modes = np.nonzero((w != 0) | (np.asarray(z2) != 0))[0]
    if modes.size == 0:
        modes = np.array([grid.n_sites // 2])
    return modes


def _bases_for(grid, params, eps, z0, tail_budget):
    modes = _covered_modes(grid, params, z0.z2)
    mean_n = grid.norm_x(z0.z1) ** 2 / eps
    mean_m = grid.norm_k(z0.z2) ** 2 / eps
    # one extra rung of headroom for occupation pumped by the coupling
    cap_n = occupation_cap(mean_n, tail_budget) + 2
    cap_m = occupation_cap(mean_m, tail_budget) + 2
    nb = truncated_basis(grid.n_sites, cap_n)
    mb = truncated_basis(modes.size, cap_m, modes=modes)
    return nb, mb


def theorem1_sweep(grid, params, z0, eps_values, t_values, xi_panel=None,
                   tail_budget=1e-4, classical_dt=1e-3, tol=1e-12):
    """Characteristic-function distance to the classical limit.

    For each eps the coherent state at z0 is evolved, rotated to the
    interaction picture, and tested against the freely-pulled-back
    classical trajectory on the whole test-function panel.
    """
    t_values = tuple(float(t) for t in t_values)
    if any(t <= 0 for t in t_values) or list(t_values) != sorted(t_values):
        raise ValueError("t_values must be positive and increasing")
    eps_values = tuple(float(e) for e in eps_values)
    traj = flow(grid, params, z0, np.concatenate([[0.0], t_values]),
                classical_dt)
    if xi_panel is None:
        xi_panel = default_xi_panel(grid, _covered_modes(grid, params, z0.z2))
    samples, dims, caps, deficits = [], [], [], []
    errors = np.zeros((len(eps_values), len(t_values), len(xi_panel)))
    for a, eps in enumerate(eps_values):
        nb, mb = _bases_for(grid, params, eps, z0, tail_budget)
        ham = assemble(grid, params, eps, nb, mb)
        v1, d1 = coherent_state(grid, nb, z0.z1, eps)
        v2, d2 = coherent_state(grid, mb, z0.z2, eps)
        deficit = max(d1, d2)
        if deficit > 10.0 * tail_budget:
            raise TruncationInsufficient(
                f"coherent tail {deficit:.3e} at eps={eps}", deficit=deficit)
        state = tensor_state(v1, v2, nb, mb, eps)
        dims.append(ham.dim)
        caps.append((nb.cap, mb.cap))
        deficits.append(deficit)
        snapshots = propagate(ham, state, list(t_values), tol=tol)
        for b, (t, snap) in enumerate(zip(t_values, snapshots)):
            rotated = interaction_picture(ham, snap, t, tol=tol)
            pulled_back = free_flow(grid, params, traj.state(b + 1), -t)
            for c, (xi1, xi2) in enumerate(xi_panel):
                handle = full_weyl(grid, eps, nb, mb, xi1, xi2)
                value = characteristic_function(rotated, handle)
                target = coherent_target(grid, xi1, xi2, pulled_back)
                err = abs(value - target)
                errors[a, b, c] = err
                samples.append(CharFnSample(eps=eps, t=t, xi_index=c,
                                            value=value, target=target,
                                            error=err))
    return Theorem1Report(eps_values=eps_values, t_values=t_values,
                          n_xi=len(xi_panel), errors=errors, samples=samples,
                          dims=tuple(dims), caps=tuple(caps),
                          deficits=tuple(deficits))


@dataclass
class EhrenfestTrack:
    """First moments of the field operators along the evolution."""

    times: np.ndarray
    quantum_z1: np.ndarray  # (n_times, n_sites)
    quantum_z2: np.ndarray  # (n_times, n_sites)
    classical_z1: np.ndarray
    classical_z2: np.ndarray
    errors: np.ndarray  # combined quadrature distance per time


def ehrenfest_track(grid, params, eps, z0, times, tail_budget=1e-4,
                    classical_dt=1e-3, tol=1e-12):
    """Track <field> of the evolved coherent state against the classical
    trajectory started at the same fields."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0:
        raise ValueError("times must start at 0")
    nb, mb = _bases_for(grid, params, eps, z0, tail_budget)
    ham = assemble(grid, params, eps, nb, mb)
    v1, _ = coherent_state(grid, nb, z0.z1, eps)
    v2, _ = coherent_state(grid, mb, z0.z2, eps)
    state = tensor_state(v1, v2, nb, mb, eps)
    traj = flow(grid, params, z0, times, classical_dt)
    site_ops = [ladder(nb, j, eps) for j in range(grid.n_sites)]
    mode_ops = [ladder(mb, p, eps) for p in range(mb.modes.size)]
    snapshots = ([state] + propagate(ham, state, times[1:], tol=tol)
                 if times.size > 1 else [state])
    q1 = np.zeros((times.size, grid.n_sites), dtype=complex)
    q2 = np.zeros((times.size, grid.n_sites), dtype=complex)
    for i, snap in enumerate(snapshots):
        mat = snap.vec.reshape(nb.dim, mb.dim)
        for j, op in enumerate(site_ops):
            q1[i, j] = np.vdot(mat, op @ mat) / np.sqrt(grid.dx)
        for p, op in enumerate(mode_ops):
            q2[i, mb.modes[p]] = np.vdot(mat, mat @ op.T.toarray()) \
                / np.sqrt(grid.dk)
    errors = np.sqrt(grid.dx * np.sum(np.abs(q1 - traj.z1) ** 2, axis=1)
                     + grid.dk * np.sum(np.abs(q2 - traj.z2) ** 2, axis=1))
    return EhrenfestTrack(times=times, quantum_z1=q1, quantum_z2=q2,
                          classical_z1=traj.z1, classical_z2=traj.z2,
                          errors=errors)
