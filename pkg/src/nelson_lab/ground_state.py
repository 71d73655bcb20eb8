"""Ground-state energies of the coupled system at fixed nucleon number.

With n nucleons, eps = lambda^2 / n, the lowest eigenvalue of H on the
n-nucleon sector approaches the minimum of the classical energy over
|z1|_x = lambda as n grows; coherent product states at the classical
minimiser give variational upper bounds along the way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .classical_energy import minimize_constrained
from .discretization import coupling_weight
from .errors import ConvergenceFailure
from .fock_space import coherent_state, sector_basis, tensor_state, truncated_basis
from .quantum_dynamics import assemble


def lowest_eigenpair(matrix, method="auto", tol=1e-10, dense_cutoff=1200,
                     maxiter=None):
    """Smallest eigenvalue and eigenvector of a Hermitian matrix.

    method "dense" runs a full factorisation, "lanczos" the implicitly
    restarted iteration (falling back to dense when the matrix is too
    small for it), "auto" picks by size.  The returned pair is checked
    against its residual.
    """
    dim = matrix.shape[0]
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if dim <= dense_cutoff else "lanczos"
    if method == "lanczos" and dim < 3:
        method = "dense"
    if method == "dense":
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        vals, vecs = eigh(dense)
        value, vector = float(vals[0]), vecs[:, 0]
    else:
        # fixed start vector keeps repeated runs bit-identical
        v0 = np.random.default_rng(1905).standard_normal(dim)
        try:
            vals, vecs = eigsh(matrix, k=1, which="SA", tol=tol,
                               maxiter=maxiter, v0=v0)
        except ArpackNoConvergence as exc:
            raise ConvergenceFailure(
                f"lowest eigenvalue did not converge at dim {dim}") from exc
        value, vector = float(vals[0]), vecs[:, 0]
    residual = float(np.linalg.norm(matrix @ vector - value * vector))
    if residual > 1e-7 * max(1.0, abs(value)):
        raise ConvergenceFailure(
            f"eigenpair residual {residual:.3e} too large at dim {dim}",
            best=(value, vector))
    return value, vector


def coherent_upper_bound(ham, z1, z2):
    """Rayleigh quotient of the coherent product state at (z1, z2) in the
    assembled bases; an upper bound on the lowest eigenvalue."""
    v1, _ = coherent_state(ham.grid, ham.nucleon_basis, z1, ham.eps)
    v2, _ = coherent_state(ham.grid, ham.meson_basis, z2, ham.eps)
    state = tensor_state(v1, v2, ham.nucleon_basis, ham.meson_basis, ham.eps)
    return float(np.vdot(state.vec, ham.h_total @ state.vec).real)


@dataclass
class GroundStateRecord:
    """Energies at one nucleon number."""

    n: int
    eps: float
    dim: int
    e_quantum: float
    e_coherent: float
    gap: float


@dataclass
class SweepReport:
    """Sector ground-state energies against the classical minimum."""

    lambda_coupling: float
    e_classical: float
    records: list
    cap_shift: float
    z1_min: np.ndarray
    z2_min: np.ndarray


def active_meson_basis(grid, params, cap):
    """Truncated meson basis covering the modes the coupling reaches."""
    w = coupling_weight(grid, params)
    modes = np.nonzero(w != 0)[0]
    if modes.size == 0:
        modes = np.array([grid.n_sites // 2])
    return truncated_basis(modes.size, cap, modes=modes)


def _sector_ground_energy(grid, params, n, meson_cap, method):
    eps = params.charge ** 2 / n
    nb = sector_basis(grid.n_sites, n)
    mb = active_meson_basis(grid, params, meson_cap)
    ham = assemble(grid, params, eps, nb, mb)
    value, _ = lowest_eigenpair(ham.h_total, method=method)
    return ham, value


def theorem2_sweep(grid, params, n_values, meson_cap, method="auto",
                   cap_check_shift=3, seed=0):
    """Ground-state energies over a range of nucleon numbers n at fixed
    lambda = params.charge, against the constrained classical minimum.

    Each record holds the sector ground energy, the coherent upper bound
    at the classical minimiser, and the distance to the classical
    minimum; cap_shift reports how much the largest-n energy moves when
    the meson cap is raised by cap_check_shift.
    """
    n_values = [int(n) for n in n_values]
    if any(n <= 0 for n in n_values):
        raise ValueError("nucleon numbers must be positive")
    best = minimize_constrained(grid, params, seed=seed)
    e_classical = best.energy
    records = []
    for n in n_values:
        ham, e_quantum = _sector_ground_energy(grid, params, n, meson_cap,
                                               method)
        e_coherent = coherent_upper_bound(ham, best.z1, best.z2)
        records.append(GroundStateRecord(
            n=n, eps=ham.eps, dim=ham.dim, e_quantum=e_quantum,
            e_coherent=e_coherent, gap=abs(e_quantum - e_classical)))
    _, deeper = _sector_ground_energy(grid, params, max(n_values),
                                      meson_cap + cap_check_shift, method)
    cap_shift = abs(deeper - records[n_values.index(max(n_values))].e_quantum)
    return SweepReport(lambda_coupling=params.charge,
                       e_classical=e_classical, records=records,
                       cap_shift=cap_shift, z1_min=best.z1, z2_min=best.z2)
