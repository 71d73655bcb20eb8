"""Truncated Fock-space dynamics of the coupled nucleon-meson system.

The scaled Hamiltonian is H = dGamma1(h1) (x) I + I (x) dGamma2(omega)
+ H_c with the coupling H_c = sum_m sqrt(dk) w_m [dGamma1(e^{-i k_m x})
(x) a_m* + h.c.], w = chi/sqrt(omega); the propagator is exp(-i t H/eps).
Conjugating the coupling with a Weyl operator expands in eps:
(i/eps)(W(xi)* H_c W(xi) - H_c) = B0 + eps B1 + eps^2 B2, and the
time-dependent characteristic function obeys an exact integral identity
with the freely evolved argument xi(s); both are assembled here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .classical_dynamics import FieldState, free_flow
from .discretization import (coupling_weight, dispersion,
                             one_body_hamiltonian)
from .errors import StepSizeRejected
from .fock_space import (FockBasis, OperatorHandle, QuantumState,
                         dgamma_diagonal, interaction_halves, ladder,
                         second_quantize, smeared_annihilator,
                         weyl_generator)
from .krylov import expimv


@dataclass
class HamiltonianSet:
    """Assembled sparse Hamiltonians over a product basis."""

    grid: object
    params: object
    eps: float
    nucleon_basis: FockBasis
    meson_basis: FockBasis
    h_free: sp.csr_matrix
    h_coupling: sp.csr_matrix
    h_total: sp.csr_matrix

    @property
    def dim(self):
        return self.nucleon_basis.dim * self.meson_basis.dim


def assemble(grid, params, eps, nucleon_basis, meson_basis):
    """Build free, coupling, and total Hamiltonians on the product basis."""
    h1 = one_body_hamiltonian(grid, params)
    omega = dispersion(grid.k, params.meson_mass)
    dg1 = second_quantize(nucleon_basis, h1, eps)
    dg2 = dgamma_diagonal(meson_basis, omega[meson_basis.modes], eps)
    id_n = sp.identity(nucleon_basis.dim, format="csr")
    id_m = sp.identity(meson_basis.dim, format="csr")
    h_free = (sp.kron(dg1, id_m) + sp.kron(id_n, dg2)).tocsr()
    creation, annihilation = interaction_halves(
        grid, params, eps, nucleon_basis, meson_basis)
    h_coupling = (creation + annihilation).tocsr()
    return HamiltonianSet(grid, params, eps, nucleon_basis, meson_basis,
                          h_free, h_coupling,
                          (h_free + h_coupling).tocsr())


def number_weight_diagonal(nucleon_basis, meson_basis, eps):
    """Diagonal of N1^2 + N2 + eps on the product basis."""
    n1 = eps * nucleon_basis.occupations.sum(axis=1).astype(float)
    n2 = eps * meson_basis.occupations.sum(axis=1).astype(float)
    return (np.repeat(n1 ** 2, meson_basis.dim)
            + np.tile(n2, nucleon_basis.dim) + eps)


def propagate(ham, state, times, tol=1e-13):
    """States exp(-i t H/eps) psi0 at the requested times (increasing,
    starting at or after zero)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1d array")
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be strictly increasing and >= 0")
    eps = ham.eps

    def matvec(v):
        return ham.h_total @ v / eps

    out = []
    psi = state.vec.copy()
    prev = 0.0
    for t in times:
        if t > prev:
            psi = expimv(matvec, psi, t - prev, tol=tol)
            prev = t
        out.append(QuantumState(psi.copy(), ham.nucleon_basis,
                                ham.meson_basis, eps))
    return out


def interaction_picture(ham, state, t, tol=1e-13):
    """Rotate a Schroedinger-picture state at time t by exp(+i t H0/eps)."""
    eps = ham.eps
    vec = expimv(lambda v: ham.h_free @ v / eps, state.vec, -t, tol=tol)
    return QuantumState(vec, ham.nucleon_basis, ham.meson_basis, eps)


def free_weyl_argument(grid, params, xi1, xi2, t):
    """Freely evolved Weyl argument (e^{-i t h1} xi1, e^{-i t omega} xi2);
    conjugation by exp(-i t H0/eps) maps W(xi) to W of this argument."""
    st = free_flow(grid, params, FieldState(xi1, xi2), t)
    return st.z1, st.z2


def full_weyl(grid, eps, nucleon_basis, meson_basis, xi1, xi2):
    """Weyl operator W(xi1, xi2) on the product basis, as a lazy handle."""
    x1 = weyl_generator(grid, nucleon_basis, np.asarray(xi1, complex), eps)
    x2 = weyl_generator(grid, meson_basis, np.asarray(xi2, complex), eps)
    id_n = sp.identity(nucleon_basis.dim, format="csr")
    id_m = sp.identity(meson_basis.dim, format="csr")
    x_full = (sp.kron(x1, id_m) + sp.kron(id_n, x2)).tocsr()

    def matvec(v):
        return expimv(lambda u: 1j * (x_full @ u), v, 1.0)

    return OperatorHandle(dim=nucleon_basis.dim * meson_basis.dim,
                          matvec_fn=matvec, generator=x_full, label="weyl")


def b_operators(grid, params, eps, nucleon_basis, meson_basis, xi1, xi2):
    """Coefficients of the Weyl-conjugated coupling, as sparse matrices:
    W(xi)* H_c W(xi) = H_c - i eps (B0 + eps B1 + eps^2 B2).

    All three are anti-Hermitian; B2 is a purely imaginary scalar.
    """
    xi1 = np.asarray(xi1, dtype=complex)
    xi2 = np.asarray(xi2, dtype=complex)
    w = coupling_weight(grid, params)
    modes = meson_basis.modes
    covered = np.zeros(grid.n_sites, dtype=bool)
    covered[modes] = True
    if np.any(w[~covered] != 0):
        raise ValueError("coupling weight is nonzero outside the meson basis")
    phases = grid.phases
    # site profile S_j = sum_m dk w_m (xi2_m e^{+i k_m x_j} - c.c.)
    s_plus = grid.dk * (w * xi2) @ np.conj(phases)
    s_site = s_plus - np.conj(s_plus)
    # Fourier transform of |xi1|^2 at the grid modes
    rho_xi = grid.dx * (phases @ (np.abs(xi1) ** 2))

    def psi(f):
        return smeared_annihilator(nucleon_basis, f, grid.dx, eps)

    def psi_star(f):
        return psi(f).getH()

    dim_n, dim_m = nucleon_basis.dim, meson_basis.dim
    dim = dim_n * dim_m
    id_n = sp.identity(dim_n, format="csr")
    id_m = sp.identity(dim_m, format="csr")
    t1 = sp.csr_matrix((dim, dim), dtype=complex)
    t2 = sp.csr_matrix((dim, dim), dtype=complex)
    third = sp.csr_matrix((dim_m, dim_m), dtype=complex)
    for p, m in enumerate(modes):
        if w[m] == 0:
            continue
        e_m = phases[m]
        a_p = ladder(meson_basis, p, eps)
        adag_p = a_p.getH()
        c = np.sqrt(grid.dk) * w[m]
        t1 = t1 + c * (sp.kron(psi_star(xi1 * e_m), adag_p)
                       + sp.kron(psi_star(xi1 * np.conj(e_m)), a_p))
        t2 = t2 + c * (sp.kron(psi(xi1 * np.conj(e_m)), adag_p)
                       + sp.kron(psi(xi1 * e_m), a_p))
        third = third + c * (rho_xi[m] * adag_p
                             + np.conj(rho_xi[m]) * a_p)
    t3 = sp.kron(dgamma_diagonal(nucleon_basis, s_site, eps), id_m)
    b0 = -(1.0 / np.sqrt(2.0)) * (t1 - t2 + t3)
    nucleon_part = psi_star(s_site * xi1) + psi(s_site * xi1)
    b1 = -0.5j * (sp.kron(nucleon_part, id_m) - sp.kron(id_n, third))
    b2_scalar = -(1j / np.sqrt(2.0)) * np.imag(
        grid.dk * np.sum(w * xi2 * np.conj(rho_xi)))
    b2 = b2_scalar * sp.identity(dim, format="csr", dtype=complex)
    return b0.tocsr(), b1.tocsr(), b2.tocsr()


def b_expansion_residual(grid, params, eps, nucleon_basis, meson_basis,
                         xi1, xi2, core_margin=(8, 10)):
    """Operator-norm residual of the conjugation expansion on the core.

    Compares (i/eps)(W* H_c W - H_c) against B0 + eps B1 + eps^2 B2 with
    everything dense, projected onto states at least `core_margin` quanta
    below the caps in each factor.
    """
    w1 = expm(weyl_generator(grid, nucleon_basis,
                             np.asarray(xi1, complex), eps).toarray())
    w2 = expm(weyl_generator(grid, meson_basis,
                             np.asarray(xi2, complex), eps).toarray())
    w_full = np.kron(w1, w2)
    creation, annihilation = interaction_halves(
        grid, params, eps, nucleon_basis, meson_basis)
    h_c = (creation + annihilation).toarray()
    b0, b1, b2 = b_operators(grid, params, eps, nucleon_basis, meson_basis,
                             xi1, xi2)
    lhs = (1j / eps) * (w_full.conj().T @ h_c @ w_full - h_c)
    rhs = (b0 + eps * b1 + eps ** 2 * b2).toarray()
    keep_n = (nucleon_basis.occupations.sum(axis=1)
              <= nucleon_basis.cap - core_margin[0]).astype(float)
    keep_m = (meson_basis.occupations.sum(axis=1)
              <= meson_basis.cap - core_margin[1]).astype(float)
    core = np.kron(keep_n, keep_m)
    if not np.any(core):
        raise ValueError("core margins remove every state")
    res = core[:, None] * (lhs - rhs) * core[None, :]
    return float(np.linalg.norm(res, 2))


def _simpson_weights(n_nodes, h):
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


@dataclass
class DuhamelReport:
    """Both sides of the integral identity for the characteristic
    function in the interaction picture, with diagnostics."""

    eps: float
    t: float
    n_nodes: int
    dim: int
    char_initial: complex
    lhs: complex
    rhs: complex
    residual: float
    quadrature_estimate: float
    contributions: tuple


def duhamel_check(ham, state0, xi1, xi2, t, n_nodes=65, tol=1e-13):
    """Integral identity for <W(xi)> in the interaction picture.

    lhs: <psi(t)|exp(+itH0/eps) W(xi) exp(-itH0/eps)|psi(t)> with
    psi(t) = exp(-itH/eps) psi0.  rhs: the initial value plus
    sum_j eps^j int_0^t <psi(s), W(xi(s)) B_j(xi(s)) psi(s)> ds with the
    freely evolved argument xi(s), integrated by composite Simpson;
    the quadrature error is estimated against the half-resolution rule.
    """
    if n_nodes < 5 or (n_nodes - 1) % 4 != 0:
        raise ValueError("n_nodes must be 4k+1 with k >= 1")
    if t <= 0:
        raise StepSizeRejected(f"need a positive time, got {t}")
    grid, params, eps = ham.grid, ham.params, ham.eps
    nb, mb = ham.nucleon_basis, ham.meson_basis
    nodes = np.linspace(0.0, t, n_nodes)

    w0 = full_weyl(grid, eps, nb, mb, xi1, xi2)
    psi = state0.vec.copy()
    char_initial = complex(np.vdot(psi, w0.apply(psi)))

    def matvec(v):
        return ham.h_total @ v / eps

    vals = np.zeros((3, n_nodes), dtype=complex)
    for i, s in enumerate(nodes):
        if i > 0:
            psi = expimv(matvec, psi, nodes[i] - nodes[i - 1], tol=tol)
        z1s, z2s = free_weyl_argument(grid, params, xi1, xi2, s)
        b_ops = b_operators(grid, params, eps, nb, mb, z1s, z2s)
        w_s = full_weyl(grid, eps, nb, mb, z1s, z2s)
        for j, b in enumerate(b_ops):
            vals[j, i] = np.vdot(psi, w_s.apply(b @ psi))

    h = t / (n_nodes - 1)
    fine = vals @ _simpson_weights(n_nodes, h)
    coarse = vals[:, ::2] @ _simpson_weights((n_nodes + 1) // 2, 2.0 * h)
    contributions = tuple(eps ** j * fine[j] for j in range(3))
    rhs = char_initial + sum(contributions)
    quad_est = float(sum(eps ** j * abs(fine[j] - coarse[j]) / 15.0
                         for j in range(3)))

    psi_tilde = expimv(lambda v: ham.h_free @ v / eps, psi, -t, tol=tol)
    lhs = complex(np.vdot(psi_tilde, w0.apply(psi_tilde)))
    return DuhamelReport(eps=eps, t=t, n_nodes=n_nodes, dim=ham.dim,
                         char_initial=char_initial, lhs=lhs, rhs=complex(rhs),
                         residual=float(abs(lhs - rhs)),
                         quadrature_estimate=quad_est,
                         contributions=contributions)


def gronwall_bound_check(ham, delta, t, n_samples=200, seed=0,
                         dense_limit=2000):
    """Growth of the weighted propagator T^d exp(-itH/eps) T^-d with
    T = N1^2 + N2 + eps, against the exponential a-priori bound
    exp(m_d sqrt(eps) |d| |t| |chi/sqrt(omega)|_2),
    m_d = max(2 + eps, 1 + (1+eps)^d).  Returns ratios <= 1 when it holds.
    """
    if ham.dim > dense_limit:
        raise ValueError(f"dense check limited to dim {dense_limit}")
    eps = ham.eps
    grid, params = ham.grid, ham.params
    w = coupling_weight(grid, params)
    chi_norm = np.sqrt(grid.dk * np.sum(w ** 2))
    m_delta = max(2.0 + eps, 1.0 + (1.0 + eps) ** delta)
    bound = np.exp(m_delta * np.sqrt(eps) * abs(delta) * abs(t) * chi_norm)
    tvec = number_weight_diagonal(ham.nucleon_basis, ham.meson_basis, eps)
    u = expm(-1j * t * ham.h_total.toarray() / eps)
    weighted = (tvec ** delta)[:, None] * u * (tvec ** -delta)[None, :]
    op_ratio = float(np.linalg.norm(weighted, 2)) / bound
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        phi = rng.standard_normal(ham.dim) + 1j * rng.standard_normal(ham.dim)
        worst = max(worst, np.linalg.norm(weighted @ phi)
                    / np.linalg.norm(phi))
    return {"operator_ratio": op_ratio,
            "max_vector_ratio": worst / bound,
            "bound": float(bound),
            "m_delta": float(m_delta)}
