"""Truncated bosonic Fock spaces over grid modes.

Conventions: modes carry commutators [b, b*] = 1; the scaled ladder
operators a = sqrt(eps) b satisfy [a, a*] = eps.  Second quantisation of a
one-body matrix A is dGamma(A) = eps * sum_ij A_ij b_i* b_j.  Smeared
fields use quadrature weights: psi(f) = sum_j sqrt(dx eps) conj(f_j) b_j
over sites, a(g) = sum_m sqrt(dk eps) conj(g_m) b_m over momentum modes,
so that a coherent state at z has <psi(x)> = z1(x) and <a(k)> = z2(k).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import factorial

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.stats import poisson

from .discretization import Grid, ModelParams, coupling_weight, dispersion
from .errors import SectorBasisUnsupported, TruncationInsufficient
from .krylov import expimv


# ---------------------------------------------------------------------------
# bases


def _sector_occupations(n_modes, total):
    """All occupation rows with the given exact total, lexicographic."""
    if n_modes == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    slots = total + n_modes - 1
    for bars in combinations(range(slots), n_modes - 1):
        occ = []
        prev = -1
        for b in bars:
            occ.append(b - prev - 1)
            prev = b
        occ.append(slots - prev - 1)
        rows.append(occ)
    return np.array(rows, dtype=np.int64)


@dataclass
class FockBasis:
    """Occupation-number basis, either a fixed-total sector or all totals
    up to a cap.  `modes` carries grid mode indices for momentum-space
    factors; None means the factor lives over position sites."""

    kind: str
    n_modes: int
    cap: int
    occupations: np.ndarray
    modes: np.ndarray | None = None
    _powers: np.ndarray = field(init=False, repr=False)
    _sorted_keys: np.ndarray = field(init=False, repr=False)
    _order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("sector", "truncated"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        base = self.cap + 1
        if base ** self.n_modes >= 2 ** 62:
            raise ValueError("occupation key space exceeds int64")
        self._powers = base ** np.arange(self.n_modes, dtype=np.int64)
        keys = self.occupations @ self._powers
        self._order = np.argsort(keys)
        self._sorted_keys = keys[self._order]

    @property
    def dim(self):
        return self.occupations.shape[0]

    def index_of(self, occ_rows):
        """Indices of the given occupation rows; raises on misses."""
        occ_rows = np.atleast_2d(occ_rows)
        if np.any(occ_rows < 0) or np.any(occ_rows > self.cap):
            raise ValueError("occupation outside the basis")
        keys = occ_rows @ self._powers
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.clip(pos, 0, self.dim - 1)
        out = self._order[pos]
        if np.any(self._sorted_keys[pos] != keys):
            raise ValueError("occupation outside the basis")
        return out


def sector_basis(n_modes, total, modes=None):
    """All states with exactly `total` quanta across `n_modes` modes."""
    if n_modes < 1 or total < 0:
        raise ValueError("need n_modes >= 1 and total >= 0")
    occ = _sector_occupations(n_modes, total)
    return FockBasis("sector", n_modes, total, occ,
                     None if modes is None else np.asarray(modes))


def truncated_basis(n_modes, max_total, modes=None):
    """All states with at most `max_total` quanta, ordered by total."""
    if n_modes < 1 or max_total < 0:
        raise ValueError("need n_modes >= 1 and max_total >= 0")
    occ = np.vstack([_sector_occupations(n_modes, n)
                     for n in range(max_total + 1)])
    return FockBasis("truncated", n_modes, max_total, occ,
                     None if modes is None else np.asarray(modes))


def occupation_cap(mean, tail_budget, cap_max=10_000):
    """Smallest cap with Poisson(mean) tail mass above it <= budget."""
    if mean < 0 or tail_budget <= 0:
        raise ValueError("need mean >= 0 and tail_budget > 0")
    for cap in range(cap_max + 1):
        if poisson.sf(cap, mean) <= tail_budget:
            return cap
    raise ValueError("cap search exhausted")


# ---------------------------------------------------------------------------
# operators


def ladder(basis, mode, eps):
    """Annihilator a_mode with amplitudes sqrt(eps * n), as CSR."""
    if basis.kind == "sector":
        raise SectorBasisUnsupported(
            "ladder operators leave a fixed-total sector")
    occ = basis.occupations
    src = np.nonzero(occ[:, mode] > 0)[0]
    new = occ[src].copy()
    new[:, mode] -= 1
    tgt = basis.index_of(new) if src.size else np.empty(0, dtype=np.int64)
    vals = np.sqrt(eps * occ[src, mode])
    return sp.csr_matrix((vals, (tgt, src)), shape=(basis.dim, basis.dim))


def number_operator(basis, eps, mode=None):
    """Diagonal eps * n_mode, or the eps-scaled total number if mode is None."""
    occ = basis.occupations
    diag = occ[:, mode] if mode is not None else occ.sum(axis=1)
    return sp.diags(eps * diag.astype(float), format="csr")


def dgamma_diagonal(basis, values, eps):
    """dGamma of a multiplication operator: diagonal eps * sum_m v_m n_m."""
    diag = eps * (basis.occupations @ np.asarray(values))
    return sp.diags(diag, format="csr")


def second_quantize(basis, a_matrix, eps):
    """dGamma(A) = eps * sum_ij A_ij b_i* b_j for a one-body matrix A.

    Number conserving, so valid on sector and truncated bases alike.
    """
    a_matrix = np.asarray(a_matrix)
    occ = basis.occupations
    n = basis.n_modes
    if a_matrix.shape != (n, n):
        raise ValueError(f"one-body matrix must be {n}x{n}")
    diag = eps * (occ @ np.diag(a_matrix))
    mat = sp.diags(diag, format="csr", dtype=complex)
    rows, cols, vals = [], [], []
    for i in range(n):
        for j in range(n):
            if i == j or a_matrix[i, j] == 0:
                continue
            src = np.nonzero(occ[:, j] > 0)[0]
            if src.size == 0:
                continue
            new = occ[src].copy()
            new[:, j] -= 1
            new[:, i] += 1
            tgt = basis.index_of(new)
            amp = eps * a_matrix[i, j] * np.sqrt(
                occ[src, j] * (occ[src, i] + 1.0))
            rows.append(tgt)
            cols.append(src)
            vals.append(amp)
    if rows:
        mat = mat + sp.csr_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(basis.dim, basis.dim))
    return mat.tocsr()


def smeared_annihilator(basis, f, quad, eps):
    """a(f) = sum_m sqrt(quad * eps) conj(f_m) b_m on the basis modes."""
    f = np.asarray(f, dtype=complex)
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for m in range(basis.n_modes):
        if f[m] == 0:
            continue
        out = out + np.sqrt(quad) * np.conj(f[m]) * ladder(basis, m, eps)
    return out.tocsr()


def interaction_halves(grid, params, eps, nucleon_basis, meson_basis):
    """Creation and annihilation halves of the coupling term.

    creation = sum_m sqrt(dk) w_m dGamma1(e^{-i k_m x}) (x) a_m*, with the
    sum over the meson basis modes; the full coupling is their sum.  The
    coupling weight must vanish off the covered modes.
    """
    if meson_basis.modes is None:
        raise ValueError("meson basis must carry grid mode indices")
    w = coupling_weight(grid, params)
    covered = np.zeros(grid.n_sites, dtype=bool)
    covered[meson_basis.modes] = True
    if np.any(w[~covered] != 0):
        raise ValueError("coupling weight is nonzero outside the meson basis")
    occ1 = nucleon_basis.occupations
    dim = nucleon_basis.dim * meson_basis.dim
    creation = sp.csr_matrix((dim, dim), dtype=complex)
    for p, m in enumerate(meson_basis.modes):
        if w[m] == 0:
            continue
        rho = occ1 @ grid.phases[m]          # sum_j n_j e^{-i k_m x_j}
        d_m = sp.diags(eps * rho)
        adag = ladder(meson_basis, p, eps).getH()
        creation = creation + np.sqrt(grid.dk) * w[m] * sp.kron(
            d_m, adag, format="csr")
    creation = creation.tocsr()
    return creation, creation.getH().tocsr()


# ---------------------------------------------------------------------------
# states


@dataclass
class QuantumState:
    """Vector over a nucleon (x) meson product basis."""

    vec: np.ndarray
    nucleon: FockBasis
    meson: FockBasis
    eps: float

    @property
    def dim(self):
        return self.vec.shape[0]

    def norm(self):
        return float(np.linalg.norm(self.vec))

    def normalized(self):
        return QuantumState(self.vec / np.linalg.norm(self.vec),
                            self.nucleon, self.meson, self.eps)

    def copy(self):
        return QuantumState(self.vec.copy(), self.nucleon, self.meson,
                            self.eps)


def tensor_state(nucleon_vec, meson_vec, nucleon_basis, meson_basis, eps):
    return QuantumState(np.kron(nucleon_vec, meson_vec), nucleon_basis,
                        meson_basis, eps)


def _poisson_amplitudes(alpha, occupations, cap):
    """Product of alpha_m^n / sqrt(n!) down each occupation row."""
    n_modes = alpha.shape[0]
    table = np.empty((n_modes, cap + 1), dtype=complex)
    fact = np.array([factorial(n) for n in range(cap + 1)], dtype=float)
    for m in range(n_modes):
        table[m] = alpha[m] ** np.arange(cap + 1) / np.sqrt(fact)
    return np.prod(table[np.arange(n_modes), occupations], axis=1)


def coherent_state(grid, basis, z, eps, deficit_tol=None):
    """Coherent (or fixed-number) state at the field configuration z.

    Over a truncated basis the product-Poisson amplitudes are cut at the
    cap and renormalised; returns (vector, deficit) where deficit is the
    probability mass lost to the cut.  Over a nucleon sector basis the
    state is the symmetrised power of z1 (deficit exactly zero).
    """
    z = np.asarray(z, dtype=complex)
    if basis.modes is None:
        quad = grid.dx
        z_sel = z
    else:
        quad = grid.dk
        keep = np.zeros(grid.n_sites, dtype=bool)
        keep[basis.modes] = True
        if np.any(z[~keep] != 0):
            raise ValueError("field has support outside the basis modes")
        z_sel = z[basis.modes]
    if basis.kind == "sector":
        nrm = np.sqrt(quad) * np.linalg.norm(z_sel)
        if nrm == 0:
            raise ValueError("sector state needs a nonzero field")
        u = np.sqrt(quad) * z_sel / nrm
        amps = _poisson_amplitudes(u, basis.occupations, basis.cap)
        amps *= np.sqrt(float(factorial(basis.cap)))
        vec = amps / np.linalg.norm(amps)
        return vec, 0.0
    alpha = z_sel * np.sqrt(quad / eps)
    amps = _poisson_amplitudes(alpha, basis.occupations, basis.cap)
    amps *= np.exp(-0.5 * np.vdot(alpha, alpha).real)
    kept = float(np.vdot(amps, amps).real)
    deficit = max(1.0 - kept, 0.0)
    if deficit_tol is not None and deficit > deficit_tol:
        raise TruncationInsufficient(
            f"coherent mass {deficit:.3e} beyond cap {basis.cap} "
            f"exceeds budget {deficit_tol:.3e}", deficit=deficit)
    return amps / np.sqrt(kept), deficit


# ---------------------------------------------------------------------------
# operator handles and Weyl factors


@dataclass
class OperatorHandle:
    """A matrix, a lazy matvec, or the exponential of a stored generator."""

    dim: int
    mat: object = None
    matvec_fn: object = None
    generator: object = None
    label: str = ""

    def apply(self, v):
        if self.mat is not None:
            return self.mat @ v
        if self.matvec_fn is not None:
            return self.matvec_fn(v)
        raise ValueError(f"handle {self.label!r} has no action")

    def expect(self, v):
        return complex(np.vdot(v, self.apply(v)))

    def to_dense(self):
        if self.mat is not None:
            m = self.mat
            return m.toarray() if sp.issparse(m) else np.asarray(m)
        if self.generator is not None:
            g = self.generator
            return expm(g.toarray() if sp.issparse(g) else np.asarray(g))
        raise ValueError(f"handle {self.label!r} has no dense form")


def weyl_generator(grid, basis, xi, eps):
    """Anti-Hermitian X with W(xi) = exp(X) on a single Fock factor:
    X = (i/sqrt(2)) sum_m sqrt(quad * eps) (xi_m b_m* + conj(xi_m) b_m)."""
    xi = np.asarray(xi, dtype=complex)
    if basis.kind == "sector":
        raise SectorBasisUnsupported(
            "Weyl displacements leave no fixed-total sector invariant")
    if basis.modes is None:
        quad = grid.dx
        xi_sel = xi
    else:
        quad = grid.dk
        keep = np.zeros(grid.n_sites, dtype=bool)
        keep[basis.modes] = True
        if np.any(xi[~keep] != 0):
            raise ValueError("argument has support outside the basis modes")
        xi_sel = xi[basis.modes]
    x_gen = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    coeff = 1j / np.sqrt(2.0) * np.sqrt(quad * eps)
    for m in range(basis.n_modes):
        if xi_sel[m] == 0:
            continue
        b = ladder(basis, m, 1.0)
        x_gen = x_gen + coeff * (xi_sel[m] * b.getH() + np.conj(xi_sel[m]) * b)
    return x_gen.tocsr()


def weyl(grid, basis, xi, eps):
    """Weyl operator W(xi) on one Fock factor, applied via the Krylov
    propagator of its (Hermitian) i * generator."""
    x_gen = weyl_generator(grid, basis, xi, eps)

    def matvec(v):
        return expimv(lambda u: 1j * (x_gen @ u), v, 1.0)

    return OperatorHandle(dim=basis.dim, matvec_fn=matvec, generator=x_gen,
                          label="weyl")


# ---------------------------------------------------------------------------
# property checkers


def check_relative_bounds(grid, params, eps, nucleon_basis, meson_basis,
                          n_samples=500, seed=0):
    """Max ratios over random states for the coupling-term bounds.

    The coupling annihilation half acts blockwise as a(f) with the
    configuration-dependent smearing f(n)_m = eps w_m sum_j n_j
    e^{-i k_m x_j}; sup norms run over the nucleon occupations in the
    basis.  Returns {name: max ratio}, each bounded by 1 when the
    inequality holds.
    """
    creation, annihilation = interaction_halves(
        grid, params, eps, nucleon_basis, meson_basis)
    w = coupling_weight(grid, params)
    omega = dispersion(grid.k, params.meson_mass)
    occ1 = nucleon_basis.occupations
    occ2 = meson_basis.occupations
    modes = meson_basis.modes

    rho = occ1 @ grid.phases[modes].T              # (dimN, M)
    f_vals = eps * w[modes] * rho
    sup_fw = np.sqrt(np.max(
        grid.dk * np.sum(np.abs(f_vals) ** 2 / omega[modes], axis=1)))
    sup_f = np.sqrt(np.max(grid.dk * np.sum(np.abs(f_vals) ** 2, axis=1)))
    chi_norm = np.sqrt(grid.dk * np.sum(w ** 2))

    dim_n, dim_m = nucleon_basis.dim, meson_basis.dim
    n1 = eps * occ1.sum(axis=1).astype(float)
    n2 = eps * occ2.sum(axis=1).astype(float)
    h02 = eps * (occ2 @ omega[modes])
    h02_half = np.sqrt(np.tile(h02, dim_n))
    n2_half = np.sqrt(np.tile(n2, dim_n))
    n2_shift_half = np.sqrt(np.tile(n2, dim_n) + eps)
    t_diag = np.repeat(n1 ** 2, dim_m) + np.tile(n2, dim_n) + eps

    rng = np.random.default_rng(seed)
    dim = dim_n * dim_m
    full = creation + annihilation
    out = {"annihilation_energy": 0.0, "creation_energy": 0.0,
           "annihilation_number": 0.0, "creation_number": 0.0,
           "coupling_total": 0.0}
    for _ in range(n_samples):
        phi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        phi /= np.linalg.norm(phi)
        an = np.linalg.norm(annihilation @ phi)
        cr = np.linalg.norm(creation @ phi)
        h_phi = np.linalg.norm(h02_half * phi)
        out["annihilation_energy"] = max(
            out["annihilation_energy"], an ** 2 / (sup_fw ** 2 * h_phi ** 2))
        out["creation_energy"] = max(
            out["creation_energy"],
            cr ** 2 / (sup_fw ** 2 * h_phi ** 2 + eps * sup_f ** 2))
        out["annihilation_number"] = max(
            out["annihilation_number"],
            an / (sup_f * np.linalg.norm(n2_half * phi)))
        out["creation_number"] = max(
            out["creation_number"],
            cr / (sup_f * np.linalg.norm(n2_shift_half * phi)))
        out["coupling_total"] = max(
            out["coupling_total"],
            np.linalg.norm(full @ phi)
            / (chi_norm * np.linalg.norm(t_diag * phi)))
    return out


def resolvent_bound_ratio(y1, y2, cap, eps):
    """Ratio of ||(dGamma(y2*y2+1)+1)^{-1} dGamma(y1)|| to its bound.

    The bound is (1+sqrt(2))||(y2+1)^{-1}y1|| on the one-mode space.
    Both second quantizations conserve total occupation, so the full
    operator is block diagonal over occupation sectors and its
    restriction to a capped basis is exact: the ratio must stay at or
    below 1 for every cap and eps.
    """
    y1 = np.asarray(y1, dtype=complex)
    y2 = np.asarray(y2, dtype=complex)
    n_modes = y1.shape[0]
    if y1.shape != (n_modes, n_modes) or y2.shape != (n_modes, n_modes):
        raise ValueError("y1 and y2 must be square matrices of equal size")
    basis = truncated_basis(n_modes, cap)
    eye1 = np.eye(n_modes)
    weight = second_quantize(basis, y2.conj().T @ y2 + eye1, eps).toarray()
    lifted = second_quantize(basis, y1, eps).toarray()
    resolvent_applied = np.linalg.solve(
        weight + np.eye(basis.dim), lifted)
    value = np.linalg.norm(resolvent_applied, 2)
    bound = (1.0 + np.sqrt(2.0)) * np.linalg.norm(
        np.linalg.solve(y2 + eye1, y1), 2)
    return float(value / bound)


def _core_projector(basis, margin):
    """Indicator of total occupation at most cap - margin."""
    keep = basis.occupations.sum(axis=1) <= basis.cap - margin
    if not np.any(keep):
        raise ValueError("core margin removes every state")
    return keep.astype(float)


def weyl_conjugation_identities(grid, basis, xi, eta, y_matrix, eps,
                                core_margin=4):
    """Residuals of the Weyl conjugation and composition identities on a
    single truncated factor, measured in operator norm on the core of
    states at least `margin` quanta below the cap (where cap effects
    cannot reach).  Returns {name: residual}."""
    if basis.kind != "truncated":
        raise ValueError("identity checks need a truncated basis")
    quad = grid.dx if basis.modes is None else grid.dk
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    y_matrix = np.asarray(y_matrix, dtype=complex)
    xi_sel = xi if basis.modes is None else xi[basis.modes]
    eta_sel = eta if basis.modes is None else eta[basis.modes]

    w_xi = weyl(grid, basis, xi, eps).to_dense()
    w_eta = weyl(grid, basis, eta, eps).to_dense()
    w_sum = weyl(grid, basis, xi + eta, eps).to_dense()
    core = _core_projector(basis, core_margin)

    def core_norm(mat):
        return float(np.linalg.norm(core[:, None] * mat * core[None, :], 2))

    dgam = second_quantize(basis, y_matrix, eps).toarray()
    y_xi = y_matrix @ xi_sel
    a_yxi = smeared_annihilator(basis, y_xi, quad, eps).toarray()
    pairing = quad * np.vdot(xi_sel, y_xi)
    rhs = (dgam
           + (1j * eps / np.sqrt(2.0)) * (a_yxi.conj().T - a_yxi)
           + (eps ** 2 / 2.0) * pairing * np.eye(basis.dim))
    out = {"dgamma_conjugation": core_norm(
        w_xi.conj().T @ dgam @ w_xi - rhs)}

    shift = 1j * eps / np.sqrt(2.0) * np.sqrt(quad)
    worst = 0.0
    for m in range(basis.n_modes):
        a_m = ladder(basis, m, eps).toarray()
        res = w_xi.conj().T @ a_m @ w_xi - a_m \
            - shift * xi_sel[m] * np.eye(basis.dim)
        worst = max(worst, core_norm(res))
    out["ladder_displacement"] = worst

    phase = np.exp(-0.5j * eps * np.imag(quad * np.vdot(xi_sel, eta_sel)))
    out["composition"] = core_norm(w_xi @ w_eta - phase * w_sum)
    out["unitarity"] = float(np.linalg.norm(
        w_xi.conj().T @ w_xi - np.eye(basis.dim), 2))
    return out
