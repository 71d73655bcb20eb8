"""Named end-to-end runs over a validated configuration.

Every scenario maps (RunConfig, seed) to a plain-python summary dict plus
named tables of rows; file writing lives in the command-line layer.  All
randomness is derived from the seed, so repeated runs are bit-identical.
"""

from __future__ import annotations

import numpy as np

from .classical_dynamics import classical_energy_along, flow
from .classical_energy import binding_lower_bound, minimize_constrained
from .config import RunConfig
from .discretization import coupling_weight, dispersion
from .errors import ConfigInvalid
from .fock_space import (check_relative_bounds, coherent_state,
                         resolvent_bound_ratio, tensor_state,
                         truncated_basis, weyl_conjugation_identities)
from .ground_state import theorem2_sweep
from .limit_harness import ehrenfest_track, theorem1_sweep
from .quantum_dynamics import (assemble, b_expansion_residual, duhamel_check,
                               gronwall_bound_check)


def _opt_number(options, key, default, lo=None, hi=None, integer=False):
    value = options.get(key, default)
    path = f".scenario.{key}"
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok or not np.isfinite(value):
        raise ConfigInvalid(path, "must be a finite number")
    if integer and int(value) != value:
        raise ConfigInvalid(path, "must be an integer")
    if lo is not None and value < lo:
        raise ConfigInvalid(path, f"must be >= {lo}")
    if hi is not None and value > hi:
        raise ConfigInvalid(path, f"must be <= {hi}")
    return int(value) if integer else float(value)


def _opt_number_list(options, key, default, lo=None):
    values = options.get(key, list(default))
    path = f".scenario.{key}"
    if (not isinstance(values, list) or len(values) == 0
            or not all(isinstance(v, (int, float))
                       and not isinstance(v, bool) for v in values)):
        raise ConfigInvalid(path, "must be a nonempty list of numbers")
    if lo is not None and any(v < lo for v in values):
        raise ConfigInvalid(path, f"entries must be >= {lo}")
    return [float(v) for v in values]


def _reject_unknown(options, known):
    for key in options:
        if key not in known:
            raise ConfigInvalid(f".scenario.{key}",
                                f"unknown option (allowed: {sorted(known)})")


def _need_initial(cfg):
    if cfg.initial is None:
        raise ConfigInvalid(".initial",
                            f"scenario {cfg.scenario!r} needs an initial block")
    return cfg.initial


def _pair_list(values):
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def _field_rows(grid, prefix, values, coords, coord_name):
    return [{"index": i, coord_name: float(coords[i]),
             f"{prefix}_re": float(np.real(values[i])),
             f"{prefix}_im": float(np.imag(values[i]))}
            for i in range(len(values))]


def run_classical_flow(cfg: RunConfig, seed: int):
    _reject_unknown(cfg.options, {"t_final", "n_samples", "dt"})
    t_final = _opt_number(cfg.options, "t_final", 2.0, lo=1e-12)
    n_samples = _opt_number(cfg.options, "n_samples", 41, lo=2, integer=True)
    dt = _opt_number(cfg.options, "dt", 1e-3, lo=1e-12)
    state0 = _need_initial(cfg)
    grid, params = cfg.grid, cfg.params
    times = np.linspace(0.0, t_final, n_samples)
    traj = flow(grid, params, state0, times, dt)
    energies = classical_energy_along(grid, params, traj)
    charge = np.array([grid.norm_x(traj.z1[i]) for i in range(n_samples)])
    totals = np.array([e.total for e in energies])
    rows = [{"t": float(times[i]), "charge": float(charge[i]),
             "one_body": float(energies[i].one_body),
             "field": float(energies[i].field),
             "interaction": float(energies[i].interaction),
             "total": float(totals[i])} for i in range(n_samples)]
    summary = {
        "scenario": "classical-flow",
        "t_final": t_final, "n_samples": n_samples, "dt": dt,
        "charge_initial": float(charge[0]),
        "charge_drift_max": float(np.max(np.abs(charge - charge[0]))),
        "energy_initial": float(totals[0]),
        "energy_drift_max": float(np.max(np.abs(totals - totals[0]))),
    }
    tables = {
        "trajectory": (["t", "charge", "one_body", "field", "interaction",
                        "total"], rows),
        "final_z1": (["index", "x", "z1_re", "z1_im"],
                     _field_rows(grid, "z1", traj.z1[-1], grid.x, "x")),
        "final_z2": (["index", "k", "z2_re", "z2_im"],
                     _field_rows(grid, "z2", traj.z2[-1], grid.k, "k")),
    }
    return summary, tables


def run_minimize(cfg: RunConfig, seed: int):
    _reject_unknown(cfg.options, {"n_starts", "max_iter", "grad_tol"})
    n_starts = _opt_number(cfg.options, "n_starts", 3, lo=1, integer=True)
    max_iter = _opt_number(cfg.options, "max_iter", 5000, lo=1, integer=True)
    grad_tol = _opt_number(cfg.options, "grad_tol", 1e-7, lo=0.0)
    grid, params = cfg.grid, cfg.params
    result = minimize_constrained(grid, params, seed=seed, n_starts=n_starts,
                                  max_iter=max_iter, grad_tol=grad_tol)
    bound = binding_lower_bound(grid, params)
    summary = {
        "scenario": "minimize",
        "energy": float(result.energy),
        "gradient_norm": float(result.gradient_norm),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "lower_bound": float(bound),
        "above_lower_bound": bool(result.energy >= bound - 1e-12),
        "n_starts": n_starts,
        "charge": float(params.charge),
    }
    tables = {
        "minimizer_z1": (["index", "x", "z1_re", "z1_im"],
                         _field_rows(grid, "z1", result.z1, grid.x, "x")),
        "minimizer_z2": (["index", "k", "z2_re", "z2_im"],
                         _field_rows(grid, "z2", result.z2, grid.k, "k")),
        "start_energies": (["start", "energy"],
                           [{"start": i, "energy": float(e)}
                            for i, e in enumerate(result.start_energies)]),
    }
    return summary, tables


def _covered_modes_with(grid, params, *fields):
    w = coupling_weight(grid, params)
    mask = w != 0
    for f in fields:
        mask = mask | (np.asarray(f) != 0)
    modes = np.nonzero(mask)[0]
    if modes.size == 0:
        modes = np.array([grid.n_sites // 2])
    return modes


def _xi_from_options(cfg, key, n):
    values = cfg.options.get(key)
    if values is None:
        raise ConfigInvalid(f".scenario.{key}",
                            f"missing: list of {n} [re, im] pairs")
    if not isinstance(values, list) or len(values) != n:
        raise ConfigInvalid(f".scenario.{key}",
                            f"must be a list of {n} [re, im] pairs")
    out = np.zeros(n, dtype=complex)
    for i, pair in enumerate(values):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(v, (int, float))
                           and not isinstance(v, bool) for v in pair)):
            raise ConfigInvalid(f".scenario.{key}[{i}]",
                                "must be an [re, im] pair")
        out[i] = pair[0] + 1j * pair[1]
    return out


def run_duhamel(cfg: RunConfig, seed: int):
    _reject_unknown(cfg.options, {"eps", "t", "n_nodes", "nucleon_cap",
                                  "meson_cap", "xi1", "xi2",
                                  "expansion_check"})
    eps = _opt_number(cfg.options, "eps", 0.5, lo=1e-6)
    t = _opt_number(cfg.options, "t", 0.5, lo=1e-12)
    n_nodes = _opt_number(cfg.options, "n_nodes", 65, lo=5, integer=True)
    nucleon_cap = _opt_number(cfg.options, "nucleon_cap", 8, lo=1,
                              integer=True)
    meson_cap = _opt_number(cfg.options, "meson_cap", 10, lo=1, integer=True)
    state0 = _need_initial(cfg)
    grid, params = cfg.grid, cfg.params
    xi1 = _xi_from_options(cfg, "xi1", grid.n_sites)
    xi2 = _xi_from_options(cfg, "xi2", grid.n_sites)
    modes = _covered_modes_with(grid, params, state0.z2, xi2)
    nb = truncated_basis(grid.n_sites, nucleon_cap)
    mb = truncated_basis(modes.size, meson_cap, modes=modes)
    ham = assemble(grid, params, eps, nb, mb)
    v1, d1 = coherent_state(grid, nb, state0.z1, eps)
    v2, d2 = coherent_state(grid, mb, state0.z2, eps)
    state = tensor_state(v1, v2, nb, mb, eps)
    report = duhamel_check(ham, state, xi1, xi2, t, n_nodes=n_nodes)
    summary = {
        "scenario": "duhamel",
        "eps": eps, "t": t, "n_nodes": n_nodes, "dim": int(ham.dim),
        "coherent_deficit": float(max(d1, d2)),
        "char_initial_re": report.char_initial.real,
        "char_initial_im": report.char_initial.imag,
        "lhs_re": report.lhs.real, "lhs_im": report.lhs.imag,
        "rhs_re": report.rhs.real, "rhs_im": report.rhs.imag,
        "residual": report.residual,
        "quadrature_estimate": report.quadrature_estimate,
    }
    rows = [{"order": j, "re": c.real, "im": c.imag, "abs": abs(c)}
            for j, c in enumerate(report.contributions)]
    tables = {"contributions": (["order", "re", "im", "abs"], rows)}
    if cfg.options.get("expansion_check", False):
        # the conjugation expansion is an operator identity; check it on
        # dedicated bases deep enough that the core sits far below the caps,
        # independent of the propagation truncation above
        nb_x = truncated_basis(grid.n_sites, max(nucleon_cap, 12))
        mb_x = truncated_basis(modes.size, max(meson_cap, 16), modes=modes)
        res = b_expansion_residual(grid, params, eps, nb_x, mb_x, xi1, xi2,
                                   core_margin=(nb_x.cap - 4, mb_x.cap - 6))
        summary["expansion_residual"] = float(res)
    return summary, tables


def run_theorem1(cfg: RunConfig, seed: int):
    _reject_unknown(cfg.options, {"eps_values", "t_values", "tail_budget",
                                  "classical_dt", "track_eps"})
    eps_values = _opt_number_list(cfg.options, "eps_values",
                                  (0.4, 0.2, 0.1, 0.05), lo=1e-6)
    t_values = _opt_number_list(cfg.options, "t_values", (0.25, 0.5),
                                lo=1e-12)
    tail_budget = _opt_number(cfg.options, "tail_budget", 1e-4, lo=1e-12)
    classical_dt = _opt_number(cfg.options, "classical_dt", 1e-3, lo=1e-12)
    state0 = _need_initial(cfg)
    report = theorem1_sweep(cfg.grid, cfg.params, state0, eps_values,
                            t_values, tail_budget=tail_budget,
                            classical_dt=classical_dt)
    monotone = bool(np.all(np.diff(report.errors, axis=0) < 0)) \
        if len(eps_values) > 1 else True
    summary = {
        "scenario": "theorem1",
        "eps_values": list(report.eps_values),
        "t_values": list(report.t_values),
        "n_xi": int(report.n_xi),
        "dims": [int(d) for d in report.dims],
        "caps": [[int(c) for c in pair] for pair in report.caps],
        "deficits": [float(d) for d in report.deficits],
        "max_error": float(report.errors.max()),
        "terminal_max_error": float(report.errors[-1].max()),
        "monotone_in_eps": monotone,
    }
    rows = [{"eps": s.eps, "t": s.t, "xi_index": s.xi_index,
             "error": s.error, "value_re": s.value.real,
             "value_im": s.value.imag, "target_re": s.target.real,
             "target_im": s.target.imag} for s in report.samples]
    tables = {"char_errors": (["eps", "t", "xi_index", "error", "value_re",
                               "value_im", "target_re", "target_im"], rows)}
    track_eps = cfg.options.get("track_eps")
    if track_eps is not None:
        track_eps = _opt_number(cfg.options, "track_eps", 0.1, lo=1e-6)
        times = np.concatenate([[0.0], t_values])
        track = ehrenfest_track(cfg.grid, cfg.params, track_eps, state0,
                                times, tail_budget=tail_budget,
                                classical_dt=classical_dt)
        summary["ehrenfest_eps"] = track_eps
        summary["ehrenfest_max_error"] = float(track.errors.max())
        tables["ehrenfest"] = (
            ["t", "error"],
            [{"t": float(track.times[i]), "error": float(track.errors[i])}
             for i in range(len(track.times))])
    return summary, tables


def run_theorem2(cfg: RunConfig, seed: int):
    _reject_unknown(cfg.options, {"n_values", "meson_cap", "cap_check_shift",
                                  "method"})
    n_values = [int(v) for v in _opt_number_list(cfg.options, "n_values",
                                                 (1, 2, 3, 4, 5), lo=1)]
    meson_cap = _opt_number(cfg.options, "meson_cap", 7, lo=0, integer=True)
    cap_shift = _opt_number(cfg.options, "cap_check_shift", 3, lo=1,
                            integer=True)
    method = cfg.options.get("method", "auto")
    if method not in ("auto", "dense", "lanczos"):
        raise ConfigInvalid(".scenario.method",
                            "must be auto, dense, or lanczos")
    report = theorem2_sweep(cfg.grid, cfg.params, n_values, meson_cap,
                            method=method, cap_check_shift=cap_shift,
                            seed=seed)
    gaps = [r.gap for r in report.records]
    summary = {
        "scenario": "theorem2",
        "lambda": float(report.lambda_coupling),
        "e_classical": float(report.e_classical),
        "meson_cap": meson_cap,
        "cap_shift": float(report.cap_shift),
        "monotone_gaps": bool(all(b <= a * (1 + 1e-9)
                                  for a, b in zip(gaps, gaps[1:]))),
        "variational_ok": bool(all(r.e_quantum <= r.e_coherent + 1e-6
                                   for r in report.records)),
        "final_gap": float(gaps[-1]),
    }
    rows = [{"n": r.n, "eps": r.eps, "dim": r.dim,
             "e_quantum": r.e_quantum, "e_coherent": r.e_coherent,
             "gap": r.gap} for r in report.records]
    tables = {"sector_energies": (["n", "eps", "dim", "e_quantum",
                                   "e_coherent", "gap"], rows)}
    return summary, tables


def run_property_suite(cfg: RunConfig, seed: int):
    _reject_unknown(cfg.options, {"eps", "nucleon_cap", "meson_cap",
                                  "n_samples", "delta", "t", "xi_scale",
                                  "identity_cap", "identity_margin"})
    eps = _opt_number(cfg.options, "eps", 0.5, lo=1e-6)
    nucleon_cap = _opt_number(cfg.options, "nucleon_cap", 6, lo=1,
                              integer=True)
    meson_cap = _opt_number(cfg.options, "meson_cap", 8, lo=1, integer=True)
    n_samples = _opt_number(cfg.options, "n_samples", 200, lo=1, integer=True)
    delta = _opt_number(cfg.options, "delta", 1.0)
    t = _opt_number(cfg.options, "t", 1.0, lo=1e-12)
    xi_scale = _opt_number(cfg.options, "xi_scale", 0.2, lo=1e-12)
    identity_cap = _opt_number(cfg.options, "identity_cap", 22, lo=4,
                               integer=True)
    identity_margin = _opt_number(cfg.options, "identity_margin", 11, lo=1,
                                  integer=True)
    grid, params = cfg.grid, cfg.params
    modes = _covered_modes_with(grid, params)
    nb = truncated_basis(grid.n_sites, nucleon_cap)
    mb = truncated_basis(modes.size, meson_cap, modes=modes)

    checks = []

    def record(name, value, threshold, ok):
        checks.append({"name": name, "value": float(value),
                       "threshold": float(threshold), "ok": bool(ok)})

    bounds = check_relative_bounds(grid, params, eps, nb, mb,
                                   n_samples=n_samples, seed=seed)
    for name, ratio in bounds.items():
        record(f"bound_{name}", ratio, 1.0 + 1e-9, ratio <= 1.0 + 1e-9)

    rng = np.random.default_rng(seed)
    idb = truncated_basis(modes.size, identity_cap, modes=modes)
    xi = np.zeros(grid.n_sites, dtype=complex)
    eta = np.zeros(grid.n_sites, dtype=complex)
    xi[modes] = xi_scale * (rng.standard_normal(modes.size)
                            + 1j * rng.standard_normal(modes.size))
    eta[modes] = xi_scale * (rng.standard_normal(modes.size)
                             + 1j * rng.standard_normal(modes.size))
    y = np.diag(dispersion(grid.k, params.meson_mass)[modes])
    identities = weyl_conjugation_identities(grid, idb, xi, eta, y, eps,
                                             core_margin=identity_margin)
    for name, resid in identities.items():
        thr = 1e-12 if name == "unitarity" else 1e-8
        record(f"identity_{name}", resid, thr, resid <= thr)

    for trial in range(3):
        y1 = rng.standard_normal((modes.size,) * 2) \
            + 1j * rng.standard_normal((modes.size,) * 2)
        root = rng.standard_normal((modes.size,) * 2) \
            + 1j * rng.standard_normal((modes.size,) * 2)
        ratio = resolvent_bound_ratio(y1, root.conj().T @ root,
                                      cap=meson_cap, eps=eps)
        record(f"bound_resolvent_{trial}", ratio, 1.0 + 1e-9,
               ratio <= 1.0 + 1e-9)

    ham = assemble(grid, params, eps, nb, mb)
    gronwall = gronwall_bound_check(ham, delta, t, n_samples=n_samples,
                                    seed=seed)
    record("gronwall_operator_ratio", gronwall["operator_ratio"], 1.01,
           gronwall["operator_ratio"] <= 1.01)
    record("gronwall_vector_ratio", gronwall["max_vector_ratio"], 1.01,
           gronwall["max_vector_ratio"] <= 1.01)

    summary = {
        "scenario": "property-suite",
        "eps": eps, "dim": int(ham.dim), "n_samples": n_samples,
        "delta": delta, "t": t,
        "gronwall_bound": float(gronwall["bound"]),
        "all_ok": bool(all(c["ok"] for c in checks)),
        "n_checks": len(checks),
    }
    tables = {"properties": (["name", "value", "threshold", "ok"], checks)}
    return summary, tables


RUNNERS = {
    "classical-flow": run_classical_flow,
    "minimize": run_minimize,
    "duhamel": run_duhamel,
    "theorem1": run_theorem1,
    "theorem2": run_theorem2,
    "property-suite": run_property_suite,
}


def run_scenario(cfg: RunConfig, seed: int):
    """Dispatch a validated config to its scenario runner."""
    return RUNNERS[cfg.scenario](cfg, seed)
