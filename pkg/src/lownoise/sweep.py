"""Scale-sweep runner: drives every pipeline quantity across a noise grid.

For each scale s the runner evaluates the output spectrum, eigenvalue
shifts and gradients, the three Fisher matrices and their inverses, the
deviation/covariance cross-checks, the estimator with its error matrix,
and the Cramer-Rao direction margins.  Sweep-level slope fits then grade
each quantity against the scenario's expected asymptotic orders.
"""
from __future__ import annotations

import numpy as np

from . import estimator as est
from . import fisher, spectral
from .errors import LowNoiseError, SingularFisher
from .linalg import fit_or_floor
from .report import Report, config_hash
from .scenarios import Scenario, scenario_to_config

CR_DIRECTIONS = 100
CR_TOL = 1e-9
FIT_FLOOR = 1e-13
ATTAINMENT_BAND = (1.8, 2.2)


def _matrix(m) -> list:
    return [[float(x) for x in row] for row in np.asarray(m, dtype=float)]


def _point_record(sc: Scenario, scale: float, spec, grads, labels) -> dict:
    """All per-point quantities; raises LowNoiseError subtypes on failure."""
    eps = spec.eps
    num_params = sc.channel.num_params
    dim = sc.channel.dim
    shifts = spec.shifts()
    shift_grads = grads[:, 1:]
    included = [i for i, lab in enumerate(labels) if lab == "order-1"]
    step = sc.fd_step if sc.fd_step is not None else scale / 100.0

    rho_in = np.outer(spec.input_state, spec.input_state.conj())
    drho = [
        sc.channel.finite_difference_derivative(rho_in, mu, eps, step)
        for mu in range(num_params)
    ]

    jq = fisher.quantum_fisher(spec.probs, spec.basis, drho)
    jq_inv = fisher.fisher_inverse(jq)
    jc = fisher.classical_fisher(spec.probs, grads)
    jdiv = fisher.divergent_fisher(shifts, shift_grads, included)
    nondeg = fisher.nondegeneracy_det(spec.probs, grads)

    pseudo = False
    try:
        jdiv_inv = fisher.fisher_inverse(jdiv)
    except SingularFisher:
        jdiv_inv = None
        pseudo = True

    score = est.build_score_operators(spec, shifts, shift_grads, included)
    score = est.raise_index(score, jdiv, pseudo=pseudo)
    povm = est.build_povm(score)
    bias = est.unbiasedness_residual(povm, sc.channel, spec.input_state, eps)
    mse = est.analytic_mse(povm, sc.channel, spec.input_state, eps)

    gap_quantum = est.cr_gap(mse, jq_inv)
    gap_divergent = mse.entries - jdiv_inv.inverse if jdiv_inv is not None else None
    cr_bound = CR_TOL * max(1.0, float(np.linalg.norm(mse.entries)))
    cr_margin = est.cr_direction_margin(gap_quantum, CR_DIRECTIONS, seed=sc.sweep.seed)

    # deviation-matrix and covariance cross checks
    dm_full = spectral.deviation_matrix(sc.channel, spec.input_state, eps, "full", sc.frame)
    dm_lead = spectral.deviation_matrix(sc.channel, spec.input_state, eps, "leading", sc.frame)
    lead_vs_full = float(np.linalg.norm(dm_full.entries - dm_lead.entries))
    trace_power = None
    reduced_residual = None
    if sc.channel.total_jumps() <= dim - 1:
        lm = spectral.jump_covariance(sc.channel, spec.input_state, eps)
        trace_power = spectral.trace_power_residual(dm_lead, lm, kmax=5)
        reduced = spectral.reduced_shifts(lm, dim)
        padded = np.zeros(dim - 1)
        padded[: reduced.shape[0]] = reduced
        lead_vals = spectral.deviation_eigenvalues(dm_lead)
        reduced_residual = float(np.max(np.abs(np.sort(padded) - np.sort(lead_vals))))

    jinv_eigs = np.linalg.eigvalsh(jq_inv.inverse)[::-1]
    return {
        "scale": float(scale),
        "eps": [float(x) for x in eps],
        "probs": [float(p) for p in spec.probs],
        "shifts": [float(x) for x in shifts],
        "shift_gradients": _matrix(shift_grads),
        "quantum_fisher": _matrix(jq.entries),
        "quantum_fisher_inverse": _matrix(jq_inv.inverse),
        "classical_fisher": _matrix(jc.entries),
        "divergent_fisher": _matrix(jdiv.entries),
        "divergent_inverse": _matrix(jdiv_inv.inverse) if jdiv_inv is not None else None,
        "jinv_eigenvalues": [float(x) for x in jinv_eigs],
        "nondegeneracy_det": float(nondeg),
        "estimates": _matrix(povm.estimates),
        "unbiasedness_residual": [float(x) for x in bias],
        "mse": _matrix(mse.entries),
        "gap_vs_quantum": _matrix(gap_quantum),
        "gap_vs_divergent": _matrix(gap_divergent) if gap_divergent is not None else None,
        "cr_margin": float(cr_margin),
        "cr_bound": float(cr_bound),
        "povm_completeness": float(povm.completeness_residual()),
        "lead_vs_full_deviation": lead_vs_full,
        "trace_power_residual": trace_power,
        "reduced_shift_residual": reduced_residual,
        "classical_vs_divergent": float(np.linalg.norm(jc.entries - jdiv.entries)),
        "pseudo": bool(pseudo),
        "error": None,
    }


def _fit(scales, values, name: str) -> dict:
    fit = fit_or_floor(scales, values, FIT_FLOOR)
    if fit is None:
        return {"name": name, "slope": None, "intercept": None, "residual": None, "at_floor": True}
    return {
        "name": name,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual": fit.residual,
        "at_floor": False,
    }


def _norm_series(points, key) -> list[float]:
    return [float(np.linalg.norm(p[key])) for p in points]


def run_sweep(sc: Scenario, shots: int = 0) -> Report:
    """Evaluate the full pipeline over the scenario's scale grid.

    Any per-point library error is recorded in that point's record and
    fails the report; points are never silently skipped.
    """
    scales = list(sc.sweep.scales)
    direction = np.asarray(sc.sweep.direction, dtype=float)

    spectra, shift_rows, grad_rows = spectral.output_shift_curves(
        sc.channel, sc.input_state, direction, scales, sc.fd_step
    )
    labels, label_fits = spectral.classify_shift_curves(scales, shift_rows)

    points = []
    had_error = False
    for t, (scale, spec, grads) in enumerate(zip(scales, spectra, grad_rows)):
        try:
            rec = _point_record(sc, scale, spec, grads, labels)
        except LowNoiseError as exc:
            rec = {"scale": float(scale), "error": f"{type(exc).__name__}: {exc}"}
            had_error = True
        if shots > 0 and rec.get("error") is None:
            rec["mc"] = _monte_carlo_record(sc, spec, grads, labels, shots, sc.sweep.seed * 1009 + t)
        points.append(rec)

    good = [p for p in points if p.get("error") is None]
    fits = []
    checks = []
    if good:
        gs = [p["scale"] for p in good]
        fits.append(_fit(gs, [max(p["unbiasedness_residual"]) for p in good], "unbiasedness"))
        fits.append(_fit(gs, _norm_series(good, "gap_vs_quantum"), "mse_vs_quantum_inverse"))
        if all(p["gap_vs_divergent"] is not None for p in good):
            fits.append(_fit(gs, _norm_series(good, "gap_vs_divergent"), "mse_vs_divergent_inverse"))
        fits.append(_fit(gs, [abs(p["nondegeneracy_det"]) for p in good], "nondegeneracy_det"))
        fits.append(_fit(gs, [p["jinv_eigenvalues"][0] for p in good], "jinv_large_eigenvalue"))
        fits.append(_fit(gs, [p["jinv_eigenvalues"][-1] for p in good], "jinv_small_eigenvalue"))
        fits.append(_fit(gs, _norm_series(good, "classical_vs_divergent"), "classical_vs_divergent"))
        fits.append(_fit(gs, [p["lead_vs_full_deviation"] for p in good], "lead_vs_full_deviation"))
        if sc.reference_jinv is not None:
            vals = [
                float(
                    np.linalg.norm(
                        np.asarray(p["quantum_fisher_inverse"]) - sc.reference_jinv(np.asarray(p["eps"]))
                    )
                )
                for p in good
            ]
            fits.append(_fit(gs, vals, "quantum_jinv_vs_reference"))
        if "bad_direction_gap" in sc.expected_orders and len(good) >= 2:
            a = np.asarray(good[0]["quantum_fisher_inverse"])
            b = np.asarray(good[1]["quantum_fisher_inverse"])
            r = good[1]["scale"] / good[0]["scale"]
            jinv0 = (r * a - b) / (r - 1.0)
            w, v = np.linalg.eigh(jinv0)
            u0 = v[:, -1]
            vals = [
                abs(float(u0 @ (np.asarray(p["mse"]) - np.asarray(p["quantum_fisher_inverse"])) @ u0))
                for p in good
            ]
            fits.append(_fit(gs, vals, "bad_direction_gap"))

    fit_by_name = {f["name"]: f for f in fits}
    for name, band in sc.expected_orders.items():
        f = fit_by_name.get(name)
        if f is None:
            checks.append({"name": name, "passed": False, "expected_failure": False, "detail": "missing fit"})
            continue
        ok = f["at_floor"] or (band[0] <= f["slope"] <= band[1])
        checks.append(
            {
                "name": name,
                "passed": bool(ok),
                "expected_failure": False,
                "detail": f"slope={f['slope']}, band=({band[0]}, {band[1]})",
            }
        )

    if good:
        worst = min(p["cr_margin"] + p["cr_bound"] for p in good)
        any_pseudo = any(p["pseudo"] for p in good)
        checks.append(
            {
                "name": "cr_direction",
                "passed": bool(worst >= 0.0),
                # the bound presupposes local unbiasedness, which the
                # pseudo-inverse fallback cannot provide
                "expected_failure": any_pseudo,
                "detail": f"min margin + tolerance = {worst:g} over {CR_DIRECTIONS} directions/point",
            }
        )
        dim = sc.channel.dim
        num_params = sc.channel.num_params
        nd = fit_by_name.get("nondegeneracy_det")
        gate = (
            all(abs(p["nondegeneracy_det"]) > 0 for p in good)
            and nd is not None
            and not nd["at_floor"]
            and abs(nd["slope"] + num_params) <= 0.3
        )
        checks.append(
            {
                "name": "nondegeneracy_gate",
                "passed": bool(gate),
                "expected_failure": not sc.attainment_expected,
                "detail": f"det order {None if nd is None else nd['slope']}, expected -D = {-num_params}",
            }
        )
        ub = fit_by_name.get("unbiasedness")
        md = fit_by_name.get("mse_vs_divergent_inverse")
        attained = (
            not any(p["pseudo"] for p in good)
            and ub is not None
            and (ub["at_floor"] or ATTAINMENT_BAND[0] <= ub["slope"] <= ATTAINMENT_BAND[1])
            and md is not None
            and (md["at_floor"] or ATTAINMENT_BAND[0] <= md["slope"] <= ATTAINMENT_BAND[1])
            and gate
        )
        checks.append(
            {
                "name": "attainment",
                "passed": bool(attained),
                "expected_failure": not sc.attainment_expected,
                "detail": "unbiasedness and MSE-gap orders both second order with a valid gate",
            }
        )

    passed = (not had_error) and all(c["passed"] or c["expected_failure"] for c in checks)
    return Report(
        scenario_name=sc.name,
        direction=[float(x) for x in sc.sweep.direction],
        scales=[float(s) for s in scales],
        seed=sc.sweep.seed,
        config_hash=config_hash(scenario_to_config(sc)),
        shift_labels=list(labels),
        points=points,
        fits=fits,
        checks=checks,
        passed=bool(passed),
    )


def _monte_carlo_record(sc: Scenario, spec, grads, labels, shots: int, seed: int) -> dict:
    shifts = spec.shifts()
    shift_grads = grads[:, 1:]
    included = [i for i, lab in enumerate(labels) if lab == "order-1"]
    jdiv = fisher.divergent_fisher(shifts, shift_grads, included)
    try:
        score = est.raise_index(est.build_score_operators(spec, shifts, shift_grads, included), jdiv)
    except SingularFisher:
        score = est.raise_index(
            est.build_score_operators(spec, shifts, shift_grads, included), jdiv, pseudo=True
        )
    povm = est.build_povm(score)
    analytic = est.analytic_mse(povm, sc.channel, spec.input_state, spec.eps)
    mc = est.sample_measurements(povm, sc.channel, spec.input_state, spec.eps, shots, seed)
    dev = np.abs(mc.entries - analytic.entries)
    within = bool(np.all(dev <= 4.0 * mc.standard_error + 1e-300))
    return {
        "shots": shots,
        "seed": seed,
        "mean": [float(x) for x in mc.mean],
        "mse": _matrix(mc.entries),
        "standard_error": _matrix(mc.standard_error),
        "within_4se_of_analytic": within,
    }
