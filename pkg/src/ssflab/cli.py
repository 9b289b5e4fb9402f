"""Command line front end.

One executable, eight subcommands: ssf-scan, laplace-mc, bs-check, vague,
cesaro, kirsch, scaled, selftest.  Every run computes its full result in
memory first, then creates a timestamped directory under --out and writes
CSV tables, an optional SVG plot, and a JSON manifest.  Validation failures
exit 2 before anything is written; numerical failures exit 3; selftest
exits 1 when a check misses its threshold.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .birman_solomyak import (
    CouplingQuadrature,
    SpectralWindow,
    bs_check_grid,
    bs_rhs,
)
from .config import ConfigError, RunConfig, load_config
from .counting import (
    FactorizationFailure,
    NearSingularShift,
    laplace_transform_spectral,
    ssf_finite_volume,
    ssf_pair_value,
    ssf_step_function,
)
from .hamiltonian import BoxGrid, assemble
from .limits import (
    cesaro_experiment,
    kirsch_scan,
    scaled_perturbation_experiment,
    vague_convergence_experiment,
)
from .manifest import MANIFEST_NAME, RunManifest, utc_now
from .pathint import bridge_marginal_params, bridge_nodes, laplace_mc
from .potentials import PotentialSpec
from .stepfn import ExpDecayWeight, hat_weight

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (
    FactorizationFailure,
    NearSingularShift,
    FloatingPointError,
    np.linalg.LinAlgError,
)

_EXPERIMENT_KEYS = {
    "ssf-scan": ("e_min", "e_max", "n_energies"),
    "laplace-mc": (),
    "bs-check": ("window_lo", "window_hi", "rule", "n_nodes"),
    "vague": ("sides", "weight_lo", "weight_hi", "reference_side"),
    "cesaro": (
        "e_min",
        "e_max",
        "n_energies",
        "side_min",
        "side_max",
        "n_sides",
        "reference_delta",
        "judge_from",
    ),
    "kirsch": ("e_star", "uniform_sides", "side_min", "side_max", "mult_min", "shift_coef"),
    "scaled": ("exponent", "sides", "e_min", "e_max", "n_energies"),
}


# -- formatting ------------------------------------------------------------


def _cell(v) -> str:
    """Shortest-round-trip text for one CSV cell."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, blocks) -> None:
    """Write header/row blocks; each block is (header_tuple, row_iterable)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for header, rows in blocks:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")


# -- SVG plotting ----------------------------------------------------------

_PALETTE = ("#2266cc", "#cc4422", "#22aa66", "#8844cc")


def _svg_polyline_plot(series, title: str, x_label: str, y_label: str) -> str:
    """Hand-rolled line plot; series is a list of (xs, ys, label) triples."""
    width, height = 720.0, 460.0
    ml, mr, mt, mb = 64.0, 20.0, 36.0, 48.0
    xs_all = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr)

    def py(y):
        return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
        f'<text x="{width / 2:g}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    ax = (
        f'<line x1="{ml:g}" y1="{height - mb:g}" x2="{width - mr:g}" '
        f'y2="{height - mb:g}" stroke="#333" stroke-width="1"/>'
        f'<line x1="{ml:g}" y1="{mt:g}" x2="{ml:g}" y2="{height - mb:g}" '
        f'stroke="#333" stroke-width="1"/>'
    )
    parts.append(ax)
    for val, anchor in ((x_lo, "start"), (x_hi, "end")):
        parts.append(
            f'<text x="{px(val):g}" y="{height - mb + 18:g}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="11">{val:.6g}</text>'
        )
    for val in (y_lo, y_hi):
        parts.append(
            f'<text x="{ml - 6:g}" y="{py(val) + 4:g}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{val:.6g}</text>'
        )
    parts.append(
        f'<text x="{(ml + width - mr) / 2:g}" y="{height - 8:g}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{(mt + height - mb) / 2:g}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(mt + height - mb) / 2:g})">{y_label}</text>'
    )
    for k, (xs, ys, label) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        if label:
            parts.append(
                f'<text x="{width - mr - 6:g}" y="{mt + 16 + 16 * k:g}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11" fill="{color}">{label}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- experiment parameter access --------------------------------------------


def _check_experiment_keys(cfg: RunConfig, sub: str) -> None:
    allowed = _EXPERIMENT_KEYS[sub]
    for key in cfg.experiment:
        if key not in allowed:
            raise ConfigError(
                f"[experiment].{key} is not used by {sub!r}; allowed keys: {allowed}"
            )


def _exp_num(cfg: RunConfig, key: str, default=None) -> float:
    val = cfg.experiment.get(key, default)
    if val is None:
        raise ConfigError(f"[experiment] is missing required key {key!r}")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"[experiment].{key} must be a number")
    return float(val)


def _exp_int(cfg: RunConfig, key: str, default=None) -> int:
    val = cfg.experiment.get(key, default)
    if val is None:
        raise ConfigError(f"[experiment] is missing required key {key!r}")
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"[experiment].{key} must be an integer")
    return val


def _exp_list(cfg: RunConfig, key: str) -> tuple:
    val = cfg.experiment.get(key)
    if not isinstance(val, tuple) or not val:
        raise ConfigError(f"[experiment].{key} must be a nonempty list of numbers")
    return val


def _exp_str(cfg: RunConfig, key: str, default: str) -> str:
    val = cfg.experiment.get(key, default)
    if not isinstance(val, str):
        raise ConfigError(f"[experiment].{key} must be a string")
    return val


def _energy_grid(cfg: RunConfig, e_min_dflt, e_max_dflt, n_dflt) -> np.ndarray:
    lo = _exp_num(cfg, "e_min", e_min_dflt)
    hi = _exp_num(cfg, "e_max", e_max_dflt)
    n = _exp_int(cfg, "n_energies", n_dflt)
    if not hi > lo:
        raise ConfigError("[experiment] energy range must satisfy e_max > e_min")
    if n < 2:
        raise ConfigError("[experiment].n_energies must be at least 2")
    return np.linspace(lo, hi, n)


# -- run bundle --------------------------------------------------------------


class RunOutput:
    """Everything a runner produced, ready to be written."""

    def __init__(self):
        self.csv_files = []  # (name, blocks)
        self.plots = []  # (name, svg_text)
        self.bounds = {}
        self.summary = {}
        self.lines = []  # stdout lines

    def add_csv(self, name: str, blocks) -> None:
        self.csv_files.append((name, blocks))

    def add_plot(self, name: str, svg: str) -> None:
        self.plots.append((name, svg))


# -- runners -----------------------------------------------------------------


def _run_ssf_scan(cfg: RunConfig, seed, threads, emit_svg) -> RunOutput:
    energies = _energy_grid(cfg, 0.0, 8.0, 200)
    curve = ssf_finite_volume(cfg.domain, cfg.background, cfg.perturbation, energies)
    out = RunOutput()
    rows = [
        (float(e), int(v), curve.side, curve.spacing)
        for e, v in zip(curve.energies, curve.values)
    ]
    out.add_csv("ssf_scan.csv", [(("E", "xi_L", "L", "h"), rows)])
    out.summary = {
        "max_shift": int(curve.values.max()),
        "support_count": int(np.count_nonzero(curve.values)),
    }
    if emit_svg:
        out.add_plot(
            "ssf_scan.svg",
            _svg_polyline_plot(
                [(curve.energies, curve.values, "xi_L")],
                f"finite-volume shift curve, L={curve.side:g}, h={curve.spacing:g}",
                "E",
                "xi_L",
            ),
        )
    out.lines.append(
        f"ssf-scan: {energies.size} energies, max shift {out.summary['max_shift']}"
    )
    return out


def _run_laplace_mc(cfg: RunConfig, seed, threads, emit_svg) -> RunOutput:
    mc = cfg.mc
    est = laplace_mc(
        cfg.background,
        cfg.perturbation,
        t=mc.t,
        dimension=cfg.domain.dimension,
        box_side=cfg.domain.effective_side,
        n_paths=mc.n_paths,
        n_steps=mc.n_steps,
        master_seed=seed,
        n_threads=threads,
        reach_sigmas=mc.reach_sigmas,
    )
    out = RunOutput()
    row = (mc.t, est.value, est.std_error, est.n_paths, est.n_steps, est.seed, est.estimator)
    out.add_csv(
        "laplace_mc.csv",
        [
            (
                ("t", "estimate", "std_error", "n_paths", "n_steps", "seed", "estimator"),
                [row],
            )
        ],
    )
    out.bounds = {
        "truncation_tail_bound": est.tail_bound,
        "sample_volume": est.sample_volume,
    }
    out.summary = {"estimate": est.value, "std_error": est.std_error}
    out.lines.append(
        f"laplace-mc: t={mc.t:g} estimate {est.value:.6g} +- {est.std_error:.2g} "
        f"({est.n_paths} paths, {est.n_steps} steps)"
    )
    return out


def _run_bs_check(cfg: RunConfig, seed, threads, emit_svg) -> RunOutput:
    lo = _exp_num(cfg, "window_lo")
    hi = _exp_num(cfg, "window_hi")
    if not hi > lo:
        raise ConfigError("[experiment] window must satisfy window_hi > window_lo")
    rule = _exp_str(cfg, "rule", "gauss_legendre")
    n_nodes = _exp_int(cfg, "n_nodes", 64)
    try:
        quad = CouplingQuadrature(rule=rule, n_nodes=n_nodes)
    except ValueError as exc:
        raise ConfigError(f"[experiment] quadrature rejected: {exc}") from None
    report = bs_check_grid(
        cfg.domain,
        cfg.background,
        cfg.perturbation,
        SpectralWindow(((lo, hi),)),
        quad,
    )
    tol = cfg.tolerances.get("identity_tol", 1e-6)
    out = RunOutput()
    out.add_csv(
        "bs_check.csv",
        [
            (("lambda", "trace_in_window"), list(report.samples)),
            (("lhs", "rhs", "abs_diff"), [(report.lhs, report.rhs, report.gap)]),
        ],
    )
    out.summary = {
        "lhs": report.lhs,
        "rhs": report.rhs,
        "abs_diff": report.gap,
        "identity_tol": tol,
        "within_tol": bool(report.gap < tol),
        "n_crossings": len(report.crossings),
    }
    if emit_svg and report.samples:
        lam = [s[0] for s in report.samples]
        tr = [s[1] for s in report.samples]
        out.add_plot(
            "bs_check.svg",
            _svg_polyline_plot(
                [(lam, tr, "window trace")],
                f"coupling sweep, window [{lo:g}, {hi:g}]",
                "coupling",
                "trace in window",
            ),
        )
    out.lines.append(
        f"bs-check: lhs {report.lhs:.9g} rhs {report.rhs:.9g} "
        f"abs_diff {report.gap:.3g} ({'ok' if out.summary['within_tol'] else 'MISS'} "
        f"at tol {tol:g})"
    )
    return out


def _run_vague(cfg: RunConfig, seed, threads, emit_svg) -> RunOutput:
    sides = _exp_list(cfg, "sides")
    w_lo = _exp_num(cfg, "weight_lo")
    w_hi = _exp_num(cfg, "weight_hi")
    if not w_hi > w_lo:
        raise ConfigError("[experiment] weight window must satisfy weight_hi > weight_lo")
    ref_side = cfg.experiment.get("reference_side")
    rep = vague_convergence_experiment(
        cfg.background,
        cfg.perturbation,
        hat_weight(w_lo, w_hi),
        sides,
        cfg.domain.spacing,
        reference_side=ref_side,
        envelope_factor=cfg.tolerances.get("envelope_factor", 1.3),
        final_gap_tol=cfg.tolerances.get("final_gap_tol", 0.02),
    )
    out = RunOutput()
    rows = [
        (L, v, rep.reference, g)
        for L, v, g in zip(rep.effective_sides, rep.values, rep.gaps)
    ]
    out.add_csv("vague.csv", [(("L", "functional", "reference", "gap"), rows)])
    out.summary = {
        "reference_side": rep.reference_side,
        "reference": rep.reference,
        "final_rel_gap": rep.final_rel_gap,
        "gaps_contracting": rep.gaps_contracting,
        "converged": rep.converged,
    }
    if emit_svg:
        out.add_plot(
            "vague.svg",
            _svg_polyline_plot(
                [
                    (rep.effective_sides, rep.values, "functional"),
                    (rep.effective_sides, [rep.reference] * len(rep.values), "reference"),
                ],
                "weighted shift functional along the side ladder",
                "L",
                "integral of weight against the shift",
            ),
        )
    verdict = "converged" if rep.converged else "NOT CONVERGED"
    out.lines.append(
        f"vague: final relative gap {rep.final_rel_gap:.4g} against reference "
        f"{rep.reference:.6g} at L={rep.reference_side:g} ({verdict})"
    )
    return out


def _run_cesaro(cfg: RunConfig, seed, threads, emit_svg) -> RunOutput:
    energies = _energy_grid(cfg, 0.05, 4.0, 200)
    side_lo = _exp_num(cfg, "side_min", 6.0)
    side_hi = _exp_num(cfg, "side_max", 25.0)
    n_sides = _exp_int(cfg, "n_sides", 20)
    if not (side_hi > side_lo and n_sides >= 2):
        raise ConfigError("[experiment] side ladder needs side_max > side_min, n_sides >= 2")
    rep = cesaro_experiment(
        cfg.background,
        cfg.perturbation,
        energies,
        np.linspace(side_lo, side_hi, n_sides),
        cfg.domain.spacing,
        reference_delta=_exp_num(cfg, "reference_delta", 0.25),
        slack_abs=cfg.tolerances.get("slack_abs", 1.0),
        slack_rel=cfg.tolerances.get("slack_rel", 0.5),
        judge_from=_exp_int(cfg, "judge_from", 5),
    )
    out = RunOutput()
    rows = []
    for j, e in enumerate(rep.energies):
        for k in range(len(rep.sides)):
            rows.append((float(e), k + 1, float(rep.cesaro[k, j]), float(rep.reference[j])))
    out.add_csv("cesaro.csv", [(("E", "K", "cesaro_avg", "reference"), rows)])
    out.summary = {
        "bounded_fraction": rep.bounded_fraction,
        "judge_from": rep.judge_from,
        "n_energies": len(rep.energies),
        "n_sides": len(rep.sides),
    }
    if emit_svg:
        out.add_plot(
            "cesaro.svg",
            _svg_polyline_plot(
                [
                    (rep.energies, rep.cesaro[-1], "final running mean"),
                    (rep.energies, rep.bound, "tolerance bound"),
                ],
                "running means of the shift along the side ladder",
                "E",
                "running mean",
            ),
        )
    out.lines.append(
        f"cesaro: bounded fraction {rep.bounded_fraction:.3f} over "
        f"{len(rep.energies)} energies, depths {rep.judge_from}..{len(rep.sides)}"
    )
    return out


def _run_kirsch(cfg: RunConfig, seed, threads, emit_svg) -> RunOutput:
    if cfg.domain.dimension != 2:
        raise ConfigError("kirsch requires a two-dimensional [domain]")
    e_star = _exp_num(cfg, "e_star")
    uniform = _exp_list(cfg, "uniform_sides")
    side_lo = _exp_num(cfg, "side_min", 4.0)
    side_hi = _exp_num(cfg, "side_max", 40.0)
    rep = kirsch_scan(
        cfg.perturbation,
        e_star,
        cfg.domain.spacing,
        uniform,
        side_range=(side_lo, side_hi),
        mult_min=_exp_int(cfg, "mult_min", 3),
        shift_coef=_exp_num(cfg, "shift_coef", 0.3),
    )
    out = RunOutput()
    rows = []
    for t, val in zip(rep.tuned, rep.tuned_values):
        level = math.pi**2 * t.square_sum / (2.0 * t.side**2)
        rows.append((t.side, val, 1, level, t.multiplicity))
    for L, val in zip(rep.uniform_sides, rep.uniform_values):
        rows.append((float(L), val, 0, "", ""))
    rows.sort(key=lambda r: r[0])
    out.add_csv(
        "kirsch.csv",
        [(("L", "xi_L", "tuned_flag", "target_level", "multiplicity"), rows)],
    )
    out.summary = {
        "e_star": rep.energy,
        "max_tuned": rep.max_tuned,
        "median_uniform": rep.median_uniform,
        "enhancement_ratio": rep.enhancement_ratio,
        "maximizer_is_tuned": rep.maximizer_is_tuned,
        "maximizer_multiplicity": rep.maximizer_multiplicity,
    }
    if emit_svg:
        out.add_plot(
            "kirsch.svg",
            _svg_polyline_plot(
                [
                    (rep.uniform_sides, rep.uniform_values, "uniform ladder"),
                    ([t.side for t in rep.tuned], rep.tuned_values, "tuned sides"),
                ],
                f"shift at E={rep.energy:g}: tuned boxes against the uniform ladder",
                "L",
                "xi_L(E)",
            ),
        )
    out.lines.append(
        f"kirsch: max tuned shift {rep.max_tuned}, median uniform "
        f"{rep.median_uniform:g}, ratio {rep.enhancement_ratio:.3g}, "
        f"maximizer tuned: {rep.maximizer_is_tuned}"
    )
    return out


def _run_scaled(cfg: RunConfig, seed, threads, emit_svg) -> RunOutput:
    exponent = _exp_num(cfg, "exponent")
    sides = _exp_list(cfg, "sides")
    energies = _energy_grid(cfg, 0.05, 6.0, 240)
    try:
        rep = scaled_perturbation_experiment(
            cfg.perturbation,
            exponent,
            sides,
            cfg.domain.spacing,
            energies,
            background=cfg.background,
        )
    except ValueError as exc:
        raise ConfigError(f"scaled experiment rejected: {exc}") from None
    out = RunOutput()
    rows = []
    for i, L in enumerate(rep.sides):
        for j, e in enumerate(rep.energies):
            rows.append((L, e, rep.values[i][j]))
    out.add_csv("scaled.csv", [(("L", "E", "xi_bar"), rows)])
    out.summary = {
        "exponent": rep.exponent,
        "support_counts": list(rep.support_counts),
        "max_values": list(rep.max_values),
        "vanished_at_largest": rep.support_counts[-1] == 0,
    }
    if emit_svg:
        out.add_plot(
            "scaled.svg",
            _svg_polyline_plot(
                [(rep.sides, rep.support_counts, "nonzero energies")],
                f"support of the damped shift curve, exponent {exponent:g}",
                "L",
                "energies with a nonzero shift",
            ),
        )
    out.lines.append(
        f"scaled: support counts {list(rep.support_counts)} along sides "
        f"{list(rep.sides)}"
    )
    return out


# -- selftest ----------------------------------------------------------------


def _selftest_checks(seed: int, threads: int):
    """Quick identity suite; yields (name, passed, detail)."""
    rng = np.random.default_rng(seed)

    grid = BoxGrid(dimension=1, side=8.0, spacing=1.0 / 16.0)
    zero = PotentialSpec(kind="zero", center=(0.0,))
    bump = PotentialSpec(kind="square_bump", amplitude=10.0, support_radius=0.5, center=(0.0,))

    curve = ssf_finite_volume(grid, zero, zero, np.linspace(0.0, 12.0, 64))
    yield (
        "zero perturbation gives an identically zero shift curve",
        bool(np.all(curve.values == 0)),
        f"max |xi| = {int(np.abs(curve.values).max())}",
    )

    worst = 0
    for _ in range(12):
        n = int(rng.integers(8, 50))
        a = rng.normal(size=(n, n))
        a = (a + a.T) / 2.0
        v = rng.uniform(0.0, 2.0, size=n)
        e = float(rng.normal())
        c_dense0 = int(np.sum(np.linalg.eigvalsh(a) <= e))
        c_dense1 = int(np.sum(np.linalg.eigvalsh(a + np.diag(v)) <= e))
        xi, _ = ssf_pair_value(a, a + np.diag(v), e)
        worst = max(worst, abs(int(xi) - (c_dense0 - c_dense1)))
    yield (
        "matrix inertia counting agrees with dense eigenvalue counts",
        worst == 0,
        f"worst mismatch {worst} over 12 random pairs",
    )

    worst_gap = 0.0
    for _ in range(6):
        n = int(rng.integers(6, 14))
        a = rng.normal(size=(n, n))
        a = (a + a.T) / 2.0
        v = rng.uniform(0.0, 1.5, size=n)
        lo, hi = sorted(rng.normal(scale=2.0, size=2))
        if hi - lo < 0.5:
            hi = lo + 0.5
        mu0 = np.linalg.eigvalsh(a)
        mu1 = np.linalg.eigvalsh(a + np.diag(v))
        lhs = float(
            np.sum(np.maximum(0.0, hi - np.maximum(lo, mu0)))
            - np.sum(np.maximum(0.0, hi - np.maximum(lo, mu1)))
        )
        rhs = bs_rhs(
            a, v, SpectralWindow(((lo, hi),)), CouplingQuadrature("gauss_legendre", 48)
        ).value
        worst_gap = max(worst_gap, abs(lhs - rhs))
    yield (
        "coupling-integral identity holds on random finite matrices",
        worst_gap < 1e-6,
        f"worst |lhs - rhs| = {worst_gap:.3g}",
    )

    report = bs_check_grid(
        grid,
        zero,
        bump,
        SpectralWindow(((0.5, 2.5),)),
        CouplingQuadrature("gauss_legendre", 64),
    )
    yield (
        "coupling-integral identity holds on the discretized box",
        report.gap < 1e-6,
        f"|lhs - rhs| = {report.gap:.3g}",
    )

    g_fine = BoxGrid(dimension=1, side=8.0, spacing=8.0 / 512.0)
    h0 = assemble(g_fine, zero, bump, coupling=0.0)
    h1 = assemble(g_fine, zero, bump, coupling=1.0)
    worst_rel = 0.0
    for t in (0.5, 1.0):
        lhs = laplace_transform_spectral(h0, h1, t)
        rhs = ssf_step_function(h0, h1).integrate_product(ExpDecayWeight(rate=t))
        worst_rel = max(worst_rel, abs(lhs - rhs) / abs(lhs))
    yield (
        "Laplace transform of the step curve matches the spectral sums",
        worst_rel < 1e-8,
        f"worst relative gap {worst_rel:.3g}",
    )

    t, n_steps, node = 1.0, 32, 16
    x = np.array([0.3])
    y = np.array([-0.4])
    mean, var = bridge_marginal_params(x, y, t, node * t / n_steps)
    n_paths = 4000
    samples = np.empty(n_paths)
    for k in range(n_paths):
        ws = bridge_nodes(np.random.default_rng((seed, k)), x, y, t, n_steps)
        samples[k] = ws[node, 0]
    se_mean = math.sqrt(var / n_paths)
    mean_gap = abs(float(samples.mean()) - float(mean[0]))
    var_ratio = float(samples.var()) / var
    ok = mean_gap < 5.0 * se_mean and 0.85 < var_ratio < 1.15
    yield (
        "bridge node marginal has the exact Gaussian mean and variance",
        ok,
        f"mean gap {mean_gap:.3g} (5se {5 * se_mean:.3g}), variance ratio {var_ratio:.3f}",
    )

    est_a = laplace_mc(
        zero,
        bump,
        t=1.0,
        dimension=1,
        box_side=8.0,
        n_paths=2000,
        n_steps=64,
        master_seed=seed,
        n_threads=1,
    )
    est_b = laplace_mc(
        zero,
        bump,
        t=1.0,
        dimension=1,
        box_side=8.0,
        n_paths=2000,
        n_steps=64,
        master_seed=seed,
        n_threads=max(2, threads),
    )
    yield (
        "Monte Carlo estimate is invariant under the thread count",
        est_a.value == est_b.value and est_a.std_error == est_b.std_error,
        f"1-thread {est_a.value!r} vs {max(2, threads)}-thread {est_b.value!r}",
    )


def _run_selftest(cfg, seed, threads, emit_svg) -> RunOutput:
    out = RunOutput()
    rows = []
    failed = 0
    for name, ok, detail in _selftest_checks(seed if seed is not None else 0, threads):
        status = "PASS" if ok else "FAIL"
        if not ok:
            failed += 1
        rows.append((name, status, detail))
        out.lines.append(f"[{status}] {name}: {detail}")
    out.add_csv("selftest.csv", [(("check", "status", "detail"), rows)])
    out.summary = {"n_checks": len(rows), "n_failed": failed}
    out.lines.append(
        f"selftest: {len(rows) - failed}/{len(rows)} checks passed"
    )
    return out


_RUNNERS = {
    "ssf-scan": _run_ssf_scan,
    "laplace-mc": _run_laplace_mc,
    "bs-check": _run_bs_check,
    "vague": _run_vague,
    "cesaro": _run_cesaro,
    "kirsch": _run_kirsch,
    "scaled": _run_scaled,
    "selftest": _run_selftest,
}


# -- orchestration -----------------------------------------------------------


def _make_run_dir(base: str, sub: str) -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S-%f")
    for k in range(100):
        suffix = "" if k == 0 else f"-{k}"
        path = os.path.join(base, f"{sub}-{stamp}{suffix}")
        try:
            os.makedirs(path)
            return path
        except FileExistsError:
            continue
    raise OSError(f"could not allocate a run directory under {base!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssflab",
        description="numerical laboratory for spectral shift functions on Dirichlet boxes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", default=None, help="TOML run file")
        p.add_argument("--out", metavar="DIR", default="runs", help="output root directory")
        p.add_argument("--seed", metavar="U64", type=int, default=None, help="master seed")
        p.add_argument("--threads", metavar="N", type=int, default=None, help="worker cap")
        p.add_argument("--emit-svg", action="store_true", help="also write an SVG plot")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.subcommand
    try:
        if sub == "selftest":
            cfg = None
            seed = args.seed
            threads = args.threads if args.threads is not None else 2
        else:
            if args.config is None:
                raise ConfigError(f"{sub} requires --config PATH")
            cfg = load_config(args.config)
            _check_experiment_keys(cfg, sub)
            seed = args.seed if args.seed is not None else cfg.mc.master_seed
            threads = args.threads if args.threads is not None else cfg.mc.n_threads
            if threads <= 0:
                raise ConfigError("--threads must be positive")
            if seed is not None and not 0 <= seed < 2**64:
                raise ConfigError("--seed must fit in an unsigned 64-bit integer")
        started = utc_now()
        result = _RUNNERS[sub](cfg, seed, threads, args.emit_svg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    run_dir = _make_run_dir(args.out, sub)
    outputs = []
    for name, blocks in result.csv_files:
        _write_csv(os.path.join(run_dir, name), blocks)
        outputs.append(name)
    for name, svg in result.plots:
        with open(os.path.join(run_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
        outputs.append(name)
    manifest = RunManifest(
        tool="ssflab",
        version=__version__,
        subcommand=sub,
        config_path=cfg.path if cfg is not None else "",
        config_text=cfg.text if cfg is not None else "",
        master_seed=seed,
        n_threads=threads,
        grid_spacings=(cfg.domain.spacing,) if cfg is not None else (1.0 / 16.0, 8.0 / 512.0),
        tolerances=dict(cfg.tolerances) if cfg is not None else {},
        started_at=started,
        finished_at=utc_now(),
        outputs=outputs,
        bounds=result.bounds,
        summary=result.summary,
    )
    manifest.write(os.path.join(run_dir, MANIFEST_NAME))
    for line in result.lines:
        print(line)
    print(f"outputs written to {run_dir}")
    if sub == "selftest" and result.summary.get("n_failed", 0) > 0:
        return EXIT_SELFTEST
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
