"""Command line scenario runner: LO-convergence sweep, bound-check suites,
appendix verification, the entanglement demo, and count sampling.

All commands are deterministic given (config, seed); tables are CSV with a
truncation-deficit column, plots are self-contained SVG.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import jsonschema
import numpy as np
import yaml

from .applications import entanglement_demo
from .bounds import certified_interval, check_theorem1, check_theorem2, check_theorem3_6, check_theorem4
from .detection import (
    Backend,
    CoherentPair,
    hom_statistics,
    sample_counts,
    shd_distribution,
    shed_distribution,
)
from .fock import ModeSpace, PureState, coherent_state
from .squash import squashed_moments_coherent_lo
from . import verifier

__all__ = ["main", "CONFIG_SCHEMA"]

_BACKENDS = {
    "exact": Backend.EXACT_FOCK,
    "coherent_lo": Backend.COHERENT_LO,
    "poisson": Backend.POISSON_PRODUCT,
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "version": {"type": "integer", "enum": [1]},
        "seed": {"type": "integer", "minimum": 0},
        "figure3": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number"},
                "lo_photons": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "exclusiveMinimum": 0},
                },
                "backend": {"enum": ["poisson", "coherent_lo"]},
            },
        },
        "bounds_check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_two_mode": {"type": "integer", "minimum": 0},
                "n_four_mode": {"type": "integer", "minimum": 0},
                "n_three_mode": {"type": "integer", "minimum": 0},
                "total_photons": {"type": "integer", "minimum": 1, "maximum": 6},
            },
        },
        "verify_appendix": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "diag_max": {"type": "integer", "minimum": 1, "maximum": 40},
                "grid_max": {"type": "integer", "minimum": 1},
                "uw_max": {"type": "integer", "minimum": 1},
                "samples": {"type": "integer", "minimum": 10000},
                "cutoff": {"type": "integer", "minimum": 2, "maximum": 20},
            },
        },
        "entanglement_demo": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r": {"type": "number", "minimum": 0},
                "lo_photons": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "sample": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["shd", "shed"]},
                "alpha": {"type": "number"},
                "lo_photons": {"type": "number", "exclusiveMinimum": 0},
                "theta": {"type": "number"},
                "shots": {"type": "integer", "minimum": 1},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "figure3": {
        "alpha": 1.4,
        "lo_photons": [float(v) for v in range(10, 401, 10)],
        "backend": "poisson",
    },
    "bounds_check": {"n_two_mode": 100, "n_four_mode": 50, "n_three_mode": 50, "total_photons": 4},
    "verify_appendix": {"diag_max": 20, "grid_max": 1000, "uw_max": 50, "samples": 10000, "cutoff": 10},
    "entanglement_demo": {"r": 0.5, "lo_photons": [25.0, 100.0, 400.0]},
    "sample": {"kind": "shd", "alpha": 1.4, "lo_photons": 25.0, "theta": 0.0, "shots": 100},
}


class ConfigError(Exception):
    pass


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if data is None:
        data = {}
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {exc.message}") from exc
    return data


def section(config, name):
    merged = dict(DEFAULTS[name])
    merged.update(config.get(name, {}))
    return merged


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return v


def _svg_chart(path, xs, series, title, xlabel, ylabel):
    """Minimal static line chart; one polyline per named series."""
    width, height = 720, 460
    ml, mr, mt, mb = 70, 160, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    all_y = [y for ys in series.values() for y in ys if np.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(all_y), max(all_y)
    if y1 == y0:
        y1 = y0 + 1.0
    if x1 == x0:
        x1 = x0 + 1.0

    def px(x):
        return ml + pw * (x - x0) / (x1 - x0)

    def py(y):
        return mt + ph * (1.0 - (y - y0) / (y1 - y0))

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="15">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{ylabel}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append(f'<text x="{px(xv):.1f}" y="{mt + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{ml - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.4g}</text>')
    for i, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if np.isfinite(y))
        color = colors[i % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = mt + 16 + 18 * i
        parts.append(f'<line x1="{ml + pw + 8}" y1="{ly - 4}" x2="{ml + pw + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="1.6"/>')
        parts.append(f'<text x="{ml + pw + 36}" y="{ly}">{name}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# commands

def _figure3_point(alpha, mean, backend):
    beta = float(np.sqrt(mean))
    state = CoherentPair(alpha=alpha, beta=beta)
    stats = hom_statistics(state, backend)
    z, z2, d = stats["z"][0.0], stats["z2"][0.0], stats["d_hom"]
    iv1 = certified_interval(z, d, "LH_1")
    iv2 = certified_interval(z2, d, "LH_2")
    sig = coherent_state(alpha)
    sq1, sq2 = squashed_moments_coherent_lo(sig.to_density(), beta, 0.0)
    return [
        mean, z, z2, d,
        iv1.lower, iv1.upper, iv2.lower, iv2.upper,
        sq1, sq2,
        float(np.real(alpha)), float(np.real(alpha)) ** 2 + 0.25,
        stats["mass_deficit"],
    ]


FIG3_HEADER = [
    "lo_photons", "z_mean", "z2_mean", "d_hom",
    "z_lower", "z_upper", "z2_lower", "z2_upper",
    "squashed_first", "squashed_second", "ideal_first", "ideal_second",
    "truncation_deficit",
]


def cmd_figure3(config, out_dir, threads):
    cfg = section(config, "figure3")
    backend = _BACKENDS[cfg["backend"]]
    points = list(cfg["lo_photons"])
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda m: _figure3_point(cfg["alpha"], m, backend), points))
    else:
        rows = [_figure3_point(cfg["alpha"], m, backend) for m in points]
    _write_csv(os.path.join(out_dir, "figure3.csv"), FIG3_HEADER, rows)
    xs = [r[0] for r in rows]
    _svg_chart(
        os.path.join(out_dir, "figure3.svg"),
        xs,
        {
            "first moment": [r[1] for r in rows],
            "interval low": [r[4] for r in rows],
            "interval high": [r[5] for r in rows],
            "squashed target": [r[8] for r in rows],
        },
        "Certified first-moment interval vs LO intensity",
        "LO mean photon number",
        "first moment",
    )
    ok = all(r[4] - 1e-9 <= r[8] <= r[5] + 1e-9 and r[6] - 1e-9 <= r[9] <= r[7] + 1e-9 for r in rows)
    return 0 if ok else 1


def random_sector_state(rng, n_modes, total):
    """Random pure state supported on total photon number <= total."""
    space = ModeSpace((total,) * n_modes, total_cutoff=total)
    amps = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    amps /= np.linalg.norm(amps)
    return PureState(space, amps)


def cmd_bounds_check(config, out_dir, seed, threads):
    cfg = section(config, "bounds_check")
    rng = np.random.default_rng(seed)
    total = cfg["total_photons"]
    rows = []

    def record(case, idx, comp):
        rows.append([case, idx, comp.theorem, comp.lhs_deviation, comp.rhs_bound, comp.slack, comp.verdict, comp.truncation_deficit])

    for i in range(cfg["n_two_mode"]):
        state = random_sector_state(rng, 2, total)
        theta = float(rng.uniform(0.0, 2.0 * np.pi))
        for comp in check_theorem1(state, theta) + check_theorem4(state, theta):
            record("two_mode", i, comp)
    for i in range(cfg["n_four_mode"]):
        state = random_sector_state(rng, 4, total)
        for kinds in (("hom", "hom"), ("het", "het"), ("hom", "het")):
            thetas = tuple(rng.uniform(0.0, 2.0 * np.pi, size=2))
            record("four_mode", i, check_theorem2(state, kinds, thetas))
    for i in range(cfg["n_three_mode"]):
        state = random_sector_state(rng, 3, min(total, 3))
        for first in ("hom", "het"):
            for second in ("shd", "shed"):
                phi, theta = rng.uniform(0.0, 2.0 * np.pi, size=2)
                record("three_mode", i, check_theorem3_6(state, (first, float(phi)), (second, float(theta))))
    _write_csv(
        os.path.join(out_dir, "bounds_check.csv"),
        ["case", "index", "theorem", "deviation", "bound", "slack", "verdict", "truncation_deficit"],
        rows,
    )
    return 0 if all(r[6] == "satisfied" for r in rows) else 1


def cmd_verify_appendix(config, out_dir):
    cfg = section(config, "verify_appendix")
    reports = verifier.verify_appendix(
        diag_max=cfg["diag_max"],
        grid_max=cfg["grid_max"],
        uw_max=cfg["uw_max"],
        samples=cfg["samples"],
        cutoff=cfg["cutoff"],
    )
    rows = [[r.name, "pass" if r.passed else "FAIL", r.max_violation, repr(r.witness), 0.0] for r in reports]
    _write_csv(
        os.path.join(out_dir, "verify_appendix.csv"),
        ["check", "status", "max_violation", "witness", "truncation_deficit"],
        rows,
    )
    return 0 if all(r.passed for r in reports) else 1


def cmd_entanglement_demo(config, out_dir):
    cfg = section(config, "entanglement_demo")
    rows = []
    for mean in cfg["lo_photons"]:
        out = entanglement_demo(cfg["r"], float(np.sqrt(mean)), Backend.COHERENT_LO)
        w = out["witness"]
        rows.append([mean, cfg["r"], w.verdict, w.margin, w.worst_case, out["ideal_duan_sum"], w.truncation_deficit])
    _write_csv(
        os.path.join(out_dir, "entanglement_demo.csv"),
        ["lo_photons", "r", "verdict", "margin", "worst_case", "ideal_duan_sum", "truncation_deficit"],
        rows,
    )
    return 0


def cmd_sample(config, out_dir, seed):
    cfg = section(config, "sample")
    state = CoherentPair(alpha=cfg["alpha"], beta=float(np.sqrt(cfg["lo_photons"])))
    if cfg["kind"] == "shd":
        dist = shd_distribution(state, theta=cfg["theta"], backend=Backend.POISSON_PRODUCT)
    else:
        dist = shed_distribution(state, backend=Backend.POISSON_PRODUCT)
    counts = sample_counts(dist, seed=seed, shots=cfg["shots"])
    n_det = len(counts[0])
    header = [f"n{j}" for j in range(n_det)] + ["truncation_deficit"]
    rows = [list(row) + [dist.mass_deficit] for row in counts]
    _write_csv(os.path.join(out_dir, "sample.csv"), header, rows)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="verihom", description=__doc__)
    parser.add_argument("command", choices=["figure3", "bounds-check", "verify-appendix", "entanglement-demo", "sample"])
    parser.add_argument("--config", default=None, help="YAML scenario file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else config.get("seed", DEFAULTS["seed"])
    os.makedirs(args.out, exist_ok=True)
    if args.command == "figure3":
        code = cmd_figure3(config, args.out, args.threads)
    elif args.command == "bounds-check":
        code = cmd_bounds_check(config, args.out, seed, args.threads)
    elif args.command == "verify-appendix":
        code = cmd_verify_appendix(config, args.out)
    elif args.command == "entanglement-demo":
        code = cmd_entanglement_demo(config, args.out)
    else:
        code = cmd_sample(config, args.out, seed)
    return code


if __name__ == "__main__":
    sys.exit(main())
