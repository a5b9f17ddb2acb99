"""Command-line front end.

Five subcommands drive the library from a JSON config file:

    calr-lab spectrum        --config run.json [--out DIR]
    calr-lab critical-radius --config run.json [--out DIR]
    calr-lab sweep           --config run.json [--out DIR] [--threads K]
    calr-lab field           --config run.json [--out DIR]
    calr-lab validate        --config run.json [--out DIR]

Outputs are CSV (comma separated, header row, LF endings, 17 significant
digits) and JSON (UTF-8, sorted keys), so identical configs produce
byte-identical files.  Exit codes: 0 success, 2 config error, 3 numeric
failure, 4 validation-suite failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .errors import CalrError, ConfigError, DegeneratePoint
from .geometry import ConfocalGeometry, EllipticPoint, sample_ellipse, to_elliptic
from .oracle import assemble_np, block_np_for, numeric_spectrum
from .solver import (
    ShellConfig,
    adaptive_n_max,
    calr_classify,
    eval_potential,
    solve_densities,
    sweep,
)
from .source import (
    ChargePair,
    Coefficients,
    Dipole,
    SourceSpec,
    gap_condition_report,
    newtonian_coefficients,
)
from .spectrum import (
    RegimeKind,
    block_matrices,
    critical_radius,
    mode_data,
    s_gram,
)

_SPECTRUM_COLUMNS = (
    "n,lambda1,lambda2,a1,a2,b,norm_1p,norm_1m,norm_2p,norm_2m"
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
        newline="\n",
    )


def load_config(path: str | Path) -> dict:
    """Read and parse the JSON run configuration."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    return cfg


def _block(cfg: dict, name: str, required: bool = True) -> dict:
    value = cfg.get(name)
    if value is None:
        if required:
            raise ConfigError(f"missing config block '{name}'")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: must be a JSON object")
    return value


def _number(block: dict, where: str, key: str, default=None) -> float:
    value = block.get(key, default)
    if value is None:
        raise ConfigError(f"{where}.{key}: required number is missing")
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
    return float(value)


def _int(block: dict, where: str, key: str, default=None) -> int:
    value = block.get(key, default)
    if value is None:
        raise ConfigError(f"{where}.{key}: required integer is missing")
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{where}.{key}: expected an integer, got {value!r}")
    return value


def _point(obj: Any, where: str) -> EllipticPoint:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object with rho and omega")
    try:
        return EllipticPoint(
            _number(obj, where, "rho"), _number(obj, where, "omega")
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_geometry(cfg: dict) -> ConfocalGeometry:
    block = _block(cfg, "geometry")
    try:
        return ConfocalGeometry(
            _number(block, "geometry", "R"),
            _number(block, "geometry", "rho_i"),
            _number(block, "geometry", "rho_e"),
        )
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc


def parse_source(cfg: dict) -> SourceSpec:
    block = _block(cfg, "source")
    variant = block.get("variant")
    if variant == "dipole":
        moment = block.get("moment")
        if (
            not isinstance(moment, list)
            or len(moment) != 2
            or not all(isinstance(v, (int, float)) for v in moment)
        ):
            raise ConfigError("source.moment: expected [a1, a2]")
        return Dipole(
            _point(block.get("location"), "source.location"),
            np.array(moment, dtype=float),
        )
    if variant == "charge_pair":
        return ChargePair(
            _point(block.get("plus"), "source.plus"),
            _point(block.get("minus"), "source.minus"),
            _number(block, "source", "charge"),
        )
    if variant == "coefficients":
        f_plus = block.get("f_plus", [])
        f_minus = block.get("f_minus", [])
        if not isinstance(f_plus, list) or not isinstance(f_minus, list):
            raise ConfigError("source.f_plus / f_minus: expected lists")
        if len(f_plus) != len(f_minus):
            raise ConfigError(
                "source.f_plus / f_minus: lengths differ "
                f"({len(f_plus)} vs {len(f_minus)})"
            )
        return Coefficients(
            _number(block, "source", "c", 0.0),
            np.array(f_plus, dtype=float),
            np.array(f_minus, dtype=float),
        )
    raise ConfigError(
        "source.variant: expected one of 'dipole', 'charge_pair', "
        f"'coefficients', got {variant!r}"
    )


def cmd_spectrum(cfg: dict, out_dir: Path) -> int:
    g = parse_geometry(cfg)
    n_max = _int(_block(cfg, "spectrum", required=False), "spectrum", "n_max", 8)
    if n_max < 0:
        raise ConfigError(f"spectrum.n_max: must be >= 0, got {n_max}")
    lines = [_SPECTRUM_COLUMNS]
    for n in range(1, n_max + 1):
        m = mode_data(n, g)
        lines.append(
            ",".join(
                [str(n)]
                + [
                    _fmt(v)
                    for v in (
                        m.lambda1,
                        m.lambda2,
                        m.a1,
                        m.a2,
                        m.b,
                        m.norm_1p,
                        m.norm_1m,
                        m.norm_2p,
                        m.norm_2m,
                    )
                ]
            )
        )
    path = out_dir / "spectrum.csv"
    _write_lines(path, lines)
    print(f"wrote {path} ({n_max} modes)")
    return 0


def cmd_critical_radius(cfg: dict, out_dir: Path) -> int:
    g = parse_geometry(cfg)
    regime = critical_radius(g.rho_i, g.rho_e)
    report: dict[str, Any] = {
        "regime": regime.kind.value,
        "rho_star": regime.rho_star,
        "far_bound_rho": regime.far_bound_rho,
    }
    if regime.kind is RegimeKind.THIN:
        # In the thin regime the confocal problem maps onto an annulus
        # under rho = ln r, so the critical radius has a disk equivalent.
        report["disk_equivalent"] = math.exp(regime.rho_star)
    path = out_dir / "critical_radius.json"
    _write_json(path, report)
    print(f"wrote {path}")
    print(json.dumps(report, sort_keys=True))
    return 0


def _sweep_header(n_probes: int) -> str:
    far = [f"far_{k + 1}" for k in range(n_probes)]
    norm = [f"normalized_far_{k + 1}" for k in range(n_probes)]
    return ",".join(["delta", "n_max", "e_direct", "e_spectral"] + far + norm)


def cmd_sweep(cfg: dict, out_dir: Path, threads: int) -> int:
    g = parse_geometry(cfg)
    source = parse_source(cfg)
    block = _block(cfg, "sweep")
    deltas = block.get("deltas")
    if not isinstance(deltas, list) or not deltas:
        raise ConfigError("sweep.deltas: expected a non-empty list")
    for d in deltas:
        if not isinstance(d, (int, float)) or not 0.0 < d < 1.0:
            raise ConfigError(f"sweep.deltas: each delta must be in (0, 1), got {d!r}")
    deltas = sorted((float(d) for d in deltas), reverse=True)
    probes_cfg = block.get("probes")
    if not isinstance(probes_cfg, list) or not probes_cfg:
        raise ConfigError("sweep.probes: expected a non-empty list")
    probes = [
        _point(p, f"sweep.probes[{k}]") for k, p in enumerate(probes_cfg)
    ]
    for k, p in enumerate(probes):
        if p.rho <= g.rho_e:
            raise ConfigError(
                f"sweep.probes[{k}]: rho = {p.rho} is not outside rho_e = {g.rho_e}"
            )
    margin = _int(block, "sweep", "margin", 40)

    csv_path = out_dir / "sweep.csv"
    records = []
    # Rows are flushed one by one so that a failure mid-sweep still
    # leaves the completed part on disk.
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_sweep_header(len(probes)) + "\n")
        fh.flush()
        for rec in sweep(source, g, deltas, probes, margin=margin, threads=threads):
            row = [_fmt(rec.delta), str(rec.n_max), _fmt(rec.e_direct), _fmt(rec.e_spectral)]
            row += [_fmt(v) for v in rec.far_samples]
            row += [_fmt(v) for v in rec.normalized_far]
            fh.write(",".join(row) + "\n")
            fh.flush()
            records.append(rec)

    regime = critical_radius(g.rho_i, g.rho_e)
    diagnosis = calr_classify(records, regime)
    n_gc = adaptive_n_max(min(deltas), g, margin)
    sc = newtonian_coefficients(source, n_gc, g.R, rho_e=g.rho_e)
    gc = gap_condition_report(sc, g, regime.rho_star)
    report = {
        "verdict": diagnosis.verdict.value,
        "growth_exponent": diagnosis.growth_exponent,
        "energy_growth": diagnosis.energy_growth,
        "energy_spread": diagnosis.energy_spread,
        "visibility_drop": diagnosis.visibility_drop,
        "energy_increasing": diagnosis.energy_increasing,
        "visibility_decreasing": diagnosis.visibility_decreasing,
        "regime": {
            "kind": regime.kind.value,
            "rho_star": regime.rho_star,
            "far_bound_rho": regime.far_bound_rho,
        },
        "gap_condition": {
            "verdict": gc.verdict.value,
            "rho_star": gc.rho_star,
            "n_terms": int(len(gc.indices)),
            "log10_tail_terms": [float(v) for v in gc.log10_terms[-5:]],
        },
    }
    json_path = out_dir / "sweep_classification.json"
    _write_json(json_path, report)
    print(f"wrote {csv_path} ({len(records)} rows)")
    print(f"wrote {json_path}")
    print(f"verdict: {diagnosis.verdict.value}")
    return 0


def cmd_field(cfg: dict, out_dir: Path) -> int:
    g = parse_geometry(cfg)
    source = parse_source(cfg)
    block = _block(cfg, "field")
    delta = _number(block, "field", "delta")
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"field.delta: must be in (0, 1), got {delta}")
    regime = critical_radius(g.rho_i, g.rho_e)
    rho_max = _number(block, "field", "rho_max", regime.far_bound_rho + 0.3)
    n1 = _int(block, "field", "n1", 81)
    n2 = _int(block, "field", "n2", 81)
    if min(n1, n2) < 2:
        raise ConfigError("field.n1/n2: grid needs >= 2 points per axis")
    # Sources very close to the shell need extra modes before the series
    # tail clears the interface gap; margin buys that headroom.
    margin = _int(block, "field", "margin", 40)

    n_max = adaptive_n_max(delta, g, margin)
    sc = newtonian_coefficients(source, n_max, g.R, rho_e=g.rho_e)
    config = ShellConfig(g, delta, n_max)
    dc = solve_densities(sc, config)
    # Closed-form sources are evaluated everywhere; a raw coefficient
    # source only converges inside its own expansion radius.
    f_spec = sc if isinstance(source, Coefficients) else source

    a = g.R * math.cosh(rho_max)
    b = g.R * math.sinh(rho_max)
    xs = np.linspace(-a, a, n1)
    ys = np.linspace(-b, b, n2)
    lines = ["x1,x2,re_v,im_v,abs_v"]
    for x2 in ys:
        for x1 in xs:
            prefix = f"{_fmt(x1)},{_fmt(x2)}"
            try:
                p = to_elliptic(g.R, np.array([x1, x2]))
            except DegeneratePoint:
                lines.append(prefix + ",,,")
                continue
            v = complex(eval_potential(f_spec, dc, config, p))
            lines.append(
                f"{prefix},{_fmt(v.real)},{_fmt(v.imag)},{_fmt(abs(v))}"
            )
    path = out_dir / "field.csv"
    _write_lines(path, lines)
    print(f"wrote {path} ({n1 * n2} points)")
    return 0


def _check(name: str, ok: bool, observed: float, threshold: float, status=None):
    return {
        "name": name,
        "status": status if status is not None else ("pass" if ok else "fail"),
        "observed": float(observed),
        "threshold": float(threshold),
    }


def _validate_checks(cfg: dict) -> list[dict]:
    g = parse_geometry(cfg)
    block = _block(cfg, "validate", required=False)
    n_nystrom = _int(block, "validate", "n_nystrom", 256)
    n_modes = _int(block, "validate", "n_modes", 3)
    flip = bool(block.get("flip_first_block", False))
    checks: list[dict] = []

    # 1. Nystrom block spectrum against the closed-form eigenvalues.
    rep = numeric_spectrum(
        block_np_for(g, n_nystrom, flip_first_block=flip), 2 + 4 * n_modes
    )
    keep = np.abs(rep.matched) != 0.5
    worst = float(np.max(rep.rel_errors[keep])) if keep.any() else 0.0
    if n_nystrom < 64 and worst >= 1e-6:
        # Too coarse to certify convergence either way.
        checks.append(_check("nystrom_spectrum", False, worst, 1e-6, "indeterminate"))
    else:
        checks.append(_check("nystrom_spectrum", worst < 1e-6, worst, 1e-6))

    # 2. Constant-density eigenvalue on a single curve.
    curve = sample_ellipse(g.R, g.rho_i, max(n_nystrom, 64))
    m = assemble_np(curve)
    xi_inv = 1.0 / np.array([p.weight for p in curve])  # density ~ Xi^{-1}
    resid = m @ xi_inv - 0.5 * xi_inv
    alpha0_err = float(np.max(np.abs(resid)) / np.max(np.abs(xi_inv)))
    checks.append(_check("alpha0_half", alpha0_err < 1e-8, alpha0_err, 1e-8))

    # 3. Eigen-residuals of the closed-form 2x2 blocks (componentwise).
    worst = 0.0
    for n in range(1, 51):
        mode = mode_data(n, g)
        a_mat, b_mat = block_matrices(n, g)
        for mat, lam, vec in (
            (a_mat, mode.lambda1, np.array([mode.a1, mode.b])),
            (a_mat, mode.lambda2, np.array([mode.a2, mode.b])),
            (b_mat, -mode.lambda1, np.array([mode.b, mode.a2])),
            (b_mat, -mode.lambda2, np.array([mode.b, mode.a1])),
        ):
            num = np.abs(mat @ vec - lam * vec)
            den = np.abs(mat) @ np.abs(vec) + abs(lam) * np.abs(vec)
            worst = max(worst, float(np.max(num / den)))
    checks.append(_check("eigen_residuals", worst < 1e-12, worst, 1e-12))

    # 4. Mode norms against the Gram closed form, and Gram positivity.
    worst = 0.0
    pd = True
    for n in (1, 2, 5, 10, 25, 50):
        mode = mode_data(n, g)
        for parity in ("cos", "sin"):
            try:
                np.linalg.cholesky(s_gram(n, g, parity))
            except np.linalg.LinAlgError:
                pd = False
        g_cos = s_gram(n, g, "cos")
        g_sin = s_gram(n, g, "sin")
        for vec, gram, norm in (
            (np.array([mode.a1, mode.b]), g_cos, mode.norm_1p),
            (np.array([mode.b, mode.a2]), g_sin, mode.norm_1m),
            (np.array([mode.a2, mode.b]), g_cos, mode.norm_2p),
            (np.array([mode.b, mode.a1]), g_sin, mode.norm_2m),
        ):
            quad = float(vec @ gram @ vec)
            worst = max(worst, abs(quad - norm) / abs(norm))
    status = None if pd else "fail"
    checks.append(_check("s_norms", pd and worst < 1e-12, worst, 1e-12, status))

    # 5. Transmission conditions for the configured (or default) source.
    if "source" in cfg:
        source = parse_source(cfg)
    else:
        source = Dipole(
            EllipticPoint(g.rho_e + 0.5, 0.9), np.array([1.0, 0.4])
        )
    delta = 1e-3
    n_max = adaptive_n_max(delta, g)
    config = ShellConfig(g, delta, n_max)
    sc = newtonian_coefficients(source, n_max, g.R, rho_e=g.rho_e)
    dc = solve_densities(sc, config)
    f_spec = sc if isinstance(source, Coefficients) else source
    stencil = np.array([-49.0 / 20, 6.0, -15.0 / 2, 20.0 / 3, -15.0 / 4, 6.0 / 5, -1.0 / 6])
    h = 1e-4
    omegas = np.linspace(0.07, 2.0 * math.pi - 0.13, 12)
    eps = {"in": [1.0, -1.0 + 1j * delta], "out": [-1.0 + 1j * delta, 1.0]}
    worst_c, worst_f = 0.0, 0.0
    for rho_t, (e_in, e_out) in zip((g.rho_i, g.rho_e), (eps["in"], eps["out"])):
        fluxes, vscale, fscale = [], 0.0, 0.0
        for w in omegas:
            def v_at(r: float) -> complex:
                return eval_potential(f_spec, dc, config, EllipticPoint(r, w))

            vin, vout = v_at(rho_t - 1e-9), v_at(rho_t + 1e-9)
            vscale = max(vscale, abs(vin))
            worst_c = max(worst_c, abs(vin - vout))
            d_in = -sum(c * v_at(rho_t - k * h) for k, c in enumerate(stencil)) / h
            d_out = sum(c * v_at(rho_t + k * h) for k, c in enumerate(stencil)) / h
            fi, fo = e_in * d_in, e_out * d_out
            fluxes.append(abs(fi - fo))
            fscale = max(fscale, abs(fi), abs(fo))
        worst_f = max(worst_f, max(fluxes) / fscale)
    worst_c = worst_c / vscale
    checks.append(_check("continuity", worst_c < 1e-6, worst_c, 1e-6))
    checks.append(_check("flux_jump", worst_f < 1e-8, worst_f, 1e-8))

    # 6. Spectral surrogate stays within a bounded factor of the direct energy.
    probes = [EllipticPoint(critical_radius(g.rho_i, g.rho_e).far_bound_rho + 0.1, 0.6)]
    recs = sweep(source, g, [10.0 ** (-k) for k in range(2, 7)], probes)
    ratios = [r.e_direct / r.e_spectral for r in recs]
    spread = max(ratios) / min(ratios)
    checks.append(_check("surrogate_ratio", spread <= 10.0, spread, 10.0))

    # 7. Conjugation symmetry: z(-delta) = conj(z(delta)) pointwise in V.
    dc_m = solve_densities(sc, ShellConfig(g, -delta, n_max))
    worst = 0.0
    for p in (
        EllipticPoint(0.5 * g.rho_i, 0.3),
        EllipticPoint(0.5 * (g.rho_i + g.rho_e), 2.0),
        EllipticPoint(g.rho_e + 0.3, 4.0),
    ):
        vp = complex(eval_potential(f_spec, dc, config, p))
        vm = complex(eval_potential(f_spec, dc_m, ShellConfig(g, -delta, n_max), p))
        worst = max(worst, abs(vm - vp.conjugate()) / max(abs(vp), 1e-30))
    checks.append(_check("reality_symmetry", worst < 1e-13, worst, 1e-13))
    return checks


def cmd_validate(cfg: dict, out_dir: Path) -> int:
    checks = _validate_checks(cfg)
    failed = [c for c in checks if c["status"] == "fail"]
    report = {
        "all_pass": not failed,
        "checks": sorted(checks, key=lambda c: c["name"]),
    }
    path = out_dir / "validate.json"
    _write_json(path, report)
    for c in report["checks"]:
        print(
            f"{c['status'].upper():>13}  {c['name']}"
            f"  observed={c['observed']:.3e} threshold={c['threshold']:.3e}"
        )
    print(f"wrote {path}")
    if failed:
        print(f"{len(failed)} check(s) failed", file=sys.stderr)
        return 4
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calr-lab",
        description="Anomalous localized resonance workflows for confocal shells",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("spectrum", "tabulate closed-form eigenvalues and mode norms"),
        ("critical-radius", "report the cloaking threshold for a geometry"),
        ("sweep", "run a loss sweep and classify CALR"),
        ("field", "evaluate the potential on a Cartesian grid"),
        ("validate", "run the built-in cross-validation suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        if name == "sweep":
            p.add_argument(
                "--threads", type=int, default=1, help="parallel solves per sweep"
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out_dir)
        if args.command == "critical-radius":
            return cmd_critical_radius(cfg, out_dir)
        if args.command == "sweep":
            if args.threads < 1:
                raise ConfigError(f"--threads must be >= 1, got {args.threads}")
            return cmd_sweep(cfg, out_dir, args.threads)
        if args.command == "field":
            return cmd_field(cfg, out_dir)
        return cmd_validate(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CalrError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
