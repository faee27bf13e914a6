"""Command-line entry point.

    bdgsoliton validate  --config run.yaml
    bdgsoliton construct --config run.yaml --out DIR
    bdgsoliton verify    --config run.yaml --out DIR
    bdgsoliton scatter   (--config run.yaml | --slab field.csv) --out DIR
    bdgsoliton evolve    --config run.yaml --out DIR [--scan]
    bdgsoliton asymptote --config run.yaml

Exit status: 0 success/PASS, 1 verification FAIL, 2 input error, 3 numeric error.
Errors are reported as one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import asymptotics, construct, direct_scattering, gap_equation, nls_evolution
from .config import WINDOW_SEPARATION, RunConfig, ScanConfig, load_config
from .errors import BdgSolitonError, ConfigParseError
from .scattering_data import Symmetry, ValidatedSpec

THREADS_ENV = "BDGSOLITON_THREADS"


# --- output helpers ----------------------------------------------------------

def _fmt(v: float) -> str:
    # repr of a float is the shortest string that round-trips
    return repr(float(v))


def complex_columns(prefix: str, shape: tuple) -> list[str]:
    names = []
    for idx in np.ndindex(*shape):
        tag = "".join(str(i) for i in idx)
        names += [f"{prefix}_{tag}_re", f"{prefix}_{tag}_im"]
    return names


def _interleave(a: np.ndarray) -> np.ndarray:
    """(N, ...) complex -> (N, 2 * size) real, Re/Im interleaved, row-major."""
    flat = a.reshape(a.shape[0], -1)
    out = np.empty((flat.shape[0], 2 * flat.shape[1]))
    out[:, 0::2] = flat.real
    out[:, 1::2] = flat.imag
    return out


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, int, np.floating, np.integer)) else v for v in row])


def field_table(spec: ValidatedSpec, x: np.ndarray, with_bound: bool = True) -> tuple[list[str], np.ndarray]:
    """Header and rows: x, Re/Im of Delta row-major, then Re/Im of each bound-state component."""
    d, n = spec.d, spec.n
    delta = construct.gap_function(spec, x)
    header = ["x"] + complex_columns("delta", (d, d))
    cols = [x[:, None], _interleave(delta)]
    if with_bound and n:
        h = construct.bound_states(spec, x)  # (N, 2d, n)
        for j in range(n):
            header += [f"h{j}_{a}_{part}" for a in range(2 * d) for part in ("re", "im")]
            cols.append(_interleave(h[:, :, j]))
    return header, np.hstack(cols)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False, default_flow_style=None)


def write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, default=_json_default) + "\n")


# --- pipelines -----------------------------------------------------------------

def spec_table(spec: ValidatedSpec) -> str:
    lines = [f"d = {spec.d}, n = {spec.n}, m = {spec.m}, symmetry = {spec.symmetry.value}, t = {spec.t}"]
    if spec.n:
        lines.append(f"{'j':>3} {'theta':>12} {'kappa':>12} {'epsilon':>12} {'x':>12}")
        for j in range(spec.n):
            lines.append(f"{j:>3} {spec.theta[j]:12.6f} {spec.kappa[j]:12.6f} {spec.epsilon[j]:12.6f} "
                         f"{spec.positions[j]:12.6f}")
    return "\n".join(lines)


def _nu(cfg: RunConfig, spec: ValidatedSpec):
    if cfg.nu is not None:
        if len(cfg.nu) != spec.n:
            raise ConfigParseError(f"filling.nu has {len(cfg.nu)} entries for {spec.n} solitons")
        return gap_equation.FillingAssignment(np.array(cfg.nu)).nu
    return gap_equation.filling_rates(spec, cfg.split).nu


def _scan_grid(scan: ScanConfig, guard: float) -> np.ndarray:
    return direct_scattering.s_grid(scan.s_min, scan.s_max, scan.count, guard)


def zs_refinement_ratios(spec: ValidatedSpec, x: np.ndarray, s_probe: float = 2.0) -> np.ndarray:
    """ZS residual ratio under h -> h/2 for every bound state and one scattering state."""
    eps_probe, _ = construct.uniformize(s_probe, spec.m)
    res = []
    for g in (x, np.linspace(x[0], x[-1], 2 * x.size - 1)):
        dg = construct.gap_function(spec, g)
        h = construct.bound_states(spec, g)
        f = construct.scattering_state(spec, g, s_probe)
        r = [direct_scattering.zs_residual(g, h[:, :, j], dg, spec.epsilon[j]).max() for j in range(spec.n)]
        r.append(direct_scattering.zs_residual(g, f, dg, eps_probe.real).max())
        res.append(np.array(r))
    return res[0] / res[1]


def verification_report(cfg: RunConfig, threads: int = 1, tol_scale: float = 1.0,
                        guard: float | None = None) -> gap_equation.ConsistencyReport:
    """Run every cross-check on the configured spec and collect PASS/FAIL lines."""
    spec = cfg.spec()
    guard = cfg.s_scan.guard_band if guard is None else guard
    tol = lambda key: cfg.tolerance(key, tol_scale)  # noqa: E731
    rep = gap_equation.ConsistencyReport("verification", config=cfg.to_dict())
    x = cfg.grid.points()
    delta = construct.gap_function(spec, x)

    if spec.symmetry is Symmetry.SYMMETRIC:
        rep.add("class symmetry |Delta - Delta^T|", np.max(np.abs(delta - np.swapaxes(delta, 1, 2))), tol("class_symmetry"))
    elif spec.symmetry is Symmetry.ANTISYMMETRIC:
        rep.add("class symmetry |Delta + Delta^T|", np.max(np.abs(delta + np.swapaxes(delta, 1, 2))), tol("class_symmetry"))

    # bound states and the gap equation
    rep.add("orthonormality |int H^H H - I|", gap_equation.bound_orthonormality(spec).error, tol("orthonormality"))
    nu = _nu(cfg, spec)
    rgrid = gap_equation.residual_grid(spec)
    xi = gap_equation.xi_tilde(spec, nu, rgrid) if spec.n else np.zeros((1, 2 * spec.d, 2 * spec.d))
    rep.add("Xi hermiticity", np.max(np.abs(xi - np.conj(np.swapaxes(xi, 1, 2)))), tol("hermiticity"))
    rep.add("gap residual max |[sigma3, Xi~]|", gap_equation.gap_residual(spec, nu, rgrid), tol("gap_residual"))

    # forward scattering on the configured domain
    dec = asymptotics.decompose(spec) if spec.n else None
    delta_plus = dec.delta_bar[-1] if dec else spec.delta_minus
    slab = direct_scattering.PotentialSlab(
        float(x[0]), float(x[-1]), lambda xx: construct.gap_function(spec, xx, check=False),
        spec.m, spec.delta_minus, delta_plus, spec.symmetry,
    )
    scan = direct_scattering.reflection_scan(slab, _scan_grid(cfg.s_scan, guard), threads=threads, guard=guard)
    rep.add("reflection max |R(s)|", scan.max_r, tol("reflection"))
    ident = max(scan.max_residual(k) for k in ("det", "sigma3", "flux", "r_symmetry", "tau"))
    rep.add("S-matrix identity residual", ident, tol("identities"))
    rep.notes.append(f"reflection scan: {scan.summary()} over {len(scan.samples)} points")

    # second-order convergence of the ZS residual
    ratios = zs_refinement_ratios(spec, x)
    lo, hi = tol("zs_ratio_low"), tol("zs_ratio_high")
    outside = float(np.max(np.maximum(lo - ratios, ratios - hi).clip(min=0.0)))
    rep.add(f"ZS refinement ratio outside [{lo:g}, {hi:g}]", outside, 0.0)
    rep.notes.append("ZS refinement ratios (bound states, then scattering at s=2): "
                     + ", ".join(f"{r:.3f}" for r in ratios))

    # isolated-soliton asymptotics
    if dec is not None:
        rec = asymptotics.recurrence_residuals(dec)
        rep.add("background recurrences", max(rec.values()), tol("recurrence"))
        rep.add("negative position shift", max(0.0, -float(np.min(dec.shifts))), 0.0)
        far = dec.X[-1] + 40.0 / dec.spec.kappa[-1]
        rep.add("Delta-bar_n vs Delta(+inf)/m",
                np.linalg.norm(construct.gap_function(spec, far) / spec.m - dec.delta_bar[-1], 2), tol("asymptote_plus"))
        errs = asymptotics.window_errors(dec)
        gated = dec.separation_decay >= WINDOW_SEPARATION
        rep.add("window error max |approx - exact| / m", np.max(errs) / spec.m, tol("window") if gated else None)
        if not gated:
            rep.notes.append(f"window error not gated: kappa_min * separation = {dec.separation_decay:.3g} "
                             f"< {WINDOW_SEPARATION:g}")
        rep.notes.extend(dec.warnings)
    return rep


# --- commands ------------------------------------------------------------------

def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> RunConfig:
    if not args.config:
        raise ConfigParseError("--config is required for this command")
    return load_config(args.config)


def cmd_validate(args) -> int:
    cfg = _config(args)
    spec = cfg.spec()
    print(spec_table(spec))
    print("---")
    print(dump_config(cfg.to_dict()), end="")
    return 0


def cmd_construct(args) -> int:
    cfg = _config(args)
    spec = cfg.spec()
    out = _out_dir(args)
    x = cfg.grid.points()
    header, table = field_table(spec, x)
    write_csv(out / "field.csv", header, table)
    write_json(out / "construct.json", {"config": cfg.to_dict(), "rows": int(x.size), "columns": header,
                                       "max_condition": float(np.max(construct.condition_number(spec, x)))})
    print(f"wrote {out / 'field.csv'} ({x.size} rows, {len(header)} columns)")
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args)
    rep = verification_report(cfg, threads=args.threads, tol_scale=args.tol_scale, guard=args.guard_band)
    text = rep.to_text() + "\n--- config\n" + dump_config(rep.config)
    print(text, end="")
    out = _out_dir(args)
    (out / "report.txt").write_text(text)
    write_json(out / "report.json", rep.to_dict())
    return 0 if rep.passed else 1


def cmd_scatter(args) -> int:
    guard = args.guard_band
    if args.slab:
        cfg = load_config(args.config) if args.config else None
        scan_cfg = cfg.s_scan if cfg else ScanConfig()
        slab = direct_scattering.read_slab_csv(args.slab, Symmetry.parse(args.symmetry))
        echo = {"slab": str(args.slab), "symmetry": args.symmetry, "s_scan": vars(scan_cfg),
                "config": cfg.to_dict() if cfg else None}
    else:
        cfg = _config(args)
        scan_cfg = cfg.s_scan
        slab = direct_scattering.soliton_slab(cfg.spec())
        echo = {"config": cfg.to_dict()}
    if args.bump:
        mid = 0.5 * (slab.x_left + slab.x_right)
        slab = direct_scattering.bumped_slab(slab, args.bump, center=mid)
        echo["bump"] = args.bump
    guard = scan_cfg.guard_band if guard is None else guard
    echo["guard_band"] = guard
    scan = direct_scattering.reflection_scan(slab, _scan_grid(scan_cfg, guard), threads=args.threads, guard=guard)
    rows = scan.rows()
    keys = list(rows[0].keys())
    out = _out_dir(args)
    write_csv(out / "scatter.csv", keys, [[r[k] for k in keys] for r in rows])
    summary = {"max_r": scan.max_r, "floor": scan.floor, "summary": scan.summary(),
               "domain": [slab.x_left, slab.x_right]}
    write_json(out / "scatter.json", {**echo, **summary})
    print(scan.summary())
    return 0


def cmd_evolve(args) -> int:
    cfg = _config(args)
    if not cfg.times:
        raise ConfigParseError("evolve needs a non-empty 'times' list")
    spec = cfg.spec()
    out = _out_dir(args)
    x = cfg.grid.points()
    manifest = []
    guard = cfg.s_scan.guard_band if args.guard_band is None else args.guard_band
    for i, snap in enumerate(nls_evolution.snapshot_series(spec, cfg.times, x)):
        name = f"snapshot_{i:03d}.csv"
        header, table = field_table(snap.spec, x, with_bound=False)
        write_csv(out / name, header, table)
        row = {"t": snap.t, "file": name}
        if args.scan:
            slab = direct_scattering.soliton_slab(snap.spec)
            scan = direct_scattering.reflection_scan(slab, _scan_grid(cfg.s_scan, guard), threads=args.threads,
                                                     guard=guard)
            row["max_r"] = scan.max_r
        manifest.append(row)
    keys = list(manifest[0].keys())
    write_csv(out / "manifest.csv", keys, [[r[k] for k in keys] for r in manifest])
    write_json(out / "evolve.json", {"config": cfg.to_dict(), "snapshots": manifest})
    for row in manifest:
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    return 0


def cmd_asymptote(args) -> int:
    cfg = _config(args)
    spec = cfg.spec()
    if spec.n == 0:
        print("no solitons")
        return 0
    dec = asymptotics.decompose(spec)
    print(f"kappa_min * separation = {dec.separation_decay:.6g}")
    print(f"{'j':>3} {'orig':>4} {'theta':>10} {'x':>12} {'y':>12} {'X':>12}")
    for j in range(spec.n):
        print(f"{j + 1:>3} {int(dec.order[j]):>4} {dec.spec.theta[j]:10.6f} {dec.spec.positions[j]:12.6f} "
              f"{dec.shifts[j]:12.6f} {dec.X[j]:12.6f}")
    for j in range(spec.n):
        print(f"q_{j + 1} = {np.array2string(dec.q_hat[j], precision=6)}  r_{j + 1} = "
              f"{np.array2string(dec.r_hat[j], precision=6)}")
    for j, bar in enumerate(dec.delta_bar):
        print(f"Delta-bar_{j} =\n{np.array2string(bar, precision=6)}")
    for w in dec.warnings:
        print(f"warning: {w}")
    if args.out:
        out = _out_dir(args)
        write_json(out / "asymptote.json", {
            "config": cfg.to_dict(), "order": dec.order, "shifts": dec.shifts, "X": dec.X,
            "q_hat": _pairs(dec.q_hat), "r_hat": _pairs(dec.r_hat),
            "delta_bar": [_pairs(b) for b in dec.delta_bar], "separation_decay": dec.separation_decay,
            "recurrences": asymptotics.recurrence_residuals(dec), "warnings": dec.warnings,
        })
    return 0


def _pairs(a: np.ndarray) -> list:
    return np.stack([a.real, a.imag], axis=-1).tolist()


COMMANDS = {
    "validate": cmd_validate,
    "construct": cmd_construct,
    "verify": cmd_verify,
    "scatter": cmd_scatter,
    "evolve": cmd_evolve,
    "asymptote": cmd_asymptote,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply all tolerances by this factor")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads for s-scans (fallback: ${THREADS_ENV}, then 1)")
    common.add_argument("--guard-band", type=float, default=None, help="exclusion half-width around s = +-1")
    parser = argparse.ArgumentParser(prog="bdgsoliton", description="Reflectionless matrix BdG / ZS solitons")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "scatter":
            p.add_argument("--slab", help="sampled potential CSV instead of a config")
            p.add_argument("--symmetry", default="nonsymmetric", help="symmetry class of a sampled slab")
            p.add_argument("--bump", type=float, default=0.0, help="multiply by 1 + BUMP * gaussian (control)")
        if name == "evolve":
            p.add_argument("--scan", action="store_true", help="reflection-scan every snapshot")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is None:
        args.threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if args.out is None:
        args.out = "out" if args.command != "asymptote" else None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](args)
    except BdgSolitonError as exc:
        err = {"error": exc.code, "message": str(exc), "exit_status": exc.exit_status}
        print(json.dumps(err), file=sys.stderr)
        return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())
