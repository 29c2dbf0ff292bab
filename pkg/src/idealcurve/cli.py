"""Command-line front end: ``idealcurve {simulate,verify,presets}``.

Exit codes: 0 success, 1 bad arguments or unreadable input, 2 the step
controller hit dt_min, 3 immersion was lost, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .checkpoint import load_checkpoint_file, save_checkpoint_file
from .errors import IdealCurveError
from .flow import FlowConfig, diagnostics_csv, read_diagnostics_csv, run
from .geometry import CurveState, build_geometry, curve_to_csv, curve_to_json, load_curve
from .presets import PRESETS, curve_from_spec
from .svg import emit_svg_frame
from .validators import DEFAULT_THRESHOLD, evaluate_curve, evaluate_trajectory

log = logging.getLogger("idealcurve")

EXIT_OK, EXIT_USAGE, EXIT_STEP_FLOOR, EXIT_IMMERSION, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4
TERMINATION_EXIT = {"converged": EXIT_OK, "t_end": EXIT_OK, "max_steps": EXIT_OK,
                    "step_floor": EXIT_STEP_FLOOR, "immersion_lost": EXIT_IMMERSION}
CONFIG_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this CLI reserves 2 for step_floor."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_config(path, overrides=None) -> FlowConfig:
    """FlowConfig from a JSON object of field values (plus ``schema_version``)."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config JSON must be an object")
        version = data.pop("schema_version", CONFIG_SCHEMA_VERSION)
        if version > CONFIG_SCHEMA_VERSION:
            raise UsageError(f"config schema_version {version} is newer than supported "
                             f"({CONFIG_SCHEMA_VERSION})")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return FlowConfig.from_dict(data)


def _load_source(preset, input_path) -> tuple[CurveState, dict]:
    if preset:
        return curve_from_spec(preset), {"preset": preset}
    path = Path(input_path)
    if not path.is_file():
        raise UsageError(f"input file {input_path} does not exist")
    return load_curve(path), {"input": str(input_path), "input_sha256": _sha256(path)}


# -- simulate ------------------------------------------------------------------

def simulate_to_dir(curve: CurveState, config: FlowConfig, out_dir, source: dict,
                    frame_stride: int = 0) -> dict:
    """Run the flow and write diagnostics, frames, checkpoint and manifest.

    Returns the manifest.  Wall-clock times go to ``timing.json``, which is
    deliberately not part of the checksummed inventory so the manifest stays
    byte-identical between repeated runs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames_dir = out / "frames"
    snapshot_index = 0

    def on_snapshot(state):
        nonlocal snapshot_index
        if frame_stride and snapshot_index % frame_stride == 0:
            frames_dir.mkdir(exist_ok=True)
            doc = emit_svg_frame(state.curve, {"frame": snapshot_index, "time": state.t})
            (frames_dir / f"frame_{snapshot_index:06d}.svg").write_text(doc)
        snapshot_index += 1

    started = time.time()
    result = run(curve, config, on_snapshot=on_snapshot if frame_stride else None)
    finished = time.time()

    (out / "diagnostics.csv").write_text(diagnostics_csv(result.records))
    save_checkpoint_file(result.state, out / "final.ckpt")
    files = sorted(p for p in out.rglob("*")
                   if p.is_file() and p.name not in ("manifest.json", "timing.json"))
    cache = result.state.cache
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": "idealcurve",
        "version": __version__,
        "config": config.to_dict(),
        "source": source,
        "seed": None,
        "termination": result.termination,
        "converged": result.converged,
        "converged_at": result.converged_at,
        "message": result.message,
        "final": {"t": result.state.t, "steps": result.state.step, "L": cache.length,
                  "E": cache.energy, "L3E": cache.scale_invariant_energy,
                  "winding": cache.winding, "dissipation": result.state.dissipation},
        "files": [{"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size,
                   "sha256": _sha256(p)} for p in files],
    }
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "timing.json", {"start": started, "end": finished,
                                      "wall_seconds": finished - started})
    return manifest


def _sweep_worker(entry: dict) -> tuple[str, int, str]:
    name = entry["name"]
    try:
        curve, source = _load_source(entry.get("preset"), entry.get("input"))
        config = FlowConfig.from_dict(entry.get("config", {}))
        manifest = simulate_to_dir(curve, config, entry["out_dir"], source,
                                   entry.get("frame_stride", 0))
    except (IdealCurveError, UsageError) as exc:
        return name, EXIT_USAGE, str(exc)
    return name, TERMINATION_EXIT[manifest["termination"]], manifest["termination"]


def _sweep(args, base_config: dict) -> int:
    try:
        entries = json.loads(Path(args.sweep).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read sweep file {args.sweep}: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise UsageError("sweep file must be a non-empty JSON list")
    jobs = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or not (entry.get("preset") or entry.get("input")):
            raise UsageError(f"sweep entry {i} needs 'preset' or 'input'")
        name = str(entry.get("name", f"run{i:03d}"))
        config = {**base_config, **entry.get("config", {})}
        FlowConfig.from_dict(config)  # fail fast on bad keys
        jobs.append({**entry, "name": name, "config": config,
                     "out_dir": str(Path(args.out_dir) / name),
                     "frame_stride": args.frame_stride})
    if len({j["name"] for j in jobs}) != len(jobs):
        raise UsageError("sweep entry names must be unique")
    limit = int(os.environ.get("ICF_THREADS", os.cpu_count() or 1))
    workers = max(1, min(limit, len(jobs)))
    if workers == 1:
        outcomes = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_worker, jobs))
    for name, code, what in outcomes:
        print(f"{name}: {what} (exit {code})")
    return max(code for _, code, _ in outcomes)


def cmd_simulate(args) -> int:
    overrides = {"t_end": args.t_end, "scheme": args.scheme}
    if args.sweep:
        base = {}
        if args.config:
            base = load_config(args.config, overrides).to_dict()
        else:
            base = {k: v for k, v in overrides.items() if v is not None}
        return _sweep(args, base)
    if bool(args.preset) == bool(args.input):
        raise UsageError("simulate needs exactly one of --preset or --input")
    config = load_config(args.config, overrides)
    curve, source = _load_source(args.preset, args.input)
    manifest = simulate_to_dir(curve, config, args.out_dir, source, args.frame_stride)
    fin = manifest["final"]
    print(f"termination: {manifest['termination']}  t={fin['t']:.6g}  steps={fin['steps']}  "
          f"L={fin['L']:.10g}  E={fin['E']:.6e}  winding={fin['winding']}")
    return TERMINATION_EXIT[manifest["termination"]]


# -- verify --------------------------------------------------------------------

def _manifest_report(run_dir: Path):
    path = run_dir / "manifest.json"
    if not path.is_file():
        return None
    manifest = json.loads(path.read_text())
    bad = [f["path"] for f in manifest.get("files", [])
           if not (run_dir / f["path"]).is_file() or _sha256(run_dir / f["path"]) != f["sha256"]]
    return {"check": "manifest_checksums", "status": "fail" if bad else "pass",
            "passed": not bad, "lhs": len(bad), "rhs": 0,
            "note": ("mismatch: " + ", ".join(bad)) if bad else
                    f"{len(manifest.get('files', []))} files verified"}


def cmd_verify(args) -> int:
    targets = [t for t in (args.preset, args.input, args.run) if t]
    if len(targets) != 1:
        raise UsageError("verify needs exactly one of --preset, --input or --run")
    reports = []
    if args.run:
        run_dir = Path(args.run)
        diag = run_dir / "diagnostics.csv"
        if not diag.is_file():
            raise UsageError(f"{run_dir} has no diagnostics.csv")
        records = read_diagnostics_csv(diag.read_text())
        reports += [r.to_dict() for r in evaluate_trajectory(records, args.threshold)]
        ckpt = run_dir / "final.ckpt"
        if ckpt.is_file():
            state = load_checkpoint_file(ckpt)
            reports += [r.to_dict() for r in evaluate_curve(state.cache, args.threshold)]
        manifest = _manifest_report(run_dir)
        if manifest is not None:
            reports.append(manifest)
    else:
        curve, _ = _load_source(args.preset, args.input)
        reports += [r.to_dict() for r in evaluate_curve(build_geometry(curve), args.threshold)]

    ok = all(r["passed"] for r in reports)
    if args.json:
        from .validators import _jsonable
        print(json.dumps(_jsonable({"passed": ok, "reports": reports}), indent=2, sort_keys=True))
    else:
        print(f"{'check':<22} {'status':<19} {'lhs':>14} {'rhs':>14}  note")
        for r in reports:
            print(f"{r['check']:<22} {r['status']:<19} {_num(r['lhs']):>14} {_num(r['rhs']):>14}"
                  f"  {r.get('note', '')}")
        print("all applicable checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _num(x):
    try:
        return f"{float(x):.6g}"
    except (TypeError, ValueError):
        return str(x)


# -- presets -------------------------------------------------------------------

def cmd_presets(args) -> int:
    if not args.emit:
        for name, (defaults, desc) in PRESETS.items():
            params = ", ".join(f"{k}={v}" for k, v in defaults.items())
            print(f"{name:<26} {params:<32} {desc}")
        return EXIT_OK
    curve = curve_from_spec(args.emit)
    if args.output:
        out = Path(args.output)
        text = curve_to_csv(curve) if out.suffix.lower() == ".csv" else curve_to_json(curve)
        out.write_text(text)
    else:
        sys.stdout.write(curve_to_json(curve) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="idealcurve",
                     description="Simulate and verify the gradient flow of int k_s^2 ds "
                                 "on closed plane curves.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the flow and write diagnostics")
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--preset", metavar="SPEC", help='e.g. "ellipse:a=1.1,b=1,n=128"')
    src.add_argument("--input", metavar="FILE", help="curve JSON or CSV")
    sim.add_argument("--config", metavar="JSON", help="FlowConfig fields as a JSON object")
    sim.add_argument("--out-dir", required=True, metavar="DIR")
    sim.add_argument("--t-end", type=float, default=None)
    sim.add_argument("--scheme", choices=("imex_spectral", "explicit_rk4"), default=None)
    sim.add_argument("--frame-stride", type=int, default=0, metavar="K",
                     help="write an SVG frame every K snapshots (0: none)")
    sim.add_argument("--sweep", metavar="JSON",
                     help="list of {name, preset|input, config} runs, one subdirectory each")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run the inequality checks")
    tgt = ver.add_mutually_exclusive_group()
    tgt.add_argument("--preset", metavar="SPEC")
    tgt.add_argument("--input", metavar="FILE")
    tgt.add_argument("--run", metavar="DIR", help="output directory of simulate")
    ver.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                     help="small-energy threshold on L^3 E (default %(default)s)")
    ver.add_argument("--json", action="store_true")
    ver.set_defaults(func=cmd_verify)

    pre = sub.add_parser("presets", help="list presets or sample one")
    pre.add_argument("--emit", metavar="SPEC")
    pre.add_argument("-o", "--output", metavar="FILE", help=".json or .csv")
    pre.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "frame_stride", 0) < 0:
            raise UsageError("--frame-stride must be >= 0")
        return args.func(args)
    except (UsageError, IdealCurveError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"idealcurve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
