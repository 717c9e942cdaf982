"""``qee`` command line: mapping tables, encoding, diagonalization, VQE, ZNE, reports.

Exit status: 0 success, 2 usage error, 3 bad input, 4 failed numerical check.
Every command that writes an output file also writes a run manifest next to
it (``<out>.manifest.json``, or ``--manifest PATH``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .configspace import ConfigSpaceError, enumerate_space, parse_filter
from .encoder import EncodingError, EncodingStats, build_hamiltonian, expand_matrix, hamiltonian_matrix, jw_encode
from .fixtures import ENV_VAR, FixtureError, FixtureStore
from .integrals import (IntegralError, OrbitalLayout, load_json_integrals, parse_fcidump,
                        random_spatial_table, to_spin_orbitals)
from .mitigation import MitigationError, zne_pipeline, zne_to_csv
from .pauli import PauliError, PauliOperator
from .simulator import NoiseModel, SimulatorError, diagonalize
from .vqe import AnsatzSpec, Backend, OptimizerConfig, VqeError, minimize, scan_to_csv, surface_scan

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


class NumericalCheckError(Exception):
    pass


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class RunManifest:
    """Everything needed to replay a run: argv, inputs with checksums, seeds, timings."""

    command: str
    argv: list
    inputs: list = field(default_factory=list)
    filter: str | None = None
    seeds: dict = field(default_factory=dict)
    version: str = field(default_factory=tool_version)
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def add_input(self, path):
        self.inputs.append({"path": str(path), "sha256": _sha256(path)})

    def add_output(self, path):
        self.outputs.append({"path": str(path), "sha256": _sha256(path)})

    def timed(self, name):
        return _Timer(self.timings, name)

    def to_json(self):
        return json.dumps(asdict(self), indent=1) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


class _Timer:
    def __init__(self, sink, name):
        self.sink, self.name = sink, name

    def __enter__(self):
        self.start = time.perf_counter()

    def __exit__(self, *exc):
        self.sink[self.name] = self.sink.get(self.name, 0.0) + time.perf_counter() - self.start


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# input helpers


def read_integrals(path):
    """Spatial or spin-resolved table from a JSON or FCIDUMP file."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return load_json_integrals(text)
    table, _ = parse_fcidump(text)
    return table


def _layout(args, n_spatial):
    layout = OrbitalLayout.from_name(args.layout, n_spatial)
    if args.sign_order:
        order = tuple(int(x) for x in args.sign_order.split(","))
        layout = OrbitalLayout(n_spatial, layout.spin_order, order)
    return layout


def load_system(args, manifest):
    """``(spin table, filter)`` from ``--fixture`` or ``--input`` plus ``--filter``."""
    if args.fixture:
        fx = FixtureStore(args.fixtures).get(args.fixture)
        manifest.add_input(fx.path)
        spec = args.filter or fx.record["filter"]
        layout = fx.layout()
        table = fx.spin_table()
    elif args.input:
        manifest.add_input(args.input)
        table = read_integrals(args.input)
        if table.spin_resolved:
            layout = OrbitalLayout.blocked(table.n_orbitals // 2) if table.n_orbitals % 2 == 0 else None
        else:
            layout = _layout(args, table.n_orbitals)
            table = to_spin_orbitals(table, layout)
        spec = args.filter
        if spec is None:
            raise UsageError("--filter is required with --input")
    else:
        raise UsageError("give --input or --fixture")
    manifest.filter = spec
    return table, parse_filter(spec, table.n_spin_orbitals, layout)


def read_operator(path, manifest):
    manifest.add_input(path)
    return PauliOperator.from_json(Path(path).read_text())


def noise_loader(n_qubits, manifest=None):
    def load(name):
        if name == "santiago":
            return NoiseModel.santiago(n_qubits)
        if manifest is not None:
            manifest.add_input(name)
        return NoiseModel.from_json(Path(name).read_text())
    return load


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _write(path, text, manifest):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    manifest.add_output(path)


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, indent=1))
    elif text:
        print(text)


# ---------------------------------------------------------------------------
# commands


def cmd_configs(args, manifest):
    if args.n_spin is not None:
        if args.filter is None:
            raise UsageError("--filter is required with --n-spin")
        layout = OrbitalLayout.blocked(args.n_spin // 2) if args.n_spin % 2 == 0 else None
        if layout is not None and args.sign_order:
            layout = _layout(args, args.n_spin // 2)
        manifest.filter = args.filter
        flt = parse_filter(args.filter, args.n_spin, layout)
    else:
        _, flt = load_system(args, manifest)
    space = enumerate_space(flt)
    doc = space.to_dict()
    if args.out:
        _write(args.out, json.dumps(doc, indent=1) + "\n", manifest)
    rows = space.table()
    width = max(len("filled"), *(len(r[0]) for r in rows))
    lines = [f"{'filled':<{width}}  {'f':<{space.n_spin_orbitals}}  q"]
    lines += [f"{a:<{width}}  {b}  {c}" for a, b, c in rows]
    _emit(args, doc, "\n".join(lines))


def cmd_encode(args, manifest):
    table, flt = load_system(args, manifest)
    include = not args.electronic_only
    stats = []
    with manifest.timed("encode"):
        if args.encoding == "jw":
            op = jw_encode(table, include)
        else:
            op = build_hamiltonian(enumerate_space(flt), table, include, stats)
    if args.out:
        _write(args.out, op.to_json(), manifest)
    payload = {"encoding": args.encoding, "n_qubits": op.n_qubits, "terms": len(op),
               "stats": asdict(stats[0]) if stats else None}
    if args.json and not args.out:
        payload["operator"] = op.to_dict()
    _emit(args, payload, op.format())


def cmd_diag(args, manifest):
    op = read_operator(args.ham, manifest)
    with manifest.timed("diagonalize"):
        values = diagonalize(op)
    lowest = [float(v) for v in values[:args.count]]
    payload = {"n_qubits": op.n_qubits, "eigenvalues": lowest}
    if args.expect is not None:
        payload["expected"] = args.expect
        payload["deviation"] = lowest[0] - args.expect
    if args.out:
        _write(args.out, json.dumps(payload, indent=1) + "\n", manifest)
    _emit(args, payload, "\n".join(f"{v:.10f}" for v in lowest))
    if args.expect is not None and abs(lowest[0] - args.expect) > args.tolerance:
        raise NumericalCheckError(
            f"minimum eigenvalue {lowest[0]:.12f} differs from {args.expect:.12f} by more than {args.tolerance:g}")


def _spec(args, q):
    spec = AnsatzSpec(q, args.reps)
    if args.cnot_count is not None:
        spec = spec.with_cnot_count(args.cnot_count)
    return spec


def _optimizer(args):
    return OptimizerConfig(max_iterations=args.max_iterations, seed=args.seed, restarts=args.restarts)


def cmd_vqe(args, manifest):
    op = read_operator(args.ham, manifest)
    spec = _spec(args, op.n_qubits)
    backend = Backend.parse(args.backend, noise_loader(op.n_qubits, manifest))
    manifest.seeds["optimizer"] = args.seed
    with manifest.timed("vqe"):
        res = minimize(op, spec, _optimizer(args), backend)
    payload = {"backend": backend.describe(), "reps": spec.reps, "cnot_count": spec.cnot_count, **res.to_dict()}
    if res.reference_minimum is not None:
        payload["error"] = res.energy - res.reference_minimum
    if args.out:
        _write(args.out, json.dumps(payload, indent=1) + "\n", manifest)
    text = f"energy {res.energy:.10f}  evaluations {res.evaluations}  restarts {res.restarts_used}"
    if res.reference_minimum is not None:
        text += f"  exact {res.reference_minimum:.10f}  error {res.energy - res.reference_minimum:.2e}"
    _emit(args, payload, text)


def cmd_scan(args, manifest):
    store = FixtureStore(args.fixtures)
    members = store.group(args.group)
    if args.distances:
        wanted = {round(float(d), 4) for d in args.distances.split(",")}
        members = [f for f in members if round(f.distance, 4) in wanted]
        if not members:
            raise UsageError(f"no fixture in {args.group!r} at distances {args.distances}")
    points = []
    with manifest.timed("encode"):
        for fx in members:
            manifest.add_input(fx.path)
            ham = build_hamiltonian(fx.space(), fx.spin_table())
            points.append((fx.distance, ham, {"exact": fx.reference.get("e_fci"), "e_hf": fx.reference.get("e_hf")}))
    q = points[0][1].n_qubits
    backend = Backend.parse(args.backend, noise_loader(q, manifest))
    manifest.seeds["optimizer"] = args.seed
    with manifest.timed("vqe"):
        scan = surface_scan(points, _spec(args, q), _optimizer(args), backend)
    csv_text = scan_to_csv(scan)
    if args.out:
        _write(args.out, csv_text, manifest)
    payload = [asdict(p) | {"error": p.error} for p in scan]
    _emit(args, payload, csv_text.rstrip())


def cmd_zne(args, manifest):
    op = read_operator(args.ham, manifest)
    q = op.n_qubits
    noise = noise_loader(q, manifest)(args.noise)
    counts = _int_list(args.cnot_counts)
    spec = AnsatzSpec(q, args.reps)
    manifest.seeds["sampling"] = args.seed
    with manifest.timed("zne"):
        fit, raw = zne_pipeline(op, spec, _optimizer(args), noise, args.shots, args.repeats, counts,
                                args.mode, seed=args.seed, mitigate_readout=not args.no_readout_mitigation,
                                full_calibration_shots=args.calibration_shots)
    exact = float(diagonalize(op)[0])
    payload = {**raw, "fit": fit.to_dict(), "intercept": fit.intercept, "intercept_2sigma": fit.error_bar,
               "exact": exact, "deviation": fit.intercept - exact}
    if args.out:
        _write(args.out, json.dumps(payload, indent=1) + "\n", manifest)
    if args.csv:
        _write(args.csv, zne_to_csv(raw, fit), manifest)
    lines = [f"cnots {p['cnot_count']:3d}  mean {p['mean']:.6f}  std {p['std']:.6f}" for p in raw["points"]]
    lines.append(f"intercept {fit.intercept:.6f} +/- {fit.error_bar:.6f} (2 sigma)  exact {exact:.6f}")
    _emit(args, payload, "\n".join(lines))


REPORT_COLUMNS = ["molecule", "frozen", "jw_qubits", "jw_terms", "qee_qubits", "qee_terms"]


def report_rows(store, group="survey", qubits_only=False, select=None):
    rows = []
    members = sorted(store.group(group), key=lambda f: f.record.get("row_index", 0))
    for fx in members:
        if select and not any(s in fx.name for s in select):
            continue
        table = fx.spin_table()
        space = fx.space()
        row = {"fixture": fx.name, "molecule": fx.record.get("row_label", fx.name),
               "frozen": fx.record.get("row_orbitals", ""),
               "jw_qubits": table.n_spin_orbitals, "jw_terms": None,
               "qee_qubits": space.qubit_count, "qee_terms": None}
        if not qubits_only:
            row["jw_terms"] = len(jw_encode(table))
            row["qee_terms"] = len(build_hamiltonian(space, table))
        rows.append(row)
    return rows


def format_report(rows, fmt):
    def cell(v):
        return "" if v is None else str(v)
    if fmt == "markdown":
        out = ["| " + " | ".join(REPORT_COLUMNS) + " |", "|" + "---|" * len(REPORT_COLUMNS)]
        out += ["| " + " | ".join(cell(r[c]) for c in REPORT_COLUMNS) + " |" for r in rows]
        return "\n".join(out) + "\n"
    import csv
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([cell(r[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def cmd_report(args, manifest):
    store = FixtureStore(args.fixtures)
    with manifest.timed("report"):
        rows = report_rows(store, args.group, args.qubits_only, args.only.split(",") if args.only else None)
    for r in rows:
        manifest.add_input(store.get(r["fixture"]).path)
    text = format_report(rows, args.format)
    if args.out:
        _write(args.out, text, manifest)
    _emit(args, rows, text.rstrip())


def bench_point(n, m, seed, repeats=3):
    """Raw and merged term counts plus best-of wall time for one ``(N, m)``."""
    table = to_spin_orbitals(random_spatial_table(n // 2, seed))
    space = enumerate_space(parse_filter(f"m={m}", n))
    q = space.qubit_count
    xs, _, _ = expand_matrix(hamiltonian_matrix(space, table), q)
    best = math.inf
    stats = []
    for _ in range(repeats):
        stats.clear()
        start = time.perf_counter()
        build_hamiltonian(space, table, stats=stats)
        best = min(best, time.perf_counter() - start)
    rec: EncodingStats = stats[0]
    return {"n": n, "m": m, "configs": len(space), "qubits": q, "nonzero_elements": rec.nonzero_elements,
            "raw_measured": int(len(xs)), "raw_analytic": rec.nonzero_elements << q,
            "raw_bound": len(space) ** 2 << q, "merged_terms": rec.merged_terms, "seconds": best}


def loglog_slopes(points):
    """Least-squares slope of log(time) against log(N), per particle number."""
    out = {}
    for m in sorted({p["m"] for p in points}):
        sel = [p for p in points if p["m"] == m]
        if len({p["n"] for p in sel}) < 2:
            continue
        x = np.log([p["n"] for p in sel])
        y = np.log([max(p["seconds"], 1e-6) for p in sel])
        out[m] = float(np.polyfit(x, y, 1)[0])
    return out


def cmd_bench(args, manifest):
    grid = []
    for item in args.grid.split(","):
        try:
            n, m = (int(v) for v in item.split(":"))
        except ValueError:
            raise UsageError(f"grid point {item!r} is not N:m") from None
        if n % 2 or not 0 < m <= n:
            raise UsageError(f"grid point {item!r} needs even N and 0 < m <= N")
        if math.comb(n, m) > args.max_configs:
            raise UsageError(f"grid point {item!r} has {math.comb(n, m)} configurations, over --max-configs")
        grid.append((n, m))
    manifest.seeds["integrals"] = args.seed
    with manifest.timed("bench"):
        points = [bench_point(n, m, args.seed + i, args.repeats) for i, (n, m) in enumerate(grid)]
    slopes = loglog_slopes(points)
    payload = {"points": points, "slopes": {str(k): v for k, v in slopes.items()}}
    if args.out:
        _write(args.out, json.dumps(payload, indent=1) + "\n", manifest)
    lines = [f"N={p['n']:3d} m={p['m']} Q={p['qubits']:2d} raw={p['raw_measured']:9d} "
             f"analytic={p['raw_analytic']:9d} bound={p['raw_bound']:10d} merged={p['merged_terms']:7d} "
             f"{p['seconds']:.4f}s" for p in points]
    lines += [f"m={m}: log-log slope {s:.2f} (ceiling {2 * m + 1.5})" for m, s in slopes.items()]
    _emit(args, payload, "\n".join(lines))
    for p in points:
        if p["raw_measured"] != p["raw_analytic"]:
            raise NumericalCheckError(f"raw count {p['raw_measured']} != analytic {p['raw_analytic']} at N={p['n']}")
        if p["raw_measured"] > p["raw_bound"]:
            raise NumericalCheckError(f"raw count {p['raw_measured']} exceeds bound at N={p['n']}")
    for m, s in slopes.items():
        if s > 2 * m + 1.5:
            raise NumericalCheckError(f"timing slope {s:.2f} exceeds {2 * m + 1.5} for m={m}")


def cmd_fixtures(args, manifest):
    store = FixtureStore(args.fixtures)
    if args.action == "verify":
        bad = store.verify()
        _emit(args, {"root": str(store.root), "mismatched": bad},
              "all checksums match" if not bad else "\n".join(f"checksum mismatch: {n}" for n in bad))
        if bad:
            raise FixtureError(f"{len(bad)} fixture(s) failed checksum verification")
        return
    names = store.names()
    _emit(args, {"root": str(store.root), "fixtures": names}, "\n".join(names))


def cmd_replay(args, manifest):
    recorded = RunManifest.from_json(Path(args.manifest_file).read_text())
    return main(recorded.argv)


# ---------------------------------------------------------------------------
# parser


def _system_args(p):
    p.add_argument("--input", help="integral file (JSON or FCIDUMP)")
    p.add_argument("--fixture", help="fixture name from the shipped corpus")
    p.add_argument("--filter", help='configuration filter, e.g. "m=2;sz=1,1"')
    p.add_argument("--layout", choices=["blocked", "interleaved"], default="blocked")
    p.add_argument("--sign-order", help="comma-separated creation rank per bit")


def _opt_args(p):
    p.add_argument("--reps", type=int, default=2)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--restarts", type=int, default=3)


def _common_options(suppress):
    """Shared flags; the subcommand copy suppresses defaults so top-level values survive."""
    p = argparse.ArgumentParser(add_help=False)

    def default(value):
        return argparse.SUPPRESS if suppress else value

    p.add_argument("--json", action="store_true", default=default(False), help="machine-readable output")
    p.add_argument("--seed", type=int, default=default(0))
    p.add_argument("--threads", type=int, default=default(None), help="cap BLAS threads")
    p.add_argument("--fixtures", default=default(None),
                   help=f"fixture root (default ${ENV_VAR} or the shipped corpus)")
    p.add_argument("--manifest", default=default(None), help="run manifest path (default <out>.manifest.json)")
    return p


def build_parser():
    common = _common_options(suppress=True)
    ap = argparse.ArgumentParser(prog="qee", description="Qubit-efficient encoding toolkit.",
                                 parents=[_common_options(suppress=False)])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("configs", parents=[common], help="print the configuration-to-qubit mapping")
    _system_args(p)
    p.add_argument("--n-spin", type=int, help="spin-orbital count (no integrals needed)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_configs)

    p = sub.add_parser("encode", parents=[common], help="compile integrals to a Pauli operator")
    _system_args(p)
    p.add_argument("--encoding", choices=["qee", "jw"], default="qee")
    p.add_argument("--electronic-only", action="store_true", help="omit the constant energy shift")
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("diag", parents=[common], help="lowest eigenvalues of an operator")
    p.add_argument("--ham", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--expect", type=float, help="fail (exit 4) if the minimum differs from this")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("vqe", parents=[common], help="minimize the ansatz energy")
    p.add_argument("--ham", required=True)
    _opt_args(p)
    p.add_argument("--cnot-count", type=int)
    p.add_argument("--backend", default="exact", help="exact | shots:N | noisy:MODEL:N")
    p.add_argument("--out")
    p.set_defaults(func=cmd_vqe)

    p = sub.add_parser("scan", parents=[common], help="VQE over a fixture group")
    p.add_argument("--group", default="h2_631g")
    p.add_argument("--distances", help="comma-separated subset of distances")
    _opt_args(p)
    p.add_argument("--cnot-count", type=int)
    p.add_argument("--backend", default="exact")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("zne", parents=[common], help="zero-noise extrapolation over CNOT count")
    p.add_argument("--ham", required=True)
    p.add_argument("--noise", default="santiago", help="santiago or a noise-model JSON path")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--cnot-counts", default="6,12,18")
    p.add_argument("--mode", choices=["fixed-angles", "full-vqe"], default="fixed-angles")
    p.add_argument("--calibration-shots", type=int, help="simulate a full calibration instead of the tensor model")
    p.add_argument("--no-readout-mitigation", action="store_true")
    _opt_args(p)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_zne)

    p = sub.add_parser("report", parents=[common], help="qubit and term counts for a fixture group")
    p.add_argument("--group", default="survey")
    p.add_argument("--format", choices=["csv", "markdown"], default="csv")
    p.add_argument("--qubits-only", action="store_true")
    p.add_argument("--only", help="comma-separated fixture-name substrings")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("bench", parents=[common], help="raw term counts and encoding time on random integrals")
    p.add_argument("--grid", default="4:2,8:2,16:2")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--max-configs", type=int, default=5000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fixtures", parents=[common], help="list or verify the fixture corpus")
    p.add_argument("action", choices=["list", "verify"])
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("replay", parents=[common], help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return ap


INPUT_ERRORS = (OSError, IntegralError, ConfigSpaceError, FixtureError, PauliError, SimulatorError,
                VqeError, json.JSONDecodeError)
NUMERICAL_ERRORS = (NumericalCheckError, EncodingError, MitigationError, np.linalg.LinAlgError)


def _fail(args, code, exc):
    kind = {EXIT_USAGE: "usage", EXIT_INPUT: "input", EXIT_NUMERICAL: "numerical"}[code]
    if getattr(args, "json", False):
        print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc), "exit": code}),
              file=sys.stderr)
    else:
        print(f"qee: {kind} error: {exc}", file=sys.stderr)
    return code


def _thread_limit(n):
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    manifest = RunManifest(args.command, argv)
    manifest.seeds["global"] = args.seed
    try:
        with _thread_limit(args.threads):
            status = args.func(args, manifest)
    except UsageError as exc:
        return _fail(args, EXIT_USAGE, exc)
    except NUMERICAL_ERRORS as exc:
        code = _fail(args, EXIT_NUMERICAL, exc)
        _write_manifest(args, manifest)
        return code
    except INPUT_ERRORS as exc:
        return _fail(args, EXIT_INPUT, exc)
    except ValueError as exc:
        return _fail(args, EXIT_INPUT, exc)
    _write_manifest(args, manifest)
    return status or 0


def _write_manifest(args, manifest):
    target = args.manifest or (f"{args.out}.manifest.json" if getattr(args, "out", None) else None)
    if target and args.command != "replay":
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(manifest.to_json())


if __name__ == "__main__":
    sys.exit(main())
