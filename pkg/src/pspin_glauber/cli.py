"""Command-line front end.

Subcommands dispatch to the analysis modules and emit CSV, JSON or SVG.
All randomness flows through --seed, output ordering is deterministic, and
numeric flags accept simple rationals ("1/3") so threshold parameters are
representable to the closest double.

Exit codes: 0 success, 1 domain or I/O error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dynamics, mixing_analysis, phase_geometry, svg
from .potential import DomainError, ModelParams, drift_field

SCHEMA_VERSION = "1"
JOBS_ENV = "PSPIN_GLAUBER_JOBS"


def real(text: str) -> float:
    """Parse a decimal or a simple rational like '1/3'."""
    s = text.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return float(num) / float(den)
    return float(s)


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _order_p(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"p must be an integer >= 2, got {v}")
    return v


def _positive_real(text: str) -> float:
    v = real(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _eps_real(text: str) -> float:
    v = real(text)
    if not 0.0 < v < 0.5:
        raise argparse.ArgumentTypeError(f"eps must lie in (0, 1/2), got {v}")
    return v


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _write(out_path: str, payload: str) -> None:
    if out_path == "-":
        sys.stdout.write(payload)
        return
    try:
        with open(out_path, "w") as fh:
            fh.write(payload)
    except OSError as exc:
        raise RuntimeError(f"cannot write {out_path}: {exc}") from exc


def _json_envelope(report_kind: str, payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "report": report_kind,
           "payload": payload}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv_envelope(body: str) -> str:
    return f"# schema_version={SCHEMA_VERSION}\n{body}"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _params(args) -> ModelParams:
    return ModelParams(args.p, args.beta, args.h)


def _jobs(args) -> int:
    if args.jobs is not None:
        return args.jobs
    return int(os.environ.get(JOBS_ENV, "1"))


# -- subcommand implementations ----------------------------------------------


def _cmd_classify(args) -> None:
    report = phase_geometry.classify_point(args.p, args.beta, args.h,
                                           with_margin=args.margins)
    _write(args.out, _json_envelope("PhaseReport", report.to_dict()))


def _cmd_curves(args) -> None:
    thr = phase_geometry.thresholds(args.p)
    betas = phase_geometry._axis(args.beta_min, args.beta_max, args.beta_step)
    samples = [phase_geometry.boundary_curves(args.p, float(b), thr) for b in betas]
    if args.svg:
        series = []
        for key in ("U", "L", "C"):
            pts = [(s.beta, getattr(s, key)) for s in samples
                   if getattr(s, key) is not None]
            if pts:
                series.append((key, pts))
        _write(args.out, svg.emit_svg(series, x_label="beta", y_label="h"))
    else:
        _write(args.out, _csv_envelope(phase_geometry.curves_csv(samples)))


def _scan_column_job(job):
    p, beta, h_axis = job
    return phase_geometry.scan_column(p, beta, np.asarray(h_axis))


def _cmd_phase_diagram(args) -> None:
    spec = phase_geometry.GridSpec(
        p=args.p, beta_min=args.beta_min, beta_max=args.beta_max,
        beta_step=args.beta_step, h_min=args.h_min, h_max=args.h_max,
        h_step=args.h_step, max_cells=args.max_cells,
    )
    jobs = _jobs(args)
    beta_axis = phase_geometry._axis(spec.beta_min, spec.beta_max, spec.beta_step)
    h_axis = phase_geometry._axis(spec.h_min, spec.h_max, spec.h_step)
    if len(beta_axis) * len(h_axis) > spec.max_cells:
        raise DomainError(
            f"grid needs {len(beta_axis) * len(h_axis)} cells, budget is "
            f"{spec.max_cells}; raise --max-cells"
        )
    if jobs > 1:
        work = [(spec.p, float(b), h_axis.tolist()) for b in beta_axis]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            columns = list(pool.map(_scan_column_job, work))
        grid = phase_geometry.scan_grid(spec, columns=columns)
    else:
        grid = phase_geometry.scan_grid(spec)
    _write(args.out_prefix + ".grid.csv",
           _csv_envelope(phase_geometry.grid_csv(grid)))
    _write(args.out_prefix + ".curves.csv",
           _csv_envelope(phase_geometry.curves_csv(grid)))
    sys.stdout.write(f"wrote {args.out_prefix}.grid.csv and "
                     f"{args.out_prefix}.curves.csv\n")


def _mode(name: str) -> str:
    return {"exact": mixing_analysis.EXACT, "mc": mixing_analysis.MONTE_CARLO}[name]


def _cmd_mix(args) -> None:
    report = mixing_analysis.mixing_time(
        _params(args), args.n, args.eps, args.cap, mode=_mode(args.method),
        seed=args.seed, replicas=args.replicas,
    )
    _write(args.out, _json_envelope("MixingReport", report.to_dict()))


def _cmd_restricted_mix(args) -> None:
    report = mixing_analysis.restricted_mixing_time(
        _params(args), args.n, args.eps, args.cap, mode=_mode(args.method),
        seed=args.seed, replicas=args.replicas,
    )
    _write(args.out, _json_envelope("MixingReport", report.to_dict()))


def _sweep_job(job):
    (p, beta, h, n, eps, cap, method, seed, restricted) = job
    params = ModelParams(p, beta, h)
    if restricted:
        rep = mixing_analysis.restricted_mixing_time(params, n, eps, cap,
                                                     mode=method, seed=seed)
    else:
        rep = mixing_analysis.mixing_time(params, n, eps, cap, mode=method,
                                          seed=seed)
    return n, rep


def _cmd_mix_sweep(args) -> None:
    jobs = _jobs(args)
    work = [(args.p, args.beta, args.h, n, args.eps, args.cap,
             _mode(args.method), args.seed, args.restricted)
            for n in sorted(args.n_list)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_job, work))
    else:
        results = [_sweep_job(j) for j in work]
    if args.svg:
        measured = [(n, float(rep.t_mix)) for n, rep in results
                    if rep.t_mix is not None]
        if not measured:
            raise DomainError("all sweep points capped; nothing to plot")
        series = [("t_mix", measured)]
        if args.reference == "nlogn":
            series.append(("10 N log N",
                           [(n, 10.0 * n * math.log(n)) for n, _ in measured]))
        elif args.reference == "n3/2":
            series.append(("4 N^(3/2)",
                           [(n, 4.0 * n**1.5) for n, _ in measured]))
        _write(args.out, svg.emit_svg(series, log_x=True, log_y=True,
                                      x_label="N", y_label="t_mix"))
        return
    lines = ["N,t_mix,capped,method"]
    for n, rep in results:
        t = "" if rep.t_mix is None else str(rep.t_mix)
        lines.append(f"{n},{t},{str(rep.capped).lower()},{rep.method}")
    _write(args.out, _csv_envelope("\n".join(lines) + "\n"))


def _cmd_sample(args) -> None:
    spec = dynamics.MetastableSpec(
        params=_params(args), N=args.n, epsilon=args.epsilon,
        burn_steps=args.burn, seed=args.seed,
        require_coexistence=args.require_coexistence,
    )
    _, report = dynamics.metastable_sample(spec)
    _write(args.out, _json_envelope("SamplerReport", report.to_dict()))


def _cmd_coupling(args) -> None:
    spec = dynamics.CouplingSpec(
        params=_params(args), N=args.n, start_x="all_plus",
        start_y="all_minus", steps=args.steps, seed=args.seed,
        record_every=args.record_every,
    )
    trace = dynamics.run_coupling(spec)
    _write(args.out, _csv_envelope(dynamics.coupling_csv(trace)))


def _cmd_bottleneck(args) -> None:
    report = mixing_analysis.bottleneck(_params(args), args.n)
    _write(args.out, _json_envelope("BottleneckReport", report.to_dict()))


def _cmd_drift(args) -> None:
    params = _params(args)
    if args.c is not None:
        cs = [args.c]
    else:
        cs = np.linspace(-1.0, 1.0, args.c_grid).tolist()
    lines = ["c,drift"]
    for c in cs:
        lines.append(f"{_fmt(c)},{_fmt(drift_field(params, args.n, c))}")
    _write(args.out, _csv_envelope("\n".join(lines) + "\n"))


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pspin-glauber",
        description="Heat-bath dynamics, mixing times and phase geometry "
                    "of the p-spin Curie-Weiss model",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_model(sp, with_n=True):
        sp.add_argument("--p", type=_order_p, required=True,
                        help="tensor order (integer >= 2)")
        sp.add_argument("--beta", type=_positive_real, required=True,
                        help="inverse temperature (decimals or '1/3')")
        sp.add_argument("--h", type=real, required=True, help="external field")
        if with_n:
            sp.add_argument("--n", type=_positive_int, required=True,
                            help="number of spins")

    def add_common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="-", help="output path ('-' = stdout)")

    sp = sub.add_parser("classify", help="phase region of a (beta, h) point")
    add_model(sp, with_n=False)
    sp.add_argument("--margins", action="store_true",
                    help="include distance to the nearest boundary curve")
    add_common(sp)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("curves", help="sample the U/L/C boundary curves")
    sp.add_argument("--p", type=_order_p, required=True)
    sp.add_argument("--beta-min", type=real, required=True)
    sp.add_argument("--beta-max", type=real, required=True)
    sp.add_argument("--beta-step", type=real, default=0.005)
    sp.add_argument("--svg", action="store_true", help="emit an SVG plot")
    add_common(sp)
    sp.set_defaults(func=_cmd_curves)

    sp = sub.add_parser("phase-diagram", help="full region grid + curves")
    sp.add_argument("--p", type=_order_p, required=True)
    sp.add_argument("--beta-min", type=real, required=True)
    sp.add_argument("--beta-max", type=real, required=True)
    sp.add_argument("--beta-step", type=real, default=0.005)
    sp.add_argument("--h-min", type=real, required=True)
    sp.add_argument("--h-max", type=real, required=True)
    sp.add_argument("--h-step", type=real, default=0.005)
    sp.add_argument("--max-cells", type=int, default=4_000_000)
    sp.add_argument("--jobs", type=_positive_int, default=None,
                    help=f"worker processes (default ${JOBS_ENV} or 1)")
    sp.add_argument("--out-prefix", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_phase_diagram)

    for name, fn, restricted in (("mix", _cmd_mix, False),
                                 ("restricted-mix", _cmd_restricted_mix, True)):
        sp = sub.add_parser(name, help=f"{'restricted ' if restricted else ''}"
                                       "mixing time at level eps")
        add_model(sp)
        sp.add_argument("--eps", type=_eps_real, default=0.35)
        sp.add_argument("--cap", type=_positive_int, default=10_000)
        sp.add_argument("--method", choices=("exact", "mc"), default="exact")
        sp.add_argument("--replicas", type=_positive_int, default=10_000)
        add_common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("mix-sweep", help="mixing time across N values")
    sp.add_argument("--p", type=_order_p, required=True)
    sp.add_argument("--beta", type=_positive_real, required=True)
    sp.add_argument("--h", type=real, required=True)
    sp.add_argument("--n-list", type=_int_list, required=True,
                    help="comma-separated N values")
    sp.add_argument("--eps", type=_eps_real, default=0.35)
    sp.add_argument("--cap", type=_positive_int, default=10_000)
    sp.add_argument("--method", choices=("exact", "mc"), default="exact")
    sp.add_argument("--restricted", action="store_true")
    sp.add_argument("--svg", action="store_true",
                    help="emit a log-log SVG plot instead of CSV")
    sp.add_argument("--reference", choices=("none", "nlogn", "n3/2"),
                    default="none", help="reference curve for --svg")
    sp.add_argument("--jobs", type=_positive_int, default=None)
    add_common(sp)
    sp.set_defaults(func=_cmd_mix_sweep)

    sp = sub.add_parser("sample", help="metastable window sampler")
    add_model(sp)
    sp.add_argument("--epsilon", type=real, default=None,
                    help="window half-width (default: automatic)")
    sp.add_argument("--burn", type=_positive_int, default=None,
                    help="burn-in steps per window (default: 10 N log N)")
    sp.add_argument("--require-coexistence", action="store_true")
    add_common(sp)
    sp.set_defaults(func=_cmd_sample)

    sp = sub.add_parser("coupling", help="coupled chains from extreme starts")
    add_model(sp)
    sp.add_argument("--steps", type=_positive_int, required=True)
    sp.add_argument("--record-every", type=_positive_int, default=1)
    add_common(sp)
    sp.set_defaults(func=_cmd_coupling)

    sp = sub.add_parser("bottleneck", help="conductance cut scan")
    add_model(sp)
    add_common(sp)
    sp.set_defaults(func=_cmd_bottleneck)

    sp = sub.add_parser("drift", help="expected one-step magnetization drift")
    add_model(sp)
    sp.add_argument("--c", type=real, default=None,
                    help="single magnetization (default: a grid)")
    sp.add_argument("--c-grid", type=_positive_int, default=201)
    add_common(sp)
    sp.set_defaults(func=_cmd_drift)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except (DomainError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
