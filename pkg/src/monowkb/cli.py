"""monowkb command-line interface.

Every subcommand writes a CSV file and a JSON sidecar (with the full
configuration echo) into ``--out`` and prints either the JSON summary or the
CSV to stdout, per ``--format``.
"""
import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import classical as cl
from .bundle import SampledSection, write_sections_csv
from .compare import convergence_sweep, dumps, run_compare, spectrum_table, u0_exponent_report
from .errors import DegenerateTorusError, DomainError, NumericalFailure
from .exact import HarmonicLabel, harmonic_section, normalization_table
from .wkb import QuantumNumbers, oscillatory_domain, wkb_section

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_DEGENERATE = 0, 2, 3, 4


def _theta_grid(n):
    # cell midpoints keep every node off the poles
    return math.pi * (np.arange(n) + 0.5) / n


def _table_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def _sections_csv(sampled):
    buf = io.StringIO()
    write_sections_csv(buf, sampled)
    return buf.getvalue()


def cmd_spectrum(a):
    rows = spectrum_table(a.N, a.j_max)
    cols = ["N", "j", "E", "m", "E_hat", "m_hat"]
    summary = {"rows": rows, "all_gaps_quarter": all(r["E_hat"] - r["E"] == Fraction(1, 4) for r in rows),
               "multiplicities_match": all(r["m"] == r["m_hat"] for r in rows)}
    return f"spectrum_N{a.N}", _table_csv(rows, cols), summary


def cmd_exact(a):
    lab = HarmonicLabel(a.N, a.j, a.k)
    sec = harmonic_section(lab)
    theta = _theta_grid(a.grid)
    sampled = sec.sample(theta, a.chart)
    table = [r for r in normalization_table(a.N, a.j) if r["N"] == a.N and r["j"] == a.j and r["k"] == a.k]
    summary = {"label": [a.N, a.j, a.k], "chart": a.chart, "fourier_index": sampled.m,
               "printed_norm": table[0]["printed_norm"], "printed_constant_ok": table[0]["ok"],
               "corrected_norm": table[0]["corrected_norm"]}
    return f"exact_N{a.N}_j{a.j}_k{a.k}_{a.chart}", _sections_csv([sampled]), summary


def cmd_wkb(a):
    qn = QuantumNumbers(a.N, a.j, a.k)
    ws = wkb_section(qn)
    t = ws.torus
    form = a.form
    if form == "auto":
        form = "osc" if ws.degenerate else "airy"
    if form == "airy" and ws.degenerate:
        raise DegenerateTorusError(f"Airy form requested on the pole-touching torus of {qn}")
    theta = _theta_grid(a.grid)
    if form == "osc":
        lo, hi = oscillatory_domain(a.N, t)
        theta = theta[(theta > lo) & (theta < hi)]
        values = ws.oscillatory_profile(theta)
    else:
        values = ws.uniform_profile(theta, a.extension)
    sampled = SampledSection(N=a.N, m=ws.index(a.chart), chart=a.chart, theta=theta,
                             values=np.asarray(values, dtype=complex))
    summary = {"E": qn.E, "P": qn.P, "E_hat": qn.E_hat, "u0": ws.u0, "theta_min": t.theta_min,
               "theta_max": t.theta_max, "end_kinds": [t.end_kind_min, t.end_kind_max],
               "degenerate": ws.degenerate, "form": form, "extension": a.extension, "n_points": int(len(theta))}
    return f"wkb_N{a.N}_j{a.j}_k{a.k}_{a.chart}_{form}", _sections_csv([sampled]), summary


_REPORT_COLS = ["label", "E_exact", "E_hat", "gap", "overlap", "overlap_defect", "rel_residual_wkb",
                "norm_wkb", "degenerate", "u0_used", "u0_paper_ratio", "grid_nodes", "extension"]


def cmd_compare(a):
    rep = run_compare(a.N, a.j, a.k, a.grid, a.extension)
    d = rep.to_dict()
    row = dict(d, label=" ".join(map(str, rep.label)))
    return f"compare_N{a.N}_j{a.j}_k{a.k}", _table_csv([row], _REPORT_COLS), d


_SWEEP_COLS = ["N", "k", "skipped", "overlap_defect", "overlap_defect_ratio", "norm_wkb", "norm_err",
               "norm_err_ratio", "rel_residual_wkb", "rel_residual_wkb_ratio", "u0_used", "u0_paper_ratio",
               "degenerate", "reason"]


def cmd_sweep(a):
    k_rule = a.k_rule if a.k_rule == "half" else int(a.k_rule)
    rows = convergence_sweep(a.j, k_rule, a.N_list, a.grid, a.extension, a.workers)
    summary = {"rows": rows}
    if any(not r["skipped"] for r in rows):
        summary["u0_exponent"] = u0_exponent_report(rows)
    tag = "-".join(map(str, sorted(a.N_list)))
    return f"sweep_j{a.j}_k{a.k_rule}_N{tag}", _table_csv(rows, _SWEEP_COLS), summary


def cmd_flow(a):
    t = cl.make_torus(a.E, a.P)
    theta0 = t.midpoint if a.theta0 is None else a.theta0
    start = cl.torus_state(t, theta0, 0.0, a.branch)
    t_eval = np.linspace(0.0, a.T, a.samples)
    traj = cl.integrate_flow(start, T=a.T, tol=a.tol, t_eval=t_eval)
    rows = [{"t": float(tt), "theta": float(s[0]), "phi": float(s[1]), "p_theta": float(s[2]),
             "p_phi": float(s[3]), "I1": float(i1), "I2": float(i2)}
            for tt, s, i1, i2 in zip(traj.times, traj.states, traj.I1, traj.I2)]
    summary = {"torus": t.as_dict(), "drift_I1": traj.drift_I1, "drift_I2": traj.drift_I2,
               "theta_period_exact": cl.theta_period_exact(t)}
    cols = ["t", "theta", "phi", "p_theta", "p_phi", "I1", "I2"]
    return f"flow_E{a.E:g}_P{a.P:g}", _table_csv(rows, cols), summary


def cmd_maslov(a):
    t = cl.make_torus(a.E, a.P)
    est = cl.maslov_estimates(t, a.fold_end, tuple(a.eps_list))
    rows = [{"eps": e, "raw_estimate": r} for e, r in zip(est["eps"], est["raw_estimates"])]
    return f"maslov_E{a.E:g}_P{a.P:g}_{a.fold_end}", _table_csv(rows, ["eps", "raw_estimate"]), est


COMMANDS = {"spectrum": cmd_spectrum, "exact": cmd_exact, "wkb": cmd_wkb, "compare": cmd_compare,
            "sweep": cmd_sweep, "flow": cmd_flow, "maslov": cmd_maslov}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the command-line flags")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--format", choices=("csv", "json"), default="json", help="what to print to stdout")

    p = argparse.ArgumentParser(prog="monowkb", description="Monopole harmonics and their WKB approximations.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="exact and quasi-classical spectrum table")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--j-max", dest="j_max", type=int, default=5)

    for name, helptext in (("exact", "sample an exact monopole harmonic"), ("wkb", "sample a WKB section"),
                           ("compare", "compare WKB with the exact harmonic")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--N", type=int, required=True)
        s.add_argument("--j", type=int, required=True)
        s.add_argument("--k", type=int, required=True)
        s.add_argument("--grid", type=int, default=400)
        if name != "compare":
            s.add_argument("--chart", choices=("u1", "u2"), default="u1")
        if name == "wkb":
            s.add_argument("--form", choices=("osc", "airy", "auto"), default="auto")
        if name != "exact":
            s.add_argument("--extension", choices=("linear", "langer"), default="langer")

    s = sub.add_parser("sweep", parents=[common], help="convergence sweep along a family")
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--k-rule", dest="k_rule", default="half", help="'half' (k = N/2) or a fixed integer k")
    s.add_argument("--N-list", dest="N_list", type=int, nargs="+", default=[4, 8, 16, 32])
    s.add_argument("--grid", type=int, default=400)
    s.add_argument("--extension", choices=("linear", "langer"), default="langer")
    s.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("flow", parents=[common], help="integrate the magnetic geodesic flow")
    s.add_argument("--E", type=float, required=True)
    s.add_argument("--P", type=float, required=True)
    s.add_argument("--theta0", type=float, default=None)
    s.add_argument("--branch", type=int, choices=(1, -1), default=1)
    s.add_argument("--T", type=float, default=50.0)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--samples", type=int, default=501)

    s = sub.add_parser("maslov", parents=[common], help="numerical Maslov index through a fold")
    s.add_argument("--E", type=float, required=True)
    s.add_argument("--P", type=float, required=True)
    s.add_argument("--fold-end", dest="fold_end", choices=("min", "max"), default="min")
    s.add_argument("--eps-list", dest="eps_list", type=float, nargs="+", default=[1e-2, 5e-3, 2.5e-3])
    return p


def _subparser(parser, name):
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices.get(name)
    return None


def parse_args(argv):
    """Parse argv; a ``--config`` JSON file supplies defaults that explicit flags override."""
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((tok for tok in argv if tok in COMMANDS), None)
    if known.config and command:
        try:
            with open(known.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {known.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config must be a JSON object")
        sub = _subparser(parser, command)
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        dests = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - dests)
        if unknown:
            sub.error(f"unknown config keys: {unknown}")
        sub.set_defaults(**cfg)
        for act in sub._actions:
            if act.dest in cfg:
                act.required = False
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        stem, csv_text, summary = COMMANDS[args.command](args)
    except DegenerateTorusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    config = {k: v for k, v in sorted(vars(args).items())}
    payload = {"command": args.command, "config": config, "result": summary}
    text = dumps(payload)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.csv").write_text(csv_text)
    (out / f"{stem}.json").write_text(text + "\n")
    print(csv_text if args.format == "csv" else text, end="" if args.format == "csv" else "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
