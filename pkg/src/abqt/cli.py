"""Command-line front end: ``abqt {run, sweep, tables, verify, circuit}``.

Exit codes: 0 success, 1 invalid input, 2 verification failure, 3 internal
invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .circuit import evaluate_circuit, parse_circuit
from .config import ScenarioConfig
from .errors import (ABQTError, CircuitSyntaxError, ConfigError, CutoffTooSmallError, DegenerateStateError,
                     HeterogeneousClassError, PreconditionError)
from .formulas import PRINTED_TABLE_OPS, parse_printed_ops
from .measurement import OutcomeClass
from .protocol import (CASES, AliceInfo, BobInfo, CaseId, Parity, ROW_PARITIES, assemble_and_mix,
                       average_fidelity, enumerate_outcomes, factor_heralded, row_fidelities,
                       row_outcome, table_outcomes, table_rows, total_success_probability)

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_INVARIANT = 0, 1, 2, 3
OUTPUT_DIR_ENV = "ABQT_OUTPUT_DIR"
ORACLE_MAX_ALPHA = 1.5
COMPLETENESS_TOL = 1e-10

_CLASS_LETTER = {OutcomeClass.ZERO: "0", OutcomeClass.EVEN_NONZERO: "E", OutcomeClass.ODD: "O"}


class InvariantBreach(ABQTError):
    """An engine self-check failed; this indicates a bug rather than bad input."""


def fmt(x) -> str:
    """Locale-independent 17-significant-digit float text."""
    return format(float(x), ".17g")


def pattern_text(pattern) -> str:
    return "".join(_CLASS_LETTER[c] for c in pattern)


# ---- rendering -------------------------------------------------------------

def render(records, columns, fmt_name, title=None) -> str:
    if fmt_name == "json":
        return json.dumps(records if title is None else {"title": title, "rows": records},
                          indent=2, sort_keys=False) + "\n"
    if fmt_name == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([fmt(rec[c]) if isinstance(rec[c], float) else rec[c] for c in columns])
        return buf.getvalue()
    lines = [f"### {title}", ""] if title else []
    lines.append("| " + " | ".join(columns) + " |")
    lines.append("|" + "---|" * len(columns))
    for rec in records:
        cells = [f"{rec[c]:.6g}" if isinstance(rec[c], float) else str(rec[c]).replace("|", "\\|")
                 for c in columns]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit(text, args, command, fmt_name):
    path = args.output
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        ext = {"csv": "csv", "json": "json", "markdown": "md"}[fmt_name]
        path = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{command}.{ext}")
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---- run -------------------------------------------------------------------

def run_report(config: ScenarioConfig):
    alice, bob, spec = config.alice(), config.bob(), config.channel()
    outcomes = enumerate_outcomes(alice, bob, spec, config.displacement_divisor)
    summary = total_success_probability(alice, bob, spec, outcomes)
    if abs(summary.total - 1.0) > COMPLETENESS_TOL:
        raise InvariantBreach(f"outcome probabilities sum to {summary.total!r}, not 1")
    f_av = average_fidelity(alice, bob, spec, outcomes=outcomes)
    rows = []
    for o in table_rows(outcomes):
        rows.append({"pattern": pattern_text(o.pattern), "case": o.case.name, "row": o.row,
                     "probability": float(o.probability), "f_ab": float(o.f_ab), "f_ba": float(o.f_ba),
                     "class_ab": o.class_ab, "class_ba": o.class_ba})
    totals = {"faithful_total": summary.faithful_total, "table_total": summary.table_total,
              "ambiguous_mass": float(summary.ambiguous_mass), "f_av_ab": f_av[0], "f_av_ba": f_av[1]}
    return rows, totals


RUN_COLUMNS = ["pattern", "case", "row", "probability", "f_ab", "f_ba", "class_ab", "class_ba"]


def cmd_run(config, args):
    rows, totals = run_report(config)
    if config.format == "json":
        text = json.dumps({"rows": rows, "summary": totals}, indent=2) + "\n"
    elif config.format == "csv":
        text = render(rows, RUN_COLUMNS, "csv")
        text += "".join(f"# {k},{fmt(v)}\n" for k, v in totals.items())
    else:
        text = render(rows, RUN_COLUMNS, "markdown", f"alpha = {config.alpha:g}")
        text += "\n" + "\n".join(f"- {k}: {v:.12g}" for k, v in totals.items()) + "\n"
    emit(text, args, "run", config.format)
    return EXIT_OK


# ---- sweep -----------------------------------------------------------------

SWEEP_COLUMNS = ["theta", "phi", "theta1", "alpha", "quantity", "value"]
_SURFACE_ROWS = {"F1_AB": 1, "F3_AB": 3, "F4_AB": 4}


def _surface_chunk(task):
    """All (phi) points for one (alpha, theta); module-level so it can be pickled."""
    alpha, theta, phis, theta1, variants, divisor, quantities = task
    bob = BobInfo.from_angle(theta1)
    out = []
    for phi in phis:
        alice = AliceInfo.from_angles(theta, phi)
        config = ScenarioConfig(alpha=alpha, variants=list(variants))
        spec = config.channel()
        mixed = assemble_and_mix(alice, bob, spec)
        values = {q: row_fidelities(alice, bob, spec, CaseId.I, _SURFACE_ROWS[q], divisor, mixed)[0]
                  for q in quantities}
        out.append((phi, values))
    return out


def _curve_point(task):
    alpha, theta, phi, theta1, variants, divisor = task
    alice, bob = AliceInfo.from_angles(theta, phi), BobInfo.from_angle(theta1)
    spec = ScenarioConfig(alpha=alpha, variants=list(variants)).channel()
    outcomes = table_outcomes(alice, bob, spec, divisor)
    f_av = average_fidelity(alice, bob, spec, outcomes=outcomes)
    row = {o.row: o for o in outcomes if o.case is CaseId.I}
    return {"Fav_AB": f_av[0], "Fav_BA": f_av[1], "F1_AB": row[1].f_ab, "F1_BA": row[1].f_ba,
            "F3_AB": row[3].f_ab, "F4_AB": row[4].f_ab}


def _pmap(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def sweep_records(config: ScenarioConfig, what="all"):
    """Long-format records in a fixed order: surfaces (quantity, alpha, theta, phi), then curves."""
    records = []
    div, variants, theta1 = config.displacement_divisor, tuple(config.variants), config.theta1
    if what in ("all", "surfaces"):
        thetas, phis = config.grid("theta_grid"), config.grid("phi_grid")
        quantities = tuple(config.surface_quantities)
        tasks = [(a, t, phis, theta1, variants, div, quantities)
                 for a in config.grid("surface_alphas") for t in thetas]
        results = _pmap(_surface_chunk, tasks, config.jobs)
        for q in quantities:
            for task, chunk in zip(tasks, results):
                for phi, values in chunk:
                    records.append({"theta": task[1], "phi": phi, "theta1": theta1, "alpha": task[0],
                                    "quantity": q, "value": float(values[q])})
    if what in ("all", "curves"):
        alphas = config.grid("curve_alphas")
        tasks = [(a, config.theta, config.phi, theta1, variants, div) for a in alphas]
        results = _pmap(_curve_point, tasks, config.jobs)
        for q in ("Fav_AB", "Fav_BA", "F1_AB", "F1_BA", "F3_AB", "F4_AB"):
            for a, values in zip(alphas, results):
                records.append({"theta": config.theta, "phi": config.phi, "theta1": theta1, "alpha": a,
                                "quantity": q, "value": float(values[q])})
    return records


def cmd_sweep(config, args):
    records = sweep_records(config, args.what)
    emit(render(records, SWEEP_COLUMNS, config.format), args, "sweep", config.format)
    return EXIT_OK


# ---- tables ----------------------------------------------------------------

_TRACER_A = AliceInfo((1, 2, 3, 4))
_TRACER_B = BobInfo((1, 2))


def _factor_expression(state, alpha, names, modes_tag):
    """Write a factor as ``±X_i|±α,...⟩`` terms by reading off tracer coefficient ratios."""
    coeffs = state.coeffs
    ref = coeffs[int(min(range(len(coeffs)), key=lambda k: abs(coeffs[k])))]
    terms = []
    for c, labels in zip(coeffs, state.labels):
        ratio = c / ref
        index = int(round(abs(ratio))) - 1
        sign = "-" if ratio.real < 0 else "+"
        ket = ",".join(("α" if lab.real > 0 else "-α") for lab in (labels / alpha))
        terms.append((index, sign, f"{names[index]}|{ket}⟩"))
    terms.sort()
    body = " ".join(f"{s} {t}" for _, s, t in terms).lstrip("+ ")
    return f"({body}){modes_tag}"


def heralded_expression(case, parities, alpha=2.0) -> str:
    out = row_outcome(_TRACER_A, _TRACER_B, ScenarioConfig(alpha=alpha).channel(), case,
                      ROW_PARITIES.index(tuple(parities)) + 1)
    bob_part, alice_part = factor_heralded(out.heralded)
    left = _factor_expression(bob_part, alpha, ["A_0", "A_1", "A_2", "A_3"], "_{4,5}")
    right = _factor_expression(alice_part, alpha, ["B_0", "B_1"], "_6")
    return f"N_AA'{left} ⊗ N_B{right}"


TABLE_COLUMNS = ["case", "row", "n7/n8", "n9/n10", "n11/n12", "heralded", "alice", "bob", "tag",
                 "printed_ops_match"]


def table_records(config: ScenarioConfig):
    alice, bob, spec = config.alice(), config.bob(), config.channel()
    outcomes = table_outcomes(alice, bob, spec, config.displacement_divisor)
    records = []
    for o in outcomes:
        printed = parse_printed_ops(PRINTED_TABLE_OPS[o.case][o.row - 1])
        records.append({
            "case": o.case.name, "row": o.row,
            "n7/n8": o.parities[0].value, "n9/n10": o.parities[1].value, "n11/n12": o.parities[2].value,
            "heralded": heralded_expression(o.case, o.parities),
            "alice": o.plan.describe_alice(), "bob": o.plan.describe_bob(), "tag": o.tag,
            "printed_ops_match": "yes" if printed == o.plan.signature() else "no",
        })
    return records


def cmd_tables(config, args):
    records = table_records(config)
    if config.format == "markdown":
        text = "\n".join(render([r for r in records if r["case"] == c.name], TABLE_COLUMNS[2:],
                                "markdown", f"Table {c.value} (Case {c.name})") for c in CASES)
    else:
        text = render(records, TABLE_COLUMNS, config.format)
    emit(text, args, "tables", config.format)
    return EXIT_OK


# ---- verify ----------------------------------------------------------------

def cmd_verify(config, args):
    from .verify import verify_protocol
    if config.alpha > ORACLE_MAX_ALPHA:
        raise ConfigError("alpha", f"the number-basis oracle is limited to alpha <= {ORACLE_MAX_ALPHA}")
    report = verify_protocol(config.alice(), config.bob(), config.channel(),
                             cutoff=config.cutoff, eps=config.eps)
    records = [{"quantity": k, "max_deviation": float(v), "status": "PASS" if v < report.tolerance else "FAIL"}
               for k, v in report.deviations.items()]
    text = render(records, ["quantity", "max_deviation", "status"], config.format,
                  f"oracle check, alpha = {config.alpha:g}, cutoff = {report.cutoff}")
    if config.format != "json":
        text += f"{'PASS' if report.passed else 'FAIL'} (tolerance {report.tolerance:g})\n"
    emit(text, args, "verify", config.format)
    return EXIT_OK if report.passed else EXIT_VERIFY


# ---- circuit ---------------------------------------------------------------

def cmd_circuit(config, args):
    try:
        with open(args.file, "rb") as fh:
            source = fh.read()
    except OSError as exc:
        raise ConfigError("file", f"cannot read {args.file}: {exc.strerror}") from None
    program = parse_circuit(source)
    try:
        result = evaluate_circuit(program, config.alpha)
    except (PreconditionError, DegenerateStateError, HeterogeneousClassError) as exc:
        raise ConfigError("circuit", str(exc)) from None
    record = {"modes": " ".join(map(str, result.modes)), "probability": float(result.probability),
              "target_fidelity": "" if result.target_fidelity is None else float(result.target_fidelity)}
    emit(render([record], ["modes", "probability", "target_fidelity"], config.format), args, "circuit",
         config.format)
    return EXIT_OK


# ---- entry point -----------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="abqt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--alpha", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--phi", type=float)
    common.add_argument("--theta1", type=float)
    common.add_argument("--displacement-divisor", dest="displacement_divisor", type=float,
                        help="correction amplitude is i*pi/(divisor*alpha); default 2")
    common.add_argument("--format", choices=["csv", "json", "markdown"])
    common.add_argument("--jobs", type=int)
    common.add_argument("-o", "--output", help="output path, '-' for stdout")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="all detection outcomes for one scenario")
    sweep = sub.add_parser("sweep", parents=[common], help="fidelity surfaces and alpha curves")
    sweep.add_argument("--what", choices=["all", "surfaces", "curves"], default="all")
    sweep.add_argument("--points", type=int, help="points per angle axis over [0, 2pi]")
    sub.add_parser("tables", parents=[common], help="the 64 correction-table rows")
    verify = sub.add_parser("verify", parents=[common], help="cross-check against the Fock oracle")
    verify.add_argument("--cutoff", type=int)
    verify.add_argument("--eps", type=float)
    circuit = sub.add_parser("circuit", parents=[common], help="parse and evaluate a circuit file")
    circuit.add_argument("file")
    return parser


_OVERRIDES = ("alpha", "theta", "phi", "theta1", "displacement_divisor", "format", "jobs", "cutoff", "eps")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
        if getattr(args, "points", None) is not None:
            grid = {"start": 0.0, "stop": 2 * math.pi, "num": args.points}
            overrides.update(theta_grid=grid, phi_grid=grid)
        config = ScenarioConfig.load(args.config, overrides)
        handler = {"run": cmd_run, "sweep": cmd_sweep, "tables": cmd_tables,
                   "verify": cmd_verify, "circuit": cmd_circuit}[args.command]
        return handler(config, args)
    except CutoffTooSmallError as exc:
        print(f"error: {exc} (suggested cutoff: {exc.suggested_cutoff})", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, CircuitSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ABQTError as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
