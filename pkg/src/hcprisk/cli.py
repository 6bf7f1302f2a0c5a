"""Command-line front end.

Exit codes: 0 success, 2 input parse error, 3 domain/config error,
4 runtime model error.  Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import bayesnet, montecarlo, occupational, population, sensitivity, transmission
from .errors import ConfigurationError, InputParseError, RiskError, SchemaError
from .individual import individual_risk
from .ingest import parse_time, read_contacts, read_windows

log = logging.getLogger("hcprisk")


def _bundled(name: str) -> Path:
    return Path(str(resources.files("hcprisk") / "data" / name))


def _num(x):
    if isinstance(x, (float, np.floating)):
        return float(format(float(x), ".12g"))
    return x


def emit(rows: list[dict], columns: list[str], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        json.dump([{c: _num(r[c]) for c in columns} for r in rows], out, indent=2)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(
            [format(float(r[c]), ".12g") if isinstance(r[c], (float, np.floating)) else r[c]
             for c in columns]
        )


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _pairs(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputParseError(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# -- subcommands ---------------------------------------------------------------


def cmd_individual(args) -> int:
    window = (
        parse_time(args.t1) if args.t1 else None,
        parse_time(args.t2) if args.t2 else None,
    )
    sequences = read_contacts(args.contacts, window)
    model = transmission.load_model(args.model) if args.model else None
    windows = read_windows(args.windows) if args.windows else None
    rows = []
    for hcp, seq in sequences.items():
        counts = seq.counts
        row = {"hcp_id": hcp}
        row.update({f"n_{c.value}": counts[c] for c in counts})
        row["pir"] = individual_risk(seq, model, windows)
        rows.append(row)
    emit(rows, ["hcp_id", "n_E", "n_IC", "n_IS", "n_HW", "pir"], args.format)
    return 0


def cmd_tableiii(args) -> int:
    occupations = occupational.read_occupations(args.occupations)
    table = occupational.occupation_case_study(occupations, args.n, args.phi)
    rows = [{"name": r.name, "ors": r.ors, "p_hat": r.p_hat, "pir": r.pir} for r in table]
    emit(rows, ["name", "ors", "p_hat", "pir"], args.format)
    return 0


def cmd_tableiv(args) -> int:
    config = population.load_case_study(args.config)
    results = population.run_case_study(config)
    rows = [{"facility": r.name, **r.expectations, "pir": r.risk} for r in results]
    emit(rows, ["facility", *population.CASE_STUDY_VARIABLES, "pir"], args.format)
    return 0


def cmd_enumerate(args) -> int:
    enumerations = [
        sensitivity.enumerate_sequence_risks(args.levels, n, args.budget) for n in args.n
    ]
    if args.format == "json":
        doc = [
            {
                "n": e.n,
                "levels": list(e.levels),
                "mean": _num(e.mean),
                "sd": _num(e.sd(ddof=1)),
                "population_sd": _num(e.sd(ddof=0)),
                "sequences": [{"code": c, "risk": _num(r)} for c, r in e.rows()],
            }
            for e in enumerations
        ]
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["n", "code", "risk"])
        for e in enumerations:
            for code, risk in e.rows():
                w.writerow([e.n, code, format(risk, ".12g")])
    for e in enumerations:
        print(
            f"n={e.n}: {e.risks.size} sequences, mean={e.mean:.12g}, "
            f"sd={e.sd(ddof=1):.12g} (sample), population sd={e.sd(ddof=0):.12g}",
            file=sys.stderr,
        )
    return 0


def cmd_surface(args) -> int:
    points = sensitivity.response_surface(args.plow, args.n, args.offset, args.budget)
    if args.format == "json":
        emit(
            [vars(p) for p in points],
            ["p_low", "n_contacts", "mean", "variance"],
            "json",
        )
    else:
        sensitivity.surface_export(points, sys.stdout)
    return 0


def cmd_fit(args) -> int:
    data = transmission.load_dataset(args.data)
    model, diag = transmission.fit_logistic(
        data, max_iter=args.max_iter, tol=args.tol, ridge=args.ridge
    )
    doc = transmission.model_to_dict(model, diag)
    doc["aic"] = transmission.aic(model, data)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    log.info("converged in %d iterations, log-likelihood %.6f", diag.iterations, diag.log_likelihood)
    return 0


def cmd_predict(args) -> int:
    model = transmission.load_model(args.model)
    if args.data:
        with open(args.data, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                try:
                    z = {n: float(rec[n]) for n in model.schema}
                except KeyError as exc:
                    raise InputParseError(f"missing covariate column {exc.args[0]!r}", line=1) from None
                except (TypeError, ValueError) as exc:
                    raise InputParseError(str(exc), line=lineno) from None
                rows.append({"row": lineno - 1, "probability": transmission.predict_probability(model, z)})
    else:
        z = {n: 0.0 for n in model.schema}
        for k, v in _pairs(args.set).items():
            if k not in z:
                raise SchemaError(f"unknown covariate {k!r}")
            try:
                z[k] = float(v)
            except ValueError:
                raise InputParseError(f"covariate {k}: not a number: {v!r}") from None
        rows = [{"row": 1, "probability": transmission.predict_probability(model, z)}]
    emit(rows, ["row", "probability"], args.format)
    return 0


def cmd_cv(args) -> int:
    data = transmission.load_dataset(args.data)
    acc = transmission.k_fold_cv(data, args.k, args.threshold, args.seed)
    emit([{"k": args.k, "threshold": args.threshold, "seed": args.seed, "accuracy": acc}],
         ["k", "threshold", "seed", "accuracy"], args.format)
    return 0


def cmd_bn(args) -> int:
    net = bayesnet.load_network(args.network)
    evidence = _pairs(args.evidence)
    if args.risk is not None:
        if net.risk_bins is None:
            raise ConfigurationError("network declares no risk_bins node")
        evidence[net.risk_bins[0]] = net.risk_state(args.risk)
    query = args.query or (net.outcome[0] if net.outcome else None)
    if query is None:
        raise ConfigurationError("no --query given and the network has no outcome node")
    post = bayesnet.infer_posterior(net, query, evidence)
    emit([{"node": query, "state": s, "probability": p} for s, p in post.items()],
         ["node", "state", "probability"], args.format)
    return 0


def cmd_mc_validate(args) -> int:
    scenarios = (
        [montecarlo.scenario_from_dict(d) for d in json.loads(Path(args.scenarios).read_text())["scenarios"]]
        if args.scenarios
        else montecarlo.bundled_scenarios()
    )
    config = montecarlo.SimulationConfig(args.trials, args.seed, args.workers)
    rows = montecarlo.validate(scenarios, config)
    emit(
        [
            {
                "scenario": r.scenario,
                "analytic": r.analytic,
                "empirical": r.empirical,
                "z": r.z,
                "result": "pass" if r.passed else "fail",
                "seeds": " ".join(map(str, r.seeds)),
            }
            for r in rows
        ],
        ["scenario", "analytic", "empirical", "z", "result", "seeds"],
        args.format,
    )
    return 0 if all(r.passed for r in rows) else 4


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="hcprisk", description="Infection risk estimation for healthcare personnel."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("individual", parents=[common], help="per-HCP risk from a contacts CSV")
    p.add_argument("contacts")
    p.add_argument("--model", help="logistic model JSON for covariate-only contacts")
    p.add_argument("--windows", help="exposure windows CSV")
    p.add_argument("--t1", help="window start (ISO-8601)")
    p.add_argument("--t2", help="window end (ISO-8601)")
    p.set_defaults(func=cmd_individual)

    p = sub.add_parser("tableiii", parents=[common], help="occupation risk table")
    p.add_argument("occupations", nargs="?", default=_bundled("occupations.csv"))
    p.add_argument("--n", type=int, default=5, help="contacts per HCP")
    p.add_argument("--phi", type=float, default=occupational.DEFAULT_PHI)
    p.set_defaults(func=cmd_tableiii)

    p = sub.add_parser("tableiv", parents=[common], help="facility case study")
    p.add_argument("config", nargs="?", default=_bundled("case_study.json"))
    p.set_defaults(func=cmd_tableiv)

    p = sub.add_parser("sensitivity", help="sequence enumeration and response surfaces")
    ssub = p.add_subparsers(dest="mode", required=True)
    e = ssub.add_parser("enumerate", parents=[common])
    e.add_argument("--levels", type=_floats, default=[0.01, 0.05, 0.1])
    e.add_argument("--n", type=_ints, default=[2, 3])
    e.add_argument("--budget", type=int, default=sensitivity.ENUMERATION_BUDGET)
    e.set_defaults(func=cmd_enumerate)
    s = ssub.add_parser("surface", parents=[common])
    s.add_argument("--plow", type=_floats, default=sensitivity.default_p_low_grid())
    s.add_argument("--n", type=_ints, default=sensitivity.default_n_grid())
    s.add_argument("--offset", type=float, default=sensitivity.DEFAULT_OFFSET)
    s.add_argument("--budget", type=int, default=sensitivity.ENUMERATION_BUDGET)
    s.set_defaults(func=cmd_surface)

    p = sub.add_parser("fit", parents=[common], help="fit a logistic transmission model")
    p.add_argument("data", nargs="?", default=_bundled("synthetic_uk_like.csv"))
    p.add_argument("--out")
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="transmission probabilities")
    p.add_argument("--model", default=_bundled("reference_model.json"))
    p.add_argument("--data", help="CSV of covariates (one prediction per row)")
    p.add_argument("--set", nargs="*", metavar="NAME=VALUE", help="covariate values; others 0")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", parents=[common], help="k-fold cross-validated accuracy")
    p.add_argument("data", nargs="?", default=_bundled("synthetic_uk_like.csv"))
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("bn", parents=[common], help="Bayesian network posterior")
    p.add_argument("network", nargs="?", default=_bundled("demo_network.json"))
    p.add_argument("--query")
    p.add_argument("--evidence", nargs="*", metavar="NODE=STATE")
    p.add_argument("--risk", type=float, help="individual risk, binned into the risk node")
    p.set_defaults(func=cmd_bn)

    p = sub.add_parser("mc", help="Monte Carlo validation")
    msub = p.add_subparsers(dest="mode", required=True)
    v = msub.add_parser("validate", parents=[common])
    v.add_argument("--trials", type=int, default=10**6)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--scenarios", help="scenario JSON (default: bundled set)")
    v.set_defaults(func=cmd_mc_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except RiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ZeroDivisionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except csv.Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
