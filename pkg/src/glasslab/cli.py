"""Command line entry point: ``glasslab betac|census|regimes|simulate|stein|report``.

Exit codes: 0 success, 1 invalid input, 2 budget exceeded, 3 ``--assert`` failed.
Every command that writes to a directory also writes manifest.json with the
configuration, seed, package version, wall-clock time and output checksums.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .census import (
    ClusterStructure,
    closed_form_count,
    count_clusters,
    u_constant,
)
from .critical import MultiSpeciesSpec, beta_c, multi_species_beta_c, phi_inverse_beta_c, sweep
from .errors import BudgetError, GlasslabError, UnsupportedTemplateError
from .model import ExternalField, MixtureSpec
from .partition import EnsembleConfig, run_ensemble
from .regimes import as_alpha, classify
from .stein import SteinConfig, conditional_variance_diagnostic, linearity_check, third_moment_diagnostic
from .tables import compare_with_table, table_lookup

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_ASSERT = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def fmt(x):
    """Locale-independent float formatting with round-trip precision."""
    if isinstance(x, (bool, str)) or x is None:
        return "" if x is None else str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def to_csv(header, rows):
    """Rows are dicts keyed by header names or sequences in header order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        values = [r.get(h) for h in header] if isinstance(r, dict) else r
        w.writerow([fmt(v) for v in values])
    return buf.getvalue()


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_ARGV = []


def write_outputs(out_dir, command, config, seed, outputs, started):
    """Write each output atomically, then the manifest.

    ``argv`` in the manifest replays the run; outputs are byte-identical.
    """
    out_dir = Path(out_dir)
    sums = {}
    for name, text in outputs.items():
        atomic_write(out_dir / name, text)
        sums[name] = sha256_text(text)
    manifest = {
        "command": command,
        "argv": list(_ARGV),
        "config": config,
        "seed": seed,
        "version": __version__,
        "wall_clock_seconds": round(time.time() - started, 3),
        "outputs": sums,
    }
    atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def parse_int_range(text):
    """'10:20:2' (inclusive), '6:12', '3,5,7' or '8'."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            if step <= 0 or hi < lo:
                raise ValueError
            return list(range(lo, hi + 1, step))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse integer range {text!r}") from None


def load_spec(args):
    if getattr(args, "spec", None):
        try:
            text = Path(args.spec).read_text()
        except OSError as exc:
            raise InputError(f"cannot read spec file: {exc}") from None
        return MixtureSpec.from_json(text)
    if getattr(args, "theta", None):
        theta = {}
        for item in args.theta.split(","):
            try:
                p, v = item.split(":")
                theta[int(p)] = float(v)
            except ValueError:
                raise InputError(f"cannot parse theta item {item!r}; use p:value") from None
        return MixtureSpec(theta)
    raise InputError("give --spec FILE or --theta p:value,...")


def emit(args, name, text, command, config, seed, started):
    if getattr(args, "dir", None):
        write_outputs(args.dir, command, config, seed, {name: text}, started)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_betac(args):
    started = time.time()
    failures = []
    if args.multi:
        ms = MultiSpeciesSpec.from_json(Path(args.multi).read_text())
        res = multi_species_beta_c(ms, starts=args.starts, seed=args.seed)
        rows = [{"beta_c": res.beta_c, "x_star": " ".join(fmt(v) for v in res.x_star), "boundary": res.boundary}]
        header = ["beta_c", "x_star", "boundary"]
        config = {"multi": ms.to_dict(), "starts": args.starts}
    elif args.sweep_p:
        ps = parse_int_range(args.sweep_p)
        rows = sweep(ps)
        for r in rows:
            if r["talagrand"] > r["beta_c"]:
                failures.append(f"p={r['p']}: Talagrand bound {r['talagrand']:.6g} exceeds beta_c {r['beta_c']:.6g}")
            if 3 <= r["p"] <= 12:
                alt = phi_inverse_beta_c(r["p"]).beta_c
                if abs(alt - r["beta_c"]) > 1e-6 * max(1.0, r["beta_c"]):
                    failures.append(f"p={r['p']}: grid and phi-inverse routes differ")
        header = ["p", "beta_c", "beta_c_scaled", "talagrand", "talagrand_scaled", "x_star"]
        config = {"sweep_p": ps}
    else:
        spec = load_spec(args)
        res = beta_c(spec, tol=args.tol)
        rows = [{"beta_c": res.beta_c, "x_star": res.x_star, "boundary": res.boundary}]
        header = ["beta_c", "x_star", "boundary"]
        config = {"spec": spec.to_dict(), "tol": args.tol}
        if not math.isfinite(res.beta_c) or res.beta_c <= 0:
            failures.append("beta_c is not a positive finite number")
    if args.out == "json":
        text = json.dumps([{k: (v if not isinstance(v, float) else float(fmt(v))) for k, v in r.items()} for r in rows], indent=2) + "\n"
        name = "betac.json"
    else:
        text = to_csv(header, rows)
        name = "betac.csv"
    emit(args, name, text, "betac", config, args.seed, started)
    return _assert(args, failures)


def cmd_census(args):
    started = time.time()
    Ns = parse_int_range(args.N)
    structures = [ClusterStructure.parse(s) for s in args.structure]
    rows, failures = [], []
    for c in structures:
        try:
            u2 = u_constant(c).exact
        except GlasslabError:
            u2 = None
        for N in Ns:
            exact_all = count_clusters(N, c, canonical=False, budget=args.budget)
            exact_can = count_clusters(N, c, canonical=True, budget=args.budget)
            try:
                closed = closed_form_count(N, c, canonical=not args.all)
            except UnsupportedTemplateError:
                closed = None
            exact = exact_all if args.all else exact_can
            if closed is not None and closed != exact:
                failures.append(f"{c} N={N}: enumeration {exact} != closed form {closed}")
            rows.append({
                "structure": str(c), "N": N, "exact": exact, "exact_all": exact_all,
                "exact_canonical": exact_can, "closed_form": closed,
                "scaled": exact / N**c.t, "u_squared": u2,
            })
    header = ["structure", "N", "exact", "exact_all", "exact_canonical", "closed_form", "scaled", "u_squared"]
    config = {"N": Ns, "structures": [str(c) for c in structures], "all": args.all}
    emit(args, "census.csv", to_csv(header, rows), "census", config, None, started)
    return _assert(args, failures)


def _parse_pairs(text):
    out = []
    for item in text.split(";"):
        a, b = item.split(",")
        out.append((int(a), int(b)))
    return out


def cmd_regimes(args):
    started = time.time()
    rows, failures = [], []
    if args.table:
        if args.table == "pure":
            models = [(p,) for p in parse_int_range(args.p)]
        else:
            models = [tuple(pq) for pq in _parse_pairs(args.pairs)]
        for orders in models:
            spec = MixtureSpec({q: 1.0 for q in orders})
            mism = compare_with_table(orders)
            for m in mism:
                failures.append(f"{orders} alpha={fmt(m.alpha)}: table gamma={','.join(map(str, m.table_gamma))} "
                                f"alpha_c={m.table_alpha_c} {list(m.table_dominant)}; computed gamma={m.gamma} "
                                f"alpha_c={m.alpha_c} {list(m.dominant)}")
            from .tables import probe_alphas, table_alpha_c
            env = {"p": Fraction(orders[0])} if len(orders) == 1 else dict(zip(("pe", "po"), map(Fraction, sorted(orders, key=lambda q: q % 2))))
            for alpha in probe_alphas(table_alpha_c(env)):
                rep = classify(spec, alpha)
                tab = table_lookup(orders, alpha)
                rows.append(_regime_row(orders, rep, tab))
        config = {"table": args.table, "models": [list(m) for m in models]}
    else:
        spec = load_spec(args)
        alpha = as_alpha(args.alpha)
        rep = classify(spec, alpha)
        rows.append(_regime_row(tuple(sorted({spec.p_e, spec.p_o} - {None})), rep, None))
        config = {"spec": spec.to_dict(), "alpha": fmt(alpha)}
    header = ["orders", "alpha", "alpha_c", "alpha_c_formula", "regime", "gamma", "dominant", "table_gamma", "table_dominant", "matches_table"]
    emit(args, "regimes.csv", to_csv(header, rows), "regimes", config, None, started)
    return _assert(args, failures)


def _regime_row(orders, rep, tab):
    row = {
        "orders": " ".join(map(str, orders)),
        "alpha": rep.alpha,
        "alpha_c": rep.alpha_c,
        "alpha_c_formula": rep.alpha_c_formula,
        "regime": rep.regime,
        "gamma": rep.gamma,
        "dominant": " | ".join(map(str, rep.dominant)),
        "table_gamma": None, "table_dominant": None, "matches_table": None,
    }
    if tab is not None:
        row["table_gamma"] = " ".join(map(str, tab.gammas))
        row["table_dominant"] = " | ".join(sorted(map(str, tab.dominant)))
        row["matches_table"] = str(tab.gammas == (rep.gamma,) and tab.dominant == frozenset(rep.dominant)).lower()
    return row


def cmd_simulate(args):
    started = time.time()
    spec = load_spec(args)
    Ns = parse_int_range(args.N)
    if args.field:
        try:
            rho, alpha = args.field.split(",")
            fld = ExternalField(float(rho), float(alpha))
        except ValueError:
            raise InputError("--field expects rho,alpha") from None
    else:
        fld = ExternalField.zero()
    rep = None
    if args.structures == "auto":
        rep = classify(spec, fld.alpha if not fld.is_zero else math.inf)
        structures = rep.dominant
    elif args.structures:
        structures = tuple(ClusterStructure.parse(s) for s in re.split(r";(?!\s*l=)", args.structures) if s.strip())
    else:
        structures = ()
    cfg = EnsembleConfig(spec, tuple(Ns), args.replicas, beta_fraction=args.beta_frac, field=fld,
                         structures=structures, seed=args.seed, distribution=args.distribution,
                         workers=args.workers)
    res = run_ensemble(cfg)
    outputs = ensemble_outputs(res, rep)
    failures = []
    if args.assert_ and rep is not None and len(Ns) >= 2:
        fit = res.slope("log_zhat")
        if abs(fit.slope + float(rep.gamma)) > 0.5:
            failures.append(f"log Z_hat variance slope {fit.slope:.3f} vs predicted {-float(rep.gamma):.3f}")
    write_outputs(args.out, "simulate", cfg.to_dict(), args.seed, outputs, started)
    return _assert(args, failures)


def ensemble_outputs(res, rep=None):
    """CSV texts for an ensemble result: replicas, summary and slopes."""
    cols = list(res.columns)
    rep_rows = []
    for N in res.config.Ns:
        arr = res.data[N]
        for r in range(arr.shape[0]):
            rep_rows.append([N, r] + [arr[r, j] for j in range(len(cols))])
    replicas = to_csv(["N", "replica"] + cols, rep_rows)
    summ = res.summary()
    sh = ["N", "quantity", "n", "mean", "mean_se", "var", "var_se", "skew", "skew_se", "kurt", "kurt_se", "msq0", "msq0_se"]
    summary = to_csv(sh, summ)
    slope_rows = []
    if len(res.config.Ns) >= 2:
        for q in cols:
            try:
                fit = res.slope(q)
            except (ValueError, ZeroDivisionError, FloatingPointError):
                continue
            pred = -rep.gamma if (rep is not None and q == "log_zhat") else None
            slope_rows.append({"quantity": q, "slope": fit.slope, "slope_se": fit.slope_se, "predicted": pred})
    slopes = to_csv(["quantity", "slope", "slope_se", "predicted"], slope_rows)
    return {"replicas.csv": replicas, "summary.csv": summary, "slopes.csv": slopes}


def cmd_stein(args):
    started = time.time()
    spec = load_spec(args)
    c = ClusterStructure.parse(args.structure)
    Ns = parse_int_range(args.N)
    beta = args.beta if args.beta is not None else args.beta_frac * beta_c(spec).beta_c
    cfg = SteinConfig(spec, (c,), beta, args.distribution)
    from .partition import DisorderSample
    rows, failures = [], []
    for N in Ns:
        worst = 0.0
        for r in range(min(args.replicas, args.linearity_samples)):
            s = DisorderSample.draw(spec, N, args.distribution, args.seed, r)
            row = linearity_check(cfg, s)[0]
            worst = max(worst, row.residual / (1 + abs(row.W)))
        if worst > 1e-10:
            failures.append(f"N={N}: linearity residual {worst:.3g}")
        rows.append({"kind": "linearity", "N": N, "value": worst, "exponent": None, "target": None, "status": "ok" if worst <= 1e-10 else "fail"})
    if len(Ns) >= 2 and len(c.orders) == 1:
        cv = conditional_variance_diagnostic(cfg, Ns, args.replicas, seed=args.seed)
        for k in "ABCD":
            for N, v in zip(Ns, cv.values[k]):
                rows.append({"kind": f"norm_{k}", "N": N, "value": v, "exponent": cv.exponents[k], "target": cv.targets.get(k), "status": cv.status if k == "A" else ""})
        tm = third_moment_diagnostic(cfg, Ns, args.replicas, seed=args.seed)
        for N, v in zip(Ns, tm.values["third"]):
            rows.append({"kind": "third_moment", "N": N, "value": v, "exponent": tm.exponents["third"], "target": tm.targets["third"], "status": tm.status})
    header = ["kind", "N", "value", "exponent", "target", "status"]
    config = {"spec": spec.to_dict(), "structure": str(c), "N": Ns, "replicas": args.replicas, "beta": beta, "distribution": args.distribution}
    emit(args, "stein.csv", to_csv(header, rows), "stein", config, args.seed, started)
    return _assert(args, failures)


def _seconds(x):
    return f"{x:.3f}" if isinstance(x, (int, float)) else ""


def cmd_report(args):
    """Collect manifests below the given directories into one summary."""
    started = time.time()
    runs, problems = [], []
    curve, scaling = [], []
    for root in args.dirs:
        for man in sorted(Path(root).rglob("manifest.json")):
            if args.out and Path(args.out).resolve() == man.parent.resolve():
                continue
            try:
                meta = json.loads(man.read_text())
                outputs = meta["outputs"]
                for name, digest in outputs.items():
                    if sha256_text((man.parent / name).read_text()) != digest:
                        raise ValueError(f"checksum mismatch for {name}")
            except (OSError, ValueError, KeyError, TypeError) as exc:
                problems.append({"path": str(man), "problem": str(exc)})
                continue
            runs.append({"path": str(man.parent), "command": meta.get("command"), "version": meta.get("version"),
                         "seed": meta.get("seed"), "wall_clock_seconds": _seconds(meta.get("wall_clock_seconds"))})
            if meta.get("command") == "betac" and "betac.csv" in outputs:
                for r in csv.DictReader(io.StringIO((man.parent / "betac.csv").read_text())):
                    if "p" in r:
                        curve.append({"p": r["p"], "beta_c_scaled": r["beta_c_scaled"], "talagrand_scaled": r["talagrand_scaled"]})
            if meta.get("command") == "simulate" and "summary.csv" in outputs:
                for r in csv.DictReader(io.StringIO((man.parent / "summary.csv").read_text())):
                    scaling.append({"run": str(man.parent), "N": r["N"], "quantity": r["quantity"], "var": r["var"], "var_se": r["var_se"]})
    for p in problems:
        print(f"skipped {p['path']}: {p['problem']}", file=sys.stderr)
    outputs = {
        "summary.csv": to_csv(["path", "command", "version", "seed", "wall_clock_seconds"], runs),
        "summary.json": json.dumps({"runs": runs, "skipped": problems}, indent=2, sort_keys=True) + "\n",
        "betac_curve.csv": to_csv(["p", "beta_c_scaled", "talagrand_scaled"], curve),
        "variance_scaling.csv": to_csv(["run", "N", "quantity", "var", "var_se"], scaling),
    }
    if args.out:
        write_outputs(args.out, "report", {"dirs": args.dirs}, None, outputs, started)
    else:
        sys.stdout.write(outputs["summary.csv"])
    return EXIT_OK


def _assert(args, failures):
    if getattr(args, "assert_", False) and failures:
        for f in failures:
            print(f"assertion failed: {f}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def build_parser():
    p = _Parser(prog="glasslab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("--spec", help="JSON file {\"theta\": {\"3\": 1.0}}")
            sp.add_argument("--theta", help="inline mixture, e.g. 3:1,4:0.5")
        sp.add_argument("--dir", help="write outputs and manifest.json into this directory")
        sp.add_argument("--assert", dest="assert_", action="store_true", help="exit 3 when a built-in check fails")

    b = sub.add_parser("betac", help="critical inverse temperature")
    common(b)
    b.add_argument("--multi", help="multi-species JSON file {\"lambda\": [...], \"delta2\": {...}}")
    b.add_argument("--sweep-p", help="pure p range, e.g. 3:30")
    b.add_argument("--out", choices=("csv", "json"), default="csv")
    b.add_argument("--tol", type=float, default=1e-9, help="golden-section tolerance in x")
    b.add_argument("--starts", type=int, default=32)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_betac)

    c = sub.add_parser("census", help="cluster counts against closed forms")
    common(c, spec=False)
    c.add_argument("--N", required=True)
    c.add_argument("--structure", action="append", required=True, help="e.g. 2x3;l=2 (repeatable)")
    c.add_argument("--all", action="store_true", help="count non-canonical members too")
    c.add_argument("--budget", type=float, default=1e8)
    c.set_defaults(func=cmd_census)

    r = sub.add_parser("regimes", help="dominant clusters and CLT regime")
    common(r)
    r.add_argument("--alpha", default="inf")
    r.add_argument("--table", choices=("pure", "mixed"))
    r.add_argument("--p", default="3:10")
    r.add_argument("--pairs", default="4,5;4,7;6,5;8,5;6,7;10,3;4,3", help="pe,po pairs separated by ';'")
    r.set_defaults(func=cmd_regimes)

    s = sub.add_parser("simulate", help="disorder ensemble of exact partition functions")
    common(s)
    s.add_argument("--beta-frac", type=float, default=0.5)
    s.add_argument("--field", help="rho,alpha (omit for zero field)")
    s.add_argument("--N", required=True)
    s.add_argument("--replicas", type=int, default=200)
    s.add_argument("--structures", default="", help="'auto' or structures separated by ';'")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--distribution", choices=("gaussian", "rademacher", "uniform"), default="gaussian")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("stein", help="exchangeable-pair diagnostics")
    common(t)
    t.add_argument("--structure", required=True)
    t.add_argument("--N", required=True)
    t.add_argument("--replicas", type=int, default=200)
    t.add_argument("--linearity-samples", type=int, default=20)
    t.add_argument("--beta", type=float)
    t.add_argument("--beta-frac", type=float, default=0.5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--distribution", choices=("gaussian", "rademacher", "uniform"), default="gaussian")
    t.set_defaults(func=cmd_stein)

    rp = sub.add_parser("report", help="collect run directories into a summary")
    rp.add_argument("dirs", nargs="+")
    rp.add_argument("--out", help="directory for the consolidated summary")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    _ARGV[:] = argv
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (GlasslabError, InputError, ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
