"""Command-line front end.

Subcommands: ``pipeline``, ``simulate``, ``score``, ``efa``, ``cfa``,
``alpha`` and ``suitability``. Exit status is 0 on success, 2 on data
errors and 3 on numerical failures.
"""

import argparse
import csv
import io
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .basestats import pearson_matrix
from .cfa import CfaModel, fit_one_factor, interpret_fit
from .dataset import ItemCatalog, LikertSpec, composite_score, tomllib, write_survey_csv
from .efa import principal_axis_factoring, rotate
from .errors import DataError, NumericalError
from .pipeline import (EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, RunConfig, dumps, load_survey,
                       read_references, run_pipeline)
from .reliability import cronbach_alpha, subset_search
from .simgen import SimSpec, simulate_survey
from .suitability import assess
from .validity import known_group_comparison, map_unit_to_likert

DEFAULT_CATALOG = "bundled:exploratory"


def _sizes(text):
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad subset sizes {text!r}") from None


def _add_common(p, out_help="output directory"):
    p.add_argument("--input", "-i", help="survey CSV ('-' for stdin)")
    p.add_argument("--catalog", "-c",
                   help="item catalog TOML, or bundled:<name> "
                        "(default: infer items from the CSV header)")
    p.add_argument("--out", "-o", help=out_help)
    p.add_argument("--config", help="TOML file of run settings; flags win")
    p.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    p.add_argument("--likert-min", type=int, help="lowest response category (default 1)")
    p.add_argument("--likert-max", type=int, help="highest response category (default 7)")
    p.add_argument("--max-failed-checks", type=int,
                   help="drop respondents failing this many attention checks (default 2)")


def build_parser():
    parser = argparse.ArgumentParser(prog="likertkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="run the full analysis and write a report bundle")
    _add_common(p)
    p.add_argument("--seed", type=int, help="parallel-analysis seed (default 0)")
    p.add_argument("--replicates", type=int, help="parallel-analysis replicates (default 100)")
    p.add_argument("--pa-reference", help="'mean' or a quantile such as 0.95")
    p.add_argument("--subset-sizes", type=_sizes, help="comma list (default 3,4,5)")
    p.add_argument("--max-pool", type=int, help="largest subset-search pool (default 12)")
    p.add_argument("--screen-threshold", type=float,
                   help="low-correlation screen cut (default 0.3)")
    p.add_argument("--loading-cut", type=float,
                   help="pool items must load above this everywhere (default 0.7)")
    p.add_argument("--cfa-scale", help="catalog scale to confirm (default: best subset)")
    p.add_argument("--comparison-scale", help="catalog scale for convergent validity")
    p.add_argument("--covariate", help="demographic column for discriminant validity "
                                       "(default age)")
    p.add_argument("--references", help="CSV of stimulus_id,score in [0, 1]")
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")

    p = sub.add_parser("simulate", help="write a synthetic survey CSV")
    p.add_argument("spec", nargs="?", help="simulation spec TOML")
    p.add_argument("--out", "-o", default="-", help="output CSV path ('-' for stdout)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--n", type=int, help="respondents per stimulus")
    p.add_argument("--stimuli", type=int, help="number of stimuli")
    p.add_argument("--items", type=int, help="number of items (generic ids)")
    p.add_argument("--loading", type=float, help="common loading of every item")

    p = sub.add_parser("score", help="composite scores, CIs and known-group ordering")
    _add_common(p, "output directory (default: print to stdout)")
    p.add_argument("--scale", required=True, help="scale name from the catalog")
    p.add_argument("--reference", help="CSV of stimulus_id,score in [0, 1]")
    p.add_argument("--level", type=float, default=0.95, help="confidence level (default 0.95)")

    p = sub.add_parser("efa", help="principal-axis factor loadings per stimulus")
    _add_common(p)
    p.add_argument("--k", type=int, default=1, help="number of factors (default 1)")
    p.add_argument("--rotation", choices=("varimax", "promax"), default="varimax",
                   help="rotation when k >= 2 (default varimax)")

    p = sub.add_parser("cfa", help="one-factor CFA per stimulus")
    _add_common(p)
    p.add_argument("--scale", help="scale name (default: all items)")

    p = sub.add_parser("alpha", help="Cronbach's alpha or subset search")
    _add_common(p)
    p.add_argument("--scale", help="scale name (default: all items)")
    p.add_argument("--pool", help="scale name whose items form the search pool")
    p.add_argument("--subset-sizes", type=_sizes, help="comma list (default 3,4,5)")

    p = sub.add_parser("suitability", help="correlation screen, Bartlett and KMO")
    _add_common(p)
    p.add_argument("--screen-threshold", type=float, help="low-correlation cut (default 0.3)")
    return parser


def _config_from(args):
    """Merge the optional TOML config with explicit flags (flags win)."""
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise DataError(f"config file not found: {args.config}") from None
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"cannot parse config {args.config}: {exc}") from None
        values.update({k.replace("-", "_"): v for k, v in data.items()})
    names = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise DataError(f"unknown config keys {unknown}")
    for name in names:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if values.get("input") is None:
        values["input"] = "-"
    return RunConfig(**values)


def _emit(text, out, name):
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_pipeline(args):
    config = _config_from(args)
    if config.out is None:
        config.out = "report"
    return run_pipeline(config, stream=sys.stdin)


def _spec_from_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise DataError(f"simulation spec not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise DataError(f"cannot parse simulation spec {path}: {exc}") from None


def simulation_specs(data, seed=None, n=None, stimuli=None, n_items=None, loading=None):
    """Turn a parsed simulation spec (plus overrides) into ``SimSpec`` objects.

    Recognised keys: ``seed``, ``n``, ``stimuli`` (count), ``items`` (list of
    ids or a count; default the bundled 31-item catalog), ``loading``
    (scalar), ``loadings`` (per-item list or p x k nested list),
    ``factor_correlation``, ``reversed`` (item ids
    written reverse-scored), ``likert_min``/``likert_max``, ``design``
    (``between`` or ``within``) and ``[[stimulus]]`` tables with ``id``,
    ``n``, ``latent_mean`` and ``loadings``/``loading`` overrides.
    """
    data = dict(data)
    seed = int(seed if seed is not None else data.get("seed", 0))
    n = int(n if n is not None else data.get("n", 200))
    likert = LikertSpec(int(data.get("likert_min", 1)), int(data.get("likert_max", 7)))
    reversed_items = tuple(data.get("reversed", ()))
    items = data.get("items") if n_items is None else n_items
    if items is None:
        catalog = ItemCatalog.bundled("exploratory")
        items = list(catalog.item_ids)
        if "reversed" not in data:
            reversed_items = catalog.reversed_items
    if isinstance(items, int):
        width = len(str(items))
        items = [f"item{j + 1:0{width}d}" for j in range(items)]
    items = [str(i) for i in items]
    base = data.get("loadings")
    if loading is not None or base is None:
        base = [float(loading if loading is not None else data.get("loading", 0.8))] * len(items)
    phi = data.get("factor_correlation")
    tables = data.get("stimulus")
    count = int(stimuli if stimuli is not None else data.get("stimuli", 5))
    if stimuli is not None or not tables:
        # evenly spaced latent means so the stimuli have a known ordering
        means = np.linspace(0.5, -0.5, count) if count > 1 else [0.0]
        tables = [{"id": f"s{j + 1:02d}", "latent_mean": float(means[j])} for j in range(count)]
    design = data.get("design", "between")
    if design not in ("between", "within"):
        raise DataError("design must be 'between' or 'within'")
    specs = []
    for j, t in enumerate(tables):
        sid = str(t.get("id", f"s{j + 1:02d}"))
        sn = int(t.get("n", n))
        lam = t.get("loadings")
        if lam is None and "loading" in t:
            lam = [float(t["loading"])] * len(items)
        lam = np.asarray(base if lam is None else lam, dtype=float)
        respondents = (tuple(f"r{i + 1:05d}" for i in range(sn)) if design == "within"
                       else tuple(f"{sid}-r{i + 1:05d}" for i in range(sn)))
        specs.append(SimSpec(lam, sn, seed=seed, stream=(j,), items=tuple(items),
                             stimulus_id=sid, likert=likert,
                             latent_mean=float(t.get("latent_mean", 0.0)),
                             factor_correlation=None if phi is None else np.asarray(phi, float),
                             respondents=respondents))
    return specs, seed, reversed_items


def cmd_simulate(args):
    data = _spec_from_toml(args.spec) if args.spec else {}
    specs, seed, reversed_items = simulation_specs(data, args.seed, args.n, args.stimuli,
                                                   args.items, args.loading)
    survey = simulate_survey(specs, seed=seed, reversed_items=reversed_items)
    if args.out == "-":
        buf = io.StringIO()
        write_survey_csv(survey, buf)
        sys.stdout.write(buf.getvalue())
    else:
        write_survey_csv(survey, args.out)
    return EXIT_OK


def _matrices(config):
    from .dataset import build_matrix

    raw, _, catalog = load_survey(config, sys.stdin)
    return raw, catalog, {sid: build_matrix(raw, sid, catalog) for sid in raw.stimuli}


def cmd_score(args):
    config = _config_from(args)
    raw, catalog, matrices = _matrices(config)
    items = catalog.scale(args.scale)
    comp = io.StringIO()
    w = csv.writer(comp, lineterminator="\n")
    w.writerow(["respondent_id", "stimulus_id", "composite"])
    for sid, m in matrices.items():
        for rid, v in zip(m.respondents, composite_score(m, items)):
            w.writerow([rid, sid, repr(float(v))])
    refs = read_references(args.reference) if args.reference else {}
    groups = known_group_comparison(matrices, items, args.level) if len(matrices) >= 2 else None
    ranked = groups.ranked if groups else []
    if groups is None:
        from .basestats import mean_ci
        from .validity import GroupScore

        ranked = [GroupScore(sid, mean_ci(composite_score(m, items), args.level))
                  for sid, m in matrices.items()]
    tab = io.StringIO()
    w = csv.writer(tab, lineterminator="\n")
    w.writerow(["rank", "stimulus_id", "mean", "lower", "upper", "half_width", "n",
                "reference", "reference_mapped"])
    for rank, g in enumerate(ranked, start=1):
        ref = refs.get(g.stimulus_id)
        mapped = "" if ref is None else repr(map_unit_to_likert(ref, config.likert))
        w.writerow([rank, g.stimulus_id, repr(g.ci.mean), repr(g.ci.lower), repr(g.ci.upper),
                    repr(g.ci.half_width), g.ci.n, "" if ref is None else repr(ref), mapped])
    if config.out:
        _emit(comp.getvalue(), config.out, "composites.csv")
        _emit(tab.getvalue(), config.out, "groups.csv")
        _emit(dumps({"scale": list(items), "ordering": [g.stimulus_id for g in ranked],
                     "separated": None if groups is None else groups.separated,
                     "level": args.level, "ci_method": "normal"}),
              config.out, "ordering.json")
    else:
        sys.stdout.write(tab.getvalue())
    print("ordering: " + " > ".join(g.stimulus_id for g in ranked), file=sys.stderr)
    return EXIT_OK


def cmd_efa(args):
    config = _config_from(args)
    _, _, matrices = _matrices(config)
    report = {}
    for sid, m in matrices.items():
        sol = principal_axis_factoring(pearson_matrix(m), args.k)
        if args.k >= 2:
            sol = rotate(sol, args.rotation)
        name = f"efa_k{args.k}" + (f"_{args.rotation}" if args.k >= 2 else "")
        if config.format == "csv":
            _emit(f"# {sid}\n" + sol.to_csv(2) if not config.out else sol.to_csv(2),
                  config.out and Path(config.out) / sid, f"{name}.csv")
        report[sid] = sol.to_dict()
    if config.format == "json":
        _emit(dumps(report), config.out, "efa.json")
    return EXIT_OK


def cmd_cfa(args):
    config = _config_from(args)
    _, catalog, matrices = _matrices(config)
    report = {}
    code = EXIT_OK
    for sid, m in matrices.items():
        items = catalog.scale(args.scale) if args.scale else m.items
        sol = fit_one_factor(m, CfaModel(items))
        report[sid] = {"solution": sol.to_dict(),
                       "verdict": interpret_fit(sol) if sol.converged else None}
        if not sol.converged:
            code = EXIT_NUMERICAL
    _emit(dumps(report), config.out, "cfa.json")
    return code


def cmd_alpha(args):
    config = _config_from(args)
    _, catalog, matrices = _matrices(config)
    if args.pool:
        pool = catalog.scale(args.pool)
        sizes = args.subset_sizes or tuple(s for s in (3, 4, 5) if s <= len(pool))
        results = subset_search(matrices, pool, sizes)
        text = "".join(r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1]
                       for i, r in enumerate(results[s] for s in sorted(results)))
        _emit(text, config.out, "alpha_subsets.csv")
        return EXIT_OK
    report = {}
    for sid, m in matrices.items():
        items = catalog.scale(args.scale) if args.scale else m.items
        report[sid] = cronbach_alpha(m, items).to_dict()
    _emit(dumps(report), config.out, "alpha.json")
    return EXIT_OK


def cmd_suitability(args):
    config = _config_from(args)
    _, _, matrices = _matrices(config)
    report = {sid: assess(pearson_matrix(m), m.n, config.screen_threshold).to_dict()
              for sid, m in matrices.items()}
    _emit(dumps(report), config.out, "suitability.json")
    return EXIT_OK


COMMANDS = {
    "pipeline": cmd_pipeline,
    "simulate": cmd_simulate,
    "score": cmd_score,
    "efa": cmd_efa,
    "cfa": cmd_cfa,
    "alpha": cmd_alpha,
    "suitability": cmd_suitability,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
