"""End-to-end analysis: screening through validity, written as a report bundle.

The bundle layout is::

    <out>/screening.json
    <out>/alpha_subsets.csv          rows = subsets, columns = stimuli
    <out>/known_groups.csv
    <out>/known_groups_items.csv     per-item means behind the composites
    <out>/validity.json
    <out>/summary.json               written last
    <out>/<stimulus>/suitability.json
    <out>/<stimulus>/scree.csv
    <out>/<stimulus>/parallel.json
    <out>/<stimulus>/efa_k1.csv            (+ .full.csv at full precision)
    <out>/<stimulus>/efa_k2_varimax.csv    (+ .full.csv)
    <out>/<stimulus>/efa_k2_promax.csv     (+ .full.csv)
    <out>/<stimulus>/cfa.json
    <out>/<stimulus>/cfa_loadings.csv      (+ .full.csv)
    <out>/<stimulus>/validity.json
"""

import csv
import io
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cfa as cfa_mod
from . import efa as efa_mod
from .basestats import mean_ci, pearson_matrix
from .dataset import (ItemCatalog, LikertSpec, build_matrix, composite_score,
                      read_survey_csv, respondent_covariate, screen_respondents)
from .errors import DataError, NumericalError
from .reliability import cronbach_alpha, subset_search
from .suitability import assess
from .validity import (convergent_label, convergent_validity, discriminant_label,
                       discriminant_validity, item_means_csv, known_group_comparison,
                       map_unit_to_likert)


EXIT_OK = 0
EXIT_DATA = 2
EXIT_NUMERICAL = 3


@dataclass
class RunConfig:
    input: str = "-"
    catalog: str | None = None
    out: str | None = None
    likert_min: int = 1
    likert_max: int = 7
    max_failed_checks: int = 2
    screen_threshold: float = 0.3
    loading_cut: float = 0.7
    replicates: int = 100
    seed: int = 0
    pa_reference: str = "mean"
    subset_sizes: tuple = (3, 4, 5)
    max_pool: int = 12
    cfa_scale: str | None = None
    comparison_scale: str | None = None
    covariate: str = "age"
    references: str | None = None
    level: float = 0.95
    kappa: int = 4
    format: str = "json"

    def __post_init__(self):
        self.subset_sizes = tuple(int(s) for s in self.subset_sizes)
        if not 0 < self.screen_threshold < 1:
            raise DataError("screen_threshold must be in (0, 1)")
        if not 0 < self.loading_cut < 1:
            raise DataError("loading_cut must be in (0, 1)")
        if self.replicates < 20:
            raise DataError("replicates must be >= 20")
        if not 0 < self.level < 1:
            raise DataError("level must be in (0, 1)")
        if self.format not in ("json", "csv"):
            raise DataError("format must be 'json' or 'csv'")
        if self.max_pool < 2:
            raise DataError("max_pool must be >= 2")

    @property
    def likert(self):
        return LikertSpec(self.likert_min, self.likert_max)

    @property
    def pa_reference_value(self):
        if self.pa_reference == "mean":
            return "mean"
        try:
            return float(self.pa_reference)
        except ValueError:
            raise DataError(f"pa_reference must be 'mean' or a quantile, "
                            f"got {self.pa_reference!r}") from None


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats with None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, default=_json_default, allow_nan=False) + "\n"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _safe_dirname(stimulus_id):
    return re.sub(r"[^A-Za-z0-9._-]+", "_", stimulus_id) or "_"


def load_catalog(config, survey_path=None):
    if config.catalog is None:
        return None
    if config.catalog.startswith("bundled:"):
        return ItemCatalog.bundled(config.catalog.split(":", 1)[1])
    return ItemCatalog.load(config.catalog)


def load_survey(config, stream=None):
    """Read, screen and split the survey into per-stimulus matrices."""
    catalog = load_catalog(config)
    source = stream if config.input == "-" and stream is not None else config.input
    raw = read_survey_csv(source, catalog, config.likert)
    if catalog is None:
        catalog = ItemCatalog.from_items(raw.item_ids)
    screened, report = screen_respondents(raw, config.max_failed_checks)
    return screened, report, catalog


def _scale_items(catalog, name, available):
    items = catalog.scale(name)
    missing = [i for i in items if i not in available]
    if missing:
        raise DataError(f"scale {name!r} items {missing} not in the data")
    return items


def read_references(path):
    """``stimulus_id,score`` CSV of external scores in [0, 1]."""
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except FileNotFoundError:
        raise DataError(f"reference file not found: {path}") from None
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"stimulus_id", "score"} <= set(rows[0]):
        raise DataError("reference file needs columns stimulus_id,score")
    out = {}
    for row in rows:
        try:
            out[row["stimulus_id"].strip()] = float(row["score"])
        except ValueError:
            raise DataError(f"reference score {row['score']!r} is not a number") from None
    return out


@dataclass
class StimulusResult:
    stimulus_id: str
    n: int = 0
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    numerical_failure: bool = False


def run_exploratory(matrix, config, out_dir=None):
    """Suitability, scree, parallel analysis and EFA for one stimulus."""
    res = StimulusResult(matrix.stimulus_id, matrix.n)
    R = pearson_matrix(matrix)
    suit = assess(R, matrix.n, config.screen_threshold)
    scree = efa_mod.reduced_eigenvalues(R, "smc")
    pa = efa_mod.parallel_analysis(matrix, config.replicates, config.seed,
                                   config.pa_reference_value)
    k1 = efa_mod.principal_axis_factoring(R, 1)
    outputs = {
        "suitability.json": dumps(suit.to_dict()),
        "scree.csv": scree.to_csv(),
        "parallel.json": dumps(pa.to_dict()),
        "efa_k1.csv": k1.to_csv(2),
        "efa_k1.full.csv": k1.to_csv(None),
    }
    rotated = {}
    if matrix.p >= 3:
        k2 = efa_mod.principal_axis_factoring(R, 2)
        for method in ("varimax", "promax"):
            try:
                sol = efa_mod.rotate(k2, method, kappa=config.kappa)
            except NumericalError as exc:
                res.errors.append(f"efa k=2 {method}: {exc}")
                res.numerical_failure = True
                continue
            rotated[method] = sol
            outputs[f"efa_k2_{method}.csv"] = sol.to_csv(2)
            outputs[f"efa_k2_{method}.full.csv"] = sol.to_csv(None)
    if out_dir is not None:
        for name, text in outputs.items():
            _write(out_dir / name, text)
            res.files.append(name)
    cut = config.loading_cut
    res.summary.update({
        "n": matrix.n,
        "p": matrix.p,
        "low_correlation_items": list(suit.low_correlation_items),
        "bartlett_p": suit.bartlett.p_value,
        "kmo_overall": suit.kmo_overall,
        "kmo_min": min(suit.kmo_per_item.values()),
        "parallel_factors": pa.n_factors,
        "scree_eigenvalues_top3": list(scree.eigenvalues[:3]),
        "efa_k1_converged": k1.converged,
        "efa_k1_heywood": list(k1.heywood),
        "items_loading_above_cut": [i for i, v in zip(k1.items, k1.loadings[:, 0]) if v > cut],
    })
    if not k1.converged:
        res.errors.append("efa k=1 did not converge")
    return res, {"suitability": suit, "scree": scree, "parallel": pa, "k1": k1, **rotated}


def select_pool(k1_solutions, loading_cut, max_pool):
    """Items loading above the cut on every stimulus, strongest first, capped."""
    sols = list(k1_solutions)
    if not sols:
        return ()
    items = sols[0].items
    loads = np.array([[s.loading(i) for i in items] for s in sols])
    ok = np.all(loads > loading_cut, axis=0)
    mean = loads.mean(axis=0)
    chosen = sorted((i for i, good in zip(items, ok) if good),
                    key=lambda i: (-mean[items.index(i)], i))
    return tuple(sorted(chosen[:max_pool]))


def run_cfa(matrix, items):
    sol = cfa_mod.fit_one_factor(matrix, cfa_mod.CfaModel(tuple(items)))
    verdict = cfa_mod.interpret_fit(sol) if sol.converged else None
    return sol, verdict


def _error(exc):
    print(f"error: {exc}", file=sys.stderr)


def run_pipeline(config, stream=None, echo=print):
    """Run every stage and write the bundle. Returns the process exit code.

    A stimulus that fails does not stop the run; its errors are listed in
    ``summary.json`` and the exit code becomes 3 if any failure was
    numerical, otherwise 2.
    """
    out = Path(config.out or "report")
    try:
        raw, screening, catalog = load_survey(config, stream)
        references = read_references(config.references) if config.references else {}
    except DataError as exc:
        _error(exc)
        return EXIT_DATA

    out.mkdir(parents=True, exist_ok=True)
    _write(out / "screening.json", dumps(screening.to_dict()))

    matrices = {}
    results = {}
    for sid in raw.stimuli:
        try:
            matrices[sid] = build_matrix(raw, sid, catalog)
        except DataError as exc:
            results[sid] = StimulusResult(sid, errors=[f"build: {exc}"])

    k1 = {}
    for sid, m in matrices.items():
        try:
            res, parts = run_exploratory(m, config, out / _safe_dirname(sid))
            k1[sid] = parts["k1"]
        except DataError as exc:
            res = StimulusResult(sid, m.n, errors=[f"exploratory: {exc}"])
        except NumericalError as exc:
            res = StimulusResult(sid, m.n, errors=[f"exploratory: {exc}"],
                                 numerical_failure=True)
        results[sid] = res

    pool = select_pool([k1[s] for s in sorted(k1)], config.loading_cut, config.max_pool)
    sizes = tuple(s for s in config.subset_sizes if 2 <= s <= len(pool))
    best = {}
    usable = {s: matrices[s] for s in sorted(k1)}
    if sizes and usable:
        search = subset_search(usable, pool, sizes)
        text = "".join(r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1]
                       for i, r in enumerate(search[s] for s in sizes))
        _write(out / "alpha_subsets.csv", text)
        for s in sizes:
            b = search[s].best
            best[s] = {"items": list(b.items), "mean_alpha": b.mean_alpha,
                       "min_alpha": b.min_alpha, "max_alpha": b.max_alpha}

    if config.cfa_scale:
        try:
            cfa_items = catalog.scale(config.cfa_scale)
        except DataError as exc:
            _error(exc)
            return EXIT_DATA
    elif best:
        cfa_items = tuple(best[max(best)]["items"])
    else:
        cfa_items = ()
    comparison = None
    if config.comparison_scale:
        try:
            comparison = catalog.scale(config.comparison_scale)
        except DataError as exc:
            _error(exc)
            return EXIT_DATA

    scale_matrices = {}
    for sid, m in matrices.items():
        res = results[sid]
        sdir = out / _safe_dirname(sid)
        if len(cfa_items) >= 3:
            try:
                sol, verdict = run_cfa(m, cfa_items)
                _write(sdir / "cfa.json", dumps({"solution": sol.to_dict(), "verdict": verdict}))
                _write(sdir / "cfa_loadings.csv", sol.loadings_csv(3))
                _write(sdir / "cfa_loadings.full.csv", sol.loadings_csv(None))
                res.files += ["cfa.json", "cfa_loadings.csv", "cfa_loadings.full.csv"]
                res.summary["cfa"] = {
                    "items": list(cfa_items), "converged": sol.converged,
                    "chi2": sol.chi2, "df": sol.df, "p_value": sol.p_value,
                    "tli": sol.tli, "cfi": sol.cfi, "srmr": sol.srmr, "rmsea": sol.rmsea,
                    "verdict": None if verdict is None else verdict["overall"],
                }
                if not sol.converged:
                    res.errors.append("cfa did not converge")
                    res.numerical_failure = True
            except DataError as exc:
                res.errors.append(f"cfa: {exc}")
            except NumericalError as exc:
                res.errors.append(f"cfa: {exc}")
                res.numerical_failure = True
        if cfa_items:
            try:
                alpha = cronbach_alpha(m, cfa_items).alpha
                res.summary["scale_alpha"] = alpha
                validity = {"scale": list(cfa_items), "alpha": alpha,
                            "mean_ci": mean_ci(composite_score(m, cfa_items),
                                               config.level).to_dict()}
                if comparison:
                    r = convergent_validity(m, cfa_items, comparison)
                    validity["convergent"] = {"comparison_scale": list(comparison), "r": r,
                                              "label": convergent_label(r)}
                if config.covariate in raw.demographic_ids:
                    cov = respondent_covariate(raw, m, config.covariate)
                    r = discriminant_validity(m, cfa_items, cov)
                    validity["discriminant"] = {"covariate": config.covariate, "r": r,
                                                "label": discriminant_label(r)}
                _write(sdir / "validity.json", dumps(validity))
                res.files.append("validity.json")
                scale_matrices[sid] = m
            except DataError as exc:
                res.errors.append(f"validity: {exc}")

    groups = None
    if len(scale_matrices) >= 2:
        groups = known_group_comparison(scale_matrices, cfa_items, config.level)
        _write(out / "known_groups.csv", groups.to_csv())
        _write(out / "known_groups_items.csv",
               item_means_csv(scale_matrices, cfa_items, config.level))
    mapped = {sid: map_unit_to_likert(x, config.likert) for sid, x in sorted(references.items())}
    _write(out / "validity.json", dumps({
        "scale": list(cfa_items),
        "known_groups": None if groups is None else groups.to_dict(),
        "mapped_references": mapped,
    }))

    failures = {sid: r.errors for sid, r in sorted(results.items()) if r.errors}
    numerical = any(r.numerical_failure for r in results.values())
    exit_code = EXIT_NUMERICAL if numerical else EXIT_DATA if failures else EXIT_OK
    summary = {
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in asdict(config).items() if k not in ("input", "out")},
        "screening": {"respondents_before": screening.respondents_before,
                      "respondents_after": screening.respondents_after,
                      "excluded": len(screening.exclusions)},
        "stimuli": {sid: results[sid].summary for sid in sorted(results)},
        "pool": list(pool),
        "best_subsets": {str(s): v for s, v in best.items()},
        "cfa_scale": list(cfa_items),
        "known_group_ordering": None if groups is None else list(groups.ordering),
        "known_groups_separated": None if groups is None else groups.separated,
        "failures": failures,
        "exit_code": exit_code,
    }
    _write(out / "summary.json", dumps(summary))

    echo(f"respondents: {screening.respondents_after} retained of "
         f"{screening.respondents_before}")
    for sid in sorted(results):
        s = results[sid].summary
        line = f"{sid}: n={results[sid].n}"
        if "parallel_factors" in s:
            line += f" factors={s['parallel_factors']}"
        if "cfa" in s and s["cfa"]["verdict"]:
            line += f" cfa={s['cfa']['verdict']}"
        if results[sid].errors:
            line += f" errors={len(results[sid].errors)}"
        echo(line)
    if groups is not None:
        echo("ordering: " + " > ".join(groups.ordering))
    echo(f"report written to {out}")
    return exit_code
