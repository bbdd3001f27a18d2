"""Survey ingest, respondent screening, reverse scoring and rating matrices.

The on-disk survey format is a wide CSV with one row per
``(respondent_id, stimulus_id)`` pair::

    respondent_id,stimulus_id,age,gender,<item_id...>,<check_id...>

Item columns hold integer Likert responses (empty string = missing).
Attention-check columns are recognised by a name prefix (``check`` by
default) and hold ``1``/``0`` (also ``pass``/``fail``, ``true``/``false``).
Every remaining column is kept as a demographic attribute.
"""

import csv
import io
import sys
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

POSITIVE = "positive"
REVERSED = "reversed"

ID_COLUMNS = ("respondent_id", "stimulus_id")
DEFAULT_DEMOGRAPHICS = ("age", "gender")

_PASS = {"1", "pass", "passed", "true", "yes", "y", "correct"}
_FAIL = {"0", "fail", "failed", "false", "no", "n", "incorrect", ""}


@dataclass(frozen=True)
class LikertSpec:
    """Integer response range of a Likert item, inclusive on both ends."""

    min: int = 1
    max: int = 7

    def __post_init__(self):
        if int(self.min) != self.min or int(self.max) != self.max:
            raise DataError("Likert bounds must be integers")
        if not self.min < self.max:
            raise DataError(f"Likert min ({self.min}) must be below max ({self.max})")

    @property
    def n_categories(self):
        return self.max - self.min + 1

    @property
    def midpoint(self):
        return (self.min + self.max) / 2

    def contains(self, value):
        return self.min <= value <= self.max


@dataclass(frozen=True)
class ItemCatalog:
    """Ordered item ids with their polarity, plus named item subsets (scales)."""

    items: tuple
    scales: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        items = tuple((str(i), str(pol)) for i, pol in self.items)
        ids = [i for i, _ in items]
        dupes = sorted(k for k, c in Counter(ids).items() if c > 1)
        if dupes:
            raise DataError(f"duplicate item ids in catalog: {dupes}")
        for item_id, pol in items:
            if pol not in (POSITIVE, REVERSED):
                raise DataError(f"item {item_id!r}: polarity must be "
                                f"{POSITIVE!r} or {REVERSED!r}, got {pol!r}")
        known = set(ids)
        scales = {}
        for name, members in dict(self.scales).items():
            members = tuple(str(m) for m in members)
            unknown = [m for m in members if m not in known]
            if unknown:
                raise DataError(f"scale {name!r} references unknown items {unknown}")
            if not members:
                raise DataError(f"scale {name!r} is empty")
            scales[str(name)] = members
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "scales", scales)

    @property
    def item_ids(self):
        return tuple(i for i, _ in self.items)

    @property
    def reversed_items(self):
        return frozenset(i for i, pol in self.items if pol == REVERSED)

    def polarity(self, item_id):
        for i, pol in self.items:
            if i == item_id:
                return pol
        raise DataError(f"unknown item {item_id!r}")

    def scale(self, name):
        try:
            return self.scales[name]
        except KeyError:
            raise DataError(f"unknown scale {name!r}; catalog defines "
                            f"{sorted(self.scales)}") from None

    @classmethod
    def from_mapping(cls, data):
        """Build from the parsed catalog file structure.

        ``data["items"]`` maps item id to polarity and ``data["scales"]``
        maps scale name to a list of item ids.
        """
        if "items" not in data:
            raise DataError("catalog has no [items] table")
        raw_items = data["items"]
        if isinstance(raw_items, Mapping):
            items = tuple(raw_items.items())
        else:
            items = tuple((i, POSITIVE) for i in raw_items)
        return cls(items=items, scales=dict(data.get("scales", {})))

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            with path.open("rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise DataError(f"catalog file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"cannot parse catalog {path}: {exc}") from None
        return cls.from_mapping(data)

    @classmethod
    def bundled(cls, name):
        """Load one of the catalogs shipped with the package.

        ``"exploratory"`` holds the 31 rated terms with their reduced 12-item
        and 3/4/5-item subsets; ``"validation"`` holds the final five-item
        scale together with the five-item classic-aesthetics comparison scale.
        """
        ref = resources.files("likertkit") / "data" / f"{name}.toml"
        try:
            text = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise DataError(f"no bundled catalog named {name!r}") from None
        return cls.from_mapping(tomllib.loads(text))

    @classmethod
    def from_items(cls, item_ids, reversed_items=(), scales=None):
        rev = set(reversed_items)
        return cls(items=tuple((i, REVERSED if i in rev else POSITIVE) for i in item_ids),
                   scales=scales or {})


@dataclass(frozen=True)
class SurveyRow:
    respondent_id: str
    stimulus_id: str
    responses: Mapping[str, int | None]
    checks: Mapping[str, bool] = field(default_factory=dict)
    demographics: Mapping[str, str] = field(default_factory=dict)

    @property
    def failed_checks(self):
        return sum(1 for ok in self.checks.values() if not ok)


@dataclass(frozen=True)
class RawSurvey:
    """All submitted rows, in file order, before any screening."""

    rows: tuple
    item_ids: tuple
    check_ids: tuple = ()
    demographic_ids: tuple = DEFAULT_DEMOGRAPHICS
    likert: LikertSpec = LikertSpec()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        object.__setattr__(self, "check_ids", tuple(self.check_ids))
        object.__setattr__(self, "demographic_ids", tuple(self.demographic_ids))
        for row in self.rows:
            for item, value in row.responses.items():
                if value is not None and not self.likert.contains(value):
                    raise DataError(
                        f"respondent {row.respondent_id!r}, stimulus {row.stimulus_id!r}: "
                        f"{item}={value} outside [{self.likert.min}, {self.likert.max}]")

    @property
    def respondents(self):
        return tuple(sorted({r.respondent_id for r in self.rows}))

    @property
    def stimuli(self):
        return tuple(sorted({r.stimulus_id for r in self.rows}))

    def rows_for(self, stimulus_id):
        return [r for r in self.rows if r.stimulus_id == stimulus_id]

    def demographic(self, key):
        """Map respondent id to the first non-empty value of ``key``."""
        out = {}
        for row in self.rows:
            value = row.demographics.get(key, "")
            if value != "" and row.respondent_id not in out:
                out[row.respondent_id] = value
        return out


@dataclass(frozen=True)
class Exclusion:
    respondent_id: str
    reason: str
    rows: int


@dataclass(frozen=True)
class ScreeningReport:
    max_failed_checks: int
    respondents_before: int
    respondents_after: int
    exclusions: tuple = ()

    def to_dict(self):
        return {
            "max_failed_checks": self.max_failed_checks,
            "respondents_before": self.respondents_before,
            "respondents_after": self.respondents_after,
            "exclusions": [{"respondent_id": e.respondent_id, "reason": e.reason,
                            "rows": e.rows} for e in self.exclusions],
        }


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """Complete respondents x items responses for one stimulus.

    ``values`` is row-aligned with ``respondents`` and column-aligned with
    ``items``. Reversed items are already re-scored. ``likert`` may be None
    for matrices built from arbitrary real data.
    """

    stimulus_id: str
    respondents: tuple
    items: tuple
    values: np.ndarray
    likert: LikertSpec | None = LikertSpec()

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise DataError("rating values must be a 2-D array")
        object.__setattr__(self, "respondents", tuple(self.respondents))
        object.__setattr__(self, "items", tuple(self.items))
        if values.shape != (len(self.respondents), len(self.items)):
            raise DataError(f"values shape {values.shape} does not match "
                            f"{len(self.respondents)} respondents x {len(self.items)} items")
        if len(set(self.items)) != len(self.items):
            raise DataError("duplicate item ids in rating matrix")
        if self.likert is not None and values.size:
            if values.min() < self.likert.min or values.max() > self.likert.max:
                raise DataError(f"stimulus {self.stimulus_id!r}: values outside "
                                f"[{self.likert.min}, {self.likert.max}]")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, values, items=None, stimulus_id="", respondents=None, likert=None):
        values = np.asarray(values)
        n, p = values.shape
        if items is None:
            items = tuple(f"item{j + 1}" for j in range(p))
        if respondents is None:
            respondents = tuple(f"r{i + 1:05d}" for i in range(n))
        return cls(stimulus_id, tuple(respondents), tuple(items), values, likert)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def index(self, items):
        lookup = {item: j for j, item in enumerate(self.items)}
        try:
            return [lookup[i] for i in items]
        except KeyError as exc:
            raise DataError(f"stimulus {self.stimulus_id!r} has no item {exc.args[0]!r}") from None

    def column(self, item):
        return self.values[:, self.index([item])[0]]

    def select(self, items):
        """Sub-matrix restricted to ``items`` in the given order."""
        items = tuple(items)
        return RatingMatrix(self.stimulus_id, self.respondents, items,
                            self.values[:, self.index(items)], self.likert)

    def as_float(self):
        return np.asarray(self.values, dtype=float)


def reverse_score(value, spec=LikertSpec()):
    """Mirror a response around the scale midpoint (``min + max - value``)."""
    if not spec.contains(value):
        raise DataError(f"value {value} outside [{spec.min}, {spec.max}]")
    return spec.min + spec.max - value


def screen_respondents(raw, max_failed_checks=2):
    """Drop duplicated respondents and those failing too many attention checks.

    A respondent counts as duplicated when any ``(respondent_id,
    stimulus_id)`` pair occurs more than once; every row of such a
    respondent is removed. Failed checks are counted across all of a
    respondent's rows, and respondents with ``failed >= max_failed_checks``
    are removed. Retained rows are passed through untouched.
    """
    if max_failed_checks < 0:
        raise DataError("max_failed_checks must be >= 0")
    pair_counts = Counter((r.respondent_id, r.stimulus_id) for r in raw.rows)
    duplicated = {rid for (rid, _), c in pair_counts.items() if c > 1}
    failed = defaultdict(int)
    n_rows = Counter()
    for row in raw.rows:
        failed[row.respondent_id] += row.failed_checks
        n_rows[row.respondent_id] += 1

    exclusions = []
    dropped = set()
    for rid in sorted(n_rows):
        if rid in duplicated:
            exclusions.append(Exclusion(rid, "duplicate submission", n_rows[rid]))
            dropped.add(rid)
        elif failed[rid] >= max_failed_checks:
            exclusions.append(Exclusion(
                rid, f"failed {failed[rid]} attention check(s) "
                     f"(threshold {max_failed_checks})", n_rows[rid]))
            dropped.add(rid)

    kept = tuple(r for r in raw.rows if r.respondent_id not in dropped)
    if not kept:
        raise DataError("no usable respondents remain after screening")
    report = ScreeningReport(max_failed_checks, len(n_rows), len(n_rows) - len(dropped),
                             tuple(exclusions))
    screened = RawSurvey(kept, raw.item_ids, raw.check_ids, raw.demographic_ids, raw.likert)
    return screened, report


def build_matrix(raw, stimulus_id, catalog, missing_policy="listwise_drop"):
    """Assemble the rating matrix of one stimulus.

    Items are the catalog items, sorted lexicographically; respondents are
    sorted by id. Reversed items are re-scored. Respondents with any
    missing catalog item are dropped.
    """
    if missing_policy != "listwise_drop":
        raise DataError(f"unsupported missing_policy {missing_policy!r}")
    rows = raw.rows_for(stimulus_id)
    if not rows:
        raise DataError(f"unknown stimulus {stimulus_id!r}")
    items = tuple(sorted(catalog.item_ids))
    absent = [i for i in items if i not in raw.item_ids]
    if absent:
        raise DataError(f"survey has no column for catalog items {absent}")
    reversed_items = catalog.reversed_items
    spec = raw.likert

    complete = []
    for row in sorted(rows, key=lambda r: r.respondent_id):
        vals = [row.responses.get(i) for i in items]
        if any(v is None for v in vals):
            continue
        complete.append((row.respondent_id,
                         [reverse_score(v, spec) if i in reversed_items else v
                          for i, v in zip(items, vals)]))
    if not complete:
        raise DataError(f"stimulus {stimulus_id!r}: every respondent has missing items")
    respondents = tuple(rid for rid, _ in complete)
    values = np.array([v for _, v in complete], dtype=np.int64)
    return RatingMatrix(stimulus_id, respondents, items, values, spec)


def composite_score(matrix, scale_items):
    """Per-respondent mean over ``scale_items`` (already reverse-scored)."""
    scale_items = tuple(scale_items)
    if not scale_items:
        raise DataError("scale must contain at least one item")
    cols = matrix.index(scale_items)
    return matrix.as_float()[:, cols].mean(axis=1)


def respondent_covariate(raw, matrix, key):
    """Numeric demographic ``key`` aligned with ``matrix.respondents``."""
    lookup = raw.demographic(key)
    out = np.empty(matrix.n)
    for i, rid in enumerate(matrix.respondents):
        try:
            out[i] = float(lookup[rid])
        except KeyError:
            raise DataError(f"respondent {rid!r} has no {key!r} value") from None
        except ValueError:
            raise DataError(f"respondent {rid!r}: {key}={lookup[rid]!r} is not numeric") from None
    return out


def _parse_check(value, column, line):
    v = value.strip().lower()
    if v in _PASS:
        return True
    if v in _FAIL:
        return False
    raise DataError(f"line {line}: cannot read attention check {column}={value!r}")


def _parse_response(value, column, line):
    v = value.strip()
    if v == "":
        return None
    try:
        f = float(v)
    except ValueError:
        raise DataError(f"line {line}: {column}={value!r} is not a number") from None
    if not f.is_integer():
        raise DataError(f"line {line}: {column}={value!r} is not an integer response")
    return int(f)


def read_survey_csv(source, catalog=None, likert=LikertSpec(), check_prefix="check",
                    demographics=DEFAULT_DEMOGRAPHICS):
    """Parse a wide-format survey CSV into a :class:`RawSurvey`.

    ``source`` is a path or an open text stream. With a catalog, only the
    catalog items are treated as responses and all of them must be present;
    without one, every column that is neither an id, a demographic nor an
    attention check is taken to be an item.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8-sig")
        except FileNotFoundError:
            raise DataError(f"input file not found: {path}") from None
        return read_survey_csv(io.StringIO(text), catalog, likert, check_prefix, demographics)

    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("survey file is empty") from None
    missing_ids = [c for c in ID_COLUMNS if c not in header]
    if missing_ids:
        raise DataError(f"survey header lacks required columns {missing_ids}")
    if len(set(header)) != len(header):
        raise DataError("survey header contains duplicate column names")

    checks = [h for h in header if h.startswith(check_prefix) and h not in ID_COLUMNS]
    if catalog is not None:
        items = list(catalog.item_ids)
        absent = [i for i in items if i not in header]
        if absent:
            raise DataError(f"survey lacks columns for catalog items {absent}")
        demo = [h for h in header if h not in ID_COLUMNS and h not in items and h not in checks]
    else:
        demo = [h for h in header if h in demographics]
        items = [h for h in header if h not in ID_COLUMNS and h not in demo and h not in checks]
    col = {h: j for j, h in enumerate(header)}

    rows = []
    for line, rec in enumerate(reader, start=2):
        if not any(cell.strip() for cell in rec):
            continue
        if len(rec) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(rec)}")
        rid = rec[col["respondent_id"]].strip()
        sid = rec[col["stimulus_id"]].strip()
        if not rid or not sid:
            raise DataError(f"line {line}: empty respondent_id or stimulus_id")
        responses = {i: _parse_response(rec[col[i]], i, line) for i in items}
        for i, v in responses.items():
            if v is not None and not likert.contains(v):
                raise DataError(f"line {line}: {i}={v} outside [{likert.min}, {likert.max}]")
        rows.append(SurveyRow(
            rid, sid, responses,
            {c: _parse_check(rec[col[c]], c, line) for c in checks},
            {d: rec[col[d]].strip() for d in demo},
        ))
    return RawSurvey(tuple(rows), tuple(items), tuple(checks), tuple(demo), likert)


def write_survey_csv(raw, target):
    """Write ``raw`` in the wide CSV format read by :func:`read_survey_csv`."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_survey_csv(raw, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow([*ID_COLUMNS, *raw.demographic_ids, *raw.item_ids, *raw.check_ids])
    for row in raw.rows:
        writer.writerow([
            row.respondent_id, row.stimulus_id,
            *(row.demographics.get(d, "") for d in raw.demographic_ids),
            *("" if row.responses.get(i) is None else row.responses[i] for i in raw.item_ids),
            *(1 if row.checks.get(c, False) else 0 for c in raw.check_ids),
        ])


def survey_from_matrices(matrices, demographics=None, checks=None):
    """Flatten per-stimulus rating matrices back into a :class:`RawSurvey`.

    ``demographics`` maps respondent id to a dict of attributes and
    ``checks`` maps ``(respondent_id, stimulus_id)`` to a dict of check
    outcomes. Items absent from a stimulus are written as missing.
    """
    matrices = list(matrices)
    if not matrices:
        raise DataError("no matrices to convert")
    items = tuple(dict.fromkeys(i for m in matrices for i in m.items))
    demographics = demographics or {}
    checks = checks or {}
    demo_ids = tuple(dict.fromkeys(k for d in demographics.values() for k in d))
    check_ids = tuple(dict.fromkeys(k for d in checks.values() for k in d))
    rows = []
    for m in matrices:
        for rid, vals in zip(m.respondents, m.values):
            responses = dict.fromkeys(items)
            responses.update({i: int(v) for i, v in zip(m.items, vals)})
            rows.append(SurveyRow(rid, m.stimulus_id, responses,
                                  dict(checks.get((rid, m.stimulus_id), {})),
                                  {k: str(v) for k, v in demographics.get(rid, {}).items()}))
    likert = matrices[0].likert or LikertSpec()
    return RawSurvey(tuple(rows), items, check_ids, demo_ids, likert)


def iter_matrices(raw, catalog, stimuli: Sequence[str] | None = None) -> Iterable[RatingMatrix]:
    for sid in stimuli or raw.stimuli:
        yield build_matrix(raw, sid, catalog)
