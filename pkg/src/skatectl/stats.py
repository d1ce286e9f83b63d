"""Likert item analysis and the Kolmogorov-Smirnov comparison of two controllers.

Two K-S decision procedures are exposed side by side:

* ``paper-method``: D compared against Massey's one-sample critical-value
  table at the first sample's n (tabled rows, linear interpolation for
  untabled n <= 35, the asymptotic ``c/sqrt(n)`` row above 35);
* ``standard-method``: the textbook two-sample critical value
  ``c(alpha) * sqrt((n1 + n2) / (n1 * n2))``.

In both, H0 is "both response distributions are the same" and H0 is
rejected when D is at or above the critical value.
"""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence, TextIO

import numpy as np

ALPHAS = (0.20, 0.15, 0.10, 0.05, 0.01)

LIKERT_CATEGORIES = ("Strongly agree", "Weakly Agree", "Can't say", "Weakly Disagree", "Strongly disagree")

# Massey (1951), one-sample K-S critical values of D, columns in ALPHAS order.
MASSEY_TABLE: dict[int, tuple[float, ...]] = {
    1: (0.900, 0.925, 0.950, 0.975, 0.995),
    2: (0.684, 0.726, 0.776, 0.842, 0.929),
    3: (0.565, 0.597, 0.642, 0.708, 0.828),
    4: (0.494, 0.525, 0.564, 0.624, 0.733),
    5: (0.446, 0.474, 0.510, 0.565, 0.669),
    6: (0.410, 0.436, 0.470, 0.521, 0.618),
    7: (0.381, 0.405, 0.438, 0.486, 0.577),
    8: (0.358, 0.381, 0.411, 0.457, 0.543),
    9: (0.339, 0.360, 0.388, 0.432, 0.514),
    10: (0.322, 0.342, 0.368, 0.410, 0.490),
    11: (0.307, 0.326, 0.352, 0.391, 0.468),
    12: (0.295, 0.313, 0.338, 0.375, 0.450),
    13: (0.284, 0.302, 0.325, 0.361, 0.433),
    14: (0.274, 0.292, 0.314, 0.349, 0.418),
    15: (0.266, 0.283, 0.304, 0.338, 0.404),
    16: (0.258, 0.274, 0.295, 0.328, 0.392),
    17: (0.250, 0.266, 0.286, 0.318, 0.381),
    18: (0.244, 0.259, 0.278, 0.309, 0.371),
    19: (0.237, 0.252, 0.272, 0.301, 0.363),
    20: (0.231, 0.246, 0.264, 0.294, 0.356),
    25: (0.21, 0.22, 0.24, 0.27, 0.32),
    30: (0.19, 0.20, 0.22, 0.24, 0.29),
    35: (0.18, 0.19, 0.21, 0.23, 0.27),
}
MASSEY_ASYMPTOTIC = (1.07, 1.14, 1.22, 1.36, 1.63)
_TABLE_LIMIT = 35


class SurveyParseError(ValueError):
    def __init__(self, row: int, column: str | None, message: str):
        where = f"row {row}" + (f", column {column}" if column else "")
        super().__init__(f"{where}: {message}")
        self.row = row
        self.column = column


def _alpha_index(alpha: float) -> int:
    for i, a in enumerate(ALPHAS):
        if math.isclose(alpha, a, abs_tol=1e-9):
            return i
    raise ValueError(f"alpha must be one of {ALPHAS}, got {alpha}")


# -- Likert items -----------------------------------------------------------


@dataclass(frozen=True)
class LikertDataset:
    """Responses indexed (participant, question); ``None`` marks an item the
    participant left blank."""

    controller_label: str
    responses: tuple[tuple[int | None, ...], ...]
    question_labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "responses", tuple(tuple(r) for r in self.responses))
        object.__setattr__(self, "question_labels", tuple(self.question_labels))
        if not self.question_labels:
            raise ValueError("dataset has no questions")
        k = len(self.question_labels)
        for p, row in enumerate(self.responses):
            if len(row) != k:
                raise ValueError(f"participant {p} has {len(row)} responses, expected {k}")
            for v in row:
                if v is not None and v not in (1, 2, 3, 4, 5):
                    raise ValueError(f"participant {p}: response {v} outside 1..5")

    @property
    def n_participants(self) -> int:
        return len(self.responses)

    def column(self, q: int) -> list[int]:
        return [row[q] for row in self.responses if row[q] is not None]

    @classmethod
    def from_columns(cls, label: str, columns: Sequence[Sequence[int]], questions: Sequence[str] | None = None):
        """Build from per-question response lists of possibly unequal length."""
        width = max((len(c) for c in columns), default=0)
        rows = [tuple(c[p] if p < len(c) else None for c in columns) for p in range(width)]
        questions = questions or [f"q{i + 1}" for i in range(len(columns))]
        return cls(label, tuple(rows), tuple(questions))


@dataclass(frozen=True)
class ItemStats:
    mean: float
    sd: float
    n: int


def item_stats(ds: LikertDataset) -> list[ItemStats]:
    """Per-question mean and sample (n-1) standard deviation."""
    if ds.n_participants == 0:
        raise ValueError("dataset has no participants")
    out = []
    for q, label in enumerate(ds.question_labels):
        col = ds.column(q)
        if not col:
            raise ValueError(f"question {label} has no responses")
        sd = statistics.stdev(col) if len(col) > 1 else math.nan
        out.append(ItemStats(statistics.fmean(col), sd, len(col)))
    return out


@dataclass(frozen=True)
class DiffRow:
    question: str
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    diff: float


@dataclass(frozen=True)
class DiffTable:
    label_a: str
    label_b: str
    rows: tuple[DiffRow, ...]

    @property
    def diffs(self) -> list[float]:
        return [r.diff for r in self.rows]

    @property
    def total(self) -> float:
        return math.fsum(self.diffs)


@dataclass(frozen=True)
class MeanSummary:
    """Precomputed per-question means (and optionally SDs) for one controller."""

    label: str
    questions: tuple[str, ...]
    means: tuple[float, ...]
    sds: tuple[float, ...] | None = None


def _summarize(x) -> MeanSummary:
    if isinstance(x, MeanSummary):
        return x
    if isinstance(x, LikertDataset):
        st = item_stats(x)
        return MeanSummary(x.controller_label, x.question_labels, tuple(s.mean for s in st), tuple(s.sd for s in st))
    means = tuple(float(m) for m in x)
    return MeanSummary("", tuple(f"q{i + 1}" for i in range(len(means))), means)


def mean_diff_table(a, b) -> DiffTable:
    """Per-question ``mean(b) - mean(a)`` and their sum.

    ``a`` and ``b`` may be LikertDatasets, MeanSummary objects or plain
    sequences of per-question means."""
    sa, sb = _summarize(a), _summarize(b)
    if sa.questions != sb.questions:
        raise ValueError("question sets differ between the two controllers")
    nan = (math.nan,) * len(sa.means)
    rows = tuple(
        DiffRow(q, ma, da, mb, db, mb - ma)
        for q, ma, da, mb, db in zip(sa.questions, sa.means, sa.sds or nan, sb.means, sb.sds or nan)
    )
    return DiffTable(sa.label, sb.label, rows)


# -- response reconstruction --------------------------------------------------


@lru_cache(maxsize=4)
def _compositions(max_n: int) -> np.ndarray:
    """All count vectors over the 5 Likert values with 1 <= total <= max_n."""
    g = np.indices((max_n + 1,) * 4).reshape(4, -1).T
    g = g[g.sum(axis=1) <= max_n]
    blocks = []
    for c5 in range(max_n + 1):
        part = g[g.sum(axis=1) <= max_n - c5]
        blocks.append(np.column_stack([part, np.full(len(part), c5)]))
    out = np.concatenate(blocks)
    return out[out.sum(axis=1) >= 1]


def reconstruct_responses(
    mean: float, sd: float, max_n: int = 30, decimals: int = 2, ddof: int = 1, min_n: int = 2
) -> list[tuple[int, ...]]:
    """Every count vector (c1..c5 for values 1..5) whose mean and standard
    deviation round to the given values at ``decimals`` places.

    Rounding is accepted in either direction at exact ties.  Results are
    sorted by total count, then lexicographically."""
    comp = _compositions(max_n)
    n = comp.sum(axis=1)
    keep = n >= max(min_n, ddof + 1)
    comp, n = comp[keep], n[keep]
    values = np.arange(1, 6)
    s1 = comp @ values
    s2 = comp @ (values * values)
    m = s1 / n
    var = np.maximum(s2 - n * m * m, 0.0) / (n - ddof)
    tol = 0.5 * 10.0 ** -decimals + 1e-9
    hit = (np.abs(m - mean) <= tol) & (np.abs(np.sqrt(var) - sd) <= tol)
    found = [tuple(int(x) for x in row) for row in comp[hit]]
    return sorted(found, key=lambda c: (sum(c), c))


def expand_counts(counts: Sequence[int]) -> list[int]:
    """Counts over values 1..5 to a sorted response list."""
    return [v for v, c in zip(range(1, 6), counts) for _ in range(c)]


# -- Kolmogorov-Smirnov ------------------------------------------------------


@dataclass(frozen=True)
class CategoryCounts:
    counts: tuple[int, ...]
    labels: tuple[str, ...] = LIKERT_CATEGORIES

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")

    @property
    def n(self) -> int:
        return sum(self.counts)

    def cumulative_proportions(self) -> list[float]:
        if self.n <= 0:
            raise ValueError("category counts total zero")
        cum, out = 0, []
        for c in self.counts:
            cum += c
            out.append(cum / self.n)
        return out


@dataclass(frozen=True)
class KsTable:
    cum_a: tuple[float, ...]
    cum_b: tuple[float, ...]
    abs_diff: tuple[float, ...]

    @property
    def d(self) -> float:
        return max(self.abs_diff)


def ks_table(a: CategoryCounts, b: CategoryCounts) -> KsTable:
    """Cumulative proportions per category and their absolute differences."""
    if a.n <= 0 or b.n <= 0:
        raise ValueError("both samples need n > 0")
    k = max(len(a.counts), len(b.counts))
    ca = CategoryCounts(a.counts + (0,) * (k - len(a.counts)), ()).cumulative_proportions()
    cb = CategoryCounts(b.counts + (0,) * (k - len(b.counts)), ()).cumulative_proportions()
    return KsTable(tuple(ca), tuple(cb), tuple(abs(x - y) for x, y in zip(ca, cb)))


def ks_d_statistic(a: CategoryCounts, b: CategoryCounts) -> float:
    """D = max over categories of |cumA/nA - cumB/nB|."""
    return ks_table(a, b).d


def ks_critical(n: int, alpha: float) -> float:
    """Massey one-sample critical value of D."""
    if n < 1:
        raise ValueError("n must be >= 1")
    col = _alpha_index(alpha)
    if n in MASSEY_TABLE:
        return MASSEY_TABLE[n][col]
    if n > _TABLE_LIMIT:
        return MASSEY_ASYMPTOTIC[col] / math.sqrt(n)
    lo = max(k for k in MASSEY_TABLE if k < n)
    hi = min(k for k in MASSEY_TABLE if k > n)
    w = (n - lo) / (hi - lo)
    return MASSEY_TABLE[lo][col] + w * (MASSEY_TABLE[hi][col] - MASSEY_TABLE[lo][col])


def ks_critical_is_interpolated(n: int) -> bool:
    return n not in MASSEY_TABLE and n <= _TABLE_LIMIT


def two_sample_coefficient(alpha: float) -> float:
    """c(alpha) = sqrt(-ln(alpha / 2) / 2)."""
    _alpha_index(alpha)
    return math.sqrt(-0.5 * math.log(alpha / 2.0))


def two_sample_critical(n1: int, n2: int, alpha: float) -> float:
    if n1 < 1 or n2 < 1:
        raise ValueError("sample sizes must be >= 1")
    return two_sample_coefficient(alpha) * math.sqrt((n1 + n2) / (n1 * n2))


@dataclass(frozen=True)
class KsDecision:
    alpha: float
    critical: float
    reject: bool

    @property
    def label(self) -> str:
        return "Reject" if self.reject else "FailToReject"


def _decide(d: float, critical: float) -> bool:
    return d >= critical - 1e-12


def ks_decide(d: float, n: int, alpha: float) -> KsDecision:
    """Reject H0 when D is equal to or larger than the tabled critical value."""
    if not 0.0 <= d <= 1.0:
        raise ValueError("D must be in [0, 1]")
    crit = ks_critical(n, alpha)
    return KsDecision(alpha, crit, _decide(d, crit))


@dataclass(frozen=True)
class KsResult:
    d_statistic: float
    n: int
    n_b: int
    table: KsTable
    decisions: Mapping[float, KsDecision]
    standard_decisions: Mapping[float, KsDecision]
    interpolated: bool = False

    @property
    def critical_values(self) -> dict[float, float]:
        return {a: dec.critical for a, dec in self.decisions.items()}


def ks_test(a: CategoryCounts, b: CategoryCounts) -> KsResult:
    table = ks_table(a, b)
    d = table.d
    n = a.n
    tabled = {alpha: ks_decide(d, n, alpha) for alpha in ALPHAS}
    standard = {}
    for alpha in ALPHAS:
        crit = two_sample_critical(a.n, b.n, alpha)
        standard[alpha] = KsDecision(alpha, crit, _decide(d, crit))
    return KsResult(d, n, b.n, table, tabled, standard, ks_critical_is_interpolated(n))


def claim_disagreements(result: KsResult, claims: Mapping[float, bool]) -> list[str]:
    """Compare externally stated reject/fail decisions with the table rule."""
    notes = []
    for alpha, claimed in sorted(claims.items()):
        dec = result.decisions[ALPHAS[_alpha_index(alpha)]]
        if dec.reject != claimed:
            op = ">=" if dec.reject else "<"
            notes.append(
                f"stated decision at alpha={alpha:.2f} is {'Reject' if claimed else 'FailToReject'}, "
                f"but the table rule gives {dec.label} (D={result.d_statistic:.4f} {op} {dec.critical:.3f})"
            )
    return notes


# -- I/O and reports ---------------------------------------------------------


def read_survey(fh: TextIO) -> dict[str, LikertDataset]:
    """Survey CSV ``participant,controller,q1..qK`` to one dataset per controller.
    Blank cells are unanswered items."""
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise SurveyParseError(1, None, "empty file") from None
    header = [h.strip() for h in header]
    if header[:2] != ["participant", "controller"]:
        raise SurveyParseError(1, None, "header must start with participant,controller")
    questions = header[2:]
    if not questions:
        raise ValueError("survey has no question columns")
    rows: dict[str, list[tuple[int | None, ...]]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SurveyParseError(line_no, None, f"expected {len(header)} fields, got {len(row)}")
        values: list[int | None] = []
        for q, cell in zip(questions, row[2:]):
            cell = cell.strip()
            if not cell:
                values.append(None)
                continue
            try:
                v = int(cell)
            except ValueError:
                raise SurveyParseError(line_no, q, f"{cell!r} is not an integer") from None
            if not 1 <= v <= 5:
                raise SurveyParseError(line_no, q, f"response {v} outside 1..5")
            values.append(v)
        rows.setdefault(row[1].strip(), []).append(tuple(values))
    return {c: LikertDataset(c, tuple(r), tuple(questions)) for c, r in rows.items()}


def load_survey(source: str | os.PathLike, controller: str | None = None) -> LikertDataset:
    with open(source, encoding="utf-8", newline="") as fh:
        sets = read_survey(fh)
    if controller is not None:
        if controller not in sets:
            raise ValueError(f"controller {controller!r} not in survey (have {sorted(sets)})")
        return sets[controller]
    if len(sets) != 1:
        raise ValueError(f"survey holds controllers {sorted(sets)}; pick one")
    return next(iter(sets.values()))


def load_surveys(source: str | os.PathLike) -> dict[str, LikertDataset]:
    with open(source, encoding="utf-8", newline="") as fh:
        return read_survey(fh)


def write_survey(datasets: Sequence[LikertDataset], fh: TextIO) -> None:
    questions = datasets[0].question_labels
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["participant", "controller", *questions])
    for ds in datasets:
        if ds.question_labels != questions:
            raise ValueError("datasets disagree on questions")
        for p, row in enumerate(ds.responses, start=1):
            w.writerow([p, ds.controller_label, *["" if v is None else v for v in row]])


def load_means(source: str | os.PathLike) -> tuple[MeanSummary, MeanSummary]:
    """Means CSV ``question,mean_a,sd_a,mean_b,sd_b`` (SD columns optional),
    with optional ``# a=<label>`` / ``# b=<label>`` comment lines."""
    labels = {"a": "a", "b": "b"}
    qs, ma, sa, mb, sb = [], [], [], [], []
    with open(source, encoding="utf-8", newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key in labels:
                    labels[key] = val
            else:
                lines.append(line)
    reader = csv.DictReader(lines)
    for i, row in enumerate(reader, start=2):
        try:
            qs.append(row["question"])
            ma.append(float(row["mean_a"]))
            mb.append(float(row["mean_b"]))
            sa.append(float(row.get("sd_a") or "nan"))
            sb.append(float(row.get("sd_b") or "nan"))
        except (KeyError, TypeError, ValueError) as exc:
            raise SurveyParseError(i, None, f"bad means row: {exc}") from None
    return (MeanSummary(labels["a"], tuple(qs), tuple(ma), tuple(sa)),
            MeanSummary(labels["b"], tuple(qs), tuple(mb), tuple(sb)))


def load_counts(source: str | os.PathLike) -> tuple[CategoryCounts, CategoryCounts, tuple[str, str]]:
    """Category counts CSV ``category,<label_a>,<label_b>``."""
    with open(source, encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if len(header) != 3:
            raise SurveyParseError(1, None, "expected header category,<a>,<b>")
        cats, ca, cb = [], [], []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                cats.append(row[0])
                ca.append(int(row[1]))
                cb.append(int(row[2]))
            except (IndexError, ValueError):
                raise SurveyParseError(i, None, f"bad counts row {row}") from None
    return CategoryCounts(tuple(ca), tuple(cats)), CategoryCounts(tuple(cb), tuple(cats)), (header[1], header[2])


def _fmt(x: float, places: int = 2) -> str:
    return "-" if math.isnan(x) else f"{x:.{places}f}"


def format_items(ds: LikertDataset) -> str:
    st = item_stats(ds)
    width = max(len("question"), *(len(q) for q in ds.question_labels))
    lines = [f"controller: {ds.controller_label}", f"{'question':<{width}}  {'n':>3}  {'mean':>6}  {'sd':>6}"]
    for q, s in zip(ds.question_labels, st):
        lines.append(f"{q:<{width}}  {s.n:>3}  {_fmt(s.mean):>6}  {_fmt(s.sd):>6}")
    return "\n".join(lines) + "\n"


def format_diff_table(table: DiffTable) -> str:
    width = max(len("question"), *(len(r.question) for r in table.rows))
    head = f"{'question':<{width}}  {'meanA':>6}  {'sdA':>6}  {'meanB':>6}  {'sdB':>6}  {'diff':>6}"
    lines = [f"A = {table.label_a or 'a'}, B = {table.label_b or 'b'}, diff = meanB - meanA", head]
    for r in table.rows:
        lines.append(f"{r.question:<{width}}  {_fmt(r.mean_a):>6}  {_fmt(r.sd_a):>6}  "
                     f"{_fmt(r.mean_b):>6}  {_fmt(r.sd_b):>6}  {_fmt(r.diff):>6}")
    lines.append(f"{'sum of differences':<{width + 32}}  {table.total:>6.2f}")
    return "\n".join(lines) + "\n"


def diff_table_csv(table: DiffTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["question", "meanA", "sdA", "meanB", "sdB", "diff"])
    for r in table.rows:
        w.writerow([r.question, repr(r.mean_a), repr(r.sd_a), repr(r.mean_b), repr(r.sd_b), repr(r.diff)])
    w.writerow(["sum", "", "", "", "", repr(table.total)])
    return buf.getvalue()


def format_ks_report(
    result: KsResult,
    labels: tuple[str, str] = ("a", "b"),
    categories: Sequence[str] = LIKERT_CATEGORIES,
    claims: Mapping[float, bool] | None = None,
) -> str:
    t = result.table
    lines = ["Kolmogorov-Smirnov comparison",
             "H0: both controllers' responses come from the same distribution "
             "(reject when D >= critical value)",
             f"{'category':<18} {'cum ' + labels[0]:>12} {'cum ' + labels[1]:>12} {'|diff|':>10}"]
    cats = list(categories) + [f"cat{i + 1}" for i in range(len(categories), len(t.abs_diff))]
    for c, x, y, d in zip(cats, t.cum_a, t.cum_b, t.abs_diff):
        lines.append(f"{c:<18} {x:>12.6f} {y:>12.6f} {d:>10.6f}")
    lines.append(f"D = {result.d_statistic:.6f}   n_a = {result.n}   n_b = {result.n_b}")
    lines.append("")
    interp = " (interpolated critical values)" if result.interpolated else ""
    lines.append(f"paper-method: one-sample Massey table at n = {result.n}{interp}")
    for alpha in ALPHAS:
        dec = result.decisions[alpha]
        lines.append(f"  alpha={alpha:.2f}  critical={dec.critical:.4f}  {dec.label}")
    lines.append(f"standard-method: two-sample c(alpha)*sqrt((n1+n2)/(n1*n2)), n1={result.n}, n2={result.n_b}")
    for alpha in ALPHAS:
        dec = result.standard_decisions[alpha]
        lines.append(f"  alpha={alpha:.2f}  critical={dec.critical:.4f}  {dec.label}")
    notes = claim_disagreements(result, claims or {})
    if notes:
        lines.append("")
        lines.extend(f"NOTE: {n}" for n in notes)
    return "\n".join(lines) + "\n"


def ks_report_csv(result: KsResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "alpha", "d", "critical", "decision"])
    for method, decs in (("paper-method", result.decisions), ("standard-method", result.standard_decisions)):
        for alpha in ALPHAS:
            dec = decs[alpha]
            w.writerow([method, alpha, repr(result.d_statistic), repr(dec.critical), dec.label])
    return buf.getvalue()


def load_claims(source: str | os.PathLike) -> dict[float, bool]:
    """Stated decisions recorded as ``# claim <alpha>=reject|fail`` comment lines."""
    claims = {}
    with open(source, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# claim "):
                alpha, _, verdict = line[len("# claim "):].strip().partition("=")
                claims[float(alpha)] = parse_verdict(verdict)
    return claims


def parse_verdict(text: str) -> bool:
    text = text.strip().lower()
    if text in ("reject", "r"):
        return True
    if text in ("fail", "failtoreject", "accept", "f"):
        return False
    raise ValueError(f"verdict must be reject or fail, got {text!r}")
