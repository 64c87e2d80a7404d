"""Score analysis: one-way repeated-measures ANOVA, paired t-tests,
Bonferroni adjustment, and the session-results report.

The ANOVA uses the within-subjects decomposition (condition, subject,
error sums of squares) and reports generalized eta squared as
ss_cond / (ss_cond + ss_subj + ss_err).  Tail probabilities come from a
continued-fraction regularized incomplete beta, accurate well past the
1e-12 level needed here, so no external statistics package is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .session import TrialResult

SPHERICITY_CAVEAT = "no sphericity correction applied"


class StatsError(Exception):
    pass


class IncompleteTableError(StatsError):
    pass


class ZeroErrorVarianceError(StatsError):
    pass


class ZeroVarianceError(StatsError):
    pass


class LengthMismatchError(StatsError):
    pass


# --- distribution tails -----------------------------------------------------

_FPMIN = 1e-300
_EPS = 1e-15
_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise StatsError(f"betacf failed to converge for a={a}, b={b}, x={x}")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log1p(-x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper-tail probability of the F distribution."""
    if f <= 0.0:
        return 1.0
    return betainc_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t."""
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


# --- core tests --------------------------------------------------------------

@dataclass(frozen=True)
class ScoreTable:
    subjects: tuple[str, ...]
    conditions: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]  # subjects x conditions

    def __post_init__(self):
        n, k = len(self.subjects), len(self.conditions)
        if n < 2 or k < 2:
            raise IncompleteTableError("need at least 2 subjects and 2 conditions")
        for row in self.values:
            if len(row) != k:
                raise IncompleteTableError("ragged score table")
            if any(v is None or v != v for v in row):  # None or NaN
                raise IncompleteTableError("missing cell in score table")
        if len(self.values) != n:
            raise IncompleteTableError("row count does not match subjects")

    def column(self, j: int) -> tuple[float, ...]:
        return tuple(row[j] for row in self.values)


@dataclass(frozen=True)
class AnovaResult:
    F: float
    df1: int
    df2: int
    p: float
    eta_g: float
    ss_cond: float
    ss_subj: float
    ss_err: float
    caveat: str = SPHERICITY_CAVEAT


@dataclass(frozen=True)
class TResult:
    t: float
    df: int
    p_two_sided: float
    mean_diff: float
    sd_diff: float


def rm_anova(table: ScoreTable) -> AnovaResult:
    """One-way within-subjects ANOVA over a complete subjects x conditions table."""
    n, k = len(table.subjects), len(table.conditions)
    grand = sum(v for row in table.values for v in row) / (n * k)
    cond_means = [sum(table.column(j)) / n for j in range(k)]
    subj_means = [sum(row) / k for row in table.values]

    ss_cond = n * sum((m - grand) ** 2 for m in cond_means)
    ss_subj = k * sum((m - grand) ** 2 for m in subj_means)
    ss_total = sum((v - grand) ** 2 for row in table.values for v in row)
    ss_err = ss_total - ss_cond - ss_subj

    df1, df2 = k - 1, (k - 1) * (n - 1)
    tiny = 1e-12 * max(ss_total, 1.0)
    if ss_err <= tiny:
        if ss_cond <= tiny:
            # flat table: no effect and nothing to test against
            return AnovaResult(0.0, df1, df2, 1.0, 0.0, ss_cond, ss_subj,
                               max(ss_err, 0.0))
        raise ZeroErrorVarianceError(
            "error sum of squares is zero; F is undefined")

    F = (ss_cond / df1) / (ss_err / df2)
    denom = ss_cond + ss_subj + ss_err
    eta_g = ss_cond / denom if denom > 0 else 0.0
    return AnovaResult(F, df1, df2, f_sf(F, df1, df2), eta_g,
                       ss_cond, ss_subj, ss_err)


def paired_t(a: Sequence[float], b: Sequence[float]) -> TResult:
    """Paired t-test on the differences b - a."""
    if len(a) != len(b):
        raise LengthMismatchError(f"lengths differ: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise LengthMismatchError("need at least two pairs")
    diffs = [y - x for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        raise ZeroVarianceError("all differences identical")
    t = mean / (sd / math.sqrt(n))
    return TResult(t, n - 1, t_sf_two_sided(t, n - 1), mean, sd)


def bonferroni(p_values: Sequence[float], m: int) -> list[float]:
    """Multiply each p by the comparison count, clamped to 1."""
    if m < 1:
        raise ValueError("comparison count must be >= 1")
    return [min(1.0, p * m) for p in p_values]


@dataclass(frozen=True)
class PosthocResult:
    conditions: tuple[str, ...]
    tests: tuple[tuple[Optional[TResult], ...], ...]  # k x k, None on diagonal
    p_adjusted: tuple[tuple[float, ...], ...]
    significant: tuple[tuple[bool, ...], ...]
    m: int
    alpha: float


def posthoc_all(table: ScoreTable, alpha: float = 0.05) -> PosthocResult:
    """All pairwise paired t-tests with Bonferroni adjustment.

    Pairs whose differences have zero variance are reported as untestable
    (no t, adjusted p of 1, not significant).
    """
    k = len(table.conditions)
    m = k * (k - 1) // 2
    tests = [[None] * k for _ in range(k)]
    p_adj = [[1.0] * k for _ in range(k)]
    sig = [[False] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            try:
                res = paired_t(table.column(i), table.column(j))
            except ZeroVarianceError:
                res = None
            tests[i][j] = tests[j][i] = res
            p = min(1.0, res.p_two_sided * m) if res else 1.0
            p_adj[i][j] = p_adj[j][i] = p
            sig[i][j] = sig[j][i] = bool(res) and p < alpha
    return PosthocResult(table.conditions,
                         tuple(tuple(row) for row in tests),
                         tuple(tuple(row) for row in p_adj),
                         tuple(tuple(row) for row in sig), m, alpha)


# --- session-results aggregation and report ---------------------------------

AGG_MODES = ("sum", "mean", "per-song")


def aggregate_scores(results: Sequence[TrialResult], agg: str = "sum",
                     by: str = "interface") -> ScoreTable:
    """Build a subjects x conditions table from trial results.

    ``by`` picks the condition factor (interface or song); scores are
    summed or averaged across the other factor.  ``per-song`` keeps each
    (participant, song) as its own row (interface factor only).
    """
    if agg not in AGG_MODES:
        raise ValueError(f"agg must be one of {AGG_MODES}")
    if by not in ("interface", "song"):
        raise ValueError("by must be 'interface' or 'song'")
    if not results:
        raise IncompleteTableError("no trials")

    def cond_of(r: TrialResult) -> str:
        return r.interface_kind if by == "interface" else r.song_id

    conditions = []
    for r in results:
        if cond_of(r) not in conditions:
            conditions.append(cond_of(r))

    if agg == "per-song":
        if by != "interface":
            raise ValueError("per-song aggregation applies to the interface factor")
        subjects = []
        for r in results:
            key = f"{r.participant}/{r.song_id}"
            if key not in subjects:
                subjects.append(key)
        key_of = lambda r: f"{r.participant}/{r.song_id}"
    else:
        subjects = []
        for r in results:
            if r.participant not in subjects:
                subjects.append(r.participant)
        key_of = lambda r: r.participant

    cells: dict[tuple[str, str], list[int]] = {}
    for r in results:
        cells.setdefault((key_of(r), cond_of(r)), []).append(r.score)

    rows = []
    for s in subjects:
        row = []
        for c in conditions:
            scores = cells.get((s, c))
            if not scores:
                raise IncompleteTableError(f"missing cell ({s}, {c})")
            row.append(float(sum(scores)) if agg != "mean"
                       else sum(scores) / len(scores))
        rows.append(tuple(row))
    return ScoreTable(tuple(subjects), tuple(conditions), tuple(rows))


def condition_summary(table: ScoreTable) -> list[tuple[str, float, float]]:
    """Per-condition (label, mean, sample sd) rows for reporting/plotting."""
    out = []
    n = len(table.subjects)
    for j, label in enumerate(table.conditions):
        col = table.column(j)
        mean = sum(col) / n
        sd = math.sqrt(sum((v - mean) ** 2 for v in col) / (n - 1)) if n > 1 else 0.0
        out.append((label, mean, sd))
    return out


def plot_data_csv(table: ScoreTable) -> str:
    lines = ["condition,mean,sd"]
    for label, mean, sd in condition_summary(table):
        lines.append(f"{label},{mean:.6f},{sd:.6f}")
    return "\n".join(lines) + "\n"


def _fmt_p(p: float) -> str:
    return f"{p:.4f}" if p >= 0.0001 else "<0.0001"


def analyze_report(results: Sequence[TrialResult], agg: str = "sum",
                   alpha: float = 0.05) -> str:
    """Render the full text report for a set of trial results."""
    table = aggregate_scores(results, agg=agg, by="interface")
    anova = rm_anova(table)
    post = posthoc_all(table, alpha=alpha)

    lines = []
    lines.append(f"trials: {len(results)}  participants: {len(table.subjects)}  "
                 f"interfaces: {len(table.conditions)}")
    lines.append(f"aggregation: {agg} across songs per (participant, interface)")
    lines.append("")
    lines.append("Interface effect (one-way repeated measures):")
    lines.append(f"  F({anova.df1},{anova.df2}) = {anova.F:.4f}, "
                 f"p = {_fmt_p(anova.p)}, eta_G = {anova.eta_g:.4f}")
    lines.append(f"  ss_cond = {anova.ss_cond:.6f}  ss_subj = {anova.ss_subj:.6f}  "
                 f"ss_err = {anova.ss_err:.6f}")
    lines.append(f"  note: {anova.caveat}")
    lines.append("  condition means (+/- 1 SD):")
    for label, mean, sd in condition_summary(table):
        lines.append(f"    {label:<28} {mean:8.2f} +/- {sd:.2f}")
    lines.append("")
    lines.append(f"Pairwise paired t-tests, Bonferroni-adjusted (m = {post.m}, "
                 f"alpha = {alpha:g}):")
    k = len(table.conditions)
    for i in range(k):
        for j in range(i + 1, k):
            res = post.tests[i][j]
            label = f"{table.conditions[i]} vs {table.conditions[j]}"
            if res is None:
                lines.append(f"    {label:<52} (zero-variance pair)")
                continue
            flag = " *" if post.significant[i][j] else ""
            lines.append(f"    {label:<52} t({res.df}) = {res.t:7.3f}, "
                         f"p_adj = {_fmt_p(post.p_adjusted[i][j])}{flag}")

    # song effect, reported the same way (second one-way on the other factor)
    try:
        song_table = aggregate_scores(results, agg="sum" if agg == "per-song" else agg,
                                      by="song")
        song = rm_anova(song_table)
        lines.append("")
        lines.append("Song effect (one-way repeated measures):")
        lines.append(f"  F({song.df1},{song.df2}) = {song.F:.4f}, "
                     f"p = {_fmt_p(song.p)}, eta_G = {song.eta_g:.4f}")
    except (IncompleteTableError, ZeroErrorVarianceError):
        pass
    return "\n".join(lines) + "\n"
