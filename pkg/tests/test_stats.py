import math
import random

import pytest
import scipy.stats

from oracles import anova_decompose_direct
from pantrainer.session import TrialResult
from pantrainer.stats import (AGG_MODES, IncompleteTableError,
                              LengthMismatchError, ScoreTable,
                              ZeroErrorVarianceError, ZeroVarianceError,
                              aggregate_scores, analyze_report, betainc_reg,
                              bonferroni, condition_summary, f_sf, paired_t,
                              plot_data_csv, posthoc_all, rm_anova,
                              t_sf_two_sided)

FIXTURE = ScoreTable(("s1", "s2", "s3"), ("c1", "c2"),
                     ((1.0, 2.0), (2.0, 4.0), (3.0, 6.0)))


def table_from(values, prefix="s"):
    n, k = len(values), len(values[0])
    return ScoreTable(tuple(f"{prefix}{i}" for i in range(n)),
                      tuple(f"c{j}" for j in range(k)),
                      tuple(tuple(float(v) for v in row) for row in values))


def test_oracle_confirms_fixture_sums_of_squares():
    ss_cond, ss_subj, ss_err, ss_total = anova_decompose_direct(
        [[1, 2], [2, 4], [3, 6]])
    assert ss_cond == pytest.approx(6.0, abs=1e-12)
    assert ss_subj == pytest.approx(9.0, abs=1e-12)
    assert ss_err == pytest.approx(1.0, abs=1e-12)
    assert ss_total == pytest.approx(16.0, abs=1e-12)


def test_rm_anova_fixture():
    res = rm_anova(FIXTURE)
    assert (res.ss_cond, res.ss_subj, res.ss_err) == \
        pytest.approx((6.0, 9.0, 1.0), abs=1e-9)
    assert (res.df1, res.df2) == (1, 2)
    assert res.F == pytest.approx(12.0, abs=1e-9)
    assert res.eta_g == pytest.approx(0.375, abs=1e-9)
    assert res.p == pytest.approx(scipy.stats.f.sf(12.0, 1, 2), abs=1e-10)


def test_rm_anova_flat_rows_give_zero_f():
    res = rm_anova(table_from([[1, 1], [2, 2], [3, 3]]))
    assert res.F == 0.0 and res.p == 1.0 and res.eta_g == 0.0


def test_rm_anova_constant_shift_is_degenerate():
    with pytest.raises(ZeroErrorVarianceError):
        rm_anova(table_from([[1, 2], [2, 3], [3, 4]]))


def test_rm_anova_matches_direct_oracle_on_random_tables():
    rng = random.Random(21)
    for _ in range(100):
        n, k = rng.randint(2, 9), rng.randint(2, 7)
        values = [[rng.uniform(-50, 50) for _ in range(k)] for _ in range(n)]
        ss_cond, ss_subj, ss_err, ss_total = anova_decompose_direct(values)
        res = rm_anova(table_from(values))
        scale = max(ss_total, 1.0)
        assert abs(res.ss_cond - ss_cond) <= 1e-9 * scale
        assert abs(res.ss_subj - ss_subj) <= 1e-9 * scale
        assert abs(res.ss_err - ss_err) <= 1e-9 * scale
        assert abs(res.ss_cond + res.ss_subj + res.ss_err - ss_total) \
            <= 1e-9 * scale
        assert res.eta_g == pytest.approx(
            ss_cond / (ss_cond + ss_subj + ss_err), rel=1e-9)
        assert res.p == pytest.approx(
            scipy.stats.f.sf(res.F, res.df1, res.df2), abs=1e-10)


def test_subject_shift_changes_only_subject_term():
    rng = random.Random(22)
    values = [[rng.uniform(0, 30) for _ in range(4)] for _ in range(6)]
    base = rm_anova(table_from(values))
    values[2] = [v + 17.5 for v in values[2]]
    shifted = rm_anova(table_from(values))
    assert shifted.ss_cond == pytest.approx(base.ss_cond, rel=1e-9)
    assert shifted.ss_err == pytest.approx(base.ss_err, rel=1e-9)
    assert shifted.F == pytest.approx(base.F, rel=1e-9)
    assert shifted.ss_subj != pytest.approx(base.ss_subj, rel=1e-3)


def test_condition_shift_matches_recomputation():
    rng = random.Random(23)
    values = [[rng.uniform(0, 30) for _ in range(4)] for _ in range(6)]
    shifted = [row[:] for row in values]
    for row in shifted:
        row[1] += 9.0
    res = rm_anova(table_from(shifted))
    ss = anova_decompose_direct(shifted)
    assert res.ss_cond == pytest.approx(ss[0], rel=1e-9)
    assert res.ss_err == pytest.approx(ss[2], rel=1e-9)


def test_scale_equivariance():
    rng = random.Random(24)
    values = [[rng.uniform(0, 30) for _ in range(5)] for _ in range(7)]
    base = rm_anova(table_from(values))
    lam = -3.7
    scaled = rm_anova(table_from([[lam * v for v in row] for row in values]))
    assert scaled.F == pytest.approx(base.F, rel=1e-9)
    assert scaled.p == pytest.approx(base.p, rel=1e-9)
    assert scaled.eta_g == pytest.approx(base.eta_g, rel=1e-9)


def test_incomplete_tables_rejected():
    with pytest.raises(IncompleteTableError):
        ScoreTable(("a",), ("c1", "c2"), ((1.0, 2.0),))
    with pytest.raises(IncompleteTableError):
        ScoreTable(("a", "b"), ("c1",), ((1.0,), (2.0,)))
    with pytest.raises(IncompleteTableError):
        ScoreTable(("a", "b"), ("c1", "c2"), ((1.0, 2.0), (1.0,)))
    with pytest.raises(IncompleteTableError):
        ScoreTable(("a", "b"), ("c1", "c2"), ((1.0, float("nan")), (1.0, 2.0)))


def test_paired_t_example():
    res = paired_t((1.0, 2.0, 3.0), (2.0, 4.0, 6.0))
    assert res.t == pytest.approx(3.4641016, abs=1e-6)
    assert res.df == 2
    assert res.mean_diff == pytest.approx(2.0)
    assert res.sd_diff == pytest.approx(1.0)
    assert res.p_two_sided == pytest.approx(0.0742, abs=5e-4)
    assert res.p_two_sided == pytest.approx(
        2 * scipy.stats.t.sf(res.t, 2), abs=1e-10)


def test_paired_t_zero_mean_nonzero_variance():
    res = paired_t((1.0, 2.0, 3.0), (3.0, 2.0, 1.0))
    assert res.t == pytest.approx(0.0)
    assert res.p_two_sided == pytest.approx(1.0)


def test_paired_t_antisymmetric():
    rng = random.Random(25)
    a = [rng.uniform(0, 10) for _ in range(8)]
    b = [rng.uniform(0, 10) for _ in range(8)]
    assert paired_t(a, b).t == pytest.approx(-paired_t(b, a).t, rel=1e-12)


def test_paired_t_errors():
    with pytest.raises(ZeroVarianceError):
        paired_t((1.0, 2.0), (1.0, 2.0))  # identical diffs
    with pytest.raises(ZeroVarianceError):
        paired_t((1.0, 2.0), (3.0, 4.0))  # constant diff of 2
    with pytest.raises(LengthMismatchError):
        paired_t((1.0, 2.0), (1.0, 2.0, 3.0))
    with pytest.raises(LengthMismatchError):
        paired_t((1.0,), (2.0,))


def test_bonferroni():
    assert bonferroni([0.004], 15) == [pytest.approx(0.06)]
    assert bonferroni([0.2], 15) == [1.0]
    assert bonferroni([0.3, 0.01], 1) == [pytest.approx(0.3), pytest.approx(0.01)]
    with pytest.raises(ValueError):
        bonferroni([0.1], 0)


def test_posthoc_counts_and_symmetry():
    rng = random.Random(26)
    values = [[rng.uniform(0, 30) for _ in range(6)] for _ in range(8)]
    post = posthoc_all(table_from(values))
    assert post.m == 15
    k = 6
    tested = [(i, j) for i in range(k) for j in range(i + 1, k)
              if post.tests[i][j] is not None]
    assert len(tested) == 15
    for i, j in tested:
        assert post.tests[i][j] is post.tests[j][i]
        assert post.p_adjusted[i][j] == post.p_adjusted[j][i]
        assert post.p_adjusted[i][j] == pytest.approx(
            min(1.0, post.tests[i][j].p_two_sided * 15))


def test_posthoc_identical_table_flags_nothing():
    values = [[5.0] * 4 for _ in range(6)]
    post = posthoc_all(table_from(values))
    assert not any(any(row) for row in post.significant)
    assert all(post.tests[i][j] is None for i in range(4) for j in range(4)
               if i != j)


def test_posthoc_shifted_condition_flagged():
    rng = random.Random(27)
    values = [[rng.gauss(20.0, 1.0) for _ in range(6)] for _ in range(8)]
    for row in values:
        row[3] += 10.0  # ten sigma
    post = posthoc_all(table_from(values))
    for j in range(6):
        if j != 3:
            assert post.significant[3][j]


def test_f_tail_against_scipy():
    for f in (0.1, 0.5, 1.0, 2.485, 3.24, 10.0, 50.0):
        for df1, df2 in ((1, 2), (5, 35), (2, 10), (7, 3), (20, 200)):
            assert f_sf(f, df1, df2) == pytest.approx(
                scipy.stats.f.sf(f, df1, df2), abs=1e-12, rel=1e-10)


def test_f_table_anchor():
    # classic table entry: upper 5% point of F(5, 35) is about 2.485
    assert f_sf(2.485, 5, 35) == pytest.approx(0.05, abs=5e-3)


def test_t_tail_against_scipy():
    for t in (0.0, 0.5, 2.0, 3.4641, 8.0):
        for df in (1, 2, 5, 30):
            assert t_sf_two_sided(t, df) == pytest.approx(
                2 * scipy.stats.t.sf(abs(t), df), abs=1e-12, rel=1e-10)


def test_betainc_against_scipy():
    rng = random.Random(28)
    for _ in range(200):
        a = rng.uniform(0.2, 40.0)
        b = rng.uniform(0.2, 40.0)
        x = rng.random()
        assert betainc_reg(a, b, x) == pytest.approx(
            scipy.stats.beta.cdf(x, a, b), abs=1e-12, rel=1e-9)


def mk_results(scores_by_cell):
    """scores_by_cell: {(participant, interface, song): score}"""
    out = []
    for i, ((p, iface, song), score) in enumerate(scores_by_cell.items()):
        out.append(TrialResult(p, i, iface, song, score, 80, 150,
                               "2024-01-05T12:00:00Z"))
    return out


def test_aggregate_sum_and_mean():
    results = mk_results({
        ("p1", "A", "s1"): 10, ("p1", "A", "s2"): 20,
        ("p1", "B", "s1"): 1, ("p1", "B", "s2"): 3,
        ("p2", "A", "s1"): 30, ("p2", "A", "s2"): 40,
        ("p2", "B", "s1"): 5, ("p2", "B", "s2"): 7,
    })
    total = aggregate_scores(results, agg="sum")
    assert total.values == ((30.0, 4.0), (70.0, 12.0))
    mean = aggregate_scores(results, agg="mean")
    assert mean.values == ((15.0, 2.0), (35.0, 6.0))
    by_song = aggregate_scores(results, agg="sum", by="song")
    assert by_song.conditions == ("s1", "s2")
    assert by_song.values == ((11.0, 23.0), (35.0, 47.0))
    per_song = aggregate_scores(results, agg="per-song")
    assert per_song.subjects == ("p1/s1", "p1/s2", "p2/s1", "p2/s2")
    assert per_song.values == ((10.0, 1.0), (20.0, 3.0),
                               (30.0, 5.0), (40.0, 7.0))


def test_aggregate_missing_cell():
    results = mk_results({
        ("p1", "A", "s1"): 10, ("p1", "B", "s1"): 5,
        ("p2", "A", "s1"): 20,
    })
    with pytest.raises(IncompleteTableError):
        aggregate_scores(results, agg="sum")


def test_aggregate_rejects_unknown_mode():
    with pytest.raises(ValueError):
        aggregate_scores(mk_results({("p", "A", "s"): 1}), agg="median")
    assert set(AGG_MODES) == {"sum", "mean", "per-song"}


def test_condition_summary_and_plot_csv():
    table = table_from([[1.0, 4.0], [3.0, 8.0]])
    rows = condition_summary(table)
    assert rows[0] == ("c0", 2.0, pytest.approx(math.sqrt(2)))
    csv_text = plot_data_csv(table)
    assert csv_text.splitlines()[0] == "condition,mean,sd"
    assert len(csv_text.splitlines()) == 3


def test_analyze_report_deterministic():
    rng = random.Random(29)
    cells = {}
    for p in ("p1", "p2", "p3", "p4"):
        for iface in ("A", "B", "C"):
            for song in ("s1", "s2"):
                cells[(p, iface, song)] = rng.randint(0, 80)
    results = mk_results(cells)
    a = analyze_report(results)
    b = analyze_report(results)
    assert a == b
    assert "Interface effect" in a
    assert "F(2," in a
    assert "Bonferroni" in a
    assert "Song effect" in a
