"""OLS trend fitting and generalized out-of-population R-squared."""

import numpy as np
import pytest

from modalign.trend import (
    ModelPoint,
    TrendError,
    fit_trend,
    generalized_r2,
    load_scores_csv,
    trend_table,
    write_table_csv,
    write_table_json,
)


def points(pairs, population="base", benchmark="b", variant="v"):
    return [
        ModelPoint(f"m{i}", population, performance=p, alignment=a,
                   benchmark=benchmark, vision_variant=variant)
        for i, (p, a) in enumerate(pairs)
    ]


def lstsq_oracle(pts):
    """Closed-form normal equations via numpy's least squares solver."""
    p = np.array([q.performance for q in pts])
    a = np.array([q.alignment for q in pts])
    design = np.stack([p, np.ones_like(p)], axis=1)
    coef, *_ = np.linalg.lstsq(design, a, rcond=None)
    return float(coef[0]), float(coef[1])


class TestFitTrend:
    def test_exact_line(self):
        pts = points([(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (5.0, 11.0)])
        slope, intercept, r2 = fit_trend(pts)
        assert abs(slope - 2.0) <= 1e-12
        assert abs(intercept - 1.0) <= 1e-12
        assert abs(r2 - 1.0) <= 1e-12

    def test_two_points_fit_perfectly(self):
        slope, intercept, r2 = fit_trend(points([(0.2, 0.9), (0.7, 0.1)]))
        assert abs(r2 - 1.0) <= 1e-12

    def test_matches_closed_form_oracle(self, rng):
        pts = points([
            (float(p), float(a))
            for p, a in rng.standard_normal((19, 2))
        ])
        slope, intercept, _ = fit_trend(pts)
        oslope, ointercept = lstsq_oracle(pts)
        assert abs(slope - oslope) <= 1e-10
        assert abs(intercept - ointercept) <= 1e-10

    def test_least_squares_is_a_minimum(self, rng):
        pts = points([
            (float(p), float(a)) for p, a in rng.standard_normal((12, 2))
        ])
        slope, intercept, _ = fit_trend(pts)
        p = np.array([q.performance for q in pts])
        a = np.array([q.alignment for q in pts])

        def rss(s, b):
            r = a - (s * p + b)
            return float(r @ r)

        base = rss(slope, intercept)
        eps = 1e-6
        for ds, db in ((eps, 0), (-eps, 0), (0, eps), (0, -eps),
                       (eps, eps), (-eps, -eps)):
            assert rss(slope + ds, intercept + db) >= base

    def test_degenerate_performance_rejected(self):
        with pytest.raises(TrendError, match="degenerate"):
            fit_trend(points([(1.0, 0.2), (1.0, 0.4)]))
        with pytest.raises(TrendError, match=">= 2"):
            fit_trend(points([(1.0, 0.2)]))


class TestGeneralizedR2:
    def test_points_on_line_give_one(self):
        new = points([(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)], population="new")
        assert abs(generalized_r2((2.0, 1.0), new) - 1.0) <= 1e-12

    def test_hand_arithmetic_fixture(self):
        # alignments {0.1, 0.2, 0.3}, constant predictions 0.3:
        # 1 - 0.05/0.02 = -1.5
        new = points([(0.0, 0.1), (1.0, 0.2), (2.0, 0.3)], population="new")
        value = generalized_r2((0.0, 0.3), new)
        assert abs(value - (-1.5)) <= 1e-12

    def test_predicting_the_mean_gives_zero(self):
        new = points([(0.0, 0.1), (1.0, 0.2), (2.0, 0.3)], population="new")
        assert abs(generalized_r2((0.0, 0.2), new)) <= 1e-12

    def test_reorder_invariant(self, rng):
        pairs = [(float(p), float(a))
                 for p, a in rng.standard_normal((9, 2))]
        new = points(pairs, population="new")
        value = generalized_r2((0.5, 0.1), new)
        shuffled = points(pairs[::-1], population="new")
        assert generalized_r2((0.5, 0.1), shuffled) == value

    def test_constant_alignments_rejected(self):
        new = points([(0.0, 0.5), (1.0, 0.5)], population="new")
        with pytest.raises(TrendError, match="undefined"):
            generalized_r2((1.0, 0.0), new)


class TestAffineConsistency:
    def test_rescaled_performance_same_predictions(self, rng):
        pairs = rng.standard_normal((15, 2))
        base = points([(float(p), float(a)) for p, a in pairs])
        new = points(
            [(float(p), float(a)) for p, a in rng.standard_normal((8, 2))],
            population="new")
        s1, b1, r2a = fit_trend(base)
        g1 = generalized_r2((s1, b1), new)

        def remap(pts):
            return [
                ModelPoint(q.model_id, q.population,
                           performance=3.5 * q.performance - 1.25,
                           alignment=q.alignment)
                for q in pts
            ]

        s2, b2, r2b = fit_trend(remap(base))
        g2 = generalized_r2((s2, b2), remap(new))
        assert abs(r2a - r2b) <= 1e-9
        assert abs(g1 - g2) <= 1e-9


class TestTrendTable:
    def test_single_cell_on_line(self):
        pts = (points([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]) +
               points([(3.0, 3.0), (4.0, 4.0)], population="new"))
        table = trend_table(pts)
        assert len(table["cells"]) == 1
        avg = table["averages"][0]
        assert abs(avg["r2_avg_base"] - 1.0) <= 1e-12
        assert abs(avg["r2_avg_new"] - 1.0) <= 1e-12

    def test_sign_structure_preserved(self):
        # benchmark "good" extrapolates; benchmark "bad" does not
        good = (points([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)],
                       benchmark="good") +
                points([(3.0, 3.0), (4.0, 4.1), (5.0, 4.9)],
                       population="new", benchmark="good"))
        bad = (points([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)],
                      benchmark="bad") +
               points([(3.0, 0.1), (4.0, 0.3), (5.0, 0.2)],
                      population="new", benchmark="bad"))
        table = trend_table(good + bad)
        by_name = {row["benchmark"]: row for row in table["averages"]}
        assert by_name["good"]["r2_avg_new"] > 0
        assert by_name["bad"]["r2_avg_new"] < 0

    def test_average_over_variants_unweighted(self):
        cells = []
        for variant, noise in (("v1", 0.0), ("v2", 1.0)):
            cells += points([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)],
                            variant=variant)
            cells += points([(3.0, 3.0 + noise), (4.0, 4.0), (5.0, 5.0)],
                            population="new", variant=variant)
        table = trend_table(cells)
        per_cell = [c.r2_new for c in table["cells"]]
        avg = table["averages"][0]["r2_avg_new"]
        assert abs(avg - np.mean(per_cell)) <= 1e-12
        assert table["averages"][0]["n_variants"] == 2

    def test_degenerate_cell_named(self):
        pts = points([(1.0, 0.2), (1.0, 0.4)], benchmark="flat")
        pts += points([(0.0, 0.1), (1.0, 0.9)], population="new",
                      benchmark="flat")
        with pytest.raises(TrendError, match="flat"):
            trend_table(pts)


class TestCsvInterfaces:
    def test_load_round_trip(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text(
            "model_id,population,benchmark,vision_variant,performance,alignment\n"
            "m1,base,hs,v1,0.5,0.2\n"
            "m2,new,hs,v1,0.7,0.1\n"
        )
        pts = load_scores_csv(path)
        assert len(pts) == 2
        assert pts[0].population == "base"
        assert pts[1].alignment == 0.1

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("model_id,population\nm1,base\n")
        with pytest.raises(TrendError, match="missing columns"):
            load_scores_csv(path)

    def test_bad_population_names_line(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text(
            "model_id,population,benchmark,vision_variant,performance,alignment\n"
            "m1,neither,hs,v1,0.5,0.2\n"
        )
        with pytest.raises(TrendError, match=":2"):
            load_scores_csv(path)

    def test_table_outputs(self, tmp_path):
        pts = (points([(0.0, 0.0), (1.0, 1.0)]) +
               points([(2.0, 2.0), (3.0, 3.5)], population="new"))
        table = trend_table(pts)
        write_table_csv(tmp_path / "t.csv", table)
        write_table_json(tmp_path / "t.json", table, config={"seed": 0})
        header = (tmp_path / "t.csv").read_text().splitlines()[0]
        assert header == "benchmark,r2_avg_base,r2_avg_new,n_variants"
        import json

        payload = json.loads((tmp_path / "t.json").read_text())
        assert payload["config"] == {"seed": 0}
        assert len(payload["cells"]) == 1
