"""Performance arithmetic against hand-worked oracles."""
from __future__ import annotations

import json
import math
from datetime import date

import pytest

from conftest import make_series
from masfin.errors import (
    DegenerateSeries,
    EmptySeries,
    LengthMismatch,
    MissingPrice,
)
from masfin.evaluation import (
    GROWTH_HEADER,
    PriceBook,
    RISKRETURN_HEADER,
    build_report,
    collect_allocations,
    correlation,
    cumulative_return,
    emit_report,
    evaluate_runs,
    growth_path,
    render_growth_csv,
    render_riskreturn_csv,
    week_spans,
    weekly_portfolio_return,
    weekly_series,
    weekly_volatility,
    win_rate,
)
from masfin.marketdata.service import MarketDataService
from masfin.pipeline.runner import ALLOCATION_JSON, PUBLISHED, RUN_FILE, RunState, stage_dir_name
from masfin.pipeline.types import PortfolioAllocation, Position

TOL = 1e-12


class TestWeeklyReturn:
    def test_exact_binary_case(self):
        # 64 -> 80 is +0.25, 128 -> 96 is -0.25; equal weights cancel
        value = weekly_portfolio_return(
            {"A": 0.5, "B": 0.5},
            {"A": 64.0, "B": 128.0},
            {"A": 80.0, "B": 96.0},
        )
        assert value == 0.0

    def test_hand_computed_mixed_weights(self):
        # 0.6 * 0.10 + 0.4 * (-0.05) = 0.04
        value = weekly_portfolio_return(
            {"A": 0.6, "B": 0.4},
            {"A": 100.0, "B": 200.0},
            {"A": 110.0, "B": 190.0},
        )
        assert abs(value - 0.04) < TOL

    def test_missing_price_lists_symbols(self):
        with pytest.raises(MissingPrice) as exc:
            weekly_portfolio_return(
                {"A": 0.5, "B": 0.5}, {"A": 100.0}, {"A": 101.0},
            )
        assert exc.value.symbols == ["B"]


class TestCumulativeReturn:
    def test_exact_binary(self):
        assert cumulative_return([0.5, 0.5]) == 1.25

    def test_hand_computed_compounding(self):
        # 1.10 * 0.95 * 1.02 = 1.0659
        assert abs(cumulative_return([0.10, -0.05, 0.02]) - 0.0659) < TOL

    def test_empty_is_flat(self):
        assert cumulative_return([]) == 0.0

    def test_not_a_simple_sum(self):
        assert abs(cumulative_return([0.1, 0.1]) - 0.21) < TOL


class TestWinRate:
    def test_zero_weeks_are_not_wins(self):
        assert win_rate([0.02, -0.01, 0.0, 0.03]) == 0.5

    def test_all_positive(self):
        assert win_rate([0.01, 0.02]) == 1.0

    def test_empty_raises(self):
        with pytest.raises(EmptySeries):
            win_rate([])


class TestWeeklyVolatility:
    def test_hand_computed_two_points(self):
        # mean 2, squared devs 1 + 1, sample var 2
        assert abs(weekly_volatility([1.0, 3.0]) - math.sqrt(2.0)) < TOL

    def test_hand_computed_four_points(self):
        # mean 0.02, squared devs 4e-4 + 4e-4 + 0 + 0, sample var 8e-4 / 3
        value = weekly_volatility([0.04, 0.0, 0.02, 0.02])
        assert abs(value - math.sqrt(8e-4 / 3.0)) < TOL

    def test_flat_series_is_zero(self):
        assert weekly_volatility([0.5, 0.5, 0.5]) == 0.0

    def test_single_point_raises(self):
        with pytest.raises(DegenerateSeries):
            weekly_volatility([0.1])


class TestCorrelation:
    def test_perfect_positive(self):
        assert abs(correlation([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) - 1.0) < TOL

    def test_perfect_negative(self):
        assert abs(correlation([1.0, 2.0, 3.0], [-1.0, -2.0, -3.0]) + 1.0) < TOL

    def test_hand_computed_partial(self):
        # deviations give covariance 4 against variances 5 and 5
        value = correlation([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0])
        assert abs(value - 0.8) < TOL

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            correlation([1.0, 2.0], [1.0])

    def test_too_short(self):
        with pytest.raises(DegenerateSeries):
            correlation([1.0], [2.0])

    def test_flat_series_undefined(self):
        with pytest.raises(DegenerateSeries):
            correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestGrowthCsv:
    RETURNS = {
        "masfin": [0.25, -0.5],
        "spy": [0.5, 0.0],
        "qqq": [-0.5, 1.0],
        "dia": [0.0, 0.0],
    }

    def test_exact_rows(self):
        text = render_growth_csv(self.RETURNS)
        lines = text.splitlines()
        assert lines[0] == GROWTH_HEADER
        assert lines[1] == "0,1.0,1.0,1.0,1.0"
        assert lines[2] == "1,1.25,1.5,0.5,1.0"
        assert lines[3] == "2,0.625,1.5,1.0,1.0"
        assert len(lines) == 4
        assert text.endswith("\n")

    def test_growth_path_compounds(self):
        assert growth_path([0.25, -0.5]) == [1.0, 1.25, 0.625]

    def test_mismatched_weeks_refused(self):
        returns = dict(self.RETURNS, spy=[0.5])
        with pytest.raises(LengthMismatch):
            render_growth_csv(returns)

    def test_riskreturn_rows(self):
        text = render_riskreturn_csv(self.RETURNS)
        lines = text.splitlines()
        assert lines[0] == RISKRETURN_HEADER
        assert len(lines) == 5
        by_name = {l.split(",")[0]: l.split(",") for l in lines[1:]}
        assert set(by_name) == {"masfin", "spy", "qqq", "dia"}
        # masfin: mean -0.125, devs +-0.375, sample var 0.28125
        vol = float(by_name["masfin"][1])
        assert abs(vol - math.sqrt(0.28125)) < TOL
        cum = float(by_name["masfin"][2])
        assert cum == -0.375  # 1.25 * 0.5 - 1


class TestBuildReport:
    def test_shape_and_values(self):
        returns = {
            "masfin": [0.25, -0.5],
            "spy": [0.25, -0.5],
            "qqq": [-0.25, 0.5],
            "dia": [0.125, 0.25],
        }
        report = build_report(returns)
        assert report["weeks"] == 2
        assert set(report["correlation"]) == {"spy", "qqq", "dia"}
        # an exact tracker correlates perfectly
        assert abs(report["correlation"]["spy"] - 1.0) < TOL
        assert abs(report["correlation"]["qqq"] + 1.0) < TOL
        assert report["cumulative_return"]["masfin"] == -0.375
        assert report["win_rate"] == 0.5

    def test_emit_writes_three_files(self, tmp_path):
        returns = {
            "masfin": [0.25, -0.5],
            "spy": [0.5, 0.0],
            "qqq": [-0.5, 1.0],
            "dia": [0.0, 0.25],
        }
        report = emit_report(tmp_path / "eval", returns)
        assert (tmp_path / "eval" / "growth.csv").exists()
        assert (tmp_path / "eval" / "riskreturn.csv").exists()
        on_disk = json.loads((tmp_path / "eval" / "report.json").read_text())
        assert on_disk == report


class TestPriceBook:
    def _book(self):
        closes = [100.0, 101.0, 102.0, 103.0, 104.0]
        return PriceBook({
            "AAA": make_series("AAA", closes, start=date(2025, 5, 5)),
        })

    def test_weekend_mark_uses_last_session(self):
        book = self._book()
        # Fri 2025-05-09 closes at 104; Sat and Sun mark to the same bar
        assert book.price_on("AAA", date(2025, 5, 9)) == 104.0
        assert book.price_on("AAA", date(2025, 5, 10)) == 104.0
        assert book.price_on("AAA", date(2025, 5, 11)) == 104.0

    def test_mark_before_history_is_none(self):
        assert self._book().price_on("AAA", date(2025, 5, 4)) is None

    def test_unknown_symbol_is_none(self):
        assert self._book().price_on("BBB", date(2025, 5, 9)) is None

    def test_marks_raise_with_all_missing_symbols(self):
        with pytest.raises(MissingPrice) as exc:
            self._book().marks(["AAA", "BBB", "CCC"], date(2025, 5, 9))
        assert exc.value.symbols == ["BBB", "CCC"]


class TestWeekSpans:
    def test_next_allocation_closes_each_week(self):
        allocations = [
            (date(2025, 5, 12), {"B": 1.0}),
            (date(2025, 5, 5), {"A": 1.0}),  # unordered on purpose
        ]
        spans = week_spans(allocations)
        assert spans[0].start == date(2025, 5, 5)
        assert spans[0].end == date(2025, 5, 12)
        assert spans[0].weights == {"A": 1.0}
        # the last span runs a calendar week past its allocation date
        assert spans[1].start == date(2025, 5, 12)
        assert spans[1].end == date(2025, 5, 19)

    def test_empty_raises(self):
        with pytest.raises(EmptySeries):
            week_spans([])


class TestWeeklySeries:
    def test_single_asset_benchmarks_reuse_portfolio_arithmetic(self):
        start = date(2025, 5, 5)
        book = PriceBook({
            "AAA": make_series("AAA", [64.0] * 5 + [80.0] * 5, start=start),
            "SPY": make_series("SPY", [100.0] * 5 + [110.0] * 5, start=start),
            "QQQ": make_series("QQQ", [100.0] * 5 + [90.0] * 5, start=start),
            "DIA": make_series("DIA", [100.0] * 10, start=start),
        })
        spans = week_spans([(date(2025, 5, 5), {"AAA": 1.0})])
        returns = weekly_series(spans, book)
        assert returns["masfin"] == [0.25]
        assert abs(returns["spy"][0] - 0.10) < TOL
        assert abs(returns["qqq"][0] + 0.10) < TOL
        assert returns["dia"] == [0.0]


def _write_run(runs_root, run_id: str, as_of: str, weights: dict, status: str):
    run_dir = runs_root / run_id
    stage_dir = run_dir / stage_dir_name(5)
    stage_dir.mkdir(parents=True)
    state = RunState(
        run_id=run_id, status=status, as_of=as_of, seed=1, backend="scripted",
        auto_approve=True, current_stage=5, attempts={}, stages_done={},
        prior_run=None, error=None,
        created_at=f"{as_of}T00:00:00Z", updated_at=f"{as_of}T00:00:00Z",
    )
    (run_dir / RUN_FILE).write_text(json.dumps(state.to_dict()))
    allocation = PortfolioAllocation(
        as_of=as_of,
        positions=tuple(
            Position(symbol=s, weight=w, sector="technology", rationale="r")
            for s, w in weights.items()
        ),
    )
    (stage_dir / ALLOCATION_JSON).write_text(json.dumps(allocation.to_dict()))


class TestHarvest:
    def test_collects_only_published_runs_in_date_order(self, tmp_path):
        runs = tmp_path / "runs"
        _write_run(runs, "run-b", "2025-05-12", {"SY001": 1.0}, PUBLISHED)
        _write_run(runs, "run-a", "2025-05-05", {"SY000": 1.0}, PUBLISHED)
        _write_run(runs, "run-c", "2025-05-19", {"SY002": 1.0}, "running")
        (runs / "stray").mkdir()  # no run.json: ignored
        allocations = collect_allocations(runs)
        assert [a[0].isoformat() for a in allocations] == [
            "2025-05-05", "2025-05-12",
        ]
        assert allocations[0][1] == {"SY000": 1.0}

    def test_no_published_runs_raises(self, tmp_path):
        runs = tmp_path / "runs"
        _write_run(runs, "run-c", "2025-05-19", {"SY002": 1.0}, "failed")
        with pytest.raises(EmptySeries):
            collect_allocations(runs)
        with pytest.raises(EmptySeries):
            collect_allocations(tmp_path / "absent")

    def test_evaluate_runs_end_to_end(self, tmp_path, fixture_root):
        from masfin.marketdata.providers import FixtureProvider

        runs = tmp_path / "runs"
        _write_run(runs, "run-a", "2025-05-05",
                   {"SY000": 0.5, "SY001": 0.5}, PUBLISHED)
        _write_run(runs, "run-b", "2025-05-12", {"SY002": 1.0}, PUBLISHED)
        service = MarketDataService(FixtureProvider(fixture_root), cache_dir=None)
        report = evaluate_runs(runs, tmp_path / "eval", service)
        assert report["weeks"] == 2
        growth = (tmp_path / "eval" / "growth.csv").read_text().splitlines()
        assert len(growth) == 4  # header + week 0 + two week ends
        assert growth[1].startswith("0,1.0,")
