import pytest

from src.accel.simulator import RegisterTrace
from src.analysis.reports import improvement, mitigation_table, read_sweep_table, sweep_table, write_sweep_table
from src.analysis.sparsity import AnalysisError, sparsity
from src.campaign.runner import CampaignResult, SweepPoint
from src.fxp import FixedPointFormat

IR = FixedPointFormat(0, 0, 4)
WR = FixedPointFormat(1, 1, 2)
IMR = FixedPointFormat(1, 2, 1)


@pytest.fixture
def trace():
    trace = RegisterTrace()
    for raw in (0b0000, 0b1000, 0b1111, 0b0011):
        trace.record(0, 0, "IR", 0, raw, IR)
    trace.record(0, 0, "WR", 0, 0b0000, WR)
    trace.record(1, 0, "IMR", 2, 0b0101, IMR)
    return trace


def result(name, medians_by_count):
    points = [SweepPoint(k, [m, m]) for k, m in medians_by_count.items()]
    return CampaignResult(name, "0" * 16, 0, "transient", "none", 4, {}, 0.0, points)


def test_bit_counts_per_class(trace):
    report = sparsity(trace)
    assert list(report.classes) == ["IMR", "IR", "WR"]
    ir = report.classes["IR"]
    assert (ir.values, ir.zero_bits, ir.one_bits) == (4, 9, 7)
    assert report.classes["WR"].ratio is None
    assert report.classes["IMR"].ratio == 1.0
    assert (report.zero_bits, report.one_bits) == (15, 9)
    assert report.ratio == pytest.approx(15 / 9)


def test_ir_histogram(trace):
    report = sparsity(trace)
    # 0.0, 0.5, 0.9375 and 0.1875
    assert report.ir_histogram == [1, 1, 0, 0, 0, 1, 0, 0, 0, 1]
    frame = report.histogram_frame()
    assert frame["count"].sum() == 4
    assert frame["bucket_low"][5] == 0.5


def test_counts_are_additive(trace):
    other = RegisterTrace()
    other.record(2, 1, "IMR", 0, 0b1111, IMR)
    merged = RegisterTrace()
    merged.extend(trace)
    merged.extend(other)

    a, b, both = sparsity(trace), sparsity(other), sparsity(merged)
    assert both.zero_bits == a.zero_bits + b.zero_bits
    assert both.one_bits == a.one_bits + b.one_bits
    assert both.classes["IMR"].values == 2


def test_frame_input_and_empty_trace(trace):
    frame = sparsity(trace.frame()).frame()
    assert frame.columns == ["register_class", "values", "zero_bits", "one_bits", "ratio"]
    assert frame.height == 3
    with pytest.raises(AnalysisError):
        sparsity(RegisterTrace())


def test_sweep_table_round_trip(tmp_path):
    res = CampaignResult("r", "0" * 16, 0, "stuck_at_1", "none", 4, {}, 1.0, [
        SweepPoint(2, [1.0, 3.0]),
        SweepPoint(0, [1.0, 1.0]),
    ])
    table = sweep_table(res)
    assert table["k"].to_list() == [0, 2]
    assert table.row(1) == (2, 2.0, 2.0, 1.0, 2)

    path = write_sweep_table(res, tmp_path / "out" / "r_sweep.csv")
    assert read_sweep_table(path).equals(table)
    with pytest.raises(AnalysisError):
        read_sweep_table(tmp_path / "missing.csv")


def test_improvement():
    assert improvement(5.0, 10.0) == 50.0
    assert improvement(0.0, 0.0) == 0.0
    assert improvement(12.0, 10.0) == pytest.approx(-20.0)


def test_mitigation_table():
    table = mitigation_table({
        "word": result("w", {0: 10.0, 1: 20.0}),
        "bit": result("b", {0: 10.0, 1: 8.0}),
        "hybrid": result("h", {0: 10.0, 1: 4.0, 2: 6.0}),
    })
    assert table.columns == ["k", "median_word", "median_bit", "median_hybrid", "hybrid_vs_bit", "hybrid_vs_word"]
    assert table["k"].to_list() == [0, 1]
    assert table["hybrid_vs_bit"].to_list() == [0.0, 50.0]
    assert table["hybrid_vs_word"].to_list() == pytest.approx([0.0, 80.0])

    assert "hybrid_vs_bit" not in mitigation_table({"none": result("n", {1: 3.0})}).columns
    with pytest.raises(AnalysisError):
        mitigation_table({})
    with pytest.raises(AnalysisError):
        mitigation_table({"word": result("w", {0: 1.0}), "bit": result("b", {1: 1.0})})
