import pytest
from softcounter.analysis import bench_scaling
from softcounter.analysis import default_edge_counts

pytestmark = pytest.mark.acceptance


def test_soft_counting_scales_linearly():
    report = bench_scaling(default_edge_counts(1000, 1_000_000), repetitions=5)

    assert [row.edges for row in report.rows][-1] == 1_024_000
    assert len(report.rows) == 11
    assert 0.85 <= report.slope <= 1.15
    assert report.r_squared >= 0.98
