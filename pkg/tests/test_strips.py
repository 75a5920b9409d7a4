import numpy as np
import pytest

from nonlocal_dd import ParameterError, strip_quantification
from nonlocal_dd.strips import annulus_area


def test_annulus_formula():
    assert annulus_area(0.5, 0.15, 1) == pytest.approx(np.pi * (0.25 - 0.1225))
    assert annulus_area(0.5, 0.15, 1) == pytest.approx(0.4005, abs=1e-4)


def test_first_square_strip():
    rep = strip_quantification("unit_square", 0.3, 1, 2000)
    first = rep.strips[0]
    assert first.measured == pytest.approx(4 * 0.15 - 4 * 0.15 ** 2, rel=0.02)
    assert rep.total_area == pytest.approx(1.0, abs=1e-12)


def test_first_disk_strip():
    rep = strip_quantification("unit_disk", 0.3, 1, 2000)
    first = rep.strips[0]
    assert first.measured == pytest.approx(annulus_area(0.5, 0.15, 1), rel=0.02)
    assert abs(first.measured - first.outer) <= first.uncertainty


@pytest.mark.parametrize("shape", ["unit_square", "unit_disk"])
@pytest.mark.parametrize("m", [1, 2])
def test_full_strips_are_bracketed(shape, m):
    rep = strip_quantification(shape, 0.1, m, 2000)
    assert rep.full_strips and rep.bounds_hold


def test_square_strips_match_closed_form():
    s = 0.05
    rep = strip_quantification("unit_square", 0.1, 1, 2000)
    for rec in rep.strips:
        exact = 4 * s * (1 - (2 * rec.j - 1) * s)
        assert abs(rec.measured - exact) <= rec.uncertainty + 1e-15


def test_last_partial_strip_is_flagged():
    rep = strip_quantification("unit_disk", 0.3, 1, 1000)
    assert [r.full for r in rep.strips] == [True, True, True, False]
    assert rep.bounds_hold


def test_marking_agrees_with_distance_classification():
    a = strip_quantification("unit_disk", 0.2, 1, 600, method="marking")
    b = strip_quantification("unit_disk", 0.2, 1, 600)
    for ra, rb in zip(a.strips, b.strips):
        assert ra.measured == pytest.approx(rb.measured, abs=0.01)
    assert a.total_area == pytest.approx(b.total_area, rel=1e-12)


@pytest.mark.parametrize("kw", [dict(shape="triangle", delta=0.1, m=1, resolution=100),
                                dict(shape="unit_disk", delta=0.1, m=3, resolution=2000),
                                dict(shape="unit_disk", delta=0.1, m=1, resolution=2001),
                                dict(shape="unit_disk", delta=0.1, m=0, resolution=2000)])
def test_bad_parameters(kw):
    with pytest.raises(ParameterError):
        strip_quantification(**kw)
