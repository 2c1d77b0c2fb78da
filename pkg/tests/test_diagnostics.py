"""Diagnostics series container, CSV round trip, comparison report."""

import math

import numpy as np
import pytest

from mmfsphere.diagnostics import (DiagnosticsSeries, compare_series,
                                   format_compare_report, read_metadata,
                                   read_series, tail_saturated)
from mmfsphere.errors import SchemaMismatch


def toy_series(values):
    s = DiagnosticsSeries(columns=("time[day]", "l2[rel]"))
    for i, v in enumerate(values):
        s.append(float(i), v)
    return s


def test_append_checks_arity():
    s = toy_series([1.0])
    with pytest.raises(ValueError):
        s.append(1.0)


def test_column_lookup_by_base_name():
    s = toy_series([0.5, 0.25])
    assert np.array_equal(s.column("l2"), [0.5, 0.25])
    assert np.array_equal(s.column("l2[rel]"), [0.5, 0.25])
    with pytest.raises(KeyError):
        s.column("linf")


def test_validate_flags_bad_series():
    s = toy_series([1.0, 0.5, 0.25])
    s.validate()
    bad = DiagnosticsSeries(columns=("t[s]", "e[rel]"))
    bad.append(0.0, 1.0)
    bad.append(0.0, 0.5)
    with pytest.raises(ValueError):
        bad.validate()
    neg = toy_series([1.0])
    neg.rows.append((1.0, -0.1))
    with pytest.raises(ValueError):
        neg.validate()
    with pytest.raises(ValueError):
        DiagnosticsSeries(columns=("t[s]",)).validate()


def test_csv_round_trip_is_lossless(tmp_path):
    s = toy_series([math.pi * 1e-7, 1.0 / 3.0, 6.02e23])
    path = tmp_path / "series.csv"
    s.write_csv(path)
    back = read_series(path)
    assert back.columns == s.columns
    assert back.rows == s.rows
    # identical content writes identical bytes
    twice = tmp_path / "again.csv"
    back.write_csv(twice)
    assert path.read_bytes() == twice.read_bytes()


def test_metadata_round_trip_sorted(tmp_path):
    s = toy_series([1.0])
    s.metadata = {"zeta": 1, "alpha": {"nested": True}}
    path = tmp_path / "meta.json"
    s.write_metadata(path)
    text = path.read_text()
    assert text.index('"alpha"') < text.index('"zeta"')
    assert read_metadata(path) == s.metadata


def test_read_series_rejects_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(SchemaMismatch):
        read_series(path)


def test_tail_saturated():
    x = np.arange(6, dtype=float)
    flat = np.full(6, 3e-5)
    assert tail_saturated(x, flat)
    decaying = 10.0 ** (-x)
    assert not tail_saturated(x, decaying)
    assert not tail_saturated(x[:2], flat[:2])  # too short to judge


def test_compare_identical_series_gives_unit_ratios():
    a = toy_series([1.0, 0.5, 0.25])
    b = toy_series([1.0, 0.5, 0.25])
    report = compare_series(a, b)
    assert report["ratios"]["l2[rel]"] == 1.0


def test_compare_flags_saturation_and_ratio():
    a = toy_series([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])   # still converging
    b = toy_series([1e-2, 3e-3, 2.2e-3, 2.1e-3, 2e-3])  # stalled
    report = compare_series(a, b)
    assert report["ratios"]["l2[rel]"] == pytest.approx(5e-4)
    sat = report["saturated"]["l2[rel]"]
    assert not sat["a"]
    assert sat["b"]
    text = format_compare_report(report)
    assert "l2[rel]" in text and "True" in text and "False" in text


def test_compare_rejects_mismatched_series():
    a = toy_series([1.0, 0.5])
    b = DiagnosticsSeries(columns=("time[day]", "linf[rel]"))
    b.append(0.0, 1.0)
    b.append(1.0, 0.5)
    with pytest.raises(SchemaMismatch):
        compare_series(a, b)
    c = toy_series([1.0, 0.5, 0.25])  # ends at t=2, a ends at t=1
    with pytest.raises(SchemaMismatch):
        compare_series(a, c)
    with pytest.raises(SchemaMismatch):
        compare_series(a, DiagnosticsSeries(columns=a.columns))
