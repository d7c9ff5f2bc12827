import io

import pytest
from hypothesis import given, strategies as st

from triplehelix.errors import EmptyInput, MalformedCode, MissingColumn
from triplehelix.ingest import (
    FirmRecord,
    Schema,
    bin_size_class,
    normalize_nace,
    parse_firms,
    validate_dataset,
)
from triplehelix.taxonomy import default_geo_taxonomy


def test_single_row_maps_fields_directly():
    records, report = parse_firms(b"id,cap,size,nace\nF001,20121,3,26\n")
    assert records == [FirmRecord("F001", "20121", 3, "26")]
    assert (report.records_accepted, report.records_rejected) == (1, 0)


def test_employee_counts_are_binned():
    data = b"id,cap,employees,nace\nF001,20121,17,26\n"
    records, _ = parse_firms(data, Schema(size_col="employees", size_mode="employees"))
    assert records[0].size_class == 4


def test_missing_field_is_rejected_and_counted():
    records, report = parse_firms(b"id,cap,size,nace\nF001,20121,3,26\nF002,20121,,26\n")
    assert [r.firm_id for r in records] == ["F001"]
    assert [(r.line, r.reason) for r in report.rejection_reasons] == [(3, "MissingField")]


def test_every_rejection_reason_and_line_accounting():
    data = (
        "id,cap,size,nace\n"
        "A,20121,3,26.1\n"
        "B,20121,12,26\n"      # size class out of 1..9
        "C,20121,x,26\n"
        "D,20121,3,7\n"        # NACE too short
        "E,20121,3\n"          # wrong field count
        "A,20121,3,26\n"       # repeated id
        "F,20121,3,C28.1;62\n" # section letter, two codes
    ).encode()
    records, report = parse_firms(data)
    assert [r.firm_id for r in records] == ["A", "F"]
    assert records[1].nace_code == "28.1"
    assert [(r.line, r.reason) for r in report.rejection_reasons] == [
        (3, "MalformedSize"), (4, "MalformedSize"), (5, "MalformedCode"),
        (6, "WrongFieldCount"), (7, "DuplicateId"),
    ]
    assert report.duplicate_ids == ["A"]
    assert report.records_accepted + report.records_rejected == 7


def test_header_and_input_errors():
    with pytest.raises(MissingColumn):
        parse_firms(b"id,cap,nace\n1,20121,26\n")
    with pytest.raises(EmptyInput):
        parse_firms(b"id,cap,size,nace\n")
    with pytest.raises(EmptyInput):
        parse_firms(b"")


def test_sources_bom_and_custom_columns(tmp_path):
    data = "﻿firm;x,postcode,classe,ateco\nQ1,00100,1,62.01\n".encode()
    schema = Schema(id_col="firm;x", geo_col="postcode", size_col="classe", nace_col="ateco")
    p = tmp_path / "f.csv"
    p.write_bytes(data)
    a = parse_firms(data, schema)
    b = parse_firms(p, schema)
    c = parse_firms(io.BytesIO(data), schema)
    assert a == b == c
    assert a[0][0].nace_code == "62.01"


def test_quoted_fields():
    records, _ = parse_firms(b'id,cap,size,nace\n"F,1","00100",2,"26.11"\n')
    assert records == [FirmRecord("F,1", "00100", 2, "26.11")]


@pytest.mark.parametrize("n, cls", [(0, 1), (1, 1), (2, 2), (9, 3), (10, 4), (19, 4), (20, 5),
                                    (49, 5), (50, 6), (99, 6), (100, 7), (199, 7), (200, 8),
                                    (499, 8), (500, 9), (10**7, 9)])
def test_size_bins(n, cls):
    assert bin_size_class(n) == cls


def test_size_bins_change_exactly_at_boundaries():
    changes = [n for n in range(600) if bin_size_class(n) != bin_size_class(n + 1)]
    assert changes == [1, 4, 9, 19, 49, 99, 199, 499]
    assert {bin_size_class(n) for n in range(600)} == set(range(1, 10))


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_size_bins_monotone(a, b):
    if a <= b:
        assert bin_size_class(a) <= bin_size_class(b)


def test_negative_employees():
    with pytest.raises(ValueError):
        bin_size_class(-1)


@pytest.mark.parametrize("raw, digits, out", [
    ("30.3", 2, "30"), ("30.3", "full", "30.3"), ("30.3", 3, "30.3"), ("30.3", 4, "30.3"),
    ("26.11", 3, "26.1"), ("2611", "full", "26.11"), ("26.11.00", "full", "26.11"),
    ("05", 2, "05"), ("C26.1", "full", "26.1"), (" 62 ", 2, "62"), ("62.01|63.1", "full", "62.01"),
])
def test_normalize_nace(raw, digits, out):
    assert normalize_nace(raw, digits) == out


@pytest.mark.parametrize("raw", ["7", "", "ab", "2x.1", "26.x"])
def test_malformed_nace(raw):
    with pytest.raises(MalformedCode):
        normalize_nace(raw)


def test_validate_dataset():
    tax = default_geo_taxonomy()
    clean = [FirmRecord(str(i), "20121", 3, "26") for i in range(3)]
    rep = validate_dataset(clean, tax)
    assert (rep.records_accepted, rep.records_rejected) == (3, 0)

    bad = [
        FirmRecord("1", "20121", 3, "26"),
        FirmRecord("1", "20121", 3, "26"),
        FirmRecord("2", "99999", 3, "26"),
        FirmRecord("3", "20121", 10, "26"),
        FirmRecord("4", "20121", 3, "2"),
    ]
    rep = validate_dataset(bad, tax)
    assert rep.duplicate_ids == ["1"]
    assert [(r.line, r.reason) for r in rep.rejection_reasons] == [
        (2, "DuplicateId"), (3, "UnresolvableGeo"), (4, "SizeOutOfRange"), (5, "MalformedCode"),
    ]


def test_parse_is_deterministic():
    data = b"id,cap,size,nace\n1,20121,3,26\n2,x,,26\n3,00100,9,62.01\n"
    assert parse_firms(data) == parse_firms(data)
