import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridsteer import tz
from oracle import localize_oracle

T0 = 1037577600.0  # 2002-11-18T00:00:00Z


def test_iso_utc():
    assert tz.iso_utc(T0) == "2002-11-18T00:00:00Z"
    assert tz.iso_utc(T0 + 0.5) == "2002-11-18T00:00:00.500000Z"


def test_parse_iso_forms():
    assert tz.parse_iso("2002-11-18T00:00:00Z") == T0
    assert tz.parse_iso("2002-11-18T00:00:00+00:00") == T0
    assert tz.parse_iso("2002-11-18T11:00:00+11:00") == T0
    with pytest.raises(ValueError):
        tz.parse_iso("2002-11-18T00:00:00")  # naive not allowed here
    with pytest.raises(ValueError):
        tz.parse_iso("not a time")


def test_localize_worked_examples():
    at = tz.parse_iso("2002-11-18T02:00:00Z")
    assert tz.localize(at, 660) == "2002-11-18T13:00:00+11:00"
    assert tz.localize(at, -300) == "2002-11-17T21:00:00-05:00"
    assert tz.localize(at, 0) == "2002-11-18T02:00:00+00:00"


def test_localize_offset_bounds():
    tz.localize(T0, -720)
    tz.localize(T0, 840)
    for bad in (-721, 841, 10_000):
        with pytest.raises(ValueError):
            tz.localize(T0, bad)
    with pytest.raises((TypeError, ValueError)):
        tz.localize(T0, True)


def test_localize_floors_subseconds():
    assert tz.localize(T0 + 0.999, 0) == "2002-11-18T00:00:00+00:00"


@given(
    st.integers(min_value=int(T0) - 400 * 86400, max_value=int(T0) + 400 * 86400),
    st.integers(min_value=-720, max_value=840),
)
def test_localize_matches_independent_arithmetic(epoch, offset):
    assert tz.localize(float(epoch), offset) == localize_oracle(float(epoch), offset)


@given(
    st.integers(min_value=0, max_value=2_000_000_000),
    st.integers(min_value=-720, max_value=840),
)
def test_delocalize_localize_identity(epoch, offset):
    local = tz.localize(float(epoch), offset)
    assert tz.delocalize(local) == float(epoch)
