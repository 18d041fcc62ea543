from fractions import Fraction

import pytest

from circuitmarket import RationalFormatError, format_rational, parse_rational


def test_parse_integers_and_fractions():
    assert parse_rational("3") == 3
    assert parse_rational("-7") == -7
    assert parse_rational("4/11") == Fraction(4, 11)
    assert parse_rational(" 1/12 ") == Fraction(1, 12)


def test_format_round_trip():
    for value in [Fraction(0), Fraction(1, 11), Fraction(-3, 7), Fraction(5)]:
        assert parse_rational(format_rational(value)) == value


@pytest.mark.parametrize(
    "bad", ["0.5", "1e-3", "1/0", "1/-2", "", "a/b", "1 / 2", "+3"]
)
def test_rejects_non_exact_forms(bad):
    with pytest.raises(RationalFormatError):
        parse_rational(bad)


def test_rejects_non_strings():
    with pytest.raises(RationalFormatError):
        parse_rational(0.5)
