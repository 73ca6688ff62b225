import numpy as np
import pytest

from src.fxp import (
    BitIndexError,
    FixedPointError,
    FixedPointFormat,
    FixedPointValue,
    FormatMismatchError,
    add,
    convert,
    flip_bit,
    multiply,
    parse_format,
    quantize,
    stuck_at,
    to_real,
)
from src.fxp.arithmetic import add_raw, mul_raw, quantize_raw, real_raw, to_signed_raw

Q4_11 = FixedPointFormat.parse("s1.d4.f11")


def test_parse_and_str():
    fmt = FixedPointFormat.parse("s1.d4.f11")
    assert (fmt.sign_bits, fmt.digit_bits, fmt.fraction_bits) == (1, 4, 11)
    assert fmt.width == 16
    assert str(fmt) == "s1.d4.f11"
    assert parse_format(str(fmt)) == fmt
    assert FixedPointFormat.for_width(16, 0, 0) == FixedPointFormat(0, 0, 16)


@pytest.mark.parametrize("text", ["s2.d4.f11", "1.4.11", "s1.d4", "s1.d40.f0"])
def test_invalid_formats(text):
    with pytest.raises(FixedPointError):
        parse_format(text)


def test_range():
    assert Q4_11.min_value == -16.0
    assert Q4_11.max_value == 16.0 - 2 ** -11
    unsigned = FixedPointFormat(0, 0, 16)
    assert unsigned.min_int == 0
    assert unsigned.max_int == 65535


def test_quantize_truncates_toward_minus_infinity():
    assert quantize(0.5, Q4_11).raw == 1024
    assert to_real(quantize(-0.5, Q4_11)) == -0.5
    assert quantize(-0.5, Q4_11).raw == 0xFC00

    f4 = FixedPointFormat(0, 0, 4)
    assert to_real(quantize(0.1, f4)) == 0.0625
    s4 = FixedPointFormat(1, 0, 4)
    assert to_real(quantize(-0.1, s4)) == -0.125


def test_quantize_saturates():
    assert to_real(quantize(100.0, Q4_11)) == Q4_11.max_value
    assert to_real(quantize(-100.0, Q4_11)) == -16.0
    assert to_real(quantize(1e308 * 10, Q4_11)) == Q4_11.max_value
    assert to_real(quantize(-0.25, FixedPointFormat(0, 0, 8))) == 0.0


@pytest.mark.parametrize("fmt", [Q4_11, FixedPointFormat(0, 0, 16), FixedPointFormat(1, 15, 0)])
def test_every_16_bit_word_survives_real_round_trip(fmt):
    raws = np.arange(1 << 16, dtype=np.int64)
    assert np.array_equal(quantize_raw(real_raw(raws, fmt), fmt), raws)


def test_quantize_raw_arrays_match_scalars():
    values = np.array([0.5, -0.5, 0.3, -15.99, 20.0])
    raws = quantize_raw(values, Q4_11)
    assert raws.tolist() == [quantize(v, Q4_11).raw for v in values]


def test_multiply_floors_fraction():
    fmt = FixedPointFormat(1, 0, 2)
    quarter = quantize(0.25, fmt)
    minus_quarter = quantize(-0.25, fmt)
    assert to_real(multiply(quarter, quarter, fmt)) == 0.0
    assert to_real(multiply(minus_quarter, quarter, fmt)) == -0.25


def test_multiply_wraps_integer_part():
    fmt = FixedPointFormat(1, 2, 1)
    a, b = quantize(3.5, fmt), quantize(2.0, fmt)
    # 7.0 does not fit [-4, 3.5]; 14 wraps to -2 in four bits
    assert to_real(multiply(a, b, fmt)) == -1.0


def test_multiply_into_wider_format():
    out = FixedPointFormat(1, 8, 23)
    x = quantize(0.75, FixedPointFormat(0, 0, 16))
    w = quantize(-1.5, Q4_11)
    assert to_real(multiply(x, w, out)) == -1.125


def test_add_wraps():
    fmt = FixedPointFormat(1, 2, 1)
    assert to_real(add(quantize(3.5, fmt), quantize(0.5, fmt))) == -4.0
    assert to_real(add(quantize(1.0, fmt), quantize(-1.5, fmt))) == -0.5


def test_add_is_commutative_and_associative_under_wrap():
    fmt = FixedPointFormat(1, 2, 1)
    words = np.arange(16, dtype=np.int64)
    a, b, c = np.meshgrid(words, words, words, indexing="ij")
    assert np.array_equal(add_raw(a, b, fmt), add_raw(b, a, fmt))
    assert np.array_equal(add_raw(add_raw(a, b, fmt), c, fmt), add_raw(a, add_raw(b, c, fmt), fmt))

    x, y, z = quantize(3.5, Q4_11), quantize(15.0, Q4_11), quantize(-7.25, Q4_11)
    assert add(x, y) == add(y, x)
    assert add(add(x, y), z) == add(x, add(y, z))


def test_multiply_by_zero_is_zero():
    raws = np.arange(1 << 16, dtype=np.int64)
    out = FixedPointFormat(1, 6, 16)
    assert not mul_raw(raws, Q4_11, 0, Q4_11, out).any()
    assert not mul_raw(0, FixedPointFormat(0, 0, 16), raws, Q4_11, out).any()
    assert multiply(quantize(-15.5, Q4_11), quantize(0.0, Q4_11), out).raw == 0


def test_add_requires_same_format():
    with pytest.raises(FormatMismatchError):
        add(quantize(0.5, Q4_11), quantize(0.5, FixedPointFormat(0, 0, 16)))


def test_convert():
    narrow = FixedPointFormat(1, 4, 3)
    assert to_real(convert(quantize(1.75, Q4_11), narrow)) == 1.75
    assert to_real(convert(quantize(-0.1, Q4_11), narrow)) == -0.125
    wide = FixedPointFormat(1, 8, 23)
    assert to_real(convert(quantize(-3.25, Q4_11), wide)) == -3.25


def test_flip_and_stuck_bits():
    zero = quantize(0.0, Q4_11)
    assert to_real(flip_bit(zero, 15)) == -16.0
    assert flip_bit(flip_bit(zero, 3), 3) == zero
    assert stuck_at(zero, 11, 1).raw == 1 << 11
    assert stuck_at(quantize(1.0, Q4_11), 11, 0).raw == 0
    with pytest.raises(BitIndexError):
        flip_bit(zero, 16)
    with pytest.raises(ValueError):
        stuck_at(zero, 0, 2)


def test_value_bounds_and_bits():
    with pytest.raises(BitIndexError):
        FixedPointValue(1 << 16, Q4_11)
    v = quantize(-0.5, Q4_11)
    assert v.signed == -1024
    assert v.bit(15) == 1
    assert v.bit(9) == 0
    assert v.hex() == "0xfc00"
    assert float(v) == -0.5


def test_component_bits():
    assert Q4_11.component_bits("sign") == (15,)
    assert Q4_11.component_bits("digit") == (11, 12, 13, 14)
    assert Q4_11.component_bits("fraction") == tuple(range(11))
    assert Q4_11.component_bits("non-sign") == tuple(range(15))
    assert FixedPointFormat(0, 0, 16).component_bits("sign") == ()
    with pytest.raises(FixedPointError):
        Q4_11.component_bits("exponent")


def test_signed_interpretation_of_arrays():
    raws = np.array([0, 0x7FFF, 0x8000, 0xFFFF], dtype=np.int64)
    assert to_signed_raw(raws, Q4_11).tolist() == [0, 32767, -32768, -1]
