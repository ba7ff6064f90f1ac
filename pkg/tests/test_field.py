import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from scorevote.errors import ConfigError, InversionOfZero, ModulusMismatch
from scorevote.field import (
    P13, P31, FieldElement, PrimeModulus, RandomSource, fe_arith, fe_inv, fe_sample_uniform,
    is_prime, mersenne_reduce,
)


def test_named_primes():
    f = PrimeModulus.named("p13")
    assert f.p == 8191 and f.bits == 13 and f.is_mersenne
    g = PrimeModulus.named("p31")
    assert g.p == 2**31 - 1 and g.bits == 31 and g.byte_width == 4
    assert not PrimeModulus(101).is_mersenne


def test_rejects_composites_and_large():
    with pytest.raises(ConfigError):
        PrimeModulus(8193)
    with pytest.raises(ConfigError):
        PrimeModulus(2**64 + 13)
    with pytest.raises(ConfigError):
        PrimeModulus.named("p7")


def test_is_prime_matches_trial_division():
    def slow(n):
        return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))
    assert [n for n in range(3000) if is_prime(n)] == [n for n in range(3000) if slow(n)]
    assert is_prime(2**61 - 1) and not is_prime(2**61 + 1)


def test_add_wraps(f13):
    assert fe_arith(f13(8190), f13(5), "add") == 4


def test_mul_identity_and_oracle(f31):
    rnd = random.Random(1)
    for _ in range(100):
        x = f31(rnd.randrange(P31))
        assert fe_arith(x, f31(1), "mul") == x
    # 2**32 mod (2**31 - 1) computed with Python integers
    assert fe_arith(f31(2**16), f31(2**16), "mul").value == pow(2, 32, P31) == 2


def test_sub_neg(f13):
    assert (f13(3) - f13(5)).value == 8189
    assert fe_arith(f13(3), f13(0), "neg").value == 8188
    assert (5 - f13(7)).value == 8189


def test_modulus_mismatch(f13, f31):
    with pytest.raises(ModulusMismatch):
        f13(1) + f31(1)
    with pytest.raises(ModulusMismatch):
        fe_arith(f13(1), f31(1), "mul")


def test_inverse(f13):
    assert fe_inv(f13(1)) == 1
    assert fe_inv(f13(2)).value == 4096
    with pytest.raises(InversionOfZero):
        fe_inv(f13(0))
    with pytest.raises(ZeroDivisionError):
        f13(5) / f13(0)


def test_inverse_round_trip_against_pow():
    f = PrimeModulus(P31)
    rnd = random.Random(2)
    for _ in range(100):
        x = f(rnd.randrange(1, P31))
        assert fe_inv(fe_inv(x)) == x
        assert fe_inv(x).value == pow(x.value, -1, P31)


elements = st.integers(min_value=0, max_value=2**40)


@settings(max_examples=300)
@given(a=elements, b=elements, c=elements, name=st.sampled_from(["p13", "p31"]))
def test_field_axioms(a, b, c, name):
    f = PrimeModulus.named(name)
    x, y, z = f(a), f(b), f(c)
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == 0
    assert (x * y).value == a * b % f.p


def test_field_axioms_bulk(modulus):
    rng = np.random.default_rng(3)
    a, b, c = (rng.integers(0, modulus.p, 10_000) for _ in range(3))
    f = modulus
    assert np.array_equal(f.add(f.add(a, b), c), f.add(a, f.add(b, c)))
    assert np.array_equal(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)))
    assert not f.add(a, f.neg(a)).any()


def test_mersenne_reduction_matches_naive():
    rng = np.random.default_rng(4)
    for k in (13, 31):
        p = 2**k - 1
        a = rng.integers(0, p, 100_000)
        b = rng.integers(0, p, 100_000)
        assert np.array_equal(mersenne_reduce(a * b, k), (a * b) % p)


def test_vector_inv_and_sqrt(modulus):
    f = modulus
    rng = np.random.default_rng(5)
    a = rng.integers(1, f.p, 500)
    assert np.all(f.mul(a, f.inv(a)) == 1)
    root = f.sqrt(f.mul(a, a))
    assert np.all(root <= f.p // 2)
    assert np.array_equal(f.mul(root, root), f.mul(a, a))


def test_sqrt_tonelli_branch():
    f = PrimeModulus(13)  # 13 % 4 == 1
    sq = np.array([(x * x) % 13 for x in range(13)])
    r = f.sqrt(sq)
    assert np.array_equal(r * r % 13, sq)


def test_signed():
    f = PrimeModulus(P13)
    assert list(f.signed(np.array([0, 1, 8190, 4095, 4096]))) == [0, 1, -1, 4095, -4095]


def test_sampling_range_and_determinism(f13):
    v = fe_sample_uniform(RandomSource(42), f13)
    assert 0 <= v.value < 8191
    a = RandomSource(9).field_array(f13, 1000)
    b = RandomSource(9).field_array(f13, 1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, RandomSource(10).field_array(f13, 1000))


def test_sampling_uniform_chi_square(f13):
    draws = RandomSource(11).field_array(f13, 100_000)
    counts = np.bincount(draws * 16 // f13.p, minlength=16)
    # buckets differ in width by at most one element out of ~512
    widths = np.bincount(np.arange(f13.p) * 16 // f13.p, minlength=16)
    expected = widths / f13.p * len(draws)
    assert stats.chisquare(counts, expected).pvalue > 0.001


def test_nonzero_and_randbelow():
    rng = RandomSource(1)
    f = PrimeModulus(7)
    assert rng.nonzero_field_array(f, 5000).min() >= 1
    vals = [rng.randbelow(3) for _ in range(300)]
    assert set(vals) == {0, 1, 2}
    with pytest.raises(ValueError):
        rng.randbelow(0)


def test_unseeded_source_is_random(f31):
    assert not np.array_equal(RandomSource().field_array(f31, 8), RandomSource().field_array(f31, 8))


def test_element_immutable_canonical(f13):
    x = FieldElement(-1, f13)
    assert x.value == 8190 and int(x) == 8190
    assert x ** -1 == fe_inv(x)
    assert hash(x) == hash(f13(8190))
