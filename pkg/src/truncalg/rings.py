"""Coefficient rings: exact arithmetic for the five ring families.

Families and raw element representations (always canonical):

  LocalizedIntegers(S)          Fraction, denominator supported on S
  TruncatedPadic(p, N)          int in [0, p^N)                    -- chain ring, uniformizer p
  TruncatedPowerSeries(p, M)    tuple of M ints in [0, p)          -- chain ring, uniformizer z
  TruncatedBK(p, N, M, E)       tuple of M ints in [0, p^N)        -- bivariate truncation of W[[z]]
  TruncatedLambda(S, M)         tuple of M Fractions               -- truncation of Z[1/S][[q-1]]

The two chain rings and LocalizedIntegers support Smith normal forms directly;
TruncatedBK and TruncatedLambda are handled by restriction of scalars to their
base ring (TruncatedPadic resp. LocalizedIntegers), see linalg.expand_matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime

from .errors import SchemaError, UnsupportedRingError


class AtLeastPrecision:
    """Valuation marker for elements that vanish at the working truncation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "AtLeastPrecision"

    def __ge__(self, other):
        return True

    def __gt__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return False


AT_LEAST_PRECISION = AtLeastPrecision()


def _check_primes(primes):
    primes = tuple(int(q) for q in primes)
    if list(primes) != sorted(set(primes)):
        raise SchemaError("inverted primes must be sorted and duplicate-free")
    for q in primes:
        if not isprime(q):
            raise SchemaError(f"{q} is not prime")
    return primes


@dataclass(frozen=True)
class EisensteinSpec:
    """Monic polynomial c_0 + c_1 z + ... + z^e with p | c_i and v_p(c_0) = 1."""

    coefficients: tuple
    ramification_e: int

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(int(c) for c in self.coefficients))

    def validate(self, p):
        c = self.coefficients
        e = self.ramification_e
        if e < 1 or len(c) != e + 1:
            raise SchemaError("eisenstein polynomial needs degree e >= 1 and e+1 coefficients")
        if c[-1] != 1:
            raise SchemaError("eisenstein polynomial must be monic")
        if c[0] % p != 0 or c[0] % (p * p) == 0:
            raise SchemaError("eisenstein constant term must have p-valuation exactly 1")
        for ci in c[1:-1]:
            if ci % p != 0:
                raise SchemaError("eisenstein middle coefficients must be divisible by p")


def default_eisenstein(p):
    """E(z) = z - p, the unramified case e = 1."""
    return EisensteinSpec(coefficients=(-p, 1), ramification_e=1)


class RingBase:
    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def sum(self, xs):
        acc = self.zero
        for x in xs:
            acc = self.add(acc, x)
        return acc

    def is_zero(self, x):
        return x == self.zero

    def pow(self, x, k):
        acc = self.one
        for _ in range(k):
            acc = self.mul(acc, x)
        return acc

    def normalize(self, raw):
        raise NotImplementedError

    def element_str(self, x):
        return str(x)


@dataclass(frozen=True)
class LocalizedIntegers(RingBase):
    inverted_primes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "inverted_primes", _check_primes(self.inverted_primes))

    @property
    def zero(self):
        return Fraction(0)

    @property
    def one(self):
        return Fraction(1)

    def from_int(self, n):
        return Fraction(n)

    def add(self, x, y):
        return x + y

    def neg(self, x):
        return -x

    def mul(self, x, y):
        return x * y

    def is_unit(self, x):
        if x == 0:
            return False
        return self.strip_s(abs(x.numerator)) == 1

    def inv(self, x):
        if not self.is_unit(x):
            raise ZeroDivisionError(f"{x} is not a unit in Z[1/S]")
        return 1 / x

    def strip_s(self, n):
        """Remove all inverted-prime factors from a positive integer."""
        n = abs(int(n))
        for q in self.inverted_primes:
            while n % q == 0:
                n //= q
        return n

    def normalize(self, raw):
        x = Fraction(raw)
        if self.strip_s(x.denominator) != 1:
            raise SchemaError(
                f"denominator {x.denominator} has a prime factor outside S={list(self.inverted_primes)}"
            )
        return x

    def divide(self, x, y):
        """Return q with q*y = x, or None. Exact division in Z[1/S]."""
        if y == 0:
            return self.zero if x == 0 else None
        q = x / y
        if self.strip_s(q.denominator) == 1:
            return q
        return None

    def ann_gen(self, d):
        """Generator of the annihilator of (d); None means ann = 0."""
        return self.one if d == 0 else None

    def element_str(self, x):
        return str(x)


class ChainRing(RingBase):
    """Common protocol for Z/p^N and F_p[z]/(z^M): every ideal is (uniformizer^k)."""

    @property
    def precision(self):
        raise NotImplementedError

    def val(self, x):
        raise NotImplementedError

    def uniformizer_power(self, k):
        raise NotImplementedError

    def valuation_or_marker(self, x):
        return AT_LEAST_PRECISION if self.is_zero(x) else self.val(x)

    def divide(self, x, y):
        """q with q*y = x when v(x) >= v(y); None otherwise."""
        if self.is_zero(x):
            return self.zero
        if self.is_zero(y):
            return None
        kx, ky = self.val(x), self.val(y)
        if kx < ky:
            return None
        return self.mul(self.shift_down(x, ky), self.inv(self.unit_part(y)))

    def ann_gen(self, d):
        if self.is_zero(d):
            return self.one
        k = self.val(d)
        if k == 0:
            return None
        return self.uniformizer_power(self.precision - k)

    def unit_part(self, x):
        """u with x = u * uniformizer^v(x)."""
        return self.shift_down(x, self.val(x))

    def shift_down(self, x, k):
        """Exact division by uniformizer^k (requires v(x) >= k)."""
        raise NotImplementedError


@dataclass(frozen=True)
class TruncatedPadic(ChainRing):
    p: int
    precision_n: int

    def __post_init__(self):
        if not isprime(self.p):
            raise SchemaError(f"{self.p} is not prime")
        if self.precision_n < 1:
            raise SchemaError("precision must be >= 1")

    @property
    def modulus(self):
        return self.p ** self.precision_n

    @property
    def precision(self):
        return self.precision_n

    @property
    def zero(self):
        return 0

    @property
    def one(self):
        return 1

    def from_int(self, n):
        return int(n) % self.modulus

    def add(self, x, y):
        return (x + y) % self.modulus

    def neg(self, x):
        return (-x) % self.modulus

    def mul(self, x, y):
        return (x * y) % self.modulus

    def is_unit(self, x):
        return x % self.p != 0

    def inv(self, x):
        return pow(x, -1, self.modulus)

    def val(self, x):
        if x == 0:
            raise ValueError("valuation of zero; use valuation_or_marker")
        k = 0
        while x % self.p == 0:
            x //= self.p
            k += 1
        return k

    def uniformizer_power(self, k):
        return self.from_int(self.p ** k) if k < self.precision_n else 0

    def shift_down(self, x, k):
        return x // (self.p ** k)

    def normalize(self, raw):
        return self.from_int(raw)


class _PolyTruncMixin:
    """Coefficient-vector arithmetic truncated at var^mlen over a scalar base."""

    @property
    def mlen(self):
        raise NotImplementedError

    @property
    def scalar(self):
        """Base coefficient ring object (TruncatedPadic or LocalizedIntegers-like)."""
        raise NotImplementedError

    @property
    def zero(self):
        return (self.scalar.zero,) * self.mlen

    @property
    def one(self):
        s = self.scalar
        return (s.one,) + (s.zero,) * (self.mlen - 1)

    def from_int(self, n):
        s = self.scalar
        return (s.from_int(n),) + (s.zero,) * (self.mlen - 1)

    def from_coeffs(self, coeffs):
        s = self.scalar
        coeffs = list(coeffs)[: self.mlen]
        coeffs += [s.zero] * (self.mlen - len(coeffs))
        return tuple(s.normalize(c) for c in coeffs)

    def add(self, x, y):
        s = self.scalar
        return tuple(s.add(a, b) for a, b in zip(x, y))

    def neg(self, x):
        s = self.scalar
        return tuple(s.neg(a) for a in x)

    def mul(self, x, y):
        s = self.scalar
        out = [s.zero] * self.mlen
        for i, a in enumerate(x):
            if s.is_zero(a):
                continue
            for j, b in enumerate(y):
                if i + j >= self.mlen:
                    break
                out[i + j] = s.add(out[i + j], s.mul(a, b))
        return tuple(out)

    def var_power(self, k):
        """z^k (resp. (q-1)^k), zero once k reaches the truncation order."""
        s = self.scalar
        out = [s.zero] * self.mlen
        if k < self.mlen:
            out[k] = s.one
        return tuple(out)

    def var_valuation(self, x):
        for i, a in enumerate(x):
            if not self.scalar.is_zero(a):
                return i
        return None

    def is_unit(self, x):
        return self.scalar.is_unit(x[0])

    def inv(self, x):
        """Inverse of a unit: invert the constant term, then lift order by order."""
        s = self.scalar
        c0inv = s.inv(x[0])
        out = [s.zero] * self.mlen
        out[0] = c0inv
        for k in range(1, self.mlen):
            acc = s.zero
            for i in range(1, k + 1):
                acc = s.add(acc, s.mul(x[i], out[k - i]))
            out[k] = s.neg(s.mul(c0inv, acc))
        return tuple(out)

    def element_str(self, x):
        return "[" + ", ".join(self.scalar.element_str(c) for c in x) + "]"


@dataclass(frozen=True)
class TruncatedPowerSeries(_PolyTruncMixin, ChainRing):
    """k[[z]] truncated: F_p[z]/(z^M). Chain ring with uniformizer z."""

    p: int
    precision_m: int

    def __post_init__(self):
        if not isprime(self.p):
            raise SchemaError(f"{self.p} is not prime")
        if self.precision_m < 1:
            raise SchemaError("precision must be >= 1")

    @property
    def mlen(self):
        return self.precision_m

    @property
    def scalar(self):
        return TruncatedPadic(self.p, 1)

    @property
    def precision(self):
        return self.precision_m

    def val(self, x):
        v = self.var_valuation(x)
        if v is None:
            raise ValueError("valuation of zero; use valuation_or_marker")
        return v

    def uniformizer_power(self, k):
        return self.var_power(k)

    def shift_down(self, x, k):
        s = self.scalar
        return tuple(list(x[k:]) + [s.zero] * k)

    def normalize(self, raw):
        return self.from_coeffs(raw if isinstance(raw, (list, tuple)) else [raw])

    def frobenius(self, x):
        """z |-> z^p; identity on F_p coefficients."""
        s = self.scalar
        out = [s.zero] * self.mlen
        for j, a in enumerate(x):
            if j * self.p >= self.mlen:
                break
            out[j * self.p] = a
        return tuple(out)

    @property
    def frobenius_trusted_precision(self):
        return (self.mlen + self.p - 1) // self.p


@dataclass(frozen=True)
class TruncatedBK(_PolyTruncMixin, RingBase):
    """W[[z]] at bi-truncation (p^N, z^M), W = Z_p with k = F_p."""

    p: int
    precision_n: int
    precision_m: int
    eisenstein: EisensteinSpec = None

    def __post_init__(self):
        if not isprime(self.p):
            raise SchemaError(f"{self.p} is not prime")
        if self.precision_n < 1 or self.precision_m < 1:
            raise SchemaError("precisions must be >= 1")
        e = self.eisenstein if self.eisenstein is not None else default_eisenstein(self.p)
        e.validate(self.p)
        object.__setattr__(self, "eisenstein", e)

    @property
    def mlen(self):
        return self.precision_m

    @property
    def scalar(self):
        return TruncatedPadic(self.p, self.precision_n)

    def normalize(self, raw):
        return self.from_coeffs(raw if isinstance(raw, (list, tuple)) else [raw])

    def p_valuation(self, x):
        """Largest k with x in (p^k): min of coefficient p-valuations."""
        s = self.scalar
        vals = [s.val(c) for c in x if not s.is_zero(c)]
        return min(vals) if vals else None

    def z_valuation(self, x):
        return self.var_valuation(x)

    def frobenius(self, x):
        s = self.scalar
        out = [s.zero] * self.mlen
        for j, a in enumerate(x):
            if j * self.p >= self.mlen:
                break
            out[j * self.p] = a
        return tuple(out)

    @property
    def frobenius_trusted_precision(self):
        return (self.mlen + self.p - 1) // self.p

    def eisenstein_element(self):
        return self.from_coeffs([self.scalar.from_int(c) for c in self.eisenstein.coefficients])

    def truncate_z(self, x, k):
        """Kill all coefficients of z^j with j >= k."""
        s = self.scalar
        return tuple(c if j < k else s.zero for j, c in enumerate(x))


@dataclass(frozen=True)
class TruncatedLambda(_PolyTruncMixin, RingBase):
    """Z[1/S][[q-1]] truncated at (q-1)^M. Base ring is the PID Z[1/S]."""

    inverted_primes: tuple
    precision_m: int

    def __post_init__(self):
        object.__setattr__(self, "inverted_primes", _check_primes(self.inverted_primes))
        if self.precision_m < 1:
            raise SchemaError("precision must be >= 1")

    @property
    def mlen(self):
        return self.precision_m

    @property
    def scalar(self):
        return LocalizedIntegers(self.inverted_primes)

    def normalize(self, raw):
        return self.from_coeffs(raw if isinstance(raw, (list, tuple)) else [raw])

    def q_minus_one(self):
        return self.var_power(1)


def normalize(raw, ring):
    """Spec op: canonicalize raw element data in the declared ring. Idempotent."""
    return ring.normalize(raw)


def valuation(x, uniformizer, ring):
    """Spec op: largest k with x in (uniformizer^k), or AT_LEAST_PRECISION for 0.

    uniformizer is the string "p" or "z"; legality depends on the family.
    """
    if isinstance(ring, TruncatedPadic):
        if uniformizer != "p":
            raise UnsupportedRingError("TruncatedPadic only supports the uniformizer p")
        return ring.valuation_or_marker(x)
    if isinstance(ring, TruncatedPowerSeries):
        if uniformizer != "z":
            raise UnsupportedRingError("TruncatedPowerSeries only supports the uniformizer z")
        return ring.valuation_or_marker(x)
    if isinstance(ring, TruncatedBK):
        if uniformizer == "p":
            v = ring.p_valuation(x)
        elif uniformizer == "z":
            v = ring.z_valuation(x)
        else:
            raise UnsupportedRingError("TruncatedBK supports uniformizers p and z")
        return AT_LEAST_PRECISION if v is None else v
    raise UnsupportedRingError(f"valuation not defined for {type(ring).__name__}")


def frobenius(x, ring):
    """Spec op: phi with phi(z) = z^p, identity on W-coefficients.

    The result is exact in the truncated ring; its z-precision as a model of
    the untruncated Frobenius is ring.frobenius_trusted_precision.
    """
    if not isinstance(ring, (TruncatedPowerSeries, TruncatedBK)):
        raise UnsupportedRingError("frobenius needs a z-family ring")
    return ring.frobenius(x)


def eisenstein_eval(eisenstein, power, ring):
    """Spec op: canonical representation of E(z)^power in the truncated ring."""
    if not isinstance(ring, TruncatedBK):
        raise UnsupportedRingError("eisenstein_eval needs a TruncatedBK ring")
    if power < 0:
        raise SchemaError("power must be >= 0")
    base = ring.from_coeffs([ring.scalar.from_int(c) for c in eisenstein.coefficients])
    return ring.pow(base, power)


def is_snf_capable(ring):
    return isinstance(ring, (TruncatedPadic, TruncatedPowerSeries, LocalizedIntegers))


def is_expansion_ring(ring):
    return isinstance(ring, (TruncatedBK, TruncatedLambda))


def base_ring_of(ring):
    """The chain/PID base a TruncatedBK or TruncatedLambda expands over."""
    if isinstance(ring, TruncatedBK):
        return ring.scalar
    if isinstance(ring, TruncatedLambda):
        return ring.scalar
    raise UnsupportedRingError(f"{type(ring).__name__} has no expansion base")
