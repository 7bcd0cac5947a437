"""k-wise independent hash families: degree-(k-1) polynomials over GF(2^b)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_FIELD_BITS = 63
ENUM_LIMIT_BITS = 24

# every family built through family_new is recorded here so tests can
# re-verify the ones small enough for exhaustive checks
FAMILY_LOG = set()


def _poly_mod(a, m):
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def _poly_mulmod(a, b, m):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
    return _poly_mod(r, m)


def _poly_gcd(a, b):
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def is_irreducible(f):
    """Rabin-style test over GF(2): x^(2^i) - x shares no factor with f for i <= deg/2."""
    d = f.bit_length() - 1
    if d < 1:
        return False
    if d == 1:
        return True
    x = 2
    t = x
    for _ in range(d // 2):
        t = _poly_mulmod(t, t, f)
        if _poly_gcd(f, t ^ x) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible(b):
    """Smallest irreducible polynomial of degree b (as an integer bit mask)."""
    for low in range(1, 1 << b, 2):
        f = (1 << b) | low
        if is_irreducible(f):
            return f
    raise ValueError(f"no irreducible polynomial of degree {b}")


def gf_mul(a, c, b, poly):
    r = 0
    while c:
        if c & 1:
            r ^= a
        c >>= 1
        a <<= 1
        if a >> b:
            a ^= poly
    return r


LOG_TABLE_BITS = 20


def _prime_factors(x):
    out, p = [], 2
    while p * p <= x:
        if x % p == 0:
            out.append(p)
            while x % p == 0:
                x //= p
        p += 1
    if x > 1:
        out.append(x)
    return out


def _gf_pow(a, e, b, poly):
    r = 1
    while e:
        if e & 1:
            r = gf_mul(r, a, b, poly)
        a = gf_mul(a, a, b, poly)
        e >>= 1
    return r


@lru_cache(maxsize=None)
def _log_tables(b, poly):
    """exp/log tables w.r.t. the smallest multiplicative generator."""
    order = (1 << b) - 1
    fs = _prime_factors(order)
    gen = next(x for x in range(2, 1 << b)
               if all(_gf_pow(x, order // p, b, poly) != 1 for p in fs))
    exp = np.zeros(2 * order, dtype=np.uint64)
    x = 1
    for i in range(order):
        exp[i] = x
        x = gf_mul(x, gen, b, poly)
    exp[order:] = exp[:order]
    lg = np.zeros(1 << b, dtype=np.int64)
    lg[exp[:order].astype(np.int64)] = np.arange(order)
    return exp, lg


def gf_mul_vec(a, c, b, poly):
    """Vectorised GF(2^b) product; a and c broadcast as uint64 arrays."""
    if 2 <= b <= LOG_TABLE_BITS:
        exp, lg = _log_tables(b, poly)
        a = np.asarray(a, dtype=np.uint64)
        c = np.asarray(c, dtype=np.uint64)
        a, c = np.broadcast_arrays(a, c)
        r = exp[lg[a.astype(np.int64)] + lg[c.astype(np.int64)]]
        return np.where((a == 0) | (c == 0), np.uint64(0), r)
    return _gf_mul_vec_shift(a, c, b, poly)


def _gf_mul_vec_shift(a, c, b, poly):
    a = np.asarray(a, dtype=np.uint64).copy()
    c = np.asarray(c, dtype=np.uint64).copy()
    a, c = np.broadcast_arrays(a, c)
    a = a.copy()
    c = c.copy()
    r = np.zeros(a.shape, dtype=np.uint64)
    top = np.uint64(1 << b)
    p = np.uint64(poly)
    one = np.uint64(1)
    for _ in range(b):
        r ^= np.where(c & one, a, np.uint64(0))
        c >>= one
        a <<= one
        a ^= np.where(a & top, p, np.uint64(0))
    return r


@dataclass(frozen=True)
class KWiseFamily:
    N: int
    ell: int
    k: int
    b: int
    poly: int

    @property
    def seed_bits(self):
        return self.k * self.b

    @property
    def seed_space(self):
        return 1 << self.seed_bits

    def coeffs(self, seed):
        mask = (1 << self.b) - 1
        return [(seed >> (j * self.b)) & mask for j in range(self.k)]


def family_new(N, ell, k):
    if N < 1 or ell < 1 or k < 1:
        raise ValueError("need N >= 1, ell >= 1, k >= 1")
    b = max(math.ceil(math.log2(N)) if N > 1 else 0, ell)
    if b > MAX_FIELD_BITS:
        raise ValueError(f"unsupported: field of {b} bits exceeds {MAX_FIELD_BITS}")
    f = KWiseFamily(N, ell, k, b, irreducible(b))
    FAMILY_LOG.add((N, ell, k))
    return f


def seed_from_coeffs(f, coeffs):
    """Pack coefficients (constant term first) into an integer seed."""
    if len(coeffs) != f.k:
        raise ValueError("need exactly k coefficients")
    s = 0
    for j, c in enumerate(coeffs):
        if not 0 <= c < (1 << f.b):
            raise ValueError("coefficient outside the field")
        s |= c << (j * f.b)
    return s


def _norm_seed(f, seed):
    if isinstance(seed, str):
        if len(seed) != f.seed_bits or set(seed) - {"0", "1"}:
            raise ValueError(f"seed must be a bit string of length {f.seed_bits}")
        return int(seed, 2)
    seed = int(seed)
    if not 0 <= seed < (1 << f.seed_bits):
        raise ValueError(f"seed must fit in {f.seed_bits} bits")
    return seed


def eval_hash(f, seed, x):
    seed = _norm_seed(f, seed)
    if not 0 <= x < f.N:
        raise ValueError(f"x={x} outside domain [0,{f.N})")
    acc = 0
    for c in reversed(f.coeffs(seed)):
        acc = gf_mul(acc, x, f.b, f.poly) ^ c
    return acc & ((1 << f.ell) - 1)


def _coeff_matrix(f, seeds):
    """Per-seed coefficient rows (constant term first), shape (S, k)."""
    if f.seed_bits <= 64:
        sd = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
        shifts = np.arange(f.k, dtype=np.uint64) * np.uint64(f.b)
        return (sd >> shifts) & np.uint64((1 << f.b) - 1)
    # wide seeds: unpack with python ints
    return np.array([f.coeffs(int(s)) for s in seeds], dtype=np.uint64).reshape(-1, f.k)


def eval_vec(f, seeds, xs):
    """Outputs for every (seed, x) pair: array of shape (len(seeds), len(xs))."""
    C = _coeff_matrix(f, seeds)
    xs = np.asarray(xs, dtype=np.uint64).reshape(1, -1)
    top = f.k - 1
    acc = np.broadcast_to(C[:, top:top + 1], (C.shape[0], xs.shape[1]))
    for j in reversed(range(top)):
        acc = gf_mul_vec(acc, xs, f.b, f.poly) ^ C[:, j:j + 1]
    return acc & np.uint64((1 << f.ell) - 1)


def all_seeds(f):
    if f.seed_bits > ENUM_LIMIT_BITS:
        raise ValueError(f"seed space 2^{f.seed_bits} too large to enumerate")
    return np.arange(1 << f.seed_bits, dtype=np.uint64)


def verify_kwise(f, sample_points):
    pts = list(sample_points)
    if len(set(pts)) != len(pts):
        raise ValueError("sample points must be distinct")
    seeds = all_seeds(f)
    if not pts:
        return True
    out = eval_vec(f, seeds, pts).astype(np.int64)
    code = np.zeros(len(seeds), dtype=np.int64)
    for j in range(len(pts)):
        code = (code << f.ell) | out[:, j]
    cells = 1 << (f.ell * len(pts))
    if cells > len(seeds):
        return False
    counts = np.bincount(code, minlength=cells)
    return bool(np.all(counts == len(seeds) // cells))


def tail_bound(k, mu, eps):
    if k < 4 or k % 2:
        raise ValueError("k must be an even integer >= 4")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mu < k:
        raise ValueError("bound inapplicable: mu < k")
    return 8.0 * (2.0 * k / (eps * eps * mu)) ** (k / 2)


def chebyshev_bound(mu):
    if mu <= 0:
        raise ValueError("mu must be positive")
    return 1.0 / mu
