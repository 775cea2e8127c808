"""Counter-based random streams: philox4x64-10, pure-python reference.

Every Monte Carlo sample owns an independent substream identified by
key = (master_seed, sample_index); draw number d within the substream maps
to counter block d >> 2, lane d & 3.  Streams can therefore be evaluated in
any order, split across any number of workers, and always reproduce
bit-identically.

Known-answer vector (Random123 distribution, philox4x64x10):
    counter = (0,0,0,0), key = (0,0) ->
    0x16554d9eca36314c, 0xdb20fe9d672d0fdc, 0xd7e772cee186176b, 0x7e68b68aec7ba23b

numpy's Philox BitGenerator produces the same words with the counter
pre-incremented: numpy block n equals this function at counter block n+1.
The test suite pins both facts.

The compiled twin of this module lives in _kernels; the two are kept
bit-identical by construction (same arithmetic, same order) and a test
compares them draw by draw.
"""
from __future__ import annotations

import math

MASK64 = 0xFFFFFFFFFFFFFFFF
MASK32 = 0xFFFFFFFF

PHILOX_M0 = 0xD2E7470EE14C6C93
PHILOX_M1 = 0xCA5A826395121157
PHILOX_W0 = 0x9E3779B97F4A7C15
PHILOX_W1 = 0xBB67AE8584CAA73B

INV53 = 1.0 / 9007199254740992.0  # 2**-53


def mulhilo64(a: int, b: int) -> tuple[int, int]:
    """High and low 64-bit words of the 128-bit product a*b (a, b < 2**64)."""
    full = a * b
    return (full >> 64) & MASK64, full & MASK64


def philox_block(block: int, key0: int, key1: int) -> tuple[int, int, int, int]:
    """One philox4x64-10 keystream block: counter (block, 0, 0, 0)."""
    c0, c1, c2, c3 = block & MASK64, 0, 0, 0
    k0, k1 = key0 & MASK64, key1 & MASK64
    for _ in range(10):
        hi0, lo0 = mulhilo64(PHILOX_M0, c0)
        hi1, lo1 = mulhilo64(PHILOX_M1, c2)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + PHILOX_W0) & MASK64
        k1 = (k1 + PHILOX_W1) & MASK64
    return c0, c1, c2, c3


def raw_draw(seed: int, sample_index: int, draw: int) -> int:
    """The draw-th 64-bit word of substream (seed, sample_index)."""
    block = philox_block(draw >> 2, seed, sample_index)
    return block[draw & 3]


def uniform_open(raw: int) -> float:
    """Map a 64-bit word to (0, 1): (2*(raw >> 12) + 1) * 2**-53.

    The odd numerator stays below 2**53, so the arithmetic is exact and the
    result can never round up to 1.0 (the naive (raw >> 11) + 0.5 form does
    at the top of the range, which would blow up the normal quantile).
    """
    return ((raw >> 12) * 2 + 1) * INV53


def uniform_pos(raw: int) -> float:
    """Map a 64-bit word to (0, 1]: ((raw >> 11) + 1) * 2**-53."""
    return ((raw >> 11) + 1) * INV53


def exp1_from_raw(raw: int) -> float:
    """Standard exponential variate: -log(uniform_pos(raw)), in [0, 53*log 2]."""
    return -math.log(uniform_pos(raw))


def norm_ppf(p: float) -> float:
    """Inverse standard-normal CDF, Wichura's AS 241 (PPND16).

    Absolute accuracy ~1e-16 over (0, 1); identical expression (and hence
    identical floating-point result) to the compiled version in _kernels.
    """
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val
