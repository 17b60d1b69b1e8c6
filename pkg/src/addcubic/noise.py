"""Deterministic seeded perturbations with a certified size envelope.

A noise value at a point x is a pure function of (seed, x, output index):
the input coordinates are snapped to the dyadic grid 2^-40, hashed with
BLAKE2b together with the seed and coordinate index, and the digest is
mapped to a rational direction vector in [-1, 1]^m.  The direction is
damped by 1/m so its norm is at most 1 under both supported norms, then
scaled by amplitude * b^p where b = max_i |x_i| is an exact rational lower
bound of ||x|| for both the Euclidean and the max norm.  The result:

* outputs are rationals with bounded denominators, so exact mode works;
* ||output|| <= amplitude * ||x||^p holds by construction for p >= 0;
* the same (seed, x) always yields the bit-identical output.

The dyadic snap makes queries at halved/doubled arguments stable, which is
what the direct-method iterations feed this with.
"""

from __future__ import annotations

import hashlib
import math
from fractions import Fraction

from .scalars import EXACT, Number, coerce

QUANT_BITS = 40  # inputs snapped to multiples of 2^-40 before hashing
VALUE_BITS = 20  # direction components live on the grid 2^-20 in [-1, 1]

# Pad applied when amplitude * b^p must be computed through float pow
# (non-integer exponents); float pow errs by ~1 ulp, the pad is 2^-30.
_POWER_SAFETY = Fraction((1 << 30) - 1, 1 << 30)


def _snap(value: Number) -> int:
    """Floor the coordinate to the 2^-40 grid, returning the grid index."""
    frac = value if isinstance(value, Fraction) else Fraction(value)
    return (frac.numerator << QUANT_BITS) // frac.denominator


def _direction_component(seed: int, snapped: tuple[int, ...], index: int) -> Fraction:
    """Hash-derived rational in [-1, 1] for one output coordinate."""
    payload = f"{seed}|{index}|" + ",".join(str(s) for s in snapped)
    digest = hashlib.blake2b(payload.encode("ascii"), digest_size=8).digest()
    raw = int.from_bytes(digest, "big")
    span = (1 << (VALUE_BITS + 1)) + 1  # odd count keeps 0 reachable
    return Fraction(raw % span - (1 << VALUE_BITS), 1 << VALUE_BITS)


def _scale(coords, amplitude: Fraction, exponent: Fraction) -> Fraction:
    """Certified rational s with s <= amplitude * ||x||^p (either norm kind)."""
    if amplitude == 0:
        return Fraction(0)
    if exponent == 0:
        return amplitude
    base = max(abs(c) if isinstance(c, Fraction) else abs(Fraction(c)) for c in coords)
    if base == 0:
        return Fraction(0)
    if exponent.denominator == 1:
        return amplitude * base ** exponent.numerator
    powered = float(base) ** float(exponent)
    if not math.isfinite(powered):
        raise OverflowError("noise scale overflow: |x|^p is not finite")
    return amplitude * Fraction(powered) * _POWER_SAFETY


def sample(seed: int, coords, amplitude: Fraction, exponent: Fraction,
           dim_out: int, mode: str) -> list[Number]:
    """Noise output coordinates at the given input coordinates.

    The envelope ||output|| <= amplitude * (max_i |x_i|)^exponent
    <= amplitude * ||x||^exponent is guaranteed exactly.
    """
    scale = _scale(coords, amplitude, exponent)
    if scale == 0:
        return [coerce(0, mode) for _ in range(dim_out)]
    snapped = tuple(_snap(c) for c in coords)
    damping = Fraction(1, dim_out)
    out = []
    for j in range(dim_out):
        value = scale * damping * _direction_component(seed, snapped, j)
        out.append(value if mode == EXACT else float(value))
    return out


def noise_eval(seed: int, x, amplitude, exponent=0, dim_out: int | None = None):
    """Standalone noise evaluation at a point; see module docstring.

    ``amplitude`` must be >= 0; ``exponent`` >= 0 (0 gives the bounded case,
    where the output norm never exceeds the amplitude).  With exponent > 0
    the output at x = 0 is 0.
    """
    from .models import Point  # local import to avoid a cycle

    amp = Fraction(amplitude)
    exp = Fraction(exponent)
    if amp < 0:
        raise ValueError("noise amplitude must be nonnegative")
    if exp < 0:
        raise ValueError("noise exponent must be nonnegative")
    m = x.dim if dim_out is None else dim_out
    values = sample(seed, x.coords, amp, exp, m, x.mode)
    return Point(tuple(values), norm_kind=x.norm_kind)
