"""Points, norms, function models and control functions.

The domain and codomain are finite-dimensional real spaces R^d with either
the Euclidean or the max norm.  A function model is a sum of atoms:

* ``Linear``            -- f(x) = M x, exactly additive;
* ``CubicHomogeneous``  -- per-output homogeneous degree-3 polynomials,
                           satisfying f(2x) = 8 f(x) and f(-x) = -f(x);
* ``BoundedNoise``      -- deterministic perturbation, ||f(x)|| <= eps;
* ``PowerNoise``        -- deterministic perturbation, ||f(x)|| <= eps ||x||^p;
* ``Even``              -- quadratic forms, a deliberate non-solution used in
                           negative tests.

All coefficients are stored as exact rationals; evaluation happens in the
mode of the input point (exact or float).  Every value is immutable after
construction and evaluation is pure, so everything here is safe to share
across threads without synchronization.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Callable, Sequence, Union

from . import noise as noise_mod
from .scalars import EXACT, FLOAT, ModeMismatchError, Number, coerce, require_mode

EUCLIDEAN = "euclidean"
MAX = "max"
NORM_KINDS = (EUCLIDEAN, MAX)


class DimensionMismatchError(ValueError):
    """Raised when points or models of incompatible dimensions meet."""


# ---------------------------------------------------------------------------
# Points and norms
# ---------------------------------------------------------------------------

def _coord_mode(coords) -> str:
    modes = {FLOAT if isinstance(c, float) else EXACT for c in coords}
    if len(modes) != 1:
        raise ModeMismatchError("point mixes exact and float coordinates")
    return modes.pop()


@dataclass(frozen=True)
class Point:
    """An element of R^d: ordered coordinates plus the active norm kind."""

    coords: tuple[Number, ...]
    norm_kind: str = EUCLIDEAN

    def __post_init__(self):
        if len(self.coords) < 1:
            raise DimensionMismatchError("points need at least one coordinate")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        _coord_mode(self.coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def mode(self) -> str:
        return _coord_mode(self.coords)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def _check_compatible(self, other: "Point") -> None:
        if self.dim != other.dim:
            raise DimensionMismatchError(f"dimension {self.dim} vs {other.dim}")
        if self.norm_kind != other.norm_kind:
            raise ValueError("points carry different norm kinds")
        if self.mode != other.mode:
            raise ModeMismatchError("points carry different scalar modes")

    def __add__(self, other: "Point") -> "Point":
        self._check_compatible(other)
        return Point(tuple(a + b for a, b in zip(self.coords, other.coords)),
                     self.norm_kind)

    def __sub__(self, other: "Point") -> "Point":
        self._check_compatible(other)
        return Point(tuple(a - b for a, b in zip(self.coords, other.coords)),
                     self.norm_kind)

    def __neg__(self) -> "Point":
        return Point(tuple(-c for c in self.coords), self.norm_kind)

    def scale(self, factor) -> "Point":
        f = coerce(factor, self.mode)
        return Point(tuple(f * c for c in self.coords), self.norm_kind)

    def __rmul__(self, factor) -> "Point":
        return self.scale(factor)

    def to_mode(self, mode: str) -> "Point":
        require_mode(mode)
        if mode == self.mode:
            return self
        return Point(tuple(coerce(c, mode) for c in self.coords), self.norm_kind)


def point(values: Sequence, mode: str = EXACT, norm_kind: str = EUCLIDEAN) -> Point:
    """Build a point, coercing each value into the requested mode."""
    return Point(tuple(coerce(v, mode) for v in values), norm_kind)


def zero_point(dim: int, mode: str = EXACT, norm_kind: str = EUCLIDEAN) -> Point:
    return point([0] * dim, mode, norm_kind)


def norm(p: Point) -> float:
    """Norm of a point under its norm kind, computed as a float.

    Exactness-sensitive checks compare coordinates directly (``is_zero``);
    the norm is a diagnostic metric and float precision is sufficient.
    """
    if p.norm_kind == MAX:
        return max(abs(float(c)) for c in p.coords)
    if p.dim == 1:
        return abs(float(p.coords[0]))
    return math.sqrt(math.fsum(float(c) * float(c) for c in p.coords))


# ---------------------------------------------------------------------------
# Model atoms
# ---------------------------------------------------------------------------

def _rational_rows(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def _clear_denominators(coords) -> tuple[list[int], int]:
    """Integer coordinates u with coords = u / L; the exact-mode fast path."""
    lcm = reduce(math.lcm, (c.denominator for c in coords), 1)
    return [c.numerator * (lcm // c.denominator) for c in coords], lcm


def _integer_rows(rows) -> tuple[tuple[tuple[int, ...], ...], int]:
    """Rows scaled to integers plus the common denominator that was cleared."""
    den = reduce(math.lcm, (c.denominator for row in rows for c in row), 1)
    scaled = tuple(tuple(c.numerator * (den // c.denominator) for c in row)
                   for row in rows)
    return scaled, den


@dataclass(frozen=True)
class Linear:
    """f(x) = M x for an m-by-d rational matrix M; exactly additive."""

    matrix: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "matrix", _rational_rows(self.matrix))
        widths = {len(row) for row in self.matrix}
        if len(widths) != 1:
            raise DimensionMismatchError("ragged matrix")

    @property
    def dim_in(self) -> int:
        return len(self.matrix[0])

    @property
    def dim_out(self) -> int:
        return len(self.matrix)

    @cached_property
    def _float_matrix(self):
        return tuple(tuple(float(v) for v in row) for row in self.matrix)

    @cached_property
    def _integer_matrix(self):
        return _integer_rows(self.matrix)

    def evaluate(self, coords, mode: str, dim_out: int) -> list[Number]:
        if mode != EXACT:
            out = []
            for row in self._float_matrix:
                acc = 0.0
                for m, c in zip(row, coords):
                    if m:
                        acc += m * c
                out.append(acc)
            return out
        ints, scale = _clear_denominators(coords)
        rows, den = self._integer_matrix
        den *= scale
        return [Fraction(sum(m * u for m, u in zip(row, ints) if m), den)
                for row in rows]


Monomial = tuple[int, int, int]  # sorted coordinate indices i <= j <= k


@dataclass(frozen=True)
class CubicHomogeneous:
    """Per-output homogeneous cubic polynomials: f_j(x) = sum c * x_i x_j x_k.

    Each output coordinate carries a tuple of (monomial, coefficient) rows
    with sorted index triples, i.e. the diagonal of a symmetric trilinear
    form.  Any such map satisfies f(2x) = 8 f(x) and f(-x) = -f(x) exactly.
    """

    terms: tuple[tuple[tuple[Monomial, Fraction], ...], ...]
    dims: tuple[int, int]  # (d, m); d is not implied by sparse terms

    def __post_init__(self):
        d, m = self.dims
        normalized = []
        for out_terms in self.terms:
            rows = []
            for mono, coeff in out_terms:
                i, j, k = sorted(mono)
                if not 0 <= i <= j <= k < d:
                    raise DimensionMismatchError(f"monomial {mono} out of range")
                rows.append(((i, j, k), Fraction(coeff)))
            normalized.append(tuple(rows))
        if len(normalized) != m:
            raise DimensionMismatchError("one term table per output coordinate")
        object.__setattr__(self, "terms", tuple(normalized))

    @property
    def dim_in(self) -> int:
        return self.dims[0]

    @property
    def dim_out(self) -> int:
        return self.dims[1]

    @cached_property
    def _float_terms(self):
        return tuple(tuple((mono, float(c)) for mono, c in rows)
                     for rows in self.terms)

    @cached_property
    def _integer_terms(self):
        """Per output: (rows with integer coefficients, cleared denominator)."""
        out = []
        for rows in self.terms:
            den = reduce(math.lcm, (c.denominator for _, c in rows), 1)
            out.append((tuple((mono, c.numerator * (den // c.denominator))
                              for mono, c in rows), den))
        return tuple(out)

    def evaluate(self, coords, mode: str, dim_out: int) -> list[Number]:
        products: dict[Monomial, object] = {}
        if mode != EXACT:
            out = []
            for rows in self._float_terms:
                acc = 0.0
                for mono, c in rows:
                    v = products.get(mono)
                    if v is None:
                        i, j, k = mono
                        v = coords[i] * coords[j] * coords[k]
                        products[mono] = v
                    acc += c * v
                out.append(acc)
            return out
        ints, scale = _clear_denominators(coords)
        cube = scale ** 3
        out = []
        for rows, den in self._integer_terms:
            acc = 0
            for mono, c in rows:
                v = products.get(mono)
                if v is None:
                    i, j, k = mono
                    v = ints[i] * ints[j] * ints[k]
                    products[mono] = v
                acc += c * v
            out.append(Fraction(acc, den * cube))
        return out


@dataclass(frozen=True)
class Even:
    """Quadratic forms f_j(x) = x^T Q_j x; even, hence never a solution."""

    matrices: tuple[tuple[tuple[Fraction, ...], ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "matrices", tuple(_rational_rows(q) for q in self.matrices))

    @property
    def dim_in(self) -> int:
        return len(self.matrices[0])

    @property
    def dim_out(self) -> int:
        return len(self.matrices)

    @cached_property
    def _float_matrices(self):
        return tuple(tuple(tuple(float(v) for v in row) for row in q)
                     for q in self.matrices)

    @cached_property
    def _integer_matrices(self):
        return tuple(_integer_rows(q) for q in self.matrices)

    def evaluate(self, coords, mode: str, dim_out: int) -> list[Number]:
        if mode != EXACT:
            out = []
            for q in self._float_matrices:
                acc = 0.0
                for row, ci in zip(q, coords):
                    for v, cj in zip(row, coords):
                        if v:
                            acc += v * ci * cj
                out.append(acc)
            return out
        ints, scale = _clear_denominators(coords)
        square = scale * scale
        out = []
        for q, den in self._integer_matrices:
            acc = 0
            for row, ui in zip(q, ints):
                for v, uj in zip(row, ints):
                    if v:
                        acc += v * ui * uj
            out.append(Fraction(acc, den * square))
        return out


@dataclass(frozen=True)
class BoundedNoise:
    """Deterministic seeded perturbation with ||f(x)|| <= amplitude."""

    seed: int
    amplitude: Fraction

    def __post_init__(self):
        object.__setattr__(self, "amplitude", Fraction(self.amplitude))
        if self.amplitude < 0:
            raise ValueError("noise amplitude must be nonnegative")

    def evaluate(self, coords, mode: str, dim_out: int) -> list[Number]:
        return noise_mod.sample(self.seed, coords, self.amplitude,
                                Fraction(0), dim_out, mode)


@dataclass(frozen=True)
class PowerNoise:
    """Deterministic seeded perturbation with ||f(x)|| <= amplitude * ||x||^p."""

    seed: int
    amplitude: Fraction
    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "amplitude", Fraction(self.amplitude))
        object.__setattr__(self, "exponent", Fraction(self.exponent))
        if self.amplitude < 0:
            raise ValueError("noise amplitude must be nonnegative")
        if self.exponent < 0:
            raise ValueError("noise exponent must be nonnegative")

    def evaluate(self, coords, mode: str, dim_out: int) -> list[Number]:
        return noise_mod.sample(self.seed, coords, self.amplitude,
                                self.exponent, dim_out, mode)


Atom = Union[Linear, CubicHomogeneous, Even, BoundedNoise, PowerNoise]
NOISE_ATOMS = (BoundedNoise, PowerNoise)


# ---------------------------------------------------------------------------
# Function models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FuncModel:
    """A function R^d -> R^m given as a sum of atoms; callable on points."""

    dim_in: int
    dim_out: int
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        for atom in self.atoms:
            d = getattr(atom, "dim_in", self.dim_in)
            m = getattr(atom, "dim_out", self.dim_out)
            if (d, m) != (self.dim_in, self.dim_out):
                raise DimensionMismatchError(
                    f"atom {type(atom).__name__} is {d}->{m}, "
                    f"model is {self.dim_in}->{self.dim_out}")

    def evaluate_coords(self, coords, mode: str) -> list[Number]:
        """Atom-sum evaluation on raw coordinates; the hot path."""
        if len(coords) != self.dim_in:
            raise DimensionMismatchError(
                f"got {len(coords)} coordinates, model domain is {self.dim_in}")
        values = None
        for atom in self.atoms:
            atom_values = atom.evaluate(coords, mode, self.dim_out)
            if values is None:
                values = atom_values
            else:
                values = [t + v for t, v in zip(values, atom_values)]
        if values is None:
            zero = coerce(0, mode)
            values = [zero] * self.dim_out
        return values

    def __call__(self, x: Point) -> Point:
        if x.dim != self.dim_in:
            raise DimensionMismatchError(
                f"point has dimension {x.dim}, model domain is {self.dim_in}")
        return Point(tuple(self.evaluate_coords(x.coords, x.mode)), x.norm_kind)

    @property
    def has_noise(self) -> bool:
        return any(isinstance(a, NOISE_ATOMS) for a in self.atoms)

    @property
    def has_even(self) -> bool:
        return any(isinstance(a, Even) for a in self.atoms)

    @property
    def is_additive_exact(self) -> bool:
        """True when every atom is exactly additive (Linear only)."""
        return all(isinstance(a, Linear) for a in self.atoms)

    @property
    def is_cubic_exact(self) -> bool:
        return all(isinstance(a, CubicHomogeneous) for a in self.atoms)

    @property
    def is_solution_exact(self) -> bool:
        """True when the model solves the mixed rule exactly (Linear + cubic)."""
        return all(isinstance(a, (Linear, CubicHomogeneous)) for a in self.atoms)


def evaluate(f: Callable[[Point], Point], x: Point, mode: str | None = None) -> Point:
    """Evaluate f at x, optionally asserting the evaluation mode.

    Passing a mode that differs from the point's own mode is rejected:
    modes are fixed per evaluation context, never converted implicitly.
    """
    if mode is not None:
        require_mode(mode)
        if mode != x.mode:
            raise ModeMismatchError(
                f"requested {mode} evaluation of a {x.mode}-mode point")
    return f(x)


@dataclass(frozen=True)
class OddPart:
    """x -> (f(x) - f(-x)) / 2; exactly odd, and zero at the origin."""

    func: Callable[[Point], Point]

    def __call__(self, x: Point) -> Point:
        return (self.func(x) - self.func(-x)).scale(Fraction(1, 2))


def odd_part(f: Callable[[Point], Point]) -> OddPart:
    """Odd symmetrization of an evaluable function."""
    return OddPart(f)


# Convenience constructors for the 1-D catalogue used throughout the tests.

def linear_1d(slope) -> Linear:
    return Linear(((Fraction(slope),),))


def cubic_1d(coefficient) -> CubicHomogeneous:
    return CubicHomogeneous(((((0, 0, 0), Fraction(coefficient)),),), dims=(1, 1))


def even_1d(coefficient) -> Even:
    return Even((((Fraction(coefficient),),),))


def model_1d(*atoms: Atom) -> FuncModel:
    return FuncModel(1, 1, tuple(atoms))


def solution_1d(slope, cubic_coefficient) -> FuncModel:
    """The model a*x + c*x^3, an exact solution of the mixed rule."""
    return model_1d(linear_1d(slope), cubic_1d(cubic_coefficient))


# ---------------------------------------------------------------------------
# Control functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """phi(x, y) = c."""

    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        if self.value < 0:
            raise ValueError("control functions are nonnegative")


@dataclass(frozen=True)
class SumOfPowers:
    """phi(x, y) = theta * (||x||^p + ||y||^p)."""

    theta: Fraction
    power: Fraction

    def __post_init__(self):
        object.__setattr__(self, "theta", Fraction(self.theta))
        object.__setattr__(self, "power", Fraction(self.power))
        if self.theta < 0 or self.power < 0:
            raise ValueError("theta and p must be nonnegative")


@dataclass(frozen=True)
class ProductOfPowers:
    """phi(x, y) = theta * ||x||^r * ||y||^s."""

    theta: Fraction
    r: Fraction
    s: Fraction

    def __post_init__(self):
        object.__setattr__(self, "theta", Fraction(self.theta))
        object.__setattr__(self, "r", Fraction(self.r))
        object.__setattr__(self, "s", Fraction(self.s))
        if self.theta < 0 or self.r < 0 or self.s < 0:
            raise ValueError("theta, r, s must be nonnegative")


ControlFunction = Union[Constant, SumOfPowers, ProductOfPowers]


def phi_value(phi: ControlFunction, x: Point, y: Point) -> float:
    """phi(x, y) as a float."""
    if isinstance(phi, Constant):
        return float(phi.value)
    if isinstance(phi, SumOfPowers):
        p = float(phi.power)
        return float(phi.theta) * (norm(x) ** p + norm(y) ** p)
    if isinstance(phi, ProductOfPowers):
        return float(phi.theta) * norm(x) ** float(phi.r) * norm(y) ** float(phi.s)
    raise TypeError(f"not a control function: {phi!r}")


def phi_diagonal(phi: ControlFunction, x: Point) -> float:
    """phi(x, x), the quantity the stability series sums over."""
    return phi_value(phi, x, x)


def phi_degree(phi: ControlFunction) -> Fraction:
    """Homogeneity degree of phi on the diagonal: phi(tx, tx) = t^deg phi(x, x)."""
    if isinstance(phi, Constant):
        return Fraction(0)
    if isinstance(phi, SumOfPowers):
        return phi.power
    if isinstance(phi, ProductOfPowers):
        return phi.r + phi.s
    raise TypeError(f"not a control function: {phi!r}")


# ---------------------------------------------------------------------------
# Seeded generators (portable: Mersenne Twister via random.Random, integer
# draws only, so the stream is stable across platforms and Python versions)
# ---------------------------------------------------------------------------

def random_rational(rng: random.Random, max_numerator: int = 16,
                    denominators: Sequence[int] = (1, 2, 4)) -> Fraction:
    num = rng.randint(-max_numerator, max_numerator)
    den = denominators[rng.randint(0, len(denominators) - 1)]
    return Fraction(num, den)


def random_point(rng: random.Random, dim: int, mode: str = EXACT,
                 norm_kind: str = EUCLIDEAN, low: int = -8, high: int = 8,
                 max_denominator: int = 1024) -> Point:
    """Coordinates n/q with q = max_denominator and n uniform in [low*q, high*q]."""
    coords = [Fraction(rng.randint(low * max_denominator, high * max_denominator),
                       max_denominator) for _ in range(dim)]
    return point(coords, mode, norm_kind)


def random_linear(rng: random.Random, dim_in: int, dim_out: int,
                  max_numerator: int = 9,
                  denominators: Sequence[int] = (1, 2, 4)) -> Linear:
    rows = tuple(tuple(random_rational(rng, max_numerator, denominators)
                       for _ in range(dim_in)) for _ in range(dim_out))
    return Linear(rows)


def random_cubic(rng: random.Random, dim_in: int, dim_out: int,
                 max_numerator: int = 9,
                 denominators: Sequence[int] = (1, 2, 4)) -> CubicHomogeneous:
    monomials = [(i, j, k) for i in range(dim_in) for j in range(i, dim_in)
                 for k in range(j, dim_in)]
    tables = []
    for _ in range(dim_out):
        rows = tuple((mono, random_rational(rng, max_numerator, denominators))
                     for mono in monomials)
        tables.append(rows)
    return CubicHomogeneous(tuple(tables), dims=(dim_in, dim_out))
