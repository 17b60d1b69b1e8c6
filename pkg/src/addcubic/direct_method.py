"""Direct-method recovery of additive and cubic parts from a perturbed map.

Two transforms isolate the parts of an odd function f:

    H(x) = f(2x) - 8 f(x)   (equals -6 * additive part on exact solutions)
    G(x) = f(2x) - 2 f(x)   (equals +6 * cubic part on exact solutions)

and G(x) - H(x) = 6 f(x) identically.  For a perturbed f the rescaled
iterates

    A_n(x) = 2^(l n) * H(x / 2^(l n)),   C_n(x) = 8^(l n) * G(x / 2^(l n))

converge (direction l in {-1, +1}, arguments shrink for +1 and grow for
-1) to the unique additive and cubic limits A_0, C_0, and the recovered
decomposition is A = -A_0 / 6, C = C_0 / 6.  The distance from f to A + C
is certified by the bound series in :mod:`addcubic.bounds`.

Iterations at distinct points are independent; every structure here is
either immutable or built single-threaded per point, so points may be
processed concurrently while report assembly preserves input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import bounds as bounds_mod
from .models import (ControlFunction, FuncModel, Point, norm, odd_part)
from .scalars import EXACT, format_number

DIRECTIONS = (-1, 1)
OVERFLOW_GUARD_BITS = 500  # abort when any evaluation norm exceeds 2^500

DEFAULT_N_MAX = 48
DEFAULT_TOL_ABS = 1e-12
DEFAULT_TOL_REL = 1e-10
CONSECUTIVE_GAPS = 3  # small gaps in a row required to call it converged


class OverflowGuardError(ArithmeticError):
    """Growing-argument iteration exceeded the magnitude guard."""


class DivergentControlError(ValueError):
    """The control function's bound series diverges for the chosen direction."""


def _require_direction(l: int) -> int:
    if l not in DIRECTIONS:
        raise ValueError(f"direction must be -1 or +1, got {l!r}")
    return l


@dataclass(frozen=True)
class Transform:
    """x -> f(2x) - subtract * f(x), with an overflow guard on evaluations."""

    func: Callable[[Point], Point]
    subtract: int

    def __call__(self, x: Point) -> Point:
        try:
            doubled = self.func(x.scale(2))
            single = self.func(x)
        except OverflowError as exc:
            raise OverflowGuardError(
                "evaluation overflowed float range") from exc
        _guard(doubled)
        _guard(single)
        return doubled - single.scale(self.subtract)


def _guard(value: Point) -> None:
    try:
        magnitude = norm(value)
    except OverflowError as exc:
        raise OverflowGuardError("evaluation magnitude exceeds float range") from exc
    if not math.isfinite(magnitude) or magnitude > 2.0 ** OVERFLOW_GUARD_BITS:
        raise OverflowGuardError(
            f"evaluation norm {magnitude!r} exceeds 2^{OVERFLOW_GUARD_BITS}")


def h_transform(f) -> Transform:
    """x -> f(2x) - 8 f(x); kills cubic content, -6 times the additive part."""
    return Transform(f, 8)


def g_transform(f) -> Transform:
    """x -> f(2x) - 2 f(x); kills additive content, 6 times the cubic part."""
    return Transform(f, 2)


@dataclass
class IterationTrace:
    """One rescaled-iterate run: values, Cauchy gaps and convergence flags."""

    direction: int
    weight: int
    values: list[Point] = field(default_factory=list)
    cauchy_gaps: list[float] = field(default_factory=list)
    converged: bool = False
    converged_at: int | None = None

    @property
    def final(self) -> Point:
        return self.values[-1]

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1


def _iterate(f, x: Point, l: int, weight: int, n_steps: int,
             tol_abs: float, tol_rel: float, stop_early: bool) -> IterationTrace:
    _require_direction(l)
    if n_steps < 1:
        raise ValueError("iteration count must be at least 1")
    transform = Transform(f, 8 if weight == 2 else 2)
    trace = IterationTrace(direction=l, weight=weight)
    streak = 0
    for n in range(n_steps + 1):
        try:
            argument = x.scale(Fraction(1, 2) ** (l * n))
            scale = Fraction(weight) ** (l * n) if x.mode == EXACT \
                else 2.0 ** (l * n * (weight.bit_length() - 1))
            value = transform(argument).scale(scale)
        except OverflowError as exc:
            raise OverflowGuardError(
                f"iterate step {n} overflowed float range") from exc
        _guard(value)
        trace.values.append(value)
        if n == 0:
            continue
        gap = norm(trace.values[-1] - trace.values[-2])
        trace.cauchy_gaps.append(gap)
        if gap <= max(tol_abs, tol_rel * norm(value)):
            streak += 1
            if streak >= CONSECUTIVE_GAPS and not trace.converged:
                trace.converged = True
                trace.converged_at = n
                if stop_early:
                    break
        else:
            streak = 0
    return trace


def additive_iterate(f, x: Point, l: int, n_steps: int = DEFAULT_N_MAX,
                     tol_abs: float = DEFAULT_TOL_ABS,
                     tol_rel: float = DEFAULT_TOL_REL,
                     stop_early: bool = True) -> IterationTrace:
    """values[n] = 2^(ln) [f(x / 2^(l(n-l))) - 8 f(x / 2^(ln))].

    On exact solutions every value equals H(x).  Non-convergence within
    ``n_steps`` is reported via the flag, not an error; only the growth
    guard (direction -1 with fast-growing f) raises.

    Stopping at the gap criterion is the default: in float mode with l = -1
    the cubic content of f eventually dominates every evaluation and the
    additive signal drops below its ulp, so iterating past convergence only
    degrades the value.  Exact-mode points reproduce the infinite-precision
    sequence at any depth (use ``stop_early=False`` to force full depth).
    """
    return _iterate(f, x, l, 2, n_steps, tol_abs, tol_rel, stop_early)


def cubic_iterate(f, x: Point, l: int, n_steps: int = DEFAULT_N_MAX,
                  tol_abs: float = DEFAULT_TOL_ABS,
                  tol_rel: float = DEFAULT_TOL_REL,
                  stop_early: bool = True) -> IterationTrace:
    """values[n] = 8^(ln) [f(x / 2^(l(n-l))) - 2 f(x / 2^(ln))].

    Same stopping behavior as :func:`additive_iterate`.
    """
    return _iterate(f, x, l, 8, n_steps, tol_abs, tol_rel, stop_early)


_ITERATORS = {"additive": additive_iterate, "cubic": cubic_iterate}


@dataclass(frozen=True)
class ProbeResult:
    """Distance between two truncation depths of one iteration."""

    gap: float
    tail_bound: float | None

    @property
    def within_tail(self) -> bool | None:
        if self.tail_bound is None:
            return None
        return self.gap <= self.tail_bound


def uniqueness_probe(f, x: Point, l: int, component: str, n1: int, n2: int,
                     phi: ControlFunction | None = None,
                     tol: float = 1e-12) -> ProbeResult:
    """||final(n1) - final(n2)|| for one component's iteration.

    Any two candidate limits agree up to the tail series at min(n1, n2);
    when ``phi`` is given the certified tail bound is attached so callers
    can assert gap <= tail.
    """
    if n1 == n2:
        raise ValueError("probe depths must differ")
    iterate = _ITERATORS[component]
    first = iterate(f, x, l, n_steps=n1, stop_early=False)
    second = iterate(f, x, l, n_steps=n2, stop_early=False)
    gap = norm(first.final - second.final)
    tail = None
    if phi is not None:
        tail = bounds_mod.uniqueness_tail(component, phi, x, l,
                                          min(n1, n2), tol).upper
    return ProbeResult(gap, tail)


# ---------------------------------------------------------------------------
# Combined recovery
# ---------------------------------------------------------------------------

@dataclass
class PointRecovery:
    """Recovered values and certified bound at one sample point."""

    x: Point
    additive: Point
    cubic: Point
    error: float
    raw_error: float
    bound: float
    within_bound: bool
    additive_trace: IterationTrace
    cubic_trace: IterationTrace


@dataclass
class RecoveryReport:
    """Deterministic record of a recovery run over a list of points."""

    direction_additive: int
    direction_cubic: int
    phi: ControlFunction
    mode: str
    norm_kind: str
    n_max: int
    tol_abs: float
    tol_rel: float
    points: list[PointRecovery] = field(default_factory=list)

    @property
    def max_error(self) -> float:
        return max((p.error for p in self.points), default=0.0)

    @property
    def max_raw_error(self) -> float:
        return max((p.raw_error for p in self.points), default=0.0)

    @property
    def all_within_bound(self) -> bool:
        return all(p.within_bound for p in self.points)

    @property
    def all_converged(self) -> bool:
        return all(p.additive_trace.converged and p.cubic_trace.converged
                   for p in self.points)

    @property
    def ok(self) -> bool:
        return self.all_within_bound

    CSV_HEADER = ("index", "x", "additive", "cubic", "error", "raw_error",
                  "bound", "within_bound", "additive_converged",
                  "cubic_converged")

    @staticmethod
    def _coords(value: Point) -> str:
        return ";".join(format_number(c) for c in value.coords)

    def csv_rows(self) -> list[tuple]:
        rows = []
        for idx, item in enumerate(self.points):
            rows.append((
                idx,
                self._coords(item.x),
                self._coords(item.additive),
                self._coords(item.cubic),
                repr(item.error),
                repr(item.raw_error),
                repr(item.bound),
                str(item.within_bound).lower(),
                str(item.additive_trace.converged).lower(),
                str(item.cubic_trace.converged).lower(),
            ))
        return rows

    def to_json_dict(self) -> dict:
        from .config import phi_to_json  # late import: config depends on models only

        def trace_dict(trace: IterationTrace) -> dict:
            return {
                "n_steps": trace.n_steps,
                "converged": trace.converged,
                "converged_at": trace.converged_at,
                "final": [format_number(c) for c in trace.final.coords],
                "cauchy_gaps": list(trace.cauchy_gaps),
            }

        return {
            "schema_version": 1,
            "mode": self.mode,
            "norm": self.norm_kind,
            "direction_additive": self.direction_additive,
            "direction_cubic": self.direction_cubic,
            "phi": phi_to_json(self.phi),
            "n_max": self.n_max,
            "tolerances": {"abs": self.tol_abs, "rel": self.tol_rel},
            "summary": {
                "count": len(self.points),
                "max_error": self.max_error,
                "max_raw_error": self.max_raw_error,
                "all_within_bound": self.all_within_bound,
                "all_converged": self.all_converged,
            },
            "points": [
                {
                    "x": [format_number(c) for c in item.x.coords],
                    "additive": [format_number(c) for c in item.additive.coords],
                    "cubic": [format_number(c) for c in item.cubic.coords],
                    "error": item.error,
                    "raw_error": item.raw_error,
                    "bound": item.bound,
                    "within_bound": item.within_bound,
                    "additive_trace": trace_dict(item.additive_trace),
                    "cubic_trace": trace_dict(item.cubic_trace),
                }
                for item in self.points
            ],
        }


def resolve_directions(phi: ControlFunction, l_additive="auto",
                       l_cubic="auto") -> tuple[int, int]:
    auto_add, auto_cub = bounds_mod.auto_directions(phi)
    l_a = auto_add if l_additive == "auto" else _require_direction(l_additive)
    l_c = auto_cub if l_cubic == "auto" else _require_direction(l_cubic)
    return l_a, l_c


def recover(f: FuncModel, points: Sequence[Point],
            phi: ControlFunction | None = None,
            l_additive="auto", l_cubic="auto",
            n_max: int = DEFAULT_N_MAX,
            tol_abs: float = DEFAULT_TOL_ABS,
            tol_rel: float = DEFAULT_TOL_REL,
            series_tol: float = 1e-12,
            stop_early: bool = True) -> RecoveryReport:
    """Recover the additive and cubic parts of f at the given points.

    f is odd-symmetrized first; the perturbation envelope phi is either
    supplied or certified from the model's noise atoms.  Per point, the
    report carries A(x), C(x), the odd-part and raw errors, the certified
    combined bound, and both iteration traces.  A control function whose
    series diverges for the chosen direction raises
    :class:`DivergentControlError`.
    """
    if phi is None:
        phi = bounds_mod.certify_phi(f)
    l_add, l_cub = resolve_directions(phi, l_additive, l_cubic)

    f_odd = odd_part(f)
    sixth = Fraction(1, 6)
    mode = points[0].mode if points else EXACT
    norm_kind = points[0].norm_kind if points else "euclidean"
    report = RecoveryReport(direction_additive=l_add, direction_cubic=l_cub,
                            phi=phi, mode=mode, norm_kind=norm_kind,
                            n_max=n_max, tol_abs=tol_abs, tol_rel=tol_rel)
    for x in points:
        series = bounds_mod.series_bound("combined", phi, x, (l_add, l_cub),
                                         tol=series_tol)
        if series.status == bounds_mod.DIVERGED:
            raise DivergentControlError(
                "bound series diverges for the chosen directions "
                f"(additive l={l_add}, cubic l={l_cub})")
        bound_value = series.upper
        trace_a = additive_iterate(f_odd, x, l_add, n_max, tol_abs, tol_rel,
                                   stop_early=stop_early)
        trace_c = cubic_iterate(f_odd, x, l_cub, n_max, tol_abs, tol_rel,
                                stop_early=stop_early)
        additive_value = trace_a.final.scale(-sixth)
        cubic_value = trace_c.final.scale(sixth)
        residual = f_odd(x) - additive_value - cubic_value
        raw_residual = f(x) - additive_value - cubic_value
        error = norm(residual)
        report.points.append(PointRecovery(
            x=x,
            additive=additive_value,
            cubic=cubic_value,
            error=error,
            raw_error=norm(raw_residual),
            bound=bound_value,
            within_bound=error <= bound_value,
            additive_trace=trace_a,
            cubic_trace=trace_c,
        ))
    return report
