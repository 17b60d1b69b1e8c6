"""Experiment runners behind the CLI: lemma checks, replay, recovery, sweeps.

Every runner consumes an :class:`~addcubic.config.ExperimentConfig` (or
:class:`~addcubic.config.SweepSpec`), writes deterministic JSON/CSV files
into an output directory and returns a :class:`RunResult` whose ``ok`` flag
feeds the process exit status: 0 iff every asserted inequality/identity in
the run holds.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import bounds as bounds_mod
from . import residuals
from .config import (ConfigError, ExperimentConfig, SweepSpec, model_to_json,
                     phi_from_json, phi_to_json)
from .direct_method import DivergentControlError, OverflowGuardError, recover
from .models import (BoundedNoise, FuncModel, Point, PowerNoise,
                     ProductOfPowers, SumOfPowers, linear_1d, cubic_1d, norm,
                     point)
from .scalars import EXACT, format_number

SWEEP_CSV_HEADER = ("p", "r", "s", "theta", "epsilon", "l_additive", "l_cubic",
                    "closed_form", "series_value", "max_error", "bound_ok",
                    "status")


@dataclass
class RunResult:
    ok: bool
    status: str
    report: dict
    files: list[Path] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1


def write_json(path: Path, doc: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    path.write_text(text, encoding="utf-8")
    return path


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ---------------------------------------------------------------------------
# Lemma checks and chain replay
# ---------------------------------------------------------------------------

_RULE_TABLES = {
    "mixed": residuals.MIXED_RULE,
    "additive": residuals.ADDITIVE_RULE,
    "cubic": residuals.CUBIC_RULE,
}

FLOAT_REL_TOL = 1e-9


def _expectations(model: FuncModel) -> dict[str, bool]:
    """Which residuals must vanish identically, derived from the atom mix."""
    if model.has_noise or model.has_even:
        return {"mixed": False, "additive": False, "cubic": False,
                "chain": False}
    return {
        "mixed": model.is_solution_exact,
        "additive": model.is_additive_exact,
        "cubic": model.is_cubic_exact,
        "chain": model.is_additive_exact,
    }


def _scale(f, x: Point, y: Point, terms) -> float:
    total = 0.0
    for c, a, b in terms:
        arg = Point(tuple(a * xi + b * yi for xi, yi in zip(x.coords, y.coords)),
                    x.norm_kind)
        total += abs(float(c)) * norm(f(arg))
    return max(1.0, total)


def _residual_stats(f, pairs, rule_terms, exact: bool) -> dict:
    max_abs = 0.0
    max_rel = 0.0
    nonzero = 0
    for x, y in pairs:
        vector = residuals.combine(f, x, y, rule_terms)
        magnitude = vector.magnitude
        max_abs = max(max_abs, magnitude)
        if exact:
            if not vector.is_zero:
                nonzero += 1
        else:
            rel = magnitude / _scale(f, x, y, rule_terms)
            max_rel = max(max_rel, rel)
            if rel > FLOAT_REL_TOL:
                nonzero += 1
    return {"max_abs": max_abs, "max_rel": max_rel, "nonzero_count": nonzero,
            "samples": len(pairs)}


def run_check_lemmas(config: ExperimentConfig, out_dir: Path) -> RunResult:
    """Residual statistics for the mixed/additive/cubic rules plus replay.

    Exit is nonzero if any residual that must be identically zero for a
    model family is nonzero on the sampled pairs.
    """
    labeled = config.family_models()
    if not labeled:
        labeled = _default_families(config)
    exact = config.mode == EXACT

    ok = True
    model_reports = []
    for label, model in labeled:
        explicit_pairs = config.samples.explicit_pairs(
            model.dim_in, config.mode, config.norm_kind)
        pairs = explicit_pairs + config.samples.random_pairs(
            model.dim_in, config.mode, config.norm_kind)
        expect = _expectations(model)
        entry: dict = {"label": label, "model": model_to_json(model),
                       "expect": expect}
        model_ok = True
        for name, table in _RULE_TABLES.items():
            stats = _residual_stats(model, pairs, table, exact)
            entry[name] = stats
            if expect[name] and stats["nonzero_count"]:
                model_ok = False
        explicit = []
        for x, y in explicit_pairs:
            values = {
                name: [format_number(c)
                       for c in residuals.combine(model, x, y,
                                                  table).value.coords]
                for name, table in _RULE_TABLES.items()
            }
            explicit.append({
                "x": [format_number(c) for c in x.coords],
                "y": [format_number(c) for c in y.coords],
                "residuals": values,
            })
        if explicit:
            entry["explicit_pairs"] = explicit
        if config.chain and exact:
            chain_stats = {}
            chain_ok = True
            for x, y in pairs:
                replay = residuals.chain_replay(model, x, y)
                for ident_label, vector in replay.items():
                    row = chain_stats.setdefault(
                        ident_label, {"max_abs": 0.0, "nonzero_count": 0})
                    row["max_abs"] = max(row["max_abs"], vector.magnitude)
                    if not vector.is_zero:
                        row["nonzero_count"] += 1
            if expect["chain"]:
                chain_ok = all(row["nonzero_count"] == 0
                               for row in chain_stats.values())
            entry["chain"] = chain_stats
            model_ok = model_ok and chain_ok
        entry["ok"] = model_ok
        ok = ok and model_ok
        model_reports.append(entry)

    report = {"schema_version": 1, "command": "check-lemmas",
              "mode": config.mode, "models": model_reports, "ok": ok}
    files = [write_json(out_dir / f"{config.output_stem}.json", report)]
    if config.catalogue_out:
        files.append(write_json(out_dir / config.catalogue_out,
                                residuals.catalogue_as_json_dict()))
    return RunResult(ok, "ok" if ok else "residual-violation", report, files)


def _default_families(config: ExperimentConfig) -> list[tuple[str, FuncModel]]:
    """Fallback model set: slope-1 linear and unit cubic in the config dims."""
    del config
    return [("linear_default", FuncModel(1, 1, (linear_1d(1),))),
            ("cubic_default", FuncModel(1, 1, (cubic_1d(1),)))]


def run_replay_chain(config: ExperimentConfig, out_dir: Path) -> RunResult:
    """Chain replay only; rejects float mode (replay is an exactness tool)."""
    if config.mode != EXACT:
        raise ConfigError("chain replay requires \"mode\": \"exact\"")
    labeled = config.family_models()
    if not labeled:
        labeled = _default_families(config)
    ok = True
    model_reports = []
    for label, model in labeled:
        pairs = config.samples.sample_pairs(model.dim_in, EXACT,
                                            config.norm_kind)
        expect_zero = _expectations(model)["chain"]
        per_identity: dict[str, dict] = {}
        for x, y in pairs:
            replay = residuals.chain_replay(model, x, y)
            for ident_label, vector in replay.items():
                row = per_identity.setdefault(
                    ident_label, {"max_abs": 0.0, "nonzero_count": 0})
                row["max_abs"] = max(row["max_abs"], vector.magnitude)
                if not vector.is_zero:
                    row["nonzero_count"] += 1
        model_ok = (not expect_zero) or all(
            row["nonzero_count"] == 0 for row in per_identity.values())
        ok = ok and model_ok
        model_reports.append({"label": label, "model": model_to_json(model),
                              "expect_zero": expect_zero,
                              "identities": per_identity, "ok": model_ok})
    report = {"schema_version": 1, "command": "replay-chain",
              "models": model_reports, "ok": ok}
    files = [write_json(out_dir / f"{config.output_stem}.json", report)]
    if config.catalogue_out:
        files.append(write_json(out_dir / config.catalogue_out,
                                residuals.catalogue_as_json_dict()))
    return RunResult(ok, "ok" if ok else "chain-violation", report, files)


# ---------------------------------------------------------------------------
# Recovery
# ---------------------------------------------------------------------------

def run_recover(config: ExperimentConfig, out_dir: Path) -> RunResult:
    """Recover additive/cubic parts and certify errors against the bound."""
    if config.model is None:
        raise ConfigError("recover needs a \"model\" entry")
    phi = config.phi
    if phi is None or config.phi_certify:
        phi = bounds_mod.certify_phi(config.model)
    points = config.samples.sample_points(config.dim_in, config.mode,
                                          config.norm_kind)
    try:
        report = recover(config.model, points, phi,
                         l_additive=config.direction_additive,
                         l_cubic=config.direction_cubic,
                         n_max=config.n_max, tol_abs=config.tol_abs,
                         tol_rel=config.tol_rel, series_tol=config.series_tol)
    except DivergentControlError as exc:
        doc = {"schema_version": 1, "command": "recover",
               "status": "divergent-series", "detail": str(exc),
               "phi": phi_to_json(phi), "ok": False}
        files = [write_json(out_dir / f"{config.output_stem}.json", doc)]
        return RunResult(False, "divergent-series", doc, files)
    except OverflowGuardError as exc:
        doc = {"schema_version": 1, "command": "recover",
               "status": "overflow-guard", "detail": str(exc), "ok": False}
        files = [write_json(out_dir / f"{config.output_stem}.json", doc)]
        return RunResult(False, "overflow-guard", doc, files)

    doc = report.to_json_dict()
    doc["command"] = "recover"
    doc["ok"] = report.ok
    files = [
        write_json(out_dir / f"{config.output_stem}.json", doc),
        write_csv(out_dir / f"{config.output_stem}.csv",
                  report.CSV_HEADER, report.csv_rows()),
    ]
    return RunResult(report.ok, "ok" if report.ok else "bound-violation",
                     doc, files)


# ---------------------------------------------------------------------------
# Bound evaluations
# ---------------------------------------------------------------------------

def run_bounds(config: ExperimentConfig, out_dir: Path) -> RunResult:
    """Evaluate bound series items and closed-form consistency checks."""
    ok = True
    items_report = []
    for item in config.bounds_items:
        phi = phi_from_json(item["phi"])
        coords = item.get("x", ["1"])
        x = point(coords, config.mode, config.norm_kind)
        l_spec = item.get("l", "auto")
        if l_spec == "auto":
            l = bounds_mod.auto_directions(phi)
        elif isinstance(l_spec, list):
            l = tuple(int(v) for v in l_spec)
        else:
            l = int(l_spec)
        kind = item.get("kind", "combined")
        if kind in bounds_mod.COMPONENT_WEIGHTS and isinstance(l, tuple):
            l = l[0] if kind == "additive" else l[1]
        result = bounds_mod.series_bound(kind, phi, x, l,
                                         tol=float(item.get("tol", 1e-12)))
        expect = item.get("expect", "converged")
        item_ok = result.status == expect
        ok = ok and item_ok
        items_report.append({
            "kind": kind, "phi": phi_to_json(phi),
            "x": [str(c) for c in coords],
            "l": list(l) if isinstance(l, tuple) else l,
            "partial_sum": result.partial_sum,
            "tail_bound": (result.tail_bound
                           if math.isfinite(result.tail_bound) else "inf"),
            "upper": (result.upper if math.isfinite(result.upper) else "inf"),
            "terms_used": result.terms_used,
            "status": result.status, "expect": expect, "ok": item_ok,
        })

    consistency_report = []
    spec = config.consistency or {}
    theta = spec.get("theta", 1)
    tol = float(spec.get("tol", 1e-9))
    x = point(spec.get("x", ["1"]), config.mode, config.norm_kind)
    for p in spec.get("p", []):
        result = bounds_mod.consistency_check(theta, p, x, tol=tol)
        ok = ok and result.ok
        consistency_report.append({
            "p": result.p, "theta": result.theta, "form": "sum",
            "closed": result.sum_closed, "series": result.sum_series,
            "ok": result.sum_ok,
        })
    for r, s in spec.get("rs", []):
        result = bounds_mod.consistency_check(
            theta, Fraction(r) + Fraction(s), x, tol=tol, r=r, s=s)
        ok = ok and result.product_ok
        consistency_report.append({
            "p": result.p, "r": str(r), "s": str(s), "theta": result.theta,
            "form": "product", "closed": result.product_closed,
            "series": result.product_series, "ok": result.product_ok,
        })

    report = {"schema_version": 1, "command": "bounds", "items": items_report,
              "consistency": consistency_report, "ok": ok}
    files = [write_json(out_dir / f"{config.output_stem}.json", report)]
    return RunResult(ok, "ok" if ok else "bound-mismatch", report, files)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def _sweep_directions(l_mode: str, phi) -> tuple[int, int]:
    if l_mode == "auto":
        return bounds_mod.auto_directions(phi)
    value = 1 if l_mode == "pos" else -1
    return (value, value)


def run_sweep(spec: SweepSpec, out_dir: Path) -> RunResult:
    """One recovery experiment per grid cell; failures recorded, sweep continues."""
    excluded = {bounds_mod.EXCLUDED_ADDITIVE_EXPONENT,
                bounds_mod.EXCLUDED_CUBIC_EXPONENT}
    rows = []
    cell_reports = []
    ok = True
    for cell in spec.cells():
        p, r, s = cell["p"], cell["r"], cell["s"]
        theta, eps, l_mode = cell["theta"], cell["epsilon"], cell["l_mode"]
        if float(p) in excluded and not spec.allow_divergent:
            raise ConfigError(
                f"grid exponent p={p} is excluded; set allow_divergent to "
                "demonstrate the divergence instead")
        if spec.form == "sum":
            grid_phi = SumOfPowers(theta, p)
        else:
            grid_phi = ProductOfPowers(theta, r, s)
        l_add, l_cub = _sweep_directions(l_mode, grid_phi)

        unit = point(["1"], EXACT, spec.norm_kind)
        status = "ok"
        closed_form = ""
        series_value = ""
        max_error = ""
        bound_ok = ""
        try:
            if spec.form == "sum":
                closed = bounds_mod.corollary_sum_bound(theta, p, unit)
            else:
                closed = bounds_mod.corollary_product_bound(theta, r, s, unit)
            closed_form = repr(closed)
        except bounds_mod.ExcludedExponentError:
            status = "diverged"
        series = bounds_mod.series_bound("combined", grid_phi, unit,
                                         (l_add, l_cub), tol=spec.series_tol)
        if series.status == bounds_mod.DIVERGED:
            status = "diverged"
        else:
            series_value = repr(series.upper)

        if status == "ok":
            atoms = [linear_1d(spec.solution_linear),
                     cubic_1d(spec.solution_cubic)]
            if eps > 0:
                if p == 0:
                    atoms.append(BoundedNoise(spec.noise_seed, eps))
                else:
                    atoms.append(PowerNoise(spec.noise_seed, eps, p))
            model = FuncModel(1, 1, tuple(atoms))
            # Exact-mode points: growth-direction iterates are exact at any
            # depth, where float evaluation would hit its precision floor.
            points = spec.samples.sample_points(1, EXACT, spec.norm_kind)
            try:
                report = recover(model, points, bounds_mod.certify_phi(model),
                                 l_additive=l_add, l_cubic=l_cub,
                                 n_max=spec.n_max, tol_abs=spec.tol_abs,
                                 tol_rel=spec.tol_rel,
                                 series_tol=spec.series_tol)
                max_error = repr(report.max_error)
                bound_ok = str(report.all_within_bound).lower()
                if not report.all_within_bound:
                    status = "bound-violation"
            except DivergentControlError:
                status = "diverged"
            except OverflowGuardError:
                status = "overflow-guard"

        cell_ok = status == "ok" or (status == "diverged"
                                     and spec.allow_divergent)
        ok = ok and cell_ok
        rows.append((format_number(p), "" if r is None else format_number(r),
                     "" if s is None else format_number(s),
                     format_number(theta), format_number(eps),
                     l_add, l_cub, closed_form, series_value, max_error,
                     bound_ok, status))
        cell_reports.append({
            "p": format_number(p),
            "r": None if r is None else format_number(r),
            "s": None if s is None else format_number(s),
            "theta": format_number(theta), "epsilon": format_number(eps),
            "l_additive": l_add, "l_cubic": l_cub,
            "closed_form": float(closed_form) if closed_form else None,
            "series_value": float(series_value) if series_value else None,
            "max_error": float(max_error) if max_error else None,
            "bound_ok": None if bound_ok == "" else bound_ok == "true",
            "status": status,
            "ok": cell_ok,
        })

    report = {"schema_version": 1, "command": "sweep", "cells": cell_reports,
              "ok": ok}
    files = [
        write_csv(out_dir / f"{spec.output_stem}.csv", SWEEP_CSV_HEADER, rows),
        write_json(out_dir / f"{spec.output_stem}.json", report),
    ]
    return RunResult(ok, "ok" if ok else "sweep-failures", report, files)
