"""Command-line runner for the verification suites.

    solderkit list [--format text|json]
    solderkit check [--geometry ID]... [--suite S] [--samples N] [--seed K]
                    [--tol-identity R] [--tol-frame R] [--format text|json] [--out PATH]

Exit status is 0 iff every residual is within tolerance and every observed
flag matches its expectation.  JSON output is byte-for-byte reproducible for a
given configuration; wall time appears only in the text summary.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import catalog
from .catalog import GeometryBundle
from .chartcalc import endomorphism_field
from .soldering import (
    AdaptednessError,
    IdentityReport,
    check_adapted,
    check_parallel_corollary,
    classify_complex_structure,
    soldered_j_residual,
    extension_independence_residual,
    is_soldered,
    nijenhuis_term,
    residual_connection_formula,
    residual_kahler_identity,
    residual_local_criterion,
    residual_metric_obstruction,
    residual_nijenhuis,
    residual_symmetry,
    soldering_obstruction,
    sweep,
    symmetry_inheritance_residual,
)
from .subgeo import (
    covariant_jet_at,
    random_perturbation,
    second_fundamental_form,
    shear_perturbation,
    weingarten_decompose,
)

SUITES = ("adapted", "obstruction", "identities", "kahler", "all")
WELL_DEFINED_POINTS = 50
WELL_DEFINED_PERTURBATIONS = 10


@dataclass(frozen=True)
class RunConfig:
    geometries: tuple[str, ...] = catalog.GEOMETRY_IDS
    suite: str = "all"
    samples: int = 200
    seed: int = 0
    tol_identity: float = 1e-7
    tol_frame: float = 1e-10
    tol_derivative: float = 1e-9
    tol_spot: float = 1e-8
    output_format: str = "json"
    out: str | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}")
        for gid in self.geometries:
            if gid not in catalog.GEOMETRY_IDS:
                raise ValueError(f"unknown geometry {gid!r}")
        if self.samples < 1:
            raise ValueError("samples must be positive")

    def echo(self) -> dict:
        return {
            "geometries": list(self.geometries),
            "suite": self.suite,
            "samples": self.samples,
            "seed": self.seed,
            "tol_identity": self.tol_identity,
            "tol_frame": self.tol_frame,
            "tol_derivative": self.tol_derivative,
            "tol_spot": self.tol_spot,
        }


class _Collector:
    def __init__(self, bundle: GeometryBundle):
        self.bundle = bundle
        self.identities: list[IdentityReport] = []
        self.observed: dict[str, bool] = {}
        self.spots: list[dict] = []

    def add(self, report: IdentityReport):
        self.identities.append(report)

    def sweep(self, identity, fn, points, tol):
        self.add(sweep(identity, self.bundle.id, fn, points, tol))


def _maxabs(a) -> float:
    a = np.abs(np.asarray(a))
    return float(np.max(a)) if a.size else 0.0


# ------------------------------------------------------------------- suites


def _suite_adapted(c: _Collector, pts, cfg: RunConfig):
    b, sub = c.bundle, c.bundle.submanifold
    for name, A in b.adapted_fields().items():
        c.sweep(f"adapted:{name}", lambda P, A=A: check_adapted(A, sub, P).overall, pts, cfg.tol_frame)
    for name, aux in b.aux.items():
        worst = max(check_adapted(aux.field, sub, P).overall for P in pts)
        c.observed[f"adapted:{name}"] = worst <= cfg.tol_frame
    if b.J is not None:
        worst = max(check_adapted(b.J, sub, P).overall for P in pts)
        c.observed["J_invariant"] = worst <= cfg.tol_frame


def _suite_obstruction(c: _Collector, pts, cfg: RunConfig):
    b, sub = c.bundle, c.bundle.submanifold
    k = b.chart.codim

    verdict = is_soldered(b.metric, sub, points=pts)
    c.observed["soldered_g"] = verdict.soldered
    if b.J is not None:
        c.observed["soldered_J"] = is_soldered(b.J, sub, points=pts).soldered

    for spot in b.spot_values:
        if spot.name == "w_g(dx)(dy,dy)":
            values = [float(soldering_obstruction(b.metric, sub, 0, P)[0, 0]) for P in pts]
        elif spot.name == "beta(dy,dy).n":
            values = [float(second_fundamental_form(sub, P)[0, 0, 0]) for P in pts]
        else:
            continue
        dev = tuple(abs(v - spot.expected) for v in values)
        c.add(IdentityReport(f"spot:{spot.name}", b.id, dev, cfg.tol_spot, len(dev)))
        c.spots.append({"id": spot.name, "expected": spot.expected, "observed": values[0],
                        "max_deviation": max(dev), "provenance": spot.provenance})

    wd_pts = pts[:WELL_DEFINED_POINTS]
    rng = np.random.default_rng(cfg.seed)
    perts = [random_perturbation(b.chart, rng) for _ in range(WELL_DEFINED_PERTURBATIONS)]
    for name, A in b.adapted_fields().items():
        def change(P, A=A):
            return max(extension_independence_residual(A, sub, a, P, pert)
                       for pert in perts for a in range(k))
        c.sweep(f"extension_independence:{name}", change, wd_pts, cfg.tol_identity)
        if A.symmetries:
            c.sweep(f"inherit:{name}", lambda P, A=A: symmetry_inheritance_residual(A, sub, P), pts, cfg.tol_frame)

    for name, aux in b.aux.items():
        if aux.adapted:
            continue
        neg = shear_perturbation(b.chart)
        change = max(extension_independence_residual(aux.field, sub, 0, P, neg, check=False) for P in wd_pts)
        c.observed[f"extension_dependent:{name}"] = change > 0.1
        try:
            soldering_obstruction(aux.field, sub, 0, pts[0])
            rejected = False
        except AdaptednessError:
            rejected = True
        c.observed[f"gate_rejects:{name}"] = rejected

    coord = b.coordinate_submanifold
    for name, A in b.adapted_fields().items():
        if max(check_adapted(A, coord, P).overall for P in pts) > cfg.tol_frame:
            continue
        c.sweep(f"local_criterion:{name}", lambda P, A=A: residual_local_criterion(A, coord, P).residual,
                pts, cfg.tol_derivative)


def _suite_identities(c: _Collector, pts, cfg: RunConfig):
    b, sub = c.bundle, c.bundle.submanifold
    m, k = b.chart.ambient_dim, b.chart.codim

    def frame_duality(P):
        fr = sub.frame(P)
        return _maxabs(fr.coframe @ fr.basis - np.eye(m))

    def normal_orthogonality(P):
        fr = sub.frame(P)
        gval = b.metric.jet(fr.point)[0]
        return max(_maxabs(fr.normals @ gval @ fr.tangents.T),
                   _maxabs(fr.normals @ gval @ fr.normals.T - np.eye(k)))

    def beta_symmetry(P):
        beta = second_fundamental_form(sub, P)
        return _maxabs(beta - np.swapaxes(beta, 1, 2))

    def weingarten_duality(P):
        fr = sub.frame(P)
        gval = b.metric.jet(fr.point)[0]
        beta = second_fundamental_form(sub, P)
        worst = 0.0
        for a in range(k):
            for u in range(b.chart.sub_dim):
                tangent, _ = weingarten_decompose(sub, fr.normals[a], u, P)
                # g(W e_u, e_v) = -g(tangent part, e_v)
                lhs = -(fr.tangents @ gval @ tangent)
                worst = max(worst, _maxabs(lhs - beta[a, u, :]))
        return worst

    c.sweep("frame_duality", frame_duality, pts, 1e-12)
    c.sweep("normal_orthogonality", normal_orthogonality, pts, cfg.tol_frame)
    c.sweep("beta_symmetry", beta_symmetry, pts, cfg.tol_frame)
    c.sweep("weingarten_duality", weingarten_duality, pts, cfg.tol_derivative)
    c.sweep("nabla_g", lambda P: _maxabs(covariant_jet_at(sub, b.metric, P)), pts, cfg.tol_derivative)
    c.sweep("metric_obstruction", lambda P: residual_metric_obstruction(sub, P), pts, cfg.tol_identity)

    c.observed["totally_geodesic"] = max(_maxabs(second_fundamental_form(sub, P)) for P in pts) < 1e-8

    fields = dict(b.skew_symmetric_fields())
    fields["Id"] = (endomorphism_field(b.chart, lambda x: np.eye(m), "Id"), 1)
    for name, (A, sign) in fields.items():
        c.sweep(f"symmetry_formula:{name}", lambda P, A=A, s=sign: residual_symmetry(A, sub, s, P), pts, cfg.tol_identity)
        c.sweep(f"connection_formula:{name}", lambda P, A=A, s=sign: residual_connection_formula(A, sub, s, P),
                pts, cfg.tol_identity)
        c.sweep(f"nijenhuis_formula:{name}", lambda P, A=A, s=sign: residual_nijenhuis(A, sub, s, P).residual,
                pts, cfg.tol_identity)

    for name in ("J", "Id"):
        if name not in fields:
            continue
        A, sign = fields[name]
        results = [check_parallel_corollary(A, sub, sign, P) for P in pts]
        parallel = all(r.applicable for r in results)
        if name == "J":
            c.observed["parallel:J"] = parallel
        if parallel:
            res = tuple(r.residual for r in results)
            c.add(IdentityReport(f"parallel_formula:{name}", b.id, res, cfg.tol_identity, len(res)))


def _suite_kahler(c: _Collector, pts, cfg: RunConfig):
    b, sub = c.bundle, c.bundle.submanifold
    if b.J is None:
        return
    kr = [residual_kahler_identity(sub, b.J, P) for P in pts]
    c.add(IdentityReport("kahler_formula", b.id, tuple(r.residual for r in kr), cfg.tol_identity, len(kr)))
    c.add(IdentityReport("d_interior_omega", b.id, tuple(r.interior_closed for r in kr), cfg.tol_identity, len(kr)))
    c.add(IdentityReport("omega_adapted", b.id, tuple(r.omega_adaptedness for r in kr), cfg.tol_frame, len(kr)))

    rec = classify_complex_structure(sub, b.J, samples=len(pts), seed=cfg.seed, identity_tol=cfg.tol_identity)
    c.observed["J_invariant"] = rec.j_invariant
    c.observed["dOmega_zero"] = rec.domega_zero
    c.observed["soldered_J"] = rec.soldered
    c.observed["beta_j_relation"] = rec.beta_j_relation
    if rec.soldered:
        f2 = tuple(soldered_j_residual(sub, b.J, P) for P in pts)
        c.add(IdentityReport("soldered_j_relation", b.id, f2, cfg.tol_identity, len(f2)))

    thresholds = catalog.RICHNESS_THRESHOLDS
    c.observed["rich_dOmega"] = max(r.domega_slot for r in kr) > thresholds["rich_dOmega"]
    c.observed["rich_sigma"] = max(r.sigma_max for r in kr) > thresholds["rich_sigma"]
    c.observed["rich_beta"] = rec.max_beta > thresholds["rich_beta"]
    c.observed["rich_nijenhuis"] = max(_maxabs(nijenhuis_term(b.J, sub, P)) for P in pts) > thresholds["rich_nijenhuis"]


def _cross_flags(c: _Collector):
    o = c.observed
    if "soldered_g" in o and "totally_geodesic" in o:
        o["g_soldered_iff_tg"] = o["soldered_g"] == o["totally_geodesic"]
    if {"dOmega_zero", "soldered_J", "J_invariant", "totally_geodesic"} <= o.keys() and o["dOmega_zero"]:
        o["kahler_biconditional"] = o["soldered_J"] == (o["J_invariant"] and o["totally_geodesic"])
    if {"soldered_J", "beta_j_relation"} <= o.keys():
        o["relation_biconditional"] = o["soldered_J"] == o["beta_j_relation"]


_CROSS_EXPECTED = {"g_soldered_iff_tg": True, "kahler_biconditional": True, "relation_biconditional": True}


def expected_flags(bundle: GeometryBundle) -> dict[str, bool]:
    exp = dict(bundle.expected)
    exp.update(_CROSS_EXPECTED)
    for name, aux in bundle.aux.items():
        if not aux.adapted:
            exp[f"extension_dependent:{name}"] = True
            exp[f"gate_rejects:{name}"] = True
    return exp


def run_geometry(bundle: GeometryBundle, cfg: RunConfig) -> dict:
    pts = bundle.chart.sample_submanifold(cfg.samples, cfg.seed)
    c = _Collector(bundle)
    suites = ("adapted", "obstruction", "identities", "kahler") if cfg.suite == "all" else (cfg.suite,)
    for s in suites:
        {"adapted": _suite_adapted, "obstruction": _suite_obstruction,
         "identities": _suite_identities, "kahler": _suite_kahler}[s](c, pts, cfg)
    _cross_flags(c)

    exp = expected_flags(bundle)
    keys = sorted(k for k in exp if k in c.observed)
    flags_expected = {k: exp[k] for k in keys}
    flags_observed = {k: c.observed[k] for k in keys}
    identities = sorted(c.identities, key=lambda r: r.identity)
    ok = all(r.passed for r in identities) and flags_expected == flags_observed
    out = {
        "id": bundle.id,
        "flags_expected": flags_expected,
        "flags_observed": flags_observed,
        "identities": [
            {"id": r.identity, "max_residual": r.max_residual, "tolerance": r.tolerance,
             "points": r.points, "pass": r.passed}
            for r in identities
        ],
        "pass": ok,
    }
    if c.spots:
        out["spot_values"] = c.spots
    return out


def run(cfg: RunConfig) -> tuple[dict, int]:
    geometries = [run_geometry(catalog.get_geometry(gid), cfg) for gid in sorted(cfg.geometries)]
    report = {"config": cfg.echo(), "geometries": geometries, "pass": all(g["pass"] for g in geometries)}
    return report, 0 if report["pass"] else 1


# ---------------------------------------------------------------- rendering


def _num(x: float) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, int, float, np.floating, np.integer)):
        if isinstance(obj, np.floating):
            obj = float(obj)
        elif isinstance(obj, np.integer):
            obj = int(obj)
        return _num(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def render_text(report: dict, wall_time: float | None = None) -> str:
    lines = []
    for geo in report["geometries"]:
        lines.append(f"[{'PASS' if geo['pass'] else 'FAIL'}] {geo['id']}")
        for ident in geo["identities"]:
            mark = "ok  " if ident["pass"] else "FAIL"
            lines.append(f"    {mark} {ident['id']:<28} max {ident['max_residual']:.3e}  tol {ident['tolerance']:.1e}")
        for key, exp in geo["flags_expected"].items():
            obs = geo["flags_observed"][key]
            mark = "ok  " if obs == exp else "FAIL"
            lines.append(f"    {mark} flag {key:<23} expected {exp!s:<5} observed {obs}")
    lines.append(f"overall: {'PASS' if report['pass'] else 'FAIL'}")
    if wall_time is not None:
        lines.append(f"wall time: {wall_time:.2f} s")
    return "\n".join(lines) + "\n"


def render_listing(fmt: str) -> str:
    items = catalog.list_geometries()
    if fmt == "json":
        return dumps(items) + "\n"
    lines = []
    for it in items:
        flags = " ".join(f"{k}={'y' if v else 'n'}" for k, v in sorted(it["flags_expected"].items()))
        lines.append(f"{it['id']:<24} m={it['ambient_dim']} n={it['sub_dim']}  {it['description']}  [{flags}]")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solderkit", description="Soldering obstruction verification suites")
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="list catalog geometries")
    p_list.add_argument("--format", choices=("text", "json"), default="text")

    p_check = sub.add_parser("check", help="run verification suites")
    p_check.add_argument("--geometry", action="append", choices=catalog.GEOMETRY_IDS, metavar="ID",
                         help="geometry id (repeatable; default: all)")
    p_check.add_argument("--suite", choices=SUITES, default="all")
    p_check.add_argument("--samples", type=int, default=200)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--tol-identity", type=float, default=1e-7)
    p_check.add_argument("--tol-frame", type=float, default=1e-10)
    p_check.add_argument("--tol-derivative", type=float, default=1e-9)
    p_check.add_argument("--format", choices=("text", "json"), default="text")
    p_check.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        sys.stdout.write(render_listing(args.format))
        return 0
    if args.samples < 1:
        parser.error("--samples must be positive")
    cfg = RunConfig(
        geometries=tuple(dict.fromkeys(args.geometry)) if args.geometry else catalog.GEOMETRY_IDS,
        suite=args.suite, samples=args.samples, seed=args.seed,
        tol_identity=args.tol_identity, tol_frame=args.tol_frame, tol_derivative=args.tol_derivative,
        output_format=args.format, out=args.out,
    )
    t0 = time.perf_counter()
    report, status = run(cfg)
    elapsed = time.perf_counter() - t0
    text = dumps(report) + "\n" if args.format == "json" else render_text(report, elapsed)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
