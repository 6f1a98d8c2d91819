"""Command-line front end.

Subcommands: ``sweep`` (phase-diagram grids), ``scaling`` (finite-size
power laws), ``geometry`` (one-point metric/curvature report), ``spectrum``
(gap reports) and ``oracle`` (randomized cross-module equivalence suites).
Output is CSV (with a ``#`` comment header recording model, parameters,
version and seed) or JSON, printed with 17 significant digits so that
rerunning a spec reproduces files byte for byte; grid points that fail
carry the raising error's class name in their cells.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import BadSpec, IoFailure, NessGeomError

_FMT = "{:.17g}"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "undefined"
    if isinstance(value, float) and np.isinf(value):
        return "inf"
    return _FMT.format(float(value))


# --- model adapters ---------------------------------------------------------------

FINITE_QUANTITIES = ("gap", "gmax", "detg", "muc", "R", "purity")
SYMBOL_QUANTITIES = ("gap", "muc", "xi", "detg_symbol")


def _boundary_xy_point(params: dict, quantities: tuple[str, ...]) -> dict:
    from . import geometry, liouvillian, numerics
    from .models import BoundaryXYParams, build_boundary_driven_xy

    n = int(params["n"])
    delta = float(params.get("delta", 1.25))
    h = float(params.get("h", 0.3))
    kappas = tuple(
        float(params.get(k, dflt))
        for k, dflt in (
            ("kappa_l_plus", 0.3),
            ("kappa_l_minus", 0.5),
            ("kappa_r_plus", 0.1),
            ("kappa_r_minus", 0.5),
        )
    )

    def build(dd, hh):
        model = build_boundary_driven_xy(
            BoundaryXYParams(dd, hh, n, *kappas)
        )
        return liouvillian.shape_matrices(model)

    shape = build(delta, h)
    solver = numerics.LyapunovSolver(shape.x)
    out: dict = {}
    if "gap" in quantities:
        out["gap"] = 2.0 * float(np.min(np.real(solver.spectrum)))
    gamma = numerics.hermitize_antisymmetric(solver.solve(shape.y))
    if "purity" in quantities:
        from .gaussian import purity

        out["purity"] = purity(gamma)
    geom_needed = {"gmax", "detg", "muc", "R"} & set(quantities)
    if geom_needed:
        eps = 1e-6
        dgs = []
        for up_args, dn_args in (((delta + eps, h), (delta - eps, h)),
                                 ((delta, h + eps), (delta, h - eps))):
            s_up, s_dn = build(*up_args), build(*dn_args)
            dx = (s_up.x - s_dn.x) / (2.0 * eps)
            dy = (s_up.y - s_dn.y) / (2.0 * eps)
            rhs = numerics.hermitize_antisymmetric(dy - dx @ gamma - gamma @ dx.T)
            dgs.append(numerics.hermitize_antisymmetric(solver.solve(rhs)))
        res = geometry.qgt(gamma, geometry.make_tangents(("delta", "h"), dgs))
        if "gmax" in quantities:
            out["gmax"] = res.gmax()
        if "detg" in quantities:
            out["detg"] = float(np.linalg.det(res.g))
        if "muc" in quantities:
            out["muc"] = abs(float(res.u[0, 1]))
        if "R" in quantities:
            out["R"] = res.r_ratio
    return out


def _symbol_point(model_name: str, params: dict, quantities: tuple[str, ...]) -> dict:
    from . import momentum
    from .models import build_reservoir_chain, build_rotated_xy_dissipative

    if model_name == "reservoir_chain":
        builder_params = {"lam": float(params.get("lam", 0.0)),
                          "theta": float(params.get("theta", 0.0))}

        def builder(**kw):
            return build_reservoir_chain(kw["lam"], kw["theta"])

        default_pair = ("lam", "theta")
    else:
        builder_params = {
            "delta": float(params.get("delta", 0.5)),
            "h": float(params.get("h", 0.5)),
            "theta": float(params.get("theta", 0.0)),
            "mu_minus": float(params.get("mu_minus", 1.0)),
            "mu_plus": float(params.get("mu_plus", 0.5)),
        }
        epsilon = float(params.get("epsilon", 1e-3))

        def builder(**kw):
            return build_rotated_xy_dissipative(
                kw["delta"], kw["h"], kw["theta"], kw["mu_minus"], kw["mu_plus"], epsilon
            )

        default_pair = ("h", "theta")
    pair = tuple(str(params.get("muc_pair", ":".join(default_pair))).split(":"))
    model = builder(**builder_params)
    out: dict = {}
    if "gap" in quantities:
        out["gap"] = momentum.gap_on_circle(model)
    if "xi" in quantities:
        rat = momentum.rationalize(model)
        out["xi"] = momentum.correlation_length(rat).xi
    if "muc" in quantities:
        out["muc"] = momentum.muc_per_site(
            builder, builder_params, pair, mode=str(params.get("muc_mode", "quadrature"))
        )
    return out


def evaluate_point(model_name: str, params: dict, quantities: tuple[str, ...]) -> dict:
    if model_name == "boundary_xy":
        return _boundary_xy_point(params, quantities)
    if model_name in ("reservoir_chain", "rotated_xy"):
        return _symbol_point(model_name, params, quantities)
    raise BadSpec(f"unknown model {model_name!r}")


def _worker(task):
    model_name, params, quantities = task
    row = {}
    for q in quantities:
        row[q] = None
    try:
        row.update(evaluate_point(model_name, params, quantities))
    except NessGeomError as exc:
        for q in quantities:
            if row.get(q) is None:
                row[q] = type(exc).__name__
    except Exception as exc:  # noqa: BLE001 - surfaced in-cell per contract
        for q in quantities:
            if row.get(q) is None:
                row[q] = type(exc).__name__
    return row


# --- specs -------------------------------------------------------------------------


@dataclass
class SweepSpec:
    model: str
    fixed: dict = field(default_factory=dict)
    axes: list = field(default_factory=list)  # (name, start, stop, step)
    quantities: tuple = ()
    out: str | None = None
    jobs: int = 1
    seed: int = 0
    fmt: str = "csv"

    def validate(self):
        if self.model not in ("boundary_xy", "reservoir_chain", "rotated_xy"):
            raise BadSpec(f"unknown model {self.model!r}")
        if not self.axes:
            raise BadSpec("sweep needs at least one --grid axis")
        if not self.quantities:
            raise BadSpec("sweep needs --quantities")
        for name, start, stop, step in self.axes:
            if step <= 0:
                raise BadSpec(f"axis {name}: step must be positive")
        allowed = FINITE_QUANTITIES if self.model == "boundary_xy" else SYMBOL_QUANTITIES
        for q in self.quantities:
            if q not in allowed:
                raise BadSpec(f"quantity {q!r} not supported for model {self.model!r}")

    def grid(self):
        axes_values = [
            np.arange(start, stop + 0.5 * step, step) for _, start, stop, step in self.axes
        ]
        names = [a[0] for a in self.axes]
        mesh = np.meshgrid(*axes_values, indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=1)
        return names, points


@dataclass
class ScalingSpec:
    model: str
    fixed: dict = field(default_factory=dict)
    sizes: tuple = ()
    quantities: tuple = ()
    out: str | None = None
    jobs: int = 1
    seed: int = 0
    fit_window: tuple | None = None

    def validate(self):
        if len(self.sizes) < 4:
            raise BadSpec("scaling needs at least 4 sizes")
        if list(self.sizes) != sorted(self.sizes):
            raise BadSpec("sizes must be ascending")
        if not self.quantities:
            raise BadSpec("scaling needs --quantities")
        if self.model != "boundary_xy":
            raise BadSpec("finite-size scaling is defined for the boundary_xy model")


# --- output ------------------------------------------------------------------------


def _csv_header(spec_kind: str, model: str, fixed: dict, seed: int) -> list[str]:
    fixed_txt = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(fixed.items()))
    return [
        f"# nessgeom {spec_kind} v{__version__}",
        f"# model: {model}",
        f"# fixed: {fixed_txt}",
        f"# seed: {seed}",
    ]


def _write_text(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def run_sweep(spec: SweepSpec) -> str:
    spec.validate()
    names, points = spec.grid()
    tasks = []
    for row in points:
        params = dict(spec.fixed)
        params.update({name: float(v) for name, v in zip(names, row)})
        tasks.append((spec.model, params, spec.quantities))
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_worker, tasks, chunksize=8))
    else:
        results = [_worker(t) for t in tasks]
    if spec.fmt == "json":
        rows = []
        for row, res in zip(points, results):
            record = {name: _fmt(v) for name, v in zip(names, row)}
            record.update({q: _fmt(res[q]) for q in spec.quantities})
            rows.append(record)
        text = json.dumps(
            {
                "model": spec.model,
                "fixed": {k: spec.fixed[k] for k in sorted(spec.fixed)},
                "seed": spec.seed,
                "rows": rows,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"
        _write_text(spec.out, text)
        return text
    lines = _csv_header("sweep", spec.model, spec.fixed, spec.seed)
    lines.append(",".join(list(names) + list(spec.quantities)))
    for row, res in zip(points, results):
        cells = [_fmt(v) for v in row] + [_fmt(res[q]) for q in spec.quantities]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    _write_text(spec.out, text)
    return text


def run_scaling(spec: ScalingSpec) -> tuple[str, str]:
    from .numerics import fit_power_law

    spec.validate()
    tasks = []
    for n in spec.sizes:
        params = dict(spec.fixed)
        params["n"] = int(n)
        tasks.append((spec.model, params, spec.quantities))
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_worker, tasks, chunksize=1))
    else:
        results = [_worker(t) for t in tasks]
    lines = _csv_header("scaling", spec.model, spec.fixed, spec.seed)
    lines.append(",".join(["n"] + list(spec.quantities)))
    for n, res in zip(spec.sizes, results):
        lines.append(",".join([str(int(n))] + [_fmt(res[q]) for q in spec.quantities]))
    csv_text = "\n".join(lines) + "\n"
    window = spec.fit_window or (spec.sizes[0], spec.sizes[-1])
    fits = {}
    for q in spec.quantities:
        samples = [
            (int(n), float(res[q]))
            for n, res in zip(spec.sizes, results)
            if isinstance(res[q], (int, float)) and window[0] <= n <= window[1]
            and np.isfinite(res[q]) and res[q] > 0
        ]
        if len(samples) >= 4:
            fit = fit_power_law(samples)
            fits[q] = {
                "exponent": fit.exponent,
                "prefactor": fit.prefactor,
                "r_squared": fit.r_squared,
                "n_range": list(fit.n_range),
            }
        else:
            fits[q] = {"error": "insufficient positive samples"}
    report = {
        "model": spec.model,
        "fixed": {k: spec.fixed[k] for k in sorted(spec.fixed)},
        "sizes": [int(n) for n in spec.sizes],
        "fit_window": [int(window[0]), int(window[1])],
        "fits": fits,
        "samples": {
            q: [res[q] if not isinstance(res[q], str) else res[q] for res in results]
            for q in spec.quantities
        },
    }
    json_text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if spec.out:
        base = spec.out[:-4] if spec.out.endswith(".csv") else spec.out
        _write_text(base + ".csv", csv_text)
        _write_text(base + ".json", json_text)
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(json_text)
    return csv_text, json_text


# --- oracle suite --------------------------------------------------------------------


def run_oracle_suite(seed: int = 0, cases: int = 10, convention_flip: bool = False) -> list[tuple[str, bool, str]]:
    """Randomized cross-module equivalence checks with recorded seeds.

    ``convention_flip`` is a test hook that deliberately flips the sign of
    the Lyapunov source in the dense anchor check; the suite must then
    report that check as failed (negative control).
    """
    from . import _selfchecks

    return _selfchecks.run_all(seed=seed, cases=cases, convention_flip=convention_flip)


# --- geometry / spectrum single-point reports ----------------------------------------


def run_geometry(model: str, params: dict) -> dict:
    if model != "boundary_xy":
        raise BadSpec("geometry report is defined for the boundary_xy model")
    return _boundary_xy_point(params, ("gap", "gmax", "detg", "muc", "R", "purity"))


def run_spectrum(model: str, params: dict) -> dict:
    from . import liouvillian
    from .models import BoundaryXYParams, build_boundary_driven_xy

    if model == "boundary_xy":
        p = BoundaryXYParams(
            float(params.get("delta", 1.25)),
            float(params.get("h", 0.3)),
            int(params["n"]),
            float(params.get("kappa_l_plus", 0.3)),
            float(params.get("kappa_l_minus", 0.5)),
            float(params.get("kappa_r_plus", 0.1)),
            float(params.get("kappa_r_minus", 0.5)),
        )
        shape = liouvillian.shape_matrices(build_boundary_driven_xy(p))
        rep = liouvillian.gap_report(shape.x)
        return {
            "delta": rep.delta,
            "delta_xhat": rep.delta_xhat,
            "delta_liouville": rep.delta_liouville,
            "near_defective": rep.near_defective,
            "condition_estimate": rep.condition_estimate,
            "spectrum": [[float(z.real), float(z.imag)] for z in rep.spectrum],
        }
    if model not in ("reservoir_chain", "rotated_xy"):
        raise BadSpec(f"unknown model {model!r}")
    out = _symbol_point(model, params, ("gap",))
    return {"gap_on_circle": out["gap"]}


# --- argument plumbing ---------------------------------------------------------------


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise BadSpec(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            out[k.strip()] = v.strip()
    return out


def _parse_grid(items) -> list:
    axes = []
    for item in items or ():
        if "=" not in item or item.count(":") != 2:
            raise BadSpec(f"--grid expects axis=start:stop:step, got {item!r}")
        name, rng = item.split("=", 1)
        start, stop, step = (float(x) for x in rng.split(":"))
        axes.append((name.strip(), start, stop, step))
    return axes


def _load_config(path: str | None, section: str) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise IoFailure(f"cannot read config file {path}")
    if section not in parser:
        return {}
    return dict(parser[section])


def _merge_config(args, section: str):
    cfg = _load_config(args.config, section)
    if "model" in cfg and args.model is None:
        args.model = cfg["model"]
    if "set" in cfg:
        merged = _parse_set([s.strip() for s in cfg["set"].split(",") if s.strip()])
        merged.update(_parse_set(args.set))
        args._fixed = merged
    else:
        args._fixed = _parse_set(args.set)
    if hasattr(args, "grid"):
        grids = list(args.grid or [])
        if not grids and "grid" in cfg:
            grids = [s.strip() for s in cfg["grid"].split(",") if s.strip()]
        args._axes = _parse_grid(grids)
    if hasattr(args, "quantities"):
        q = args.quantities or cfg.get("quantities")
        args._quantities = tuple(s.strip() for s in (q or "").split(",") if s.strip())
    if hasattr(args, "sizes"):
        s = args.sizes or cfg.get("sizes")
        args._sizes = tuple(int(x) for x in (s or "").split(",") if x.strip())
    if getattr(args, "out", None) is None and "out" in cfg:
        args.out = cfg["out"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nessgeom",
        description="Geometry of fermionic Gaussian steady states: sweeps, scaling, spectra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=False, sizes=False):
        p.add_argument("--model", default=None)
        p.add_argument("--set", action="append", metavar="key=value")
        if grid:
            p.add_argument("--grid", action="append", metavar="axis=start:stop:step")
        if sizes:
            p.add_argument("--sizes", metavar="20,40,80")
        p.add_argument("--quantities", metavar="gap,gmax,muc")
        p.add_argument("--out", default=None)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker pool width (default: available cores)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None)

    common(sub.add_parser("sweep", help="grid sweep to CSV"), grid=True)
    common(sub.add_parser("scaling", help="finite-size scaling fits"), sizes=True)
    geo = sub.add_parser("geometry", help="one-point geometry report")
    geo.add_argument("--model", default=None)
    geo.add_argument("--set", action="append", metavar="key=value")
    geo.add_argument("--out", default=None)
    geo.add_argument("--config", default=None)
    spec_p = sub.add_parser("spectrum", help="gap report at one point")
    spec_p.add_argument("--model", default=None)
    spec_p.add_argument("--set", action="append", metavar="key=value")
    spec_p.add_argument("--out", default=None)
    spec_p.add_argument("--config", default=None)
    orc = sub.add_parser("oracle", help="randomized cross-module self checks")
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--cases", type=int, default=10)
    orc.add_argument("--convention-flip", action="store_true", help="negative-control hook")
    return parser


def main(argv=None) -> int:
    import os

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            _merge_config(args, "sweep")
            spec = SweepSpec(
                model=args.model or "boundary_xy",
                fixed=args._fixed,
                axes=args._axes,
                quantities=args._quantities,
                out=args.out,
                jobs=args.jobs or os.cpu_count() or 1,
                seed=args.seed,
                fmt=args.fmt,
            )
            run_sweep(spec)
            return 0
        if args.command == "scaling":
            _merge_config(args, "scaling")
            spec = ScalingSpec(
                model=args.model or "boundary_xy",
                fixed=args._fixed,
                sizes=args._sizes,
                quantities=args._quantities,
                out=args.out,
                jobs=args.jobs or os.cpu_count() or 1,
                seed=args.seed,
            )
            run_scaling(spec)
            return 0
        if args.command == "geometry":
            _merge_config(args, "geometry")
            report = run_geometry(args.model or "boundary_xy", args._fixed)
            _write_text(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
            return 0
        if args.command == "spectrum":
            _merge_config(args, "spectrum")
            report = run_spectrum(args.model or "boundary_xy", args._fixed)
            _write_text(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
            return 0
        if args.command == "oracle":
            results = run_oracle_suite(
                seed=args.seed, cases=args.cases, convention_flip=args.convention_flip
            )
            failed = [name for name, ok, _ in results if not ok]
            for name, ok, detail in results:
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
            print(f"{len(results) - len(failed)}/{len(results)} checks passed")
            return 3 if failed else 0
    except BadSpec as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 1
    except NessGeomError as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
