"""Command-line entry point: spectrum, evolve, fit and compare.

Every run writes a *.manifest.json next to its data files; passing that file
back with --manifest reproduces the same outputs byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .chain import (
    PhaseConvention,
    constant_couplings,
    evolve_chain,
    exact_coupling_table,
    exact_couplings,
    fit_couplings,
)
from .core import ConfigError, Direction, NumericalError, Schedule, Sector, build_spin_system, d_hamiltonian_ds
from .dynamics import InitialState, evolve_full
from .export import write_cgc_csv, write_json, write_pair_table_csv, write_sweep_csv
from .rate import DEFAULT_TB, RateForm, RateParams, evolve_rate, rate_table
from .spectral import min_gap_location, sweep
from .traces import compare_traces, ground_oscillation, read_trace_csv, write_trace_csv

log = logging.getLogger("lmg_dynamics")

SCHEMA_VERSION = 1
OUT_ENV = "LMG_OUT_DIR"
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

MODELS = ("full", "rate", "chain-const", "chain-fit", "chain-exact")


@dataclass
class RunConfig:
    command: str = "evolve"
    n: int = 20
    direction: str = "forward"
    total_time: float = 10.0
    steps: int = 10000
    grid: int = 501
    model: str = "full"
    initial: str = "even"
    sector: str = "full"
    rate_b: float | None = None
    rate_form: str = "inverse-square"
    rate_method: str = "rk4"
    gamma: float | None = None
    const_coupling: float | None = None
    coupling_sign: str = "signed"
    phase: str = "scaled"
    gap_floor: float = 1e-6
    out: str = "lmg_out"

    def validate(self) -> None:
        def bad(field_name, msg):
            raise ConfigError(f"--{field_name.replace('_', '-')}: {msg}")

        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 2 or self.n % 2:
            bad("n", f"N must be an even integer >= 2 (got {self.n})")
        for name, enum_cls in (("direction", Direction), ("initial", InitialState), ("sector", Sector),
                               ("rate_form", RateForm), ("phase", PhaseConvention)):
            try:
                enum_cls(getattr(self, name))
            except ValueError:
                bad(name, f"invalid value {getattr(self, name)!r}")
        if self.model not in MODELS:
            bad("model", f"must be one of {', '.join(MODELS)}")
        if self.rate_method not in ("rk4", "expm"):
            bad("rate_method", "must be rk4 or expm")
        if self.coupling_sign not in ("signed", "absolute"):
            bad("coupling_sign", "must be signed or absolute")
        if not (self.total_time > 0 and np.isfinite(self.total_time)):
            bad("total_time", f"must be positive (got {self.total_time})")
        if self.grid < 2:
            bad("grid", f"needs at least 2 points (got {self.grid})")
        if self.command != "spectrum" and (self.steps < 1 or self.steps % (self.grid - 1)):
            bad("steps", f"must be a positive multiple of grid-1={self.grid - 1} (got {self.steps})")
        if self.rate_b is not None and not self.rate_b >= 0:
            bad("rate_b", "must be non-negative")
        if self.gamma is not None and not self.gamma > 0:
            bad("gamma", "must be positive")
        if not self.gap_floor > 0:
            bad("gap_floor", "must be positive")
        needs_sector = self.command == "fit" or (self.command == "evolve" and self.model != "full")
        if needs_sector and self.initial == "broken":
            bad("initial", "rate and chain models need a parity sector (even or odd)")

    def to_manifest(self) -> dict:
        cfg = dataclasses.asdict(self)
        cfg.pop("out")
        return {"schema_version": SCHEMA_VERSION, "code_version": __version__, "deterministic": True, "config": cfg}

    @classmethod
    def from_manifest(cls, data: dict) -> "RunConfig":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"--manifest: unsupported schema_version {data.get('schema_version')!r}")
        cfg = dict(data.get("config", {}))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"--manifest: unknown fields {sorted(unknown)}")
        return cls(**cfg)

    def schedule(self) -> Schedule:
        return Schedule.uniform(self.direction, self.total_time, self.grid, self.steps)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_spectrum(cfg: RunConfig) -> dict:
    cfg.validate()
    system = build_spin_system(cfg.n)
    sw = sweep(system, cfg.direction, grid=np.linspace(0.0, 1.0, cfg.grid), sector=cfg.sector, keep_vectors=False)
    out = _outdir(cfg)
    files = {
        "spectrum": write_sweep_csv(sw, out / "spectrum.csv"),
        "cgc": write_cgc_csv(out / "cgc.csv"),
        "manifest": write_json(cfg.to_manifest(), out / "spectrum.manifest.json"),
    }
    return {k: str(v) for k, v in files.items()}


def _model_sweep(cfg: RunConfig):
    system = build_spin_system(cfg.n)
    sched = cfg.schedule()
    sw = sweep(system, sched, sector=cfg.initial)
    return system, sched, sw, d_hamiltonian_ds(system, sched)


def run_model(cfg: RunConfig):
    """Evolve one model for the configuration and return its PopulationTrace."""
    cfg.validate()
    if cfg.model == "full":
        system = build_spin_system(cfg.n)
        return evolve_full(system, cfg.schedule(), cfg.initial)
    system, sched, sw, dH = _model_sweep(cfg)
    if cfg.model == "rate":
        b = cfg.rate_b if cfg.rate_b is not None else DEFAULT_TB / cfg.total_time
        params = RateParams(b=b, T=cfg.total_time, form=cfg.rate_form, gap_floor=cfg.gap_floor)
        return evolve_rate(sw, params, method=cfg.rate_method)
    if cfg.model == "chain-const":
        couplings = constant_couplings(sw, dH, cfg.const_coupling)
    elif cfg.model == "chain-fit":
        couplings = fit_couplings(sw, dH).couplings
        if cfg.gamma is not None:
            couplings = dataclasses.replace(couplings, gamma=cfg.gamma)
    else:
        couplings = exact_couplings(sw, dH, absolute=cfg.coupling_sign == "absolute")
    return evolve_chain(sw, couplings, cfg.total_time, phase=cfg.phase, gap_floor=cfg.gap_floor)


def cmd_evolve(cfg: RunConfig) -> dict:
    trace = run_model(cfg)
    out = _outdir(cfg)
    summary = {"model_tag": trace.model_tag.value, "n_levels": trace.n_levels,
               "final_populations": [float(p) for p in trace.final],
               "ground_oscillation": ground_oscillation(trace), **trace.meta}
    files = {
        "trace": write_trace_csv(trace, out / f"trace_{cfg.model}.csv"),
        "summary": write_json(summary, out / f"summary_{cfg.model}.json"),
        "manifest": write_json(cfg.to_manifest(), out / f"evolve_{cfg.model}.manifest.json"),
    }
    return {k: str(v) for k, v in files.items()}


def cmd_fit(cfg: RunConfig) -> dict:
    cfg.validate()
    system, sched, sw, dH = _model_sweep(cfg)
    fit = fit_couplings(sw, dH)
    M = exact_coupling_table(sw, dH)
    fitted = fit.couplings.table(sw.grid)
    report = fit.report()
    report["min_gap"] = [min_gap_location(sw, n)._asdict() for n in range(sw.n_levels - 1)]
    rb = cfg.rate_b if cfg.rate_b is not None else DEFAULT_TB / cfg.total_time
    rates = rate_table(sw, RateParams(b=rb, T=cfg.total_time, form=cfg.rate_form, gap_floor=cfg.gap_floor))
    out = _outdir(cfg)
    files = {
        "couplings": write_pair_table_csv(sw.grid, M, out / "couplings.csv", "exact",
                                          {"exact_abs": np.abs(M), "fitted": fitted, "gap": sw.gaps}),
        "rates": write_pair_table_csv(sw.grid, rates, out / "rates.csv", "rate"),
        "fit": write_json(report, out / "fit.json"),
        "manifest": write_json(cfg.to_manifest(), out / "fit.manifest.json"),
    }
    return {k: str(v) for k, v in files.items()}


def cmd_compare(trace_a, trace_b, out: str | None = None) -> dict:
    report = compare_traces(read_trace_csv(trace_a), read_trace_csv(trace_b))
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_json(report, Path(out) / "compare.json")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmg-dynamics", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False):
        d = RunConfig()
        p.add_argument("--n", type=int, default=d.n, help="number of spins (even)")
        p.add_argument("--direction", default=d.direction, choices=[e.value for e in Direction])
        p.add_argument("--grid", type=int, default=d.grid, help="number of recorded s points")
        p.add_argument("--out", default=None, help=f"output directory (env {OUT_ENV}, default {d.out})")
        p.add_argument("--manifest", default=None, help="re-run the configuration stored in a manifest")
        if model:
            p.add_argument("--total-time", type=float, default=d.total_time)
            p.add_argument("--steps", type=int, default=d.steps, help="propagation intervals for the full model")
            p.add_argument("--initial", default=d.initial, choices=[e.value for e in InitialState])
            p.add_argument("--rate-b", type=float, default=None, help="rate coupling b (default 0.01/T)")
            p.add_argument("--rate-form", default=d.rate_form, choices=[e.value for e in RateForm])
            p.add_argument("--rate-method", default=d.rate_method, choices=["rk4", "expm"])
            p.add_argument("--gamma", type=float, default=None, help="override the fitted Gaussian width")
            p.add_argument("--const-coupling", type=float, default=None)
            p.add_argument("--coupling-sign", default=d.coupling_sign, choices=["signed", "absolute"])
            p.add_argument("--phase", default=d.phase, choices=[e.value for e in PhaseConvention])
            p.add_argument("--gap-floor", type=float, default=d.gap_floor)

    p = sub.add_parser("spectrum", help="instantaneous spectrum and critical gap curve")
    common(p)
    p.add_argument("--sector", default="full", choices=[e.value for e in Sector])
    p = sub.add_parser("evolve", help="level populations for one model")
    common(p, model=True)
    p.add_argument("--model", default="full", choices=MODELS)
    p = sub.add_parser("fit", help="exact matrix elements and Gaussian-log coupling fit")
    common(p, model=True)
    p = sub.add_parser("compare", help="distances between two trace CSV files")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    p.add_argument("--out", default=None)
    return parser


def config_from_args(args) -> RunConfig:
    if args.manifest:
        try:
            data = json.loads(Path(args.manifest).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"--manifest: cannot read {args.manifest}: {exc}") from exc
        cfg = RunConfig.from_manifest(data)
    else:
        values = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)
                  if hasattr(args, f.name) and f.name != "out"}
        cfg = RunConfig(command=args.command, **{k: v for k, v in values.items() if k != "command"})
    cfg.out = args.out or os.environ.get(OUT_ENV) or RunConfig.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "compare":
            out = args.out or os.environ.get(OUT_ENV)
            report = cmd_compare(args.trace_a, args.trace_b, out)
            summary = {k: v for k, v in report.items() if k not in ("s", "tvd")}
            print(json.dumps(summary, indent=2, sort_keys=True))
            return 0
        cfg = config_from_args(args)
        if cfg.command != args.command:
            raise ConfigError(f"--manifest: manifest is for '{cfg.command}', not '{args.command}'")
        handler = {"spectrum": cmd_spectrum, "evolve": cmd_evolve, "fit": cmd_fit}[args.command]
        files = handler(cfg)
        for name, path in files.items():
            log.info("wrote %s: %s", name, path)
        print(json.dumps(files, indent=2, sort_keys=True))
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
