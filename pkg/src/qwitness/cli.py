"""Command-line entry points and experiment orchestration.

Subcommands: ``qwitness run`` (full pipeline), ``qwitness rates`` (rate
tabulation only), ``qwitness validate`` (config check).  Exit codes: 0 for
success, 2 for configuration problems, 3 for numerical failures.  CSV output
is UTF-8 with '.' decimals and 17 significant digits; reruns of the same
config produce byte-identical CSV bodies.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, FOCK, load_config
from .dynamics import Propagator
from .hilbert import FockSpace
from .quadrature import QuadratureError
from .rates import (TabulationError, markovian_rates,
                    suggested_grid_points, tabulate_rates)
from .witness import (FockBasis, coherent_grid, coherent_initial_state,
                      fock_initial_state, witness_sweep_multi)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class NumericalFailure(RuntimeError):
    """Wraps module-level numerical errors for exit-code mapping."""


def _profile_suffix(config: ExperimentConfig, alpha_exp: float) -> str:
    if len(config.alpha_exps) == 1:
        return ""
    return f"_alpha{alpha_exp:+g}".replace("+", "").replace("/", "_")


def _schedule_span(config: ExperimentConfig) -> float:
    """Largest second-measurement time (cycles) the protocol will reach."""
    sched = config.protocol.schedule
    taus = config.tau_grid()
    if isinstance(sched, list):
        return max(t2 for _, t2 in sched)
    ratio = 2.0 if isinstance(sched, str) else float(sched)
    return ratio * (float(np.max(taus)) if taus.size else 0.0)


def _build_basis(config: ExperimentConfig):
    if config.protocol.basis == FOCK:
        return FockBasis(config.system.dim)
    g = config.protocol.grid
    return coherent_grid(extent=g.extent, points=g.points)


def _initial_matrices(config: ExperimentConfig, space: FockSpace):
    states = []
    labels = []
    for init in config.initial_states():
        if config.protocol.basis == FOCK:
            states.append(fock_initial_state(space, init))
            labels.append(f"fock:{init}")
        else:
            states.append(coherent_initial_state(space, init))
            labels.append(f"coherent:{init}")
    return states, labels


def run_experiment(config: ExperimentConfig, *, threads: int = 1,
                   out_dir: str | None = None, rates_only: bool = False) -> dict:
    """Execute one experiment; returns the manifest dict.

    Writes rate/witness CSV files, optional SVG figures and manifest.json
    into the output directory.  On a module failure the manifest still lands
    on disk with a machine-readable error record, then the error propagates
    as NumericalFailure.
    """
    from .plotting import plot_rate_table, plot_witness_curves

    out = Path(out_dir or config.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    manifest = {
        "config": config.resolved(),
        "config_hash": config.content_hash(),
        "package_version": __version__,
        "threads": threads,
        "started_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [],
        "status": "running",
    }

    def finish(status: str, error: dict | None = None) -> dict:
        manifest["status"] = status
        manifest["duration_s"] = time.time() - started
        if error:
            manifest["error"] = error
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest

    try:
        space = FockSpace(config.system.dim)
        cycle = 2.0 * math.pi / config.system.omega
        span_cycles = config.numerics.t_max or _schedule_span(config)
        if span_cycles <= 0.0:
            raise ConfigError("protocol defines no measurement times; "
                              "set tau_grid or numerics.t_max")
        t_max = span_cycles * cycle
        grid_points = (config.numerics.rate_grid_points
                       or suggested_grid_points(config.m, t_max,
                                                config.system.omega))

        basis = _build_basis(config)
        rho0s, labels = _initial_matrices(config, space)
        taus = config.tau_grid()
        delta = config.protocol.delta

        witness_files = []
        witness_curves_for_plot = []
        for bath in config.bath_specs():
            suffix = _profile_suffix(config, bath.alpha_exp)
            label = (f"alpha_exp={bath.alpha_exp:+g}"
                     if len(config.alpha_exps) > 1 else "")
            table = tabulate_rates(config.system.n, config.m, bath,
                                   config.spectral, t_max, grid_points,
                                   abs_tol=config.numerics.quad_tol)
            if config.outputs.emit_rates:
                rates_path = out / f"rates{suffix}.csv"
                table.to_csv(rates_path)
                manifest["outputs"].append(rates_path.name)
                if config.outputs.emit_svg:
                    fig_path = out / f"rates{suffix}.svg"
                    plot_rate_table([(label, table)], fig_path)
                    manifest["outputs"].append(fig_path.name)
            if rates_only:
                continue

            prop = Propagator(space, config.system.n, table,
                              omega=config.system.omega,
                              rtol=config.numerics.ode_rtol,
                              atol=config.numerics.ode_atol)
            markov_prop = None
            if delta:
                markov_prop = Propagator(
                    space, config.system.n,
                    markovian_rates(config.system.n, config.m, bath,
                                    config.spectral),
                    omega=config.system.omega,
                    rtol=config.numerics.ode_rtol,
                    atol=config.numerics.ode_atol)

            meta = {
                "n": config.system.n, "m": config.m, "bath": bath.kind,
                "alpha_exp": bath.alpha_exp, "r0": bath.r0,
                "beta": "inf" if math.isinf(bath.beta) else bath.beta,
                "basis": config.protocol.basis,
                "delta": delta,
            }
            curves = witness_sweep_multi(prop, rho0s, basis, taus,
                                         schedule=config.protocol.schedule,
                                         markov_prop=markov_prop,
                                         threads=threads, metadata=meta)
            for curve, lab in zip(curves, labels):
                curve.metadata["initial"] = lab
                curve.metadata.pop("initial_index", None)

            if config.outputs.emit_witness:
                if len(curves) == 1:
                    wpath = out / f"witness{suffix}.csv"
                    curves[0].to_csv(wpath)
                    witness_files.append(wpath.name)
                else:
                    # long-form heatmap data over fock initial states
                    wpath = out / f"witness_heatmap{suffix}.csv"
                    _write_heatmap(wpath, curves, config.initial_states())
                    witness_files.append(wpath.name)
                manifest["outputs"].append(wpath.name)
            witness_curves_for_plot.append((label or labels[0], curves[0]))

        if (not rates_only and config.outputs.emit_svg
                and config.outputs.emit_witness and witness_curves_for_plot):
            wfig = out / "witness.svg"
            plot_witness_curves(witness_curves_for_plot, wfig, delta=delta)
            manifest["outputs"].append(wfig.name)

        return finish("ok")
    except ConfigError:
        raise
    except (QuadratureError, TabulationError, ValueError, RuntimeError) as exc:
        finish("error", {"type": type(exc).__name__, "message": str(exc)})
        raise NumericalFailure(str(exc)) from exc


def _write_heatmap(path, curves, indices) -> None:
    lines = []
    meta = curves[0].metadata
    for key in ("n", "m", "bath", "alpha_exp", "r0", "basis"):
        if key in meta:
            lines.append(f"# {key}={meta[key]}")
    lines.append("tau,n0,value")
    for idx, curve in zip(indices, curves):
        for t, v in zip(curve.tau_grid, curve.values):
            lines.append(f"{t:.17g},{idx},{v:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="path to the JSON experiment config")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key "
                   "(dotted path, JSON value)")
    p.add_argument("--out", default=None, help="output directory override")
    p.add_argument("--threads", type=int, default=1,
                   help="cap on worker threads for the sweep")
    p.add_argument("-v", "--verbose", action="count", default=0)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qwitness",
        description="Nonclassicality witness simulations for an oscillator "
                    "coupled to thermal or squeezed reservoirs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run the full experiment pipeline"),
                            ("rates", "tabulate decay rates only"),
                            ("validate", "parse and validate a config")):
        _add_common(sub.add_parser(name, help=help_text))

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s")

    try:
        config = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(json.dumps(config.resolved(), indent=2, sort_keys=True))
        return 0
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    try:
        manifest = run_experiment(config, threads=args.threads,
                                  out_dir=args.out,
                                  rates_only=args.command == "rates")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out_dir = Path(args.out or config.outputs.directory)
    print(f"wrote {len(manifest['outputs']) + 1} files to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
