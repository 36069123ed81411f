"""Command-line entry point: ``pareto-pipe <command> [flags]``.

Commands read the run configuration, apply the flag overrides and write
their outputs to ``<out_dir>/<analysis_name>``. Exit codes: 0 on success,
2 on a configuration or input error, 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from datetime import datetime
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from pareto_pipe.config.config_loaders import load_config, prepare_directories
from pareto_pipe.config.config_schema import RunConfig
from pareto_pipe.errors import ConfigError, NumericalError
from pareto_pipe.io.artifacts import (
    load_episodes,
    load_fit_result,
    save_episodes,
    save_fields,
    save_fit_result,
    save_margins,
)
from pareto_pipe.io.filesystem import ProvenanceHeader, write_csv, write_yaml
from pareto_pipe.io.geometry import SiteSet, load_sites
from pareto_pipe.io.plots import plot_extremogram
from pareto_pipe.io.tables import DataMatrix, load_data, save_data
from pareto_pipe.models.rpareto import GevMarginalMap
from pareto_pipe.ops.base import RiskFunctional
from pareto_pipe.ops.registry import REGISTRY
from pareto_pipe.stages.dependence_fit.controller import (
    DependenceFitController,
)
from pareto_pipe.stages.diagnostics.controller import DiagnosticsController
from pareto_pipe.stages.lifting.controller import LiftingController
from pareto_pipe.stages.margin_transform.controller import (
    MarginTransformController,
)
from pareto_pipe.stages.simulation.controller import SimulationController

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

EPISODES_FILE = "episodes.csv"
GENERALIZED_FILE = "generalized.csv"
STANDARDIZED_FILE = "standardized.csv"
MARGINS_FILE = "margins.csv"
FIT_FILE = "fit_result"
EXCEEDANCES_FILE = "exceedances.csv"
EXTREMOGRAM_FILE = "extremogram.csv"
EXTREMOGRAM_PLOT = "extremogram.svg"
POT_FILE = "pot_stability.csv"
LIFTED_FILE = "lifted.csv"


def configure_logging(settings: RunConfig, command: str, level: str) -> Path:
    """
    Setup logging: stdout at ``level``, a per-command file at DEBUG.
    """

    log_file = (
        settings.log_dir_path
        / f"{command}_{datetime.now():%Y-%m-%d_%H-%M-%S}.log"
    )

    logger.remove()
    logger.add(sys.stdout, level=level)
    logger.add(log_file, level="DEBUG", enqueue=True)
    return log_file


####################################################################
# Shared helpers
####################################################################


def provenance(config: RunConfig) -> ProvenanceHeader:
    return ProvenanceHeader(config.config_hash(), config.general.seed)


def site_set(config: RunConfig) -> SiteSet:
    """The configured site set (grid or file).

    Raises:
        ConfigError: If no ``sites`` section is given.
    """
    if config.sites is None:
        raise ConfigError("The configuration has no 'sites' section.")
    if config.sites.grid is not None:
        grid = config.sites.grid
        return SiteSet.grid(grid.nx, grid.ny, grid.spacing)
    assert config.sites.path is not None
    return load_sites(config.sites.path, lonlat=config.sites.lonlat)


def risk_functional(config: RunConfig) -> RiskFunctional:
    try:
        return config.build_risk()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def observations(config: RunConfig, sites: SiteSet) -> DataMatrix:
    if config.data.path is None:
        raise ConfigError("The configuration has no 'data.path'.")
    return load_data(config.data.path, sites)


def required_file(path: Path, hint: str) -> Path:
    if not path.is_file():
        msg = f"'{path}' does not exist; {hint}."
        logger.error(msg)
        raise ConfigError(msg)
    return path


####################################################################
# Commands
####################################################################


def cmd_simulate(config: RunConfig) -> list[Path]:
    """Simulates the configured ensemble (and its generalized version)."""
    sites = site_set(config)
    if config.vario is None:
        raise ConfigError("'simulate' needs a 'vario' section.")
    risk = risk_functional(config)

    gev_map = None
    settings = config.simulate.gev_map
    if settings is not None:
        try:
            gev_map = GevMarginalMap(
                *(
                    np.broadcast_to(np.asarray(v, dtype=float), sites.n_sites)
                    for v in (settings.mu, settings.sigma, settings.xi)
                )
            )
        except ValueError as exc:
            raise ConfigError(f"Invalid 'simulate.gev_map': {exc}") from exc

    controller = SimulationController(
        sites,
        config.vario,
        risk,
        n_episodes=config.simulate.n_episodes,
        seed=config.general.seed,
        threads=config.general.threads,
        max_iters=config.simulate.max_iters,
        gev_map=gev_map,
    )
    result = controller.run()

    header = provenance(config)
    written = [
        save_episodes(
            result.episodes,
            sites,
            config.run_dir / EPISODES_FILE,
            header,
            controller.metadata(result.stats),
        )
    ]
    if result.generalized is not None:
        written.append(
            save_fields(
                result.generalized,
                sites,
                config.run_dir / GENERALIZED_FILE,
                header,
            )
        )
    return written


def cmd_transform(config: RunConfig) -> list[Path]:
    """Fits the margins and writes the standardized matrix."""
    sites = site_set(config)
    data = observations(config, sites)
    controller = MarginTransformController(
        q=config.margins.q,
        mode=config.margins.mode,
        per_site_q=config.margins.per_site_q,
        threads=config.general.threads,
    )
    standardized = controller.run(data)

    header = provenance(config)
    matrix = DataMatrix(standardized.values, sites.ids, standardized.time)
    return [
        save_data(matrix, config.run_dir / STANDARDIZED_FILE, header),
        save_margins(
            list(standardized.margins), config.run_dir / MARGINS_FILE, header
        ),
    ]


def cmd_fit(config: RunConfig) -> list[Path]:
    """Extracts risk exceedances from the standardized data and fits them."""
    sites = site_set(config)
    path = required_file(
        config.run_dir / STANDARDIZED_FILE, "run 'transform' first"
    )
    data = load_data(path, sites)
    risk = risk_functional(config)
    try:
        weights = config.fit.build_weights()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    controller = DependenceFitController(
        sites,
        risk,
        init=(config.fit.init_beta, config.fit.init_alpha),
        objective=config.fit.objective,
        u=config.fit.u,
        u_quantile=config.fit.u_quantile,
        family=config.fit.family,
        weights=weights,
        max_iters=config.fit.max_iters,
        min_exceedances=config.fit.min_exceedances,
    )
    result, episodes = controller.run(data.values)

    header = provenance(config)
    yaml_path, csv_path = save_fit_result(
        result, config.run_dir / FIT_FILE, header
    )
    exceedances = save_episodes(
        episodes,
        sites,
        config.run_dir / EXCEEDANCES_FILE,
        header,
        {"risk": risk.type_name, "u": result.u},
    )
    return [yaml_path, csv_path, exceedances]


def cmd_diagnose(config: RunConfig) -> list[Path]:
    """Writes the extremogram (with the fitted model when present) and the
    POT-stability report of the fitted exceedances."""
    sites = site_set(config)
    data = observations(config, sites)

    fit_path = (
        Path(config.diagnose.fit_path)
        if config.diagnose.fit_path
        else config.run_dir / f"{FIT_FILE}.yaml"
    )
    model = None
    if fit_path.is_file():
        model = load_fit_result(fit_path).variogram()

    episodes = None
    exceedances = config.run_dir / EXCEEDANCES_FILE
    if exceedances.is_file():
        episodes = load_episodes(exceedances, sites)

    controller = DiagnosticsController(
        sites,
        thresholds=config.diagnose.thresholds,
        n_bins=config.diagnose.n_bins,
        model=model,
        u_grid=config.diagnose.u_grid,
        n_permutations=config.diagnose.n_permutations,
        seed=config.general.seed,
    )
    result = controller.run(data, episodes, risk_functional(config))

    header = provenance(config)
    written = [
        write_csv(result.extremogram, config.run_dir / EXTREMOGRAM_FILE, header)
    ]
    if config.diagnose.plot:
        written.append(
            plot_extremogram(
                result.extremogram,
                config.run_dir / EXTREMOGRAM_PLOT,
                header,
                model,
            )
        )
    if result.pot_stability is not None:
        pot_csv = config.run_dir / POT_FILE
        written.append(
            write_csv(result.pot_stability.to_frame(), pot_csv, header)
        )
        written.append(
            write_yaml(
                result.pot_stability.model_dump(),
                pot_csv.with_suffix(".yaml"),
                header,
            )
        )
    return written


def cmd_lift(config: RunConfig) -> list[Path]:
    """Lifts the fitted exceedances (or a given episode file)."""
    sites = site_set(config)
    source = (
        Path(config.lift.episodes_path)
        if config.lift.episodes_path
        else required_file(
            config.run_dir / EXCEEDANCES_FILE,
            "run 'fit' first or set 'lift.episodes_path'",
        )
    )
    episodes = load_episodes(source, sites)
    controller = LiftingController(
        config.lift.n_episodes, config.general.seed, config.lift.alpha
    )
    lifted = controller.run(episodes)
    return [
        save_episodes(
            lifted,
            sites,
            config.run_dir / LIFTED_FILE,
            provenance(config),
            {
                "source": source.name,
                "alpha": config.lift.alpha,
                "n_source_episodes": len(episodes),
            },
        )
    ]


COMMANDS: dict[str, Callable[[RunConfig], list[Path]]] = {
    "simulate": cmd_simulate,
    "transform": cmd_transform,
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
    "lift": cmd_lift,
}


####################################################################
# Argument parsing
####################################################################


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to the run YAML config.")
    common.add_argument("--seed", type=int, help="Master seed.")
    common.add_argument("--threads", type=int, help="Worker threads.")
    common.add_argument("--out-dir", help="Output folder.")
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"],
        help="Console log level.",
    )

    parser = argparse.ArgumentParser(
        prog="pareto-pipe",
        description=(
            "Simulate, fit and diagnose r-Pareto processes for spatial "
            "extremes."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser(
        "simulate", parents=[common], help="Simulate an episode ensemble."
    )
    sub.add_parser(
        "transform",
        parents=[common],
        help="Standardize the data to standard-Pareto margins.",
    )
    fit = sub.add_parser(
        "fit", parents=[common], help="Fit the variogram to exceedances."
    )
    fit.add_argument("--objective", choices=["loglik", "gradscore"])
    fit.add_argument(
        "--risk",
        choices=sorted(REGISTRY["risk_functional"]),
        help="Risk functional (with default parameters).",
    )
    fit.add_argument("--u", type=float, help="Risk threshold.")
    fit.add_argument("--init-beta", type=float)
    fit.add_argument("--init-alpha", type=float)
    fit.add_argument("--max-iters", type=int)
    sub.add_parser(
        "diagnose",
        parents=[common],
        help="Extremogram and POT-stability checks.",
    )
    sub.add_parser(
        "lift", parents=[common], help="Lift empirical episodes."
    )
    return parser.parse_args(argv)


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Flag values keyed by the config path they replace."""
    overrides: dict[str, Any] = {
        "general.seed": args.seed,
        "general.threads": args.threads,
        "general.out_dir": args.out_dir,
    }
    if args.command == "fit":
        overrides.update(
            {
                "fit.objective": args.objective,
                "fit.u": args.u,
                "fit.init_beta": args.init_beta,
                "fit.init_alpha": args.init_alpha,
                "fit.max_iters": args.max_iters,
            }
        )
        if args.risk is not None:
            overrides["risk"] = {"type": args.risk}
    return overrides


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    try:
        config = load_config(args.config, overrides_from_args(args))
        prepare_directories(config)
        configure_logging(config, args.command, args.log_level)
        logger.info(
            f"Running '{args.command}' with config hash "
            f"{config.config_hash()}, seed {config.general.seed}."
        )
        written = COMMANDS[args.command](config)
    except NumericalError as exc:
        logger.error(f"Numerical failure: {exc}")
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError) as exc:
        logger.error(f"Invalid configuration or input: {exc}")
        return EXIT_CONFIG

    for path in written:
        logger.success(f"Wrote {path}")
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
