"""Command line front end: bound queries, construction, verification,
simulation, sweeps and table reproduction.

Artifacts go to stdout (or --output), logs and structured errors to stderr.
Exit status is 0 on success, 1 on domain errors and 2 on usage errors.
"""
import functools
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
import pandas as pd
from pydantic import ValidationError

from pcgmum import __version__
from pcgmum.models.schemas import DirectionSet, MumConfig, PhysicalScale
from pcgmum.services import analysis, cvsim
from pcgmum.services.mum_config import (
    build_symmetric,
    from_directions,
    round_to_pixels,
    to_physical,
    verify_config,
)
from pcgmum.services.numtheory import classify_dimension, find_max_family, r_max, smallest_prime_factor
from pcgmum.settings import configure_logging, get_settings
from pcgmum.utils.errors import PcgError
from pcgmum.utils.helpers import csv_comment_lines, metadata_header, parse_int_list


def handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PcgError as e:
            click.echo(json.dumps(e.to_dict()), err=True)
            sys.exit(1)
    return wrapper


def physical_options(command):
    settings = get_settings()
    command = click.option("--pixel-pitch-um", type=float, default=settings.pixel_pitch_um,
                           show_default=True, help="SLM pixel pitch")(command)
    command = click.option("--lens-spacing-m", type=float, default=settings.lens_spacing_m,
                           show_default=True, help="Lens distance z")(command)
    command = click.option("--wavelength-nm", type=float, default=settings.wavelength_nm,
                           show_default=True, help="Laser wavelength")(command)
    return command


def output_options(command):
    command = click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
                           help="Write the artifact here instead of stdout")(command)
    command = click.option("--json", "as_json", is_flag=True, help="Shortcut for --format json")(command)
    command = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                           show_default=True)(command)
    return command


def make_scale(wavelength_nm: float, lens_spacing_m: float, pixel_pitch_um: float) -> PhysicalScale:
    return PhysicalScale(
        wavelength=wavelength_nm * 1e-9,
        lens_spacing=lens_spacing_m,
        pixel_pitch=pixel_pitch_um * 1e-6
    )


def load_config(source) -> MumConfig:
    try:
        return MumConfig.model_validate_json(source.read())
    except ValidationError as e:
        raise click.BadParameter(f"not a valid configuration: {e.errors()[0]['msg']}", param_hint="--config")


def load_directions(source) -> MumConfig:
    try:
        directions = DirectionSet.model_validate_json(source.read())
    except ValidationError as e:
        raise click.BadParameter(f"not a valid direction set: {e.errors()[0]['msg']}", param_hint="--directions")
    return from_directions(directions.d, directions.angles, directions.periods, directions.offsets)


def emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


def emit_json(payload: Dict[str, Any], metadata: Dict[str, Any], output: Optional[str]) -> None:
    emit(json.dumps({**payload, "metadata": metadata}, indent=2) + "\n", output)


def emit_csv(frame: pd.DataFrame, metadata: Dict[str, Any], output: Optional[str]) -> None:
    emit(csv_comment_lines(metadata) + frame.to_csv(index=False, float_format="%.10g"), output)


def wants_json(fmt: str, as_json: bool) -> bool:
    return as_json or fmt == "json"


@click.group()
@click.version_option(__version__, prog_name="pcgmum")
@click.option("--log-level", default=None, help="Overrides PCG_LOG_LEVEL")
def cli(log_level):
    """Periodic coarse-grained mutually unbiased measurement toolkit"""
    configure_logging(log_level, stream=sys.stderr)


@cli.command()
@click.option("--d", type=int, required=True, help="Dimensionality parameter")
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def rmax(d, as_json):
    """Largest number of mutually unbiased PCG measurements for d"""
    bound = r_max(d)
    if as_json:
        dimension = classify_dimension(d)
        emit_json({"d": d, "smallest_prime_factor": smallest_prime_factor(d), "r_max": bound,
                   "kind": dimension["kind"], "behaviour": dimension["behaviour"]},
                  metadata_header(), None)
    else:
        click.echo(bound)


@cli.command()
@click.option("--d", type=int, required=True)
@click.option("--m-bound", type=int, default=8, show_default=True)
@click.option("--unpruned", is_flag=True, help="Enumerate without congruence-class pruning")
@click.option("--max-nodes", type=int, default=None, help="Overrides PCG_SEARCH_MAX_NODES")
@output_options
@handle_errors
def search(d, m_bound, unpruned, max_nodes, fmt, as_json, output):
    """Brute-force the largest consistent multiplier family"""
    witness = find_max_family(
        d, m_bound, pruned=not unpruned, max_nodes=max_nodes or get_settings().search_max_nodes
    )
    payload = {"d": d, "m_bound": m_bound, "r_max": r_max(d), "r_found": witness.R,
               "nodes": witness.nodes, "pruned": witness.pruned}
    if wants_json(fmt, as_json):
        payload["matrix"] = witness.matrix.m if witness.matrix else None
        emit_json(payload, metadata_header(), output)
    else:
        emit_csv(pd.DataFrame([payload]), metadata_header(), output)


@cli.command()
@click.option("--d", type=int, required=True)
@click.option("--Q", "Q", default="1", show_default=True, help="Rational tan^2(theta), e.g. 1 or 1/3")
@click.option("--R", "R", type=int, required=True, help="Number of measurement directions")
@click.option("--mcol", required=True, help="m_10 .. m_(R-1)0, comma separated")
@click.option("--round", "round_pixels", is_flag=True,
              help="Also report periods rounded to whole-pixel bins and their residuals")
@physical_options
@output_options
@handle_errors
def construct(d, Q, R, mcol, round_pixels, wavelength_nm, lens_spacing_m, pixel_pitch_um, fmt, as_json, output):
    """Build and verify a symmetric configuration"""
    config = build_symmetric(d, Q, R, parse_int_list(mcol))
    scale = make_scale(wavelength_nm, lens_spacing_m, pixel_pitch_um)
    periods_px = to_physical(config, scale)
    metadata = metadata_header(config)
    pixels, report = round_to_pixels(config, scale) if round_pixels else (None, None)
    if wants_json(fmt, as_json):
        payload = config.model_dump(mode="json", by_alias=True)
        payload["periods_px"] = periods_px
        if round_pixels:
            payload["pixels"] = pixels
            payload["rounded_report"] = report.model_dump(mode="json", by_alias=True)
        emit_json(payload, metadata, output)
    else:
        frame = pd.DataFrame({
            "j": range(config.R),
            "angle": config.angles,
            "period": config.periods,
            "period_px": periods_px,
            "offset": config.offsets,
            "m_j0": [None] + [row[0] for row in config.m_matrix.m[1:]],
        })
        if round_pixels:
            frame["pixels"] = pixels
            metadata.update(
                rounded_passed=report.passed,
                rounded_max_residual=f"{max(pair.residual for pair in report.pairs):.6g}"
            )
        emit_csv(frame, metadata, output)


@cli.command()
@click.option("--config", "config_file", type=click.File("r"), default=None, help="Config JSON ('-' for stdin)")
@click.option("--directions", "directions_file", type=click.File("r"), default=None,
              help="Raw directions JSON (d, angles, periods, offsets); m is inferred")
@click.option("--rel-tol", type=float, default=1e-9, show_default=True)
@output_options
@handle_errors
def verify(config_file, directions_file, rel_tol, fmt, as_json, output):
    """Check every pair of a configuration against the period relation"""
    if (config_file is None) == (directions_file is None):
        raise click.UsageError("give exactly one of --config or --directions")
    config = load_config(config_file) if config_file else load_directions(directions_file)
    report = verify_config(config, rel_tol=rel_tol)
    metadata = metadata_header(config)
    if wants_json(fmt, as_json):
        emit_json(report.model_dump(mode="json", by_alias=True), metadata, output)
    else:
        emit_csv(pd.DataFrame([pair.model_dump() for pair in report.pairs]), metadata, output)


@cli.command()
@click.option("--config", "config_file", type=click.File("r"), required=True)
@click.option("--j", type=int, required=True, help="Preparation direction")
@click.option("--u", type=int, default=0, show_default=True, help="Prepared outcome")
@click.option("--k", type=int, required=True, help="Measured direction")
@click.option("--grid-size", type=int, default=None, help="Overrides PCG_GRID_SIZE")
@click.option("--beam-width", type=float, default=analysis.TABLE_BEAM_WIDTH, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True, help="Background leaving the prepared outcome")
@click.option("--state-csv", type=click.Path(dir_okay=False), default=None, help="Also write the prepared state")
@click.option("--probs-json", type=click.Path(dir_okay=False), default=None,
              help="Also write the distribution as a JSON array")
@click.option("--convergence", default=None,
              help="Grid sizes, comma separated; emits the max |p - 1/d| curve instead")
@output_options
@handle_errors
def simulate(config_file, j, u, k, grid_size, beam_width, noise, state_csv, probs_json, convergence,
             fmt, as_json, output):
    """Prepare (j, u) and measure direction k"""
    config = load_config(config_file)
    if convergence:
        sizes = parse_int_list(convergence)
        deviations = analysis.convergence_study(config, j, k, sizes=sizes, beam_width=beam_width, u=u)
        metadata = metadata_header(config, max(sizes))
        if wants_json(fmt, as_json):
            points = [{"grid_size": n, "max_deviation": value} for n, value in deviations.items()]
            emit_json({"j": j, "u": u, "k": k, "convergence": points}, metadata, output)
        else:
            emit_csv(analysis.convergence_frame(deviations), metadata, output)
        return

    grid = cvsim.default_grid(grid_size)
    prepared = cvsim.prepare(cvsim.gaussian_state(grid, beam_width), config, j, u)
    if state_csv:
        cvsim.export_state_csv(prepared, state_csv)
    dist = cvsim.measure_probs(prepared, config, j, k)
    if noise:
        dist = analysis.apply_background(dist, analysis.leak_to_mixing(noise, config.d))
    if probs_json:
        Path(probs_json).write_text(cvsim.distribution_json(dist) + "\n")
    metadata = metadata_header(config, grid.n)
    if wants_json(fmt, as_json):
        payload = dist.model_dump(mode="json", by_alias=True)
        payload.update(entropy_bits=analysis.shannon_entropy(dist), kl_bits=analysis.kl_uniform(dist))
        emit_json(payload, metadata, output)
    else:
        emit_csv(pd.DataFrame({"outcome": range(dist.d), "probability": dist.probs}), metadata, output)


@cli.command()
@click.option("--config", "config_file", type=click.File("r"), required=True)
@click.option("--j", type=int, required=True)
@click.option("--u", type=int, default=0, show_default=True)
@click.option("--k", type=int, required=True)
@click.option("--start-px", type=float, default=20.0, show_default=True)
@click.option("--stop-px", type=float, default=200.0, show_default=True)
@click.option("--step-px", type=float, default=1.0, show_default=True)
@click.option("--grid-size", type=int, default=None)
@click.option("--beam-width", type=float, default=None, help="Defaults to the PCG_BEAM_RADIUS_MM beam")
@physical_options
@output_options
@handle_errors
def sweep(config_file, j, u, k, start_px, stop_px, step_px, grid_size, beam_width,
          wavelength_nm, lens_spacing_m, pixel_pitch_um, fmt, as_json, output):
    """Entropy of measurement k versus its physical period"""
    config = load_config(config_file)
    grid = cvsim.default_grid(grid_size)
    result = analysis.entropy_sweep(
        config, j, k, u=u, start_px=start_px, stop_px=stop_px, step_px=step_px,
        scale=make_scale(wavelength_nm, lens_spacing_m, pixel_pitch_um),
        grid=grid, beam_width=beam_width
    )
    metadata = metadata_header(config, grid.n)
    if wants_json(fmt, as_json):
        emit_json(result.model_dump(mode="json", by_alias=True), metadata, output)
    else:
        emit_csv(analysis.sweep_frame(result), metadata, output)


@cli.command()
@click.option("--config", "config_file", type=click.File("r"), required=True)
@click.option("--noise", type=float, default=0.02, show_default=True, help="Background leaving the prepared outcome")
@click.option("--outcome", type=int, default=0, show_default=True)
@click.option("--grid-size", type=int, default=None)
@click.option("--beam-width", type=float, default=analysis.TABLE_BEAM_WIDTH, show_default=True)
@click.option("--sensitivity", is_flag=True, help="Add the entropy spread over every prepared outcome")
@output_options
@handle_errors
def tables(config_file, noise, outcome, grid_size, beam_width, sensitivity, fmt, as_json, output):
    """Entropy and KL tables over every preparation / measurement pair"""
    config = load_config(config_file)
    grid = cvsim.default_grid(grid_size)
    result = analysis.reproduce_tables(config, noise_fraction=noise, grid=grid, beam_width=beam_width,
                                       outcome=outcome, sensitivity=sensitivity)
    metadata = metadata_header(config, grid.n)
    if wants_json(fmt, as_json):
        emit_json(result.model_dump(mode="json", by_alias=True), metadata, output)
    else:
        emit_csv(analysis.tables_frame(result), metadata, output)


def main():
    cli()


if __name__ == "__main__":
    main()
