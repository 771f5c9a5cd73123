# Author: gadwant
from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any, cast

from pydantic import ValidationError as PydanticValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from dualbound.adapters.base import (
    BaseCompressor,
    ExternalOutput,
    UniformQuantizer,
    file_pair_adapter,
)
from dualbound.adapters.synth import SYNTH_KINDS, synth_field
from dualbound.bench import BENCH_COLUMNS, run_bench
from dualbound.codec.apply import apply_edits, verify_bounds
from dualbound.codec.archive import read_archive
from dualbound.codec.compact import DEFAULT_CODE_BITS, dequantize_edit_set
from dualbound.config import BoundSpec, RunConfig, resolve_bounds
from dualbound.errors import (
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_VALIDATION,
    DualBoundError,
    ValidationError,
)
from dualbound.io.raw import (
    DatasetDescriptor,
    load_raw,
    parse_dims,
    resolve_descriptor,
    save_raw,
    sidecar_path,
)
from dualbound.io.reports import dumps_json, read_bytes, write_bytes, write_csv, write_json
from dualbound.metrics.quality import format_metric, quality_report
from dualbound.metrics.spectrum import power_spectrum, power_spectrum_ratio
from dualbound.pipeline import correct
from dualbound.projection.bounds import GlobalSpatialBound
from dualbound.projection.loop import DEFAULT_MAX_ITERS
from dualbound.transform.dft import forward_dft
from dualbound.transform.types import Precision, ScalarField

logger = logging.getLogger(__name__)

PRECISION_CHOICES = ("f32", "f64")


def _configure_logging(level: str) -> None:
    handler = RichHandler(console=Console(stderr=True), show_path=False, show_time=False)
    logging.basicConfig(level=level.upper(), format="%(message)s", handlers=[handler], force=True)


def _dims(args: argparse.Namespace) -> tuple[int, ...] | None:
    text: str | None = getattr(args, "dims", None)
    return parse_dims(text) if text else None


def _descriptor(
    path: Path,
    args: argparse.Namespace,
    *,
    like: DatasetDescriptor | None = None,
) -> DatasetDescriptor:
    """Flags win, then a sidecar, then the shape of a companion file."""
    dims = _dims(args)
    precision: Precision | None = getattr(args, "dtype", None)
    if like is not None and not sidecar_path(path).is_file():
        dims = dims or like.dims
        precision = precision or like.precision
    return resolve_descriptor(path, dims=dims, precision=precision)


def _bound_spec(args: argparse.Namespace) -> BoundSpec:
    return BoundSpec(
        eps=args.eps,
        eps_rel=args.eps_rel,
        eps_map=args.eps_map,
        delta=args.delta,
        delta_rel=args.delta_rel,
        rho=args.rho,
    )


def _flatten(payload: Mapping[str, Any], prefix: str = "") -> list[tuple[str, Any]]:
    rows: list[tuple[str, Any]] = []
    for key, value in payload.items():
        if isinstance(value, Mapping):
            rows.extend(_flatten(value, f"{prefix}{key}."))
        else:
            rows.append((f"{prefix}{key}", value))
    return rows


def _cell(value: Any) -> str:
    if isinstance(value, float):
        shown = format_metric(value)
        return shown if isinstance(shown, str) else f"{shown:.6g}"
    return "-" if value is None else str(value)


def _emit(payload: Mapping[str, Any], *, title: str, output_format: str) -> None:
    if output_format == "json":
        print(dumps_json(payload))
        return
    table = Table(title=title, show_header=False)
    table.add_column("key", style="bold")
    table.add_column("value")
    for key, value in _flatten(payload):
        table.add_row(key, _cell(value))
    Console(file=sys.stdout, width=120).print(table)


def _emit_rows(
    rows: list[dict[str, Any]],
    columns: tuple[str, ...],
    *,
    title: str,
    output_format: str,
    meta: Mapping[str, Any] | None = None,
) -> None:
    """Rows plus run-level fields; the fields become top-level JSON keys or the table caption."""
    meta = meta or {}
    if output_format == "json":
        print(dumps_json({**meta, "rows": rows}))
        return
    caption = ", ".join(f"{key}={_cell(value)}" for key, value in meta.items()) or None
    table = Table(title=title, caption=caption)
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*(_cell(row.get(column)) for column in columns))
    Console(file=sys.stdout, width=160).print(table)


def _cmd_correct(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="correct",
        original=args.original,
        decompressed=args.decompressed,
        dims=_dims(args),
        precision=args.dtype,
        bounds=_bound_spec(args),
        m=args.m,
        max_iters=args.max_iters,
        base=args.base,
        out=args.out,
        workers=args.workers,
        seed=args.seed,
    )
    original_descriptor = _descriptor(args.original, args)
    decompressed: ScalarField | None = None
    if config.base == "files" and config.decompressed is not None:
        decompressed_descriptor = _descriptor(
            config.decompressed, args, like=original_descriptor
        )
        original, decompressed = file_pair_adapter(original_descriptor, decompressed_descriptor)
    else:
        original = load_raw(original_descriptor)
    spectrum = forward_dft(original, workers=config.workers)
    bounds = resolve_bounds(_bound_spec(args), original, original_spectrum=spectrum)

    if decompressed is None:
        if not isinstance(bounds.spatial, GlobalSpatialBound):
            raise ValidationError("--base quantizer needs a global spatial bound (--eps/--eps-rel)")
        decompressed = UniformQuantizer().compress(original, bounds.spatial.value).decompressed
        if config.decompressed is not None:
            save_raw(decompressed, config.decompressed, sidecar=True)

    result = correct(
        original,
        decompressed,
        bounds,
        m=config.m,
        max_iters=config.max_iters,
        workers=config.workers,
    )
    write_bytes(result.archive_bytes, args.out)
    if args.corrected is not None:
        save_raw(result.corrected, args.corrected, precision=args.out_dtype, sidecar=True)

    payload = result.as_dict()
    payload["archive"] = str(args.out)
    payload["seed"] = config.seed
    if args.report is not None:
        write_json(payload, args.report)
    _emit(payload, title="correction", output_format=args.format)

    if not result.report.converged:
        logger.warning("Not converged; the archive is flagged converged=false")
        return EXIT_NOT_CONVERGED
    if not result.check.ok:
        logger.warning("Corrected field misses the bounds after quantization")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _archive_descriptor(
    path: Path,
    args: argparse.Namespace,
    dims: tuple[int, ...],
    precision: Precision,
) -> DatasetDescriptor:
    like = DatasetDescriptor(path=path, dims=dims, precision=precision)
    return _descriptor(path, args, like=like)


def _cmd_apply(args: argparse.Namespace) -> int:
    archive = read_archive(read_bytes(args.archive))
    decompressed = load_raw(
        _archive_descriptor(args.decompressed, args, archive.dims, archive.precision)
    )
    edits = dequantize_edit_set(archive.edits, archive.params)
    corrected = apply_edits(decompressed, edits)
    save_raw(corrected, args.out, precision=args.out_dtype, sidecar=True)

    payload: dict[str, Any] = {
        "dims": "x".join(str(extent) for extent in archive.dims),
        "converged": archive.converged,
        "active_spatial": edits.active_spatial,
        "active_frequency": edits.active_frequency,
        "escapes": len(archive.edits.escapes),
        "out": str(args.out),
    }
    passed = archive.converged
    if args.original is not None:
        original = load_raw(
            _archive_descriptor(args.original, args, archive.dims, archive.precision)
        )
        check = verify_bounds(original, corrected, archive.bounds)
        payload["verify"] = check.as_dict()
        passed = passed and check.ok
    _emit(payload, title="apply", output_format=args.format)
    return EXIT_OK if passed else EXIT_NOT_CONVERGED


def _cmd_verify(args: argparse.Namespace) -> int:
    original_descriptor = _descriptor(args.original, args)
    original = load_raw(original_descriptor)
    corrected = load_raw(_descriptor(args.corrected, args, like=original_descriptor))
    if args.archive is not None:
        bounds = read_archive(read_bytes(args.archive)).bounds
    else:
        bounds = resolve_bounds(_bound_spec(args), original)
    check = verify_bounds(original, corrected, bounds)
    _emit(check.as_dict(), title="verify", output_format=args.format)
    return EXIT_OK if check.ok else EXIT_NOT_CONVERGED


def _cmd_metrics(args: argparse.Namespace) -> int:
    original_descriptor = _descriptor(args.original, args)
    original = load_raw(original_descriptor)
    reconstructed = load_raw(_descriptor(args.reconstructed, args, like=original_descriptor))
    payload = quality_report(original, reconstructed).as_dict()
    if args.csv is not None:
        write_csv(
            [{"metric": key, "value": value} for key, value in payload.items()],
            ("metric", "value"),
            args.csv,
        )
    _emit(payload, title="metrics", output_format=args.format)
    return EXIT_OK


def _cmd_spectrum(args: argparse.Namespace) -> int:
    descriptor = _descriptor(args.input, args)
    reference = power_spectrum(load_raw(descriptor))
    rows = reference.rows()
    columns: tuple[str, ...] = ("k", "P_k", "count")
    meta: dict[str, Any] = {"mean_fallback": reference.mean_fallback}
    if args.reconstructed is not None:
        other = power_spectrum(load_raw(_descriptor(args.reconstructed, args, like=descriptor)))
        ratio = power_spectrum_ratio(reference, other)
        for row, power, value in zip(rows, other.power, ratio):
            row["P_hat_k"] = float(power)
            row["ratio"] = float(value)
        columns = (*columns, "P_hat_k", "ratio")
        meta["reconstructed_mean_fallback"] = other.mean_fallback
    if reference.mean_fallback:
        logger.info("Mean is numerically zero; spectrum uses x - mean without division")
    # Repeated per row so the CSV alone says how P(k) was normalized.
    for row in rows:
        row["mean_fallback"] = reference.mean_fallback
    columns = (*columns, "mean_fallback")
    if args.csv is not None:
        write_csv(rows, columns, args.csv)
    _emit_rows(rows, columns, title="power spectrum", output_format=args.format, meta=meta)
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    dims = _dims(args)
    if dims is None:
        raise ValidationError("synth needs --dims")
    field = synth_field(
        args.kind,
        dims,
        args.seed,
        alpha=args.alpha,
        k0=args.k0,
        amplitude=args.amplitude,
        mean=args.mean,
        precision=args.dtype or "f64",
    )
    descriptor = save_raw(field, args.out, sidecar=True)
    payload = {
        "kind": args.kind,
        "dims": "x".join(str(extent) for extent in descriptor.dims),
        "dtype": descriptor.precision,
        "seed": args.seed,
        "out": str(args.out),
    }
    _emit(payload, title="synth", output_format=args.format)
    return EXIT_OK


def _bench_base(
    args: argparse.Namespace,
    config: RunConfig,
) -> tuple[ScalarField, BaseCompressor]:
    original_descriptor = _descriptor(args.original, args)
    if config.base == "quantizer" or config.decompressed is None:
        return load_raw(original_descriptor), UniformQuantizer()
    decompressed_descriptor = _descriptor(config.decompressed, args, like=original_descriptor)
    original, decompressed = file_pair_adapter(original_descriptor, decompressed_descriptor)
    if args.compressed is not None:
        payload_bytes = len(read_bytes(args.compressed))
    else:
        payload_bytes = decompressed.nbytes
        logger.warning("No --compressed stream given; the base payload is the raw field size")
    return original, ExternalOutput(decompressed, payload_bytes)


def _cmd_bench(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="bench",
        original=args.original,
        decompressed=args.decompressed,
        dims=_dims(args),
        precision=args.dtype,
        bounds=_bound_spec(args),
        m=args.m,
        max_iters=args.max_iters,
        shrink_factor=args.shrink_factor,
        base=args.base,
        seed=args.seed,
    )
    original, base = _bench_base(args, config)
    bounds = resolve_bounds(_bound_spec(args), original)
    rows = run_bench(
        original,
        bounds,
        base,
        m=config.m,
        max_iters=config.max_iters,
        shrink_factor=config.shrink_factor,
    )
    payload_rows = [row.as_dict() for row in rows]
    if args.csv is not None:
        write_csv(payload_rows, BENCH_COLUMNS, args.csv)
    _emit_rows(
        payload_rows,
        BENCH_COLUMNS,
        title="bench",
        output_format=args.format,
        meta={"base": base.name, "seed": config.seed},
    )
    return EXIT_OK

def _add_field_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dims", default=None, help="Extents, e.g. 64x64x64 or 64,64,64.")
    parser.add_argument("--dtype", choices=PRECISION_CHOICES, default=None)


def _add_bound_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eps", type=float, default=None, help="Absolute spatial bound E.")
    parser.add_argument(
        "--eps-rel", type=float, default=None, help="Spatial bound in percent of value range."
    )
    parser.add_argument(
        "--eps-map", type=Path, default=None, help="Raw f64 file of per-point bounds E_n."
    )
    parser.add_argument("--delta", type=float, default=None, help="Absolute frequency bound.")
    parser.add_argument(
        "--delta-rel", type=float, default=None, help="Frequency bound in percent of max |X_k|."
    )
    parser.add_argument(
        "--rho", type=float, default=None, help="Relative power-spectrum tolerance per shell."
    )


def _add_format_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualbound",
        description="Enforce spatial and frequency error bounds on lossy-compressed fields.",
    )
    parser.add_argument(
        "--log-level",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        default="WARNING",
        type=str.upper,
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    correct_cmd = subparsers.add_parser(
        "correct", help="Compute the edits archive for an original/decompressed pair."
    )
    correct_cmd.add_argument("--original", type=Path, required=True)
    correct_cmd.add_argument("--decompressed", type=Path, default=None)
    correct_cmd.add_argument("--base", choices=("quantizer", "files"), default="files")
    correct_cmd.add_argument("--out", type=Path, required=True, help="Archive path.")
    correct_cmd.add_argument("--corrected", type=Path, default=None)
    correct_cmd.add_argument("--out-dtype", choices=PRECISION_CHOICES, default="f64")
    correct_cmd.add_argument("--report", type=Path, default=None)
    correct_cmd.add_argument("--m", type=int, default=DEFAULT_CODE_BITS)
    correct_cmd.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    correct_cmd.add_argument("--workers", type=int, default=None)
    correct_cmd.add_argument("--seed", type=int, default=0, help="Recorded in the report.")
    _add_field_args(correct_cmd)
    _add_bound_args(correct_cmd)
    _add_format_arg(correct_cmd)
    correct_cmd.set_defaults(_handler=_cmd_correct)

    apply_cmd = subparsers.add_parser("apply", help="Apply an edits archive to a field.")
    apply_cmd.add_argument("--archive", type=Path, required=True)
    apply_cmd.add_argument("--decompressed", type=Path, required=True)
    apply_cmd.add_argument("--out", type=Path, required=True)
    apply_cmd.add_argument("--out-dtype", choices=PRECISION_CHOICES, default="f64")
    apply_cmd.add_argument("--original", type=Path, default=None)
    _add_field_args(apply_cmd)
    _add_format_arg(apply_cmd)
    apply_cmd.set_defaults(_handler=_cmd_apply)

    verify_cmd = subparsers.add_parser("verify", help="Check a corrected field against bounds.")
    verify_cmd.add_argument("--original", type=Path, required=True)
    verify_cmd.add_argument("--corrected", type=Path, required=True)
    verify_cmd.add_argument("--archive", type=Path, default=None)
    _add_field_args(verify_cmd)
    _add_bound_args(verify_cmd)
    _add_format_arg(verify_cmd)
    verify_cmd.set_defaults(_handler=_cmd_verify)

    metrics_cmd = subparsers.add_parser("metrics", help="PSNR, SSNR, max errors, max RFE.")
    metrics_cmd.add_argument("--original", type=Path, required=True)
    metrics_cmd.add_argument("--reconstructed", type=Path, required=True)
    metrics_cmd.add_argument("--csv", type=Path, default=None)
    _add_field_args(metrics_cmd)
    _add_format_arg(metrics_cmd)
    metrics_cmd.set_defaults(_handler=_cmd_metrics)

    spectrum_cmd = subparsers.add_parser("spectrum", help="Radial power spectrum P(k).")
    spectrum_cmd.add_argument("--input", type=Path, required=True)
    spectrum_cmd.add_argument("--reconstructed", type=Path, default=None)
    spectrum_cmd.add_argument("--csv", type=Path, default=None)
    _add_field_args(spectrum_cmd)
    _add_format_arg(spectrum_cmd)
    spectrum_cmd.set_defaults(_handler=_cmd_spectrum)

    synth_cmd = subparsers.add_parser("synth", help="Write a seeded synthetic field.")
    synth_cmd.add_argument("--kind", choices=SYNTH_KINDS, default="white-noise")
    synth_cmd.add_argument("--seed", type=int, default=0)
    synth_cmd.add_argument("--alpha", type=float, default=2.0)
    synth_cmd.add_argument("--k0", type=float, default=4.0)
    synth_cmd.add_argument("--amplitude", type=float, default=1.0)
    synth_cmd.add_argument("--mean", type=float, default=0.0)
    synth_cmd.add_argument("--out", type=Path, required=True)
    _add_field_args(synth_cmd)
    _add_format_arg(synth_cmd)
    synth_cmd.set_defaults(_handler=_cmd_synth)

    bench_cmd = subparsers.add_parser(
        "bench", help="Compare base, trial-and-error tuning, and base plus correction."
    )
    bench_cmd.add_argument("--original", type=Path, required=True)
    bench_cmd.add_argument("--base", choices=("quantizer", "files"), default="quantizer")
    bench_cmd.add_argument("--decompressed", type=Path, default=None)
    bench_cmd.add_argument(
        "--compressed", type=Path, default=None, help="External compressed stream, for its size."
    )
    bench_cmd.add_argument("--seed", type=int, default=0, help="Recorded in the output.")
    bench_cmd.add_argument("--m", type=int, default=DEFAULT_CODE_BITS)
    bench_cmd.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    bench_cmd.add_argument("--shrink-factor", type=float, default=0.5)
    bench_cmd.add_argument("--csv", type=Path, default=None)
    _add_field_args(bench_cmd)
    _add_bound_args(bench_cmd)
    _add_format_arg(bench_cmd)
    bench_cmd.set_defaults(_handler=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    handler = args._handler
    if not callable(handler):
        raise TypeError("Invalid command handler")
    typed_handler = cast(Callable[[argparse.Namespace], int], handler)
    try:
        return typed_handler(args)
    except DualBoundError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except PydanticValidationError as exc:
        logger.error("Invalid configuration: %s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
