# Author: gadwant
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from dualbound.cli import main
from dualbound.errors import (
    EXIT_FORMAT,
    EXIT_IO,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_VALIDATION,
)
from dualbound.transform.types import ScalarField


def _json_output(capsys: pytest.CaptureFixture[str]) -> dict:
    return json.loads(capsys.readouterr().out)


def _synth(tmp_path: Path, name: str = "orig.f64", dims: str = "16x16", *extra: str) -> Path:
    out = tmp_path / name
    exit_code = main(["synth", "--dims", dims, "--seed", "3", "--out", str(out), *extra])
    assert exit_code == EXIT_OK
    return out


def test_synth_writes_field_and_sidecar(tmp_path: Path, capsys) -> None:
    out = tmp_path / "field.f32"

    exit_code = main(
        [
            "synth",
            "--kind",
            "power-law",
            "--dims",
            "8x8x8",
            "--dtype",
            "f32",
            "--mean",
            "5",
            "--out",
            str(out),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    assert out.stat().st_size == 4 * 512
    assert (tmp_path / "field.f32.desc").read_text(encoding="utf-8").startswith("dims=8,8,8")
    payload = _json_output(capsys)
    assert payload["kind"] == "power-law"
    assert payload["dims"] == "8x8x8"


def test_correct_apply_verify_round_trip(tmp_path: Path, capsys) -> None:
    original = _synth(tmp_path)
    capsys.readouterr()
    decompressed = tmp_path / "dec.f64"
    archive = tmp_path / "edits.ffcz"
    corrected = tmp_path / "corrected.f64"
    report = tmp_path / "report.json"

    exit_code = main(
        [
            "correct",
            "--original",
            str(original),
            "--base",
            "quantizer",
            "--decompressed",
            str(decompressed),
            "--eps-rel",
            "0.1",
            "--delta-rel",
            "0.001",
            "--out",
            str(archive),
            "--corrected",
            str(corrected),
            "--report",
            str(report),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    payload = _json_output(capsys)
    assert payload["converged"] is True
    assert payload["verify"]["ok"] is True
    assert payload["payload_bytes"] == archive.stat().st_size
    assert json.loads(report.read_text(encoding="utf-8"))["archive"] == str(archive)

    applied = tmp_path / "applied.f64"
    exit_code = main(
        [
            "apply",
            "--archive",
            str(archive),
            "--decompressed",
            str(decompressed),
            "--out",
            str(applied),
            "--original",
            str(original),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    assert _json_output(capsys)["verify"]["ok"] is True
    assert applied.read_bytes() == corrected.read_bytes()

    exit_code = main(
        [
            "verify",
            "--original",
            str(original),
            "--corrected",
            str(applied),
            "--archive",
            str(archive),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    assert _json_output(capsys)["ok"] is True


def test_apply_can_narrow_its_output(tmp_path: Path) -> None:
    original = _synth(tmp_path)
    decompressed = tmp_path / "dec.f64"
    archive = tmp_path / "edits.ffcz"
    assert (
        main(
            [
                "correct",
                "--original",
                str(original),
                "--base",
                "quantizer",
                "--decompressed",
                str(decompressed),
                "--eps",
                "0.01",
                "--delta",
                "0.005",
                "--out",
                str(archive),
            ]
        )
        == EXIT_OK
    )
    out = tmp_path / "applied.f32"

    exit_code = main(
        [
            "apply",
            "--archive",
            str(archive),
            "--decompressed",
            str(decompressed),
            "--out",
            str(out),
            "--out-dtype",
            "f32",
        ]
    )

    assert exit_code == EXIT_OK
    assert out.stat().st_size == 4 * 256


def test_non_convergence_exits_with_code_two(tmp_path: Path, capsys, write_raw_field) -> None:
    original = write_raw_field(ScalarField(np.zeros(4)), "zeros.f64")
    decompressed = write_raw_field(ScalarField(np.array([1.0, 1.0, 0.0, 0.0])), "dec.f64")
    bound_map = ScalarField(np.array([1.0, 1.0, 1.0, 0.01]))
    eps_map = write_raw_field(bound_map, "eps.f64", sidecar=False)

    exit_code = main(
        [
            "correct",
            "--original",
            str(original),
            "--decompressed",
            str(decompressed),
            "--eps-map",
            str(eps_map),
            "--delta",
            "0.5",
            "--max-iters",
            "1",
            "--out",
            str(tmp_path / "edits.ffcz"),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_NOT_CONVERGED
    payload = _json_output(capsys)
    assert payload["converged"] is False
    assert payload["residual_f"] == pytest.approx(0.115, abs=1e-3)


def test_verify_fails_with_code_two_when_bounds_are_missed(capsys, write_raw_field) -> None:
    original = write_raw_field(ScalarField(np.zeros(8)), "a.f64")
    other = write_raw_field(ScalarField(np.full(8, 0.5)), "b.f64")

    exit_code = main(
        [
            "verify",
            "--original",
            str(original),
            "--corrected",
            str(other),
            "--eps",
            "0.1",
            "--delta",
            "100",
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_NOT_CONVERGED
    payload = _json_output(capsys)
    assert payload["ok"] is False
    assert payload["max_spatial_excess"] == pytest.approx(0.4)


def test_missing_bounds_exit_with_validation_code(tmp_path: Path) -> None:
    original = _synth(tmp_path)

    exit_code = main(
        ["correct", "--original", str(original), "--base", "quantizer", "--out", "x.ffcz"]
    )

    assert exit_code == EXIT_VALIDATION


def test_files_base_without_decompressed_is_a_validation_error(tmp_path: Path) -> None:
    original = _synth(tmp_path)

    exit_code = main(
        ["correct", "--original", str(original), "--eps", "0.1", "--delta", "1", "--out", "x"]
    )

    assert exit_code == EXIT_VALIDATION


def test_wrong_file_size_exits_with_io_code(tmp_path: Path) -> None:
    original = tmp_path / "short.bin"
    original.write_bytes(b"\x00" * 10)

    exit_code = main(
        [
            "metrics",
            "--original",
            str(original),
            "--reconstructed",
            str(original),
            "--dims",
            "4",
        ]
    )

    assert exit_code == EXIT_IO


def test_corrupt_archive_exits_with_format_code(tmp_path: Path) -> None:
    original = _synth(tmp_path)
    archive = tmp_path / "bad.ffcz"
    archive.write_bytes(b"FFCZ" + b"\x00" * 10)

    exit_code = main(
        ["apply", "--archive", str(archive), "--decompressed", str(original), "--out", "y"]
    )

    assert exit_code == EXIT_FORMAT


def test_unknown_subcommand_is_a_usage_error() -> None:
    with pytest.raises(SystemExit) as raised:
        main(["compress"])

    assert raised.value.code == 2


def test_metrics_report_infinite_psnr_for_identical_fields(tmp_path: Path, capsys) -> None:
    original = _synth(tmp_path)
    capsys.readouterr()
    table = tmp_path / "metrics.csv"

    exit_code = main(
        [
            "metrics",
            "--original",
            str(original),
            "--reconstructed",
            str(original),
            "--csv",
            str(table),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    payload = _json_output(capsys)
    assert payload["psnr"] == "inf"
    assert payload["max_spatial_error"] == 0.0
    with table.open(encoding="utf-8", newline="") as handle:
        rows = {row["metric"]: row["value"] for row in csv.DictReader(handle)}
    assert rows["ssnr"] == "inf"


def test_metrics_text_output_renders_a_table(tmp_path: Path, capsys) -> None:
    original = _synth(tmp_path)
    capsys.readouterr()

    exit_code = main(["metrics", "--original", str(original), "--reconstructed", str(original)])

    assert exit_code == EXIT_OK
    out = capsys.readouterr().out
    assert "psnr" in out
    assert "inf" in out


def test_spectrum_writes_ratio_columns(tmp_path: Path, capsys) -> None:
    original = _synth(tmp_path, "orig.f64", "8x8x8", "--mean", "3")
    other = _synth(tmp_path, "other.f64", "8x8x8", "--mean", "3", "--amplitude", "2")
    capsys.readouterr()
    table = tmp_path / "spectrum.csv"

    exit_code = main(
        [
            "spectrum",
            "--input",
            str(original),
            "--reconstructed",
            str(other),
            "--csv",
            str(table),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    payload = _json_output(capsys)
    assert payload["mean_fallback"] is False
    assert payload["reconstructed_mean_fallback"] is False
    rows = payload["rows"]
    assert rows[0]["k"] == 0
    with table.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        assert reader.fieldnames == ["k", "P_k", "count", "P_hat_k", "ratio", "mean_fallback"]
        shells = list(reader)
    assert int(shells[1]["count"]) > 0
    for shell in shells[1:]:
        expected = float(shell["P_hat_k"]) / float(shell["P_k"])
        assert float(shell["ratio"]) == pytest.approx(expected)
        assert float(shell["ratio"]) > 1.0


def test_bench_writes_three_rows(tmp_path: Path, capsys) -> None:
    original = _synth(tmp_path, "orig.f64", "8x8")
    capsys.readouterr()
    table = tmp_path / "bench.csv"

    exit_code = main(
        [
            "bench",
            "--original",
            str(original),
            "--eps-rel",
            "0.1",
            "--delta-rel",
            "0.01",
            "--csv",
            str(table),
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    rows = _json_output(capsys)["rows"]
    assert [row["leg"] for row in rows] == ["base", "tuned", "corrected"]
    with table.open(encoding="utf-8", newline="") as handle:
        assert len(list(csv.DictReader(handle))) == 3


def test_spectrum_flags_the_zero_mean_fallback(tmp_path: Path, capsys, write_raw_field) -> None:
    cosine = write_raw_field(ScalarField(np.cos(2 * np.pi * np.arange(8) / 8)), "cos.f64")
    table = tmp_path / "spectrum.csv"

    exit_code = main(["spectrum", "--input", str(cosine), "--csv", str(table), "--format", "json"])

    assert exit_code == EXIT_OK
    payload = _json_output(capsys)
    assert payload["mean_fallback"] is True
    assert "reconstructed_mean_fallback" not in payload
    with table.open(encoding="utf-8", newline="") as handle:
        shells = list(csv.DictReader(handle))
    assert {shell["mean_fallback"] for shell in shells} == {"True"}

    assert main(["spectrum", "--input", str(cosine)]) == EXIT_OK
    assert "mean_fallback=True" in capsys.readouterr().out


def _correct_args(original: Path, decompressed: Path, archive: Path, report: Path) -> list[str]:
    return [
        "correct",
        "--original",
        str(original),
        "--base",
        "quantizer",
        "--decompressed",
        str(decompressed),
        "--eps-rel",
        "0.1",
        "--delta-rel",
        "0.01",
        "--seed",
        "5",
        "--out",
        str(archive),
        "--report",
        str(report),
    ]


def test_identical_runs_write_identical_outputs(tmp_path: Path) -> None:
    original = _synth(tmp_path, "orig.f64", "12x10x6")
    outputs = []
    for run in ("a", "b"):
        archive = tmp_path / f"{run}.ffcz"
        report = tmp_path / f"{run}.json"
        table = tmp_path / f"{run}.csv"
        decompressed = tmp_path / f"{run}.dec.f64"
        assert main(_correct_args(original, decompressed, archive, report)) == EXIT_OK
        bench = [
            "bench",
            "--original",
            str(original),
            "--eps-rel",
            "0.1",
            "--delta-rel",
            "0.01",
            "--csv",
            str(table),
        ]
        assert main(bench) == EXIT_OK
        summary = json.loads(report.read_text(encoding="utf-8"))
        summary.pop("archive")
        summary.pop("wall_time")
        with table.open(encoding="utf-8", newline="") as handle:
            rows = [
                {key: value for key, value in row.items() if key != "wall_time"}
                for row in csv.DictReader(handle)
            ]
        outputs.append((archive.read_bytes(), decompressed.read_bytes(), summary, rows))

    assert outputs[0] == outputs[1]
    assert outputs[0][2]["seed"] == 5


def test_bench_accepts_an_external_base(tmp_path: Path, capsys) -> None:
    original = _synth(tmp_path, "orig.f64", "8x8")
    decompressed = tmp_path / "dec.f64"
    assert (
        main(
            [
                "correct",
                "--original",
                str(original),
                "--base",
                "quantizer",
                "--decompressed",
                str(decompressed),
                "--eps-rel",
                "0.1",
                "--delta-rel",
                "100",
                "--out",
                str(tmp_path / "unused.ffcz"),
            ]
        )
        == EXIT_OK
    )
    stream = tmp_path / "dec.sz"
    stream.write_bytes(b"\x01" * 77)
    capsys.readouterr()

    exit_code = main(
        [
            "bench",
            "--original",
            str(original),
            "--base",
            "files",
            "--decompressed",
            str(decompressed),
            "--compressed",
            str(stream),
            "--eps-rel",
            "0.1",
            "--delta-rel",
            "0.01",
            "--seed",
            "9",
            "--format",
            "json",
        ]
    )

    assert exit_code == EXIT_OK
    payload = _json_output(capsys)
    assert payload["base"] == "files"
    assert payload["seed"] == 9
    base, tuned, corrected = payload["rows"]
    assert base["payload_bytes"] == 77
    assert tuned["status"] == "skipped"
    assert corrected["payload_bytes"] > 77


def test_bench_files_base_needs_decompressed(tmp_path: Path) -> None:
    original = _synth(tmp_path)

    exit_code = main(
        ["bench", "--original", str(original), "--base", "files", "--eps", "0.1", "--delta", "1"]
    )

    assert exit_code == EXIT_VALIDATION
