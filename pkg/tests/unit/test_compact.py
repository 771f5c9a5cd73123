# Author: gadwant
from __future__ import annotations

import numpy as np
import pytest

from dualbound.codec.compact import (
    INDEX_LIMIT,
    EditSet,
    EscapeList,
    QuantizationParams,
    compact_edits,
    dequantize_edit_set,
    dequantize_edits,
    quantize_edit_set,
    quantize_edits,
)
from dualbound.errors import ValidationError
from dualbound.projection.bounds import DualBounds
from dualbound.projection.loop import DenseEdits

STEP_16 = 2.0 / 65536


def test_compact_edits_keeps_nonzero_entries_in_index_order() -> None:
    flags, values = compact_edits(np.array([0.0, 0.0, 3.0, 0.0, -1.0]))

    assert flags.tolist() == [False, False, True, False, True]
    assert values.tolist() == [3.0, -1.0]


def test_compact_edits_handles_all_zero_and_complex_input() -> None:
    flags, values = compact_edits(np.zeros(4))
    assert not flags.any()
    assert values.size == 0

    flags, values = compact_edits(np.array([0, 2 - 1j]))
    assert flags.tolist() == [False, True]
    assert values.tolist() == [2 - 1j]


def test_quantize_exact_multiple_of_step() -> None:
    indices, overflow = quantize_edits(np.array([0.5, 0.0]), STEP_16)

    assert indices.tolist() == [16384, 0]
    assert not overflow.any()
    assert dequantize_edits(indices, STEP_16).tolist() == [0.5, 0.0]


def test_quantize_error_is_at_most_half_a_step() -> None:
    indices, _ = quantize_edits(np.array([-3.1 * STEP_16]), STEP_16)

    assert indices.tolist() == [-3]
    reconstructed = dequantize_edits(indices, STEP_16)
    assert abs(reconstructed[0] + 3.1 * STEP_16) <= STEP_16 / 2


def test_quantize_rounds_half_away_from_zero() -> None:
    indices, _ = quantize_edits(np.array([2.5, -2.5, 0.5]), 1.0)

    assert indices.tolist() == [3, -3, 1]


def test_quantize_complex_lanes_use_their_own_steps() -> None:
    indices, overflow = quantize_edits(np.array([1.0 - 2.0j]), 0.5, 1.0)

    assert indices.tolist() == [[2, -2]]
    assert not overflow.any()
    assert dequantize_edits(indices, 0.5, 1.0).tolist() == [1.0 - 2.0j]


def test_quantize_flags_indices_past_32_bits_as_escapes() -> None:
    indices, overflow = quantize_edits(np.array([1.0, (INDEX_LIMIT + 1) * 1.0]), 1.0)

    assert overflow.tolist() == [False, True]
    assert indices.tolist() == [1, 0]


def test_quantize_rejects_non_finite_values() -> None:
    with pytest.raises(ValidationError):
        quantize_edits(np.array([np.inf]), 1.0)


def test_params_derive_steps_from_bounds() -> None:
    params = QuantizationParams.from_bounds(DualBounds.uniform(1.0, 4.0), (8,), m=16)

    assert float(params.step_spatial) == STEP_16
    assert float(params.step_freq_re) == 4.0 * STEP_16
    with pytest.raises(ValidationError):
        QuantizationParams.from_bounds(DualBounds.uniform(1.0, 4.0), (8,), m=0)


def test_edit_set_stores_frequency_edits_on_the_half_spectrum() -> None:
    frequency = np.zeros(6, dtype=np.complex128)
    frequency[1] = 1 + 1j
    frequency[5] = 1 - 1j
    dense = DenseEdits(np.array([0.0, 0.25, 0, 0, 0, 0]), frequency)

    edits = EditSet.from_dense(dense)

    assert edits.active_spatial == 1
    assert edits.active_frequency == 1
    assert edits.frequency_flags.shape == (4,)
    assert edits.dense_frequency_half()[1] == 1 + 1j


def test_edit_set_rejects_inconsistent_flags() -> None:
    with pytest.raises(ValidationError, match="popcount"):
        EditSet((2,), np.array([True, True]), np.array([1.0]), np.zeros(2, bool), np.zeros(0))
    with pytest.raises(ValidationError, match="Zero edits"):
        EditSet((2,), np.array([True, False]), np.array([0.0]), np.zeros(2, bool), np.zeros(0))


def test_escape_list_is_sorted_by_index() -> None:
    escapes = EscapeList(np.array([9, 2], dtype=np.uint64), np.array([[1.0, 0.0], [2.0, 3.0]]))

    assert escapes.indices.tolist() == [2, 9]
    assert escapes.values.tolist() == [[2.0, 3.0], [1.0, 0.0]]
    assert len(EscapeList(np.zeros(0, dtype=np.uint64), np.zeros((0, 2)))) == 0


def test_entries_rounding_to_zero_lose_their_flag() -> None:
    params = QuantizationParams.from_bounds(DualBounds.uniform(1.0, 1.0), (4,), m=4)
    edits = EditSet.from_dense_arrays(
        (4,),
        np.array([1e-6, 0.5, 0.0, 0.0]),
        np.array([1e-6 + 0j, 0.0, 0.0]),
    )

    quantized = quantize_edit_set(edits, params)

    assert quantized.spatial_flags.tolist() == [False, True, False, False]
    assert quantized.spatial_indices.tolist() == [4]
    assert quantized.active_frequency == 0


def test_forced_escapes_keep_full_precision() -> None:
    params = QuantizationParams.from_bounds(DualBounds.uniform(1.0, 1.0), (4,), m=4)
    edits = EditSet.from_dense_arrays(
        (4,),
        np.array([0.3, 0.0, 0.0, 0.0]),
        np.array([0.0, 0.1 + 0.2j, 0.0]),
    )

    quantized = quantize_edit_set(
        edits,
        params,
        escape_spatial=np.array([True, False, False, False]),
        escape_frequency=np.array([False, True, False]),
    )

    assert quantized.escapes.indices.tolist() == [0, 5]
    assert quantized.escapes.values.tolist() == [[0.3, 0.0], [0.1, 0.2]]
    assert quantized.spatial_indices.tolist() == [0]
    assert quantized.frequency_indices.tolist() == [[0, 0]]

    restored = dequantize_edit_set(quantized, params)
    np.testing.assert_array_equal(restored.dense_spatial(), edits.dense_spatial())
    np.testing.assert_array_equal(restored.dense_frequency_half(), edits.dense_frequency_half())


def test_quantization_error_per_lane_is_bounded(make_field) -> None:
    bounds = DualBounds.uniform(0.5, 2.0)
    params = QuantizationParams.from_bounds(bounds, (16,), m=16)
    spatial = make_field((16,), seed=3, scale=0.2).as_float64()
    frequency = make_field((9,), seed=4).as_float64() + 1j * make_field((9,), seed=5).as_float64()
    edits = EditSet.from_dense_arrays((16,), spatial, frequency)

    restored = dequantize_edit_set(quantize_edit_set(edits, params), params)

    spatial_error = np.abs(restored.dense_spatial() - edits.dense_spatial())
    frequency_error = restored.dense_frequency_half() - edits.dense_frequency_half()
    assert np.max(spatial_error) <= 0.5 * 2.0**-16
    assert np.max(np.abs(frequency_error.real)) <= 2.0 * 2.0**-16
    assert np.max(np.abs(frequency_error.imag)) <= 2.0 * 2.0**-16
