# Author: gadwant
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from dualbound.errors import PreconditionError, ValidationError
from dualbound.projection.bounds import DualBounds
from dualbound.projection.cubes import (
    check_convergence,
    fcube_distance,
    project_onto_fcube,
    project_onto_scube,
)
from dualbound.transform.dft import forward_dft, inverse_dft
from dualbound.transform.types import ScalarField

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 1000
ENTRY_SLACK = 2.0**-20


@dataclass(frozen=True, eq=False)
class DenseEdits:
    """Cumulative displacements along the spatial and frequency bases."""

    spatial: npt.NDArray[np.float64]
    frequency: npt.NDArray[np.complex128]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(extent) for extent in self.spatial.shape)

    @property
    def active_spatial(self) -> int:
        return int(np.count_nonzero(self.spatial))

    @property
    def active_frequency(self) -> int:
        return int(np.count_nonzero(self.frequency))


@dataclass(frozen=True)
class ProjectionReport:
    iterations: int
    active_spatial: int
    active_frequency: int
    converged: bool
    residual_f: float
    residual_s: float
    wall_time: float
    distance_trace: tuple[float, ...] = ()
    excess_trace: tuple[float, ...] = ()

    def excess_increases(self) -> int:
        """How often max_excess grew between consecutive loop tops."""
        pairs = zip(self.excess_trace, self.excess_trace[1:])
        return sum(1 for before, after in pairs if after > before)

    def as_dict(self) -> dict[str, Any]:
        return {
            "iterations": self.iterations,
            "active_spatial": self.active_spatial,
            "active_frequency": self.active_frequency,
            "converged": self.converged,
            "residual_f": self.residual_f,
            "residual_s": self.residual_s,
            "wall_time": self.wall_time,
        }


def alternating_projection(
    epsilon0: ScalarField,
    bounds_working: DualBounds,
    max_iters: int = DEFAULT_MAX_ITERS,
    *,
    entry_slack: float = ENTRY_SLACK,
    workers: int | None = None,
) -> tuple[DenseEdits, ScalarField, ProjectionReport]:
    """Alternate f-cube and s-cube projections until the error spectrum is inside the f-cube.

    ``epsilon0`` must already sit in the s-cube up to ``entry_slack`` relative; samples inside that
    slack are clamped onto the bound and recorded as spatial edits. Running out of
    iterations is reported through ``ProjectionReport.converged``, never raised.
    """
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")

    started = time.perf_counter()
    dims = epsilon0.dims
    spatial_limit = bounds_working.spatial_limits(dims)
    admitted_limit = spatial_limit * (1.0 + entry_slack)

    epsilon = ScalarField(epsilon0.as_float64(), precision="f64")
    entry_excess = float(np.max(np.abs(epsilon.values) - admitted_limit))
    if entry_excess > 0:
        raise PreconditionError(
            "Initial error exceeds the spatial bound by "
            f"{entry_excess:.3e}; the base compressor did not honor its error bound"
        )

    # Points admitted past the working bound are pulled onto it up front.
    epsilon, spatial_edits = project_onto_scube(epsilon, bounds_working)
    frequency_edits = np.zeros(dims, dtype=np.complex128)
    distances: list[float] = []
    excesses: list[float] = []
    rounds = 0

    while True:
        delta = forward_dft(epsilon, workers=workers)
        check = check_convergence(delta, bounds_working)
        distances.append(fcube_distance(delta, bounds_working))
        excesses.append(check.max_excess)
        logger.debug(
            "round %d: %d frequency violations, max excess %.3e",
            rounds,
            check.violations,
            check.max_excess,
        )
        if len(excesses) > 1 and excesses[-1] > excesses[-2]:
            logger.debug("max excess grew to %.3e at round %d", check.max_excess, rounds)
        if check.satisfied or rounds >= max_iters:
            break

        clipped, displacement = project_onto_fcube(delta, bounds_working)
        frequency_edits += displacement
        epsilon, spatial_displacement = project_onto_scube(
            inverse_dft(clipped, workers=workers),
            bounds_working,
        )
        spatial_edits += spatial_displacement
        rounds += 1

    residual_s = max(float(np.max(np.abs(epsilon.values) - spatial_limit)), 0.0)
    edits = DenseEdits(spatial_edits, frequency_edits)
    report = ProjectionReport(
        # A run that is feasible on entry still counts its single check.
        iterations=max(rounds, 1),
        active_spatial=edits.active_spatial,
        active_frequency=edits.active_frequency,
        converged=check.satisfied,
        residual_f=check.max_excess,
        residual_s=residual_s,
        wall_time=time.perf_counter() - started,
        distance_trace=tuple(distances),
        excess_trace=tuple(excesses),
    )
    if not report.converged:
        logger.warning(
            "Alternating projection stopped after %d rounds without converging "
            "(residual_f=%.3e); raise max_iters to continue",
            rounds,
            report.residual_f,
        )
    return edits, epsilon, report
