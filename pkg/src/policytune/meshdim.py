"""Box-counting (mesh) dimension of trajectory state clouds, plus the two
dimension-shaped returns.

A cloud is an (n_points, d) float array of normalized observations, so all
coordinates share one scale. Counting overlays an axis-aligned grid of cell
edge `scale` anchored at the origin and counts distinct occupied cells; the
dimension estimate brackets the log-log slope between adjacent ladder scales:

    slope_k = ln(N(s_{k+1}) / N(s_k)) / ln(s_k / s_{k+1})

clamped to [0, d]. `lower`/`upper` are the min/max slope across the ladder
and training uses their midpoint.

Shaping: for positive returns the return is divided by the dimension
estimate; for negative returns it is multiplied instead. Either way a lower
dimension means a better shaped return. The estimate is clamped below at 1
first, so a near-stationary trajectory cannot buy an unbounded reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveReturnError

REWARD_MODE_RAW = "raw"
REWARD_MODE_DIM_RATIO = "dim_ratio"
REWARD_MODE_DIM_PRODUCT = "dim_product"
REWARD_MODES = (REWARD_MODE_RAW, REWARD_MODE_DIM_RATIO, REWARD_MODE_DIM_PRODUCT)

DIM_FLOOR = 1.0


@dataclass(frozen=True)
class MeshLadder:
    """Geometric ladder of cell sizes: scales()[k] = base_scale * ratio**k."""

    base_scale: float = 0.5
    ratio: float = 0.5
    num_scales: int = 4

    def __post_init__(self):
        if not self.base_scale > 0.0:
            raise ValueError("base_scale must be positive")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if self.num_scales < 2:
            raise ValueError("num_scales must be >= 2 (need at least one slope)")

    def scales(self) -> list[float]:
        return [self.base_scale * self.ratio ** k for k in range(self.num_scales)]


DEFAULT_LADDER = MeshLadder()


@dataclass(frozen=True)
class DimensionEstimate:
    lower: float
    upper: float
    average: float
    counts: tuple  # ((scale, occupied_cells), ...) coarse to fine

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "average": self.average,
            "counts": [[scale, count] for scale, count in self.counts],
        }


def _as_cloud(points) -> np.ndarray:
    cloud = np.asarray(points, dtype=np.float64)
    if cloud.ndim == 1:
        cloud = cloud.reshape(-1, 1)
    if cloud.ndim != 2 or cloud.shape[0] == 0:
        raise ValueError("state cloud must be a nonempty (n_points, d) array")
    if not np.all(np.isfinite(cloud)):
        raise ValueError("state cloud contains non-finite values")
    return cloud


def occupied_cells(points, scale: float) -> int:
    """Number of distinct grid cells of edge `scale` hit by the cloud."""
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    cloud = _as_cloud(points)
    cells = np.floor(cloud / scale).astype(np.int64)
    return int(np.unique(cells, axis=0).shape[0])


def estimate_dimension(points, ladder: MeshLadder = DEFAULT_LADDER) -> DimensionEstimate:
    """Bracketed box-counting dimension of the cloud over the ladder.

    A single repeated point gives lower = upper = average = 0 (every count
    is 1), not an error.
    """
    cloud = _as_cloud(points)
    d = cloud.shape[1]
    scales = ladder.scales()
    counts = [occupied_cells(cloud, s) for s in scales]
    slopes = []
    for k in range(len(scales) - 1):
        slope = np.log(counts[k + 1] / counts[k]) / np.log(scales[k] / scales[k + 1])
        slopes.append(float(min(max(slope, 0.0), d)))
    lower = min(slopes)
    upper = max(slopes)
    return DimensionEstimate(
        lower=lower,
        upper=upper,
        average=(lower + upper) / 2.0,
        counts=tuple(zip(scales, counts)),
    )


def shaped_return(raw_return: float, dim: DimensionEstimate, mode: str) -> float:
    """Combine an episode return with its dimension estimate.

    dim_ratio divides a (strictly positive) return by max(average, 1);
    dim_product multiplies by it. dim_ratio with a non-positive return is an
    error: use dim_product for environments that can produce them.
    """
    d = max(dim.average, DIM_FLOOR)
    if mode == REWARD_MODE_DIM_RATIO:
        if raw_return <= 0.0:
            raise NonPositiveReturnError(
                f"dim_ratio shaping needs a positive return, got {raw_return}; "
                "this only works for environments with positive rewards - use dim_product instead"
            )
        return raw_return / d
    if mode == REWARD_MODE_DIM_PRODUCT:
        return d * raw_return
    raise ValueError(f"unknown shaping mode {mode!r}")
