"""Spatial model: Poisson deployments, SF rings and cooperation geometry.

The gateway sits at the origin of a disk-shaped network.  Spreading factors
are assigned by distance rings, so "same SF" always means "same annulus".
Device-to-device cooperation is possible within a fixed range of a device,
which makes the reachable-partner region the intersection of that circle
with the device's own annulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: closest distance to the gateway at which the far-field gain model holds
INNER_FLOOR_M = 1.0

SF_RANGE = (7, 8, 9, 10, 11, 12)


def _sf_index(sf: int) -> int:
    if sf not in SF_RANGE:
        raise ValueError(f"spreading factor must be in {SF_RANGE}, got {sf}")
    return sf - SF_RANGE[0]


@dataclass(frozen=True)
class D2dParams:
    """FSK side-channel parameters used for the partner exchange."""

    tx_power_dbm: float = 13.0
    sensitivity_dbm: float = -82.0
    link_outage: float = 0.012
    bandwidth_hz: float = 250_000.0
    bit_rate_bps: float = 250_000.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.link_outage <= 1.0:
            raise ValueError("link outage is a probability")
        if self.bandwidth_hz <= 0 or self.bit_rate_bps <= 0:
            raise ValueError("bandwidth and bit rate must be positive")


@dataclass(frozen=True)
class RingLayout:
    """Upper boundaries of the six SF rings, innermost first.

    ``boundaries[i]`` is the outer radius of the SF ``7+i`` ring; a ring may
    be collapsed (zero width) when its boundary equals the previous one.
    The network radius is the SF12 boundary.
    """

    boundaries: tuple[float, ...]
    inner_floor: float = INNER_FLOOR_M

    def __post_init__(self) -> None:
        if len(self.boundaries) != len(SF_RANGE):
            raise ValueError("need one boundary per spreading factor (6)")
        if self.inner_floor <= 0.0:
            raise ValueError("inner floor must be positive")
        previous = self.inner_floor
        for sf, bound in zip(SF_RANGE, self.boundaries):
            if bound < previous:
                raise ValueError(
                    f"SF{sf} boundary {bound} below previous radius {previous}")
            previous = bound

    @property
    def network_radius(self) -> float:
        return self.boundaries[-1]

    def ring(self, sf: int) -> tuple[float, float]:
        """(inner, outer) radii of the annulus serving ``sf``."""
        i = _sf_index(sf)
        lower = self.inner_floor if i == 0 else self.boundaries[i - 1]
        return lower, self.boundaries[i]

    def width(self, sf: int) -> float:
        lower, upper = self.ring(sf)
        return upper - lower

    def sf_at(self, distance: float) -> int | None:
        """Spreading factor serving ``distance``; None outside the network.

        A device exactly on a boundary belongs to the inner ring.
        """
        if distance < self.inner_floor:
            raise ValueError(
                f"distance {distance} below the {self.inner_floor} m floor")
        for sf, bound in zip(SF_RANGE, self.boundaries):
            if distance <= bound:
                return sf
        return None


@dataclass(frozen=True)
class Deployment:
    """One realisation of the device point process."""

    positions: np.ndarray  # shape (n, 2), metres, gateway at origin
    density: float

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    def distances(self) -> np.ndarray:
        return np.hypot(self.positions[:, 0], self.positions[:, 1])


def sample_ppp(density: float, radius: float,
               rng_seed: int | np.random.Generator = 0,
               inner_floor: float = INNER_FLOOR_M) -> Deployment:
    """Sample a homogeneous Poisson point process on the network annulus.

    The disk is punctured at ``inner_floor`` where the far-field gain model
    is invalid; the removed area is negligible for any realistic radius.
    Deterministic for a fixed integer seed.
    """
    if density < 0.0:
        raise ValueError("density must be non-negative")
    if radius <= inner_floor:
        raise ValueError(f"radius {radius} must exceed the {inner_floor} m floor")
    rng = (rng_seed if isinstance(rng_seed, np.random.Generator)
           else np.random.default_rng(rng_seed))
    area = math.pi * (radius ** 2 - inner_floor ** 2)
    n = rng.poisson(density * area)
    # radial CDF inversion keeps the density uniform over the annulus
    r = np.sqrt(inner_floor ** 2
                + rng.random(n) * (radius ** 2 - inner_floor ** 2))
    theta = rng.random(n) * 2.0 * math.pi
    positions = np.column_stack((r * np.cos(theta), r * np.sin(theta)))
    return Deployment(positions=positions, density=density)


def cooperation_distance(d2d: D2dParams, carrier_hz: float,
                         path_loss_exponent: float) -> float:
    """Largest partner distance closing the FSK link budget (Friis inverse)."""
    if carrier_hz <= 0 or path_loss_exponent <= 0:
        raise ValueError("carrier and path-loss exponent must be positive")
    wavelength = 299_792_458.0 / carrier_hz
    margin_db = d2d.sensitivity_dbm - d2d.tx_power_dbm
    return ((wavelength / (4.0 * math.pi)) ** (2.0 / path_loss_exponent)
            * 10.0 ** (-margin_db / (10.0 * path_loss_exponent)))


def cooperation_area_approx(coop_dist: float, ring_width: float) -> float:
    """Reachable same-SF area: half-disk capped by a ring-wide rectangle.

    The half-disk applies when the ring is wide relative to the cooperation
    distance; for narrow rings the circle degenerates into a 2*d x xi strip.
    """
    if coop_dist < 0.0 or ring_width < 0.0:
        raise ValueError("distances must be non-negative")
    return min(math.pi / 2.0 * coop_dist ** 2, 2.0 * coop_dist * ring_width)


def cooperation_area_exact(ed_pos, coop_dist: float,
                           ring: tuple[float, float]) -> float:
    """Exact area of circle(ed, coop_dist) intersected with the SF annulus.

    ``ed_pos`` is either an (x, y) pair or a plain gateway distance; the
    geometry is rotationally symmetric.  Evaluated in closed form as the
    difference of two circle-disk overlaps, so the only error is rounding.
    """
    lower, upper = ring
    if not 0.0 <= lower <= upper:
        raise ValueError(f"bad annulus radii ({lower}, {upper})")
    d = (float(np.hypot(*ed_pos)) if np.ndim(ed_pos) else float(ed_pos))
    if not lower <= d <= upper:
        raise ValueError(f"device at {d} m is outside its annulus {ring}")
    if coop_dist < 0.0:
        raise ValueError("cooperation distance must be non-negative")
    return (_disk_overlap_area(coop_dist, upper, d)
            - _disk_overlap_area(coop_dist, lower, d))


def _disk_overlap_area(r1: float, r2: float, center_dist: float) -> float:
    """Area of the lens shared by two disks with centre separation d."""
    if r1 <= 0.0 or r2 <= 0.0:
        return 0.0
    if center_dist >= r1 + r2:
        return 0.0
    if center_dist <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    d2 = center_dist * center_dist
    alpha1 = math.acos((d2 + r1 * r1 - r2 * r2) / (2.0 * center_dist * r1))
    alpha2 = math.acos((d2 + r2 * r2 - r1 * r1) / (2.0 * center_dist * r2))
    triangle = 0.5 * math.sqrt(max(0.0,
        (-center_dist + r1 + r2) * (center_dist + r1 - r2)
        * (center_dist - r1 + r2) * (center_dist + r1 + r2)))
    return alpha1 * r1 * r1 + alpha2 * r2 * r2 - triangle


def neighboring_probability(density: float, area: float) -> float:
    """Probability that a Poisson field leaves at least one point in ``area``."""
    if density < 0.0 or area < 0.0:
        raise ValueError("density and area must be non-negative")
    return -math.expm1(-density * area)
