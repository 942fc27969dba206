"""Closed-form outage model and spreading-factor ring construction.

A frame from distance d1 is lost either because its faded SNR misses the
demodulation threshold (connection) or because simultaneous co-SF traffic
swamps it beyond the capture margin (collision).  Under Rayleigh fading
and an unslotted-ALOHA Poisson interferer field both events have
exponential closed forms; the collision exponent integrates the interferer
annulus through a Gauss hypergeometric term.

Ring boundaries per spreading factor are the distances where a scheme's
outage hits the design target, solved innermost-first by bisection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import geometry, numerics, phy
from .geometry import D2dParams, RingLayout
from .numerics import Tolerance
from .phy import PhyConfig

SPEED_OF_LIGHT = 299_792_458.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    """Radio-link parameters of the device-to-gateway uplink."""

    tx_power_dbm: float = 11.0
    noise_figure_db: float = 6.0
    bandwidth_hz: float = 125_000.0
    path_loss_exponent: float = 2.7
    carrier_hz: float = 868e6
    capture_threshold_db: float = 6.0

    def __post_init__(self) -> None:
        if self.bandwidth_hz <= 0 or self.carrier_hz <= 0:
            raise ValueError("bandwidth and carrier must be positive")
        if self.path_loss_exponent < 2.0:
            raise ValueError("path-loss exponent below free space is unphysical")

    @property
    def noise_dbm(self) -> float:
        """Thermal noise floor over the receive bandwidth plus noise figure."""
        return -174.0 + self.noise_figure_db + 10.0 * math.log10(self.bandwidth_hz)

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


class SchemeKind(enum.Enum):
    LORA = "lora"
    RT_LORA = "rt-lora"
    NCC_LORA = "ncc-lora"


@dataclass(frozen=True)
class SchemeSpec:
    """Transmission scheme and its per-slot repetition count."""

    kind: SchemeKind
    replicas: int

    def __post_init__(self) -> None:
        expected = 1 if self.kind is SchemeKind.LORA else 2
        if self.replicas != expected:
            raise ValueError(
                f"{self.kind.value} uses {expected} transmissions per slot, "
                f"got {self.replicas}")

    @classmethod
    def from_name(cls, name: str) -> "SchemeSpec":
        kind = SchemeKind(name)
        return cls(kind=kind, replicas=1 if kind is SchemeKind.LORA else 2)


LORA = SchemeSpec.from_name("lora")
RT_LORA = SchemeSpec.from_name("rt-lora")
NCC_LORA = SchemeSpec.from_name("ncc-lora")


@dataclass(frozen=True)
class OutageBreakdown:
    """Outage of one device with the intermediate probabilities exposed."""

    connection: float
    capture: float
    single_tx_outage: float
    scheme_outage: float
    cooperation: float  # 0 for non-cooperative schemes
    sf: int


def channel_gain(distance: float, budget: LinkBudget) -> float:
    """Far-field path gain; only valid beyond the 1 m inner floor."""
    if distance < geometry.INNER_FLOOR_M:
        raise ValueError(f"gain model invalid below 1 m, got {distance}")
    return ((budget.wavelength_m / (4.0 * math.pi)) ** 2
            * distance ** (-budget.path_loss_exponent))


def connection_probability(distance: float, sf: int,
                           budget: LinkBudget) -> float:
    """Probability the Rayleigh-faded SNR clears the SF demodulation threshold."""
    snr_margin = (dbm_to_mw(budget.noise_dbm)
                  * db_to_linear(phy.snr_threshold_db(sf))
                  / (dbm_to_mw(budget.tx_power_dbm)
                     * channel_gain(distance, budget)))
    return math.exp(-snr_margin)


def interference_area(distance: float, ring: tuple[float, float],
                      budget: LinkBudget,
                      tol: Tolerance = numerics.DEFAULT_TOL) -> float:
    """Capture-weighted area of the co-SF annulus seen from ``distance``.

    Integrates 1 / (1 + r^eta / (delta * d1^eta)) over the annulus, the
    per-interferer loss weight under Rayleigh fading with capture margin
    delta; in polar form each bounding disk contributes
    (l^2 / 2) * 2F1(1, 2/eta; 1 + 2/eta; -l^eta / (delta * d1^eta)).
    """
    lower, upper = ring
    if not 0.0 <= lower <= upper:
        raise ValueError(f"bad annulus radii ({lower}, {upper})")
    if distance <= 0.0:
        raise ValueError("distance must be positive")
    eta = budget.path_loss_exponent
    delta = db_to_linear(budget.capture_threshold_db)

    def disk_term(radius: float) -> float:
        if radius <= 0.0:
            return 0.0
        z = -(radius ** eta) / (delta * distance ** eta)
        return 0.5 * radius * radius * numerics.hyp_2f1(
            1.0, 2.0 / eta, 1.0 + 2.0 / eta, z, tol)

    return disk_term(upper) - disk_term(lower)


def capture_probability(distance: float, ring: tuple[float, float], sf: int,
                        effective_density: float, cfg: PhyConfig,
                        budget: LinkBudget,
                        tol: Tolerance = numerics.DEFAULT_TOL) -> float:
    """Probability the frame survives co-SF unslotted-ALOHA interference.

    ``effective_density`` is the device density already scaled by the
    scheme's per-slot repetitions; the additional factor two inside the
    exponent is the unslotted collision window (a frame is vulnerable to
    interferers starting up to one airtime before or after it).
    """
    if effective_density < 0.0:
        raise ValueError("density must be non-negative")
    exponent = (4.0 * math.pi * effective_density
                * interference_area(distance, ring, budget, tol)
                * phy.duty_cycle(cfg, sf))
    return math.exp(-exponent)


def single_tx_outage(distance: float, ring: tuple[float, float], sf: int,
                     effective_density: float, cfg: PhyConfig,
                     budget: LinkBudget,
                     tol: Tolerance = numerics.DEFAULT_TOL) -> float:
    """Outage of one transmission: complement of connection times capture."""
    return 1.0 - (connection_probability(distance, sf, budget)
                  * capture_probability(distance, ring, sf,
                                        effective_density, cfg, budget, tol))


def single_tx_outage_linearized(distance: float, ring: tuple[float, float],
                                sf: int, effective_density: float,
                                cfg: PhyConfig, budget: LinkBudget) -> float:
    """First-order expansion of the single-transmission outage.

    Valid in the small-outage regime; kept as a cross-check of the exact
    form, not used by the solvers.
    """
    capture_exponent = (4.0 * math.pi * effective_density
                        * interference_area(distance, ring, budget)
                        * phy.duty_cycle(cfg, sf))
    snr_margin = (dbm_to_mw(budget.noise_dbm)
                  * db_to_linear(phy.snr_threshold_db(sf))
                  / (dbm_to_mw(budget.tx_power_dbm)
                     * channel_gain(distance, budget)))
    return capture_exponent + snr_margin


def rt_lora_outage(o1: float, replicas: int) -> float:
    """Outage after ``replicas`` independent repetitions (selection combining)."""
    _check_probability("o1", o1)
    if replicas < 1:
        raise ValueError("need at least one transmission")
    return o1 ** replicas


def ncc_outage(o1: float, o2: float) -> float:
    """Outage of a cooperating pair's message given per-frame outages.

    The pair's four frames form an MDS code: the message survives when its
    own frame arrives or any two of the remaining three do.  Expanding the
    erasure patterns gives the polynomial below.
    """
    _check_probability("o1", o1)
    _check_probability("o2", o2)
    return 2.0 * o1 * o1 * o2 + o1 * o2 * o2 - 2.0 * o1 * o1 * o2 * o2


def cooperation_probability(density: float, area: float,
                            d2d: D2dParams) -> float:
    """Probability a partner exists in ``area`` and the exchange succeeds."""
    return ((1.0 - d2d.link_outage)
            * geometry.neighboring_probability(density, area))


def ncc_lora_outage(o1: float, o2: float, p_coop: float) -> float:
    """Outage mixing the cooperative and the repetition-fallback branches."""
    _check_probability("p_coop", p_coop)
    return p_coop * ncc_outage(o1, o2) + (1.0 - p_coop) * o1 * o1


class LayoutError(RuntimeError):
    """Ring construction failed; message carries the diagnostic state."""


#: search ceiling for ring boundaries (metres)
BOUNDARY_SEARCH_LIMIT_M = 50_000.0


def solve_ring_layout(scheme: SchemeSpec, density: float, target: float,
                      cfg: PhyConfig | None = None,
                      budget: LinkBudget | None = None,
                      d2d: D2dParams | None = None,
                      inner_floor: float = geometry.INNER_FLOOR_M,
                      tol: Tolerance | None = None) -> RingLayout:
    """Place the six SF boundaries so boundary devices just meet ``target``.

    Boundaries are solved innermost-first; each ring's outer radius is the
    bisection root of the scheme outage evaluated for a device sitting on
    it with its own ring as the interferer annulus.  A ring already above
    target at zero width collapses; if no root exists below the search
    ceiling the boundary clamps there.  The cooperative scheme evaluates
    its partner at the device's own distance and uses the rectangle/half-
    disk area approximation with the ring width under construction.
    """
    cfg = cfg or PhyConfig()
    budget = budget or LinkBudget()
    d2d = d2d or D2dParams()
    tol = tol or Tolerance(rel=1e-12, abs=1e-9)
    if density <= 0.0:
        raise ValueError("density must be positive")
    if not 0.0 < target < 1.0:
        raise ValueError("target outage must be in (0, 1)")
    _check_scheme_duty(scheme, cfg)

    effective_density = scheme.replicas * density
    coop_dist = geometry.cooperation_distance(
        d2d, budget.carrier_hz, budget.path_loss_exponent)

    boundaries: list[float] = []
    lower = inner_floor
    for sf in geometry.SF_RANGE:

        def boundary_excess(radius: float, sf=sf, lower=lower) -> float:
            o1 = single_tx_outage(radius, (lower, radius), sf,
                                  effective_density, cfg, budget, tol)
            if scheme.kind is SchemeKind.LORA:
                return o1 - target
            if scheme.kind is SchemeKind.RT_LORA:
                return rt_lora_outage(o1, scheme.replicas) - target
            area = geometry.cooperation_area_approx(coop_dist, radius - lower)
            p_coop = cooperation_probability(density, area, d2d)
            return ncc_lora_outage(o1, o1, p_coop) - target

        start = lower + 1e-3
        if boundary_excess(start) > 0.0:
            if sf == geometry.SF_RANGE[0]:
                raise LayoutError(
                    f"SF7 cannot meet target {target} even at the "
                    f"{inner_floor} m floor (outage "
                    f"{boundary_excess(start) + target:.3g})")
            boundaries.append(lower)  # collapsed ring
            continue
        if boundary_excess(BOUNDARY_SEARCH_LIMIT_M) < 0.0:
            boundaries.append(BOUNDARY_SEARCH_LIMIT_M)
            lower = BOUNDARY_SEARCH_LIMIT_M
            continue
        result = numerics.bisect(boundary_excess, start,
                                 BOUNDARY_SEARCH_LIMIT_M, tol)
        boundaries.append(result.root)
        lower = result.root

    return RingLayout(boundaries=tuple(boundaries), inner_floor=inner_floor)


def scheme_outage(distance: float, layout: RingLayout, scheme: SchemeSpec,
                  density: float, cfg: PhyConfig | None = None,
                  budget: LinkBudget | None = None,
                  d2d: D2dParams | None = None,
                  area_mode: str = "approx") -> OutageBreakdown:
    """Evaluate a scheme's outage for a device at ``distance``.

    ``area_mode`` selects how the cooperative branch weighs the partner
    region: "approx" is the rectangle/half-disk formula on the ring width,
    "exact" the true circle-annulus intersection at this position.  The
    partner outage is evaluated at the device's own distance.
    """
    cfg = cfg or PhyConfig()
    budget = budget or LinkBudget()
    d2d = d2d or D2dParams()
    sf = layout.sf_at(distance)
    if sf is None:
        raise ValueError(f"{distance} m lies outside the {layout.network_radius:.1f} m network")
    ring = layout.ring(sf)
    effective_density = scheme.replicas * density
    h = connection_probability(distance, sf, budget)
    q = capture_probability(distance, ring, sf, effective_density, cfg, budget)
    o1 = 1.0 - h * q

    if scheme.kind is SchemeKind.LORA:
        return OutageBreakdown(h, q, o1, o1, 0.0, sf)
    if scheme.kind is SchemeKind.RT_LORA:
        return OutageBreakdown(h, q, o1, rt_lora_outage(o1, scheme.replicas),
                               0.0, sf)

    coop_dist = geometry.cooperation_distance(
        d2d, budget.carrier_hz, budget.path_loss_exponent)
    if area_mode == "approx":
        area = geometry.cooperation_area_approx(coop_dist, layout.width(sf))
    elif area_mode == "exact":
        area = geometry.cooperation_area_exact(distance, coop_dist, ring)
    else:
        raise ValueError(f"unknown area mode {area_mode!r}")
    p_coop = cooperation_probability(density, area, d2d)
    return OutageBreakdown(h, q, o1, ncc_lora_outage(o1, o1, p_coop),
                           p_coop, sf)


def supported_devices(density: float, radius: float) -> float:
    """Expected device count of a network disk at the given density."""
    return density * math.pi * radius * radius


def _check_scheme_duty(scheme: SchemeSpec, cfg: PhyConfig) -> None:
    """The replicated budget must stay within the regulatory cap."""
    for sf in geometry.SF_RANGE:
        total = scheme.replicas * phy.duty_cycle(cfg, sf)
        if total > cfg.duty_cap * (1.0 + 1e-12):
            raise phy.DutyCycleError(
                f"{scheme.kind.value}: {scheme.replicas} transmissions at SF{sf} "
                f"spend {total:.4%} of the slot, above the {cfg.duty_cap:.0%} cap")


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {value}")
