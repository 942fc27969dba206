"""Average current consumption over one application slot.

The transceiver walks through sleep, standby, frequency synthesis and
transmission once per slot (transmission repeated for multi-replica
schemes), then sleeps out the remainder.  The cooperative scheme adds one
FSK partner exchange per slot whenever a partner is within reach; its
state machine runs on separate circuitry with its own sleep floor, so the
two contributions simply add.

Durations and currents are SX1272 datasheet figures.  Uplink transmit
current is only characterised at 0 and 11 dBm; other powers are rejected
rather than interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import geometry, phy
from .analytics import LinkBudget, SchemeKind, SchemeSpec
from .geometry import D2dParams, RingLayout
from .phy import PhyConfig


class UnsupportedTxPowerError(ValueError):
    """Transmit current is tabulated only for the supported power levels."""


@dataclass(frozen=True)
class RadioState:
    name: str
    duration_s: float
    current_a: float

    def __post_init__(self) -> None:
        if self.duration_s < 0.0 or self.current_a < 0.0:
            raise ValueError(f"state {self.name}: negative duration or current")


@dataclass(frozen=True)
class StateProfile:
    """Fixed-duration radio states plus the sleep-floor current.

    Sleep is not listed: its duration is whatever remains of the slot.
    """

    states: tuple[RadioState, ...]
    sleep_current_a: float

    def active_seconds(self) -> float:
        return sum(s.duration_s for s in self.states)

    def active_charge(self) -> float:
        """Charge (ampere-seconds) of the fixed states, per slot."""
        return sum(s.duration_s * s.current_a for s in self.states)


#: uplink radio: wake-up chain before each slot's transmissions
LORA_PROFILE = StateProfile(
    states=(RadioState("standby", 250e-6, 1.5e-3),
            RadioState("tx_synth", 60e-6, 4.5e-3)),
    sleep_current_a=100e-9,
)

#: uplink transmit current by RF output power (dBm)
TX_CURRENT_A = {0.0: 22e-3, 11.0: 32e-3}

#: FSK partner exchange: send own frame, turn around, receive the partner's
FSK_PROFILE = StateProfile(
    states=(RadioState("standby", 250e-6, 1.5e-3),
            RadioState("tx_synth", 60e-6, 4.5e-3),
            RadioState("transmit", 499.5e-6, 28e-3),
            RadioState("turnaround", 50e-6, 4.5e-3),
            RadioState("receive", 543e-6, 11.2e-3)),
    sleep_current_a=100e-9,
)


def tx_current_a(tx_power_dbm: float) -> float:
    try:
        return TX_CURRENT_A[float(tx_power_dbm)]
    except KeyError:
        raise UnsupportedTxPowerError(
            f"transmit current tabulated only for "
            f"{sorted(TX_CURRENT_A)} dBm, got {tx_power_dbm}") from None


def avg_current_uplink(cfg: PhyConfig, sf: int, tx_power_dbm: float,
                       replicas: int = 1,
                       profile: StateProfile = LORA_PROFILE) -> float:
    """Slot-average current (A) of the uplink radio.

    ``replicas`` transmissions of the frame airtime, one wake-up chain,
    sleep for the remainder.
    """
    if replicas < 1:
        raise ValueError("need at least one transmission per slot")
    airtime = phy.time_on_air(cfg, sf)
    current = tx_current_a(tx_power_dbm)
    sleep_s = cfg.slot_seconds - replicas * airtime - profile.active_seconds()
    if sleep_s < 0.0:
        raise ValueError(
            f"slot of {cfg.slot_seconds} s too short for {replicas} "
            f"transmissions at SF{sf} plus the wake-up chain")
    charge = (replicas * airtime * current + profile.active_charge()
              + sleep_s * profile.sleep_current_a)
    return charge / cfg.slot_seconds


def avg_current_d2d(cfg: PhyConfig,
                    profile: StateProfile = FSK_PROFILE) -> float:
    """Slot-average current (A) of one FSK partner exchange."""
    sleep_s = cfg.slot_seconds - profile.active_seconds()
    if sleep_s < 0.0:
        raise ValueError(
            f"slot of {cfg.slot_seconds} s too short for the FSK exchange")
    charge = profile.active_charge() + sleep_s * profile.sleep_current_a
    return charge / cfg.slot_seconds


def avg_current_scheme(scheme: SchemeSpec, cfg: PhyConfig, sf: int,
                       tx_power_dbm: float, p_neighbor: float = 0.0) -> float:
    """Slot-average current (A) of a device running ``scheme`` at ``sf``.

    ``p_neighbor`` weighs the cooperative exchange: energy is spent on the
    D2D phase whenever a partner is in range, even if the link then fails.
    """
    if not 0.0 <= p_neighbor <= 1.0:
        raise ValueError("neighbour probability must be in [0, 1]")
    uplink = avg_current_uplink(cfg, sf, tx_power_dbm, scheme.replicas)
    if scheme.kind is SchemeKind.NCC_LORA:
        return uplink + p_neighbor * avg_current_d2d(cfg)
    return uplink


def scheme_current_at(distance: float, layout: RingLayout,
                      scheme: SchemeSpec, density: float,
                      cfg: PhyConfig | None = None,
                      budget: LinkBudget | None = None,
                      d2d: D2dParams | None = None,
                      area_mode: str = "approx") -> float:
    """Average current of a device at ``distance`` under its ring layout."""
    cfg = cfg or PhyConfig()
    budget = budget or LinkBudget()
    d2d = d2d or D2dParams()
    sf = layout.sf_at(distance)
    if sf is None:
        raise ValueError(
            f"{distance} m lies outside the {layout.network_radius:.1f} m network")
    p_neighbor = 0.0
    if scheme.kind is SchemeKind.NCC_LORA:
        coop_dist = geometry.cooperation_distance(
            d2d, budget.carrier_hz, budget.path_loss_exponent)
        if area_mode == "approx":
            area = geometry.cooperation_area_approx(coop_dist, layout.width(sf))
        elif area_mode == "exact":
            area = geometry.cooperation_area_exact(distance, coop_dist,
                                                   layout.ring(sf))
        else:
            raise ValueError(f"unknown area mode {area_mode!r}")
        p_neighbor = geometry.neighboring_probability(density, area)
    return avg_current_scheme(scheme, cfg, sf, budget.tx_power_dbm, p_neighbor)
