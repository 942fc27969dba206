"""LoRa uplink PHY characteristics: airtime, bit rate and duty cycle.

Timing follows the SX127x chirp-spread-spectrum frame structure with an
explicit header and CRC enabled.  Assumptions baked into this module:

- spreading factors 7..12 on a single channel;
- the low-data-rate optimisation is active for SF 11 and 12;
- every device sends one payload of fixed size per application slot, so the
  duty cycle is the frame airtime divided by the slot period.

Receiver-side figures (demodulation SNR threshold, sensitivity) are the
datasheet values for a 125 kHz channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: bandwidths supported by the transceiver (Hz)
SUPPORTED_BANDWIDTHS_HZ = (125_000.0, 250_000.0, 500_000.0)

#: regulatory duty-cycle budget for the EU 868 MHz band
DEFAULT_DUTY_CAP = 0.01

#: preamble length used throughout (symbols, excluding the implicit 4.25)
DEFAULT_PREAMBLE_SYMBOLS = 8


class DutyCycleError(ValueError):
    """Raised when a configuration busts the duty-cycle budget."""


@dataclass(frozen=True)
class SfParams:
    """Receiver characteristics of one spreading factor (125 kHz channel)."""

    sf: int
    snr_threshold_db: float
    sensitivity_dbm: float

    def __post_init__(self) -> None:
        if not 7 <= self.sf <= 12:
            raise ValueError(f"spreading factor must be in 7..12, got {self.sf}")


#: demodulation threshold and sensitivity per spreading factor, 125 kHz
SF_TABLE: dict[int, SfParams] = {
    7: SfParams(7, -6.0, -123.0),
    8: SfParams(8, -9.0, -126.0),
    9: SfParams(9, -12.0, -129.0),
    10: SfParams(10, -15.0, -132.0),
    11: SfParams(11, -17.5, -134.5),
    12: SfParams(12, -20.0, -137.0),
}


def _payload_symbol_count(payload_bytes: int, sf: int, coding_rate: int,
                          low_rate_opt: bool) -> int:
    """Symbol count of the payload part, before clamping nothing is assumed.

    The 44-bit constant is the explicit-header + 16-bit-CRC overhead minus
    the bits carried by the preamble-adjacent part of the frame.
    """
    numerator = 44 + 8 * payload_bytes - 4 * sf
    denominator = 4 * (sf - (2 if low_rate_opt else 0))
    blocks = -(-numerator // denominator)  # integer ceil
    return 8 + max(0, blocks * (4 + coding_rate))


def low_rate_optimised(sf: int) -> bool:
    """The low-data-rate optimisation is mandatory for SF 11 and 12."""
    return sf >= 11


@dataclass(frozen=True)
class PhyConfig:
    """Uplink radio configuration shared by every device in a deployment."""

    bandwidth_hz: float = 125_000.0
    coding_rate: int = 1
    payload_bytes: int = 9
    preamble_symbols: int = DEFAULT_PREAMBLE_SYMBOLS
    slot_seconds: float = 0.0  # 0 -> per-cap default, resolved in __post_init__
    duty_cap: float = DEFAULT_DUTY_CAP

    def __post_init__(self) -> None:
        if self.bandwidth_hz not in SUPPORTED_BANDWIDTHS_HZ:
            raise ValueError(
                f"bandwidth {self.bandwidth_hz} Hz not supported; "
                f"choose one of {SUPPORTED_BANDWIDTHS_HZ}")
        if not 1 <= self.coding_rate <= 4:
            raise ValueError(f"coding rate must be in 1..4, got {self.coding_rate}")
        if self.payload_bytes < 1:
            raise ValueError("payload must be at least one byte")
        if self.preamble_symbols < 1:
            raise ValueError("preamble needs at least one symbol")
        if not 0.0 < self.duty_cap <= 1.0:
            raise ValueError("duty cap must be a fraction in (0, 1]")
        if self.slot_seconds == 0.0:
            object.__setattr__(self, "slot_seconds", default_slot_seconds(self))
        if self.slot_seconds <= 0.0:
            raise ValueError("slot period must be positive")


def payload_symbols(cfg: PhyConfig, sf: int) -> int:
    """Number of payload symbols of an uplink frame."""
    _require_sf(sf)
    return _payload_symbol_count(cfg.payload_bytes, sf, cfg.coding_rate,
                                 low_rate_optimised(sf))


def symbol_seconds(cfg: PhyConfig, sf: int) -> float:
    _require_sf(sf)
    return 2.0 ** sf / cfg.bandwidth_hz


def time_on_air(cfg: PhyConfig, sf: int) -> float:
    """Frame airtime in seconds (preamble + 4.25 sync symbols + payload)."""
    return symbol_seconds(cfg, sf) * (cfg.preamble_symbols + 4.25
                                      + payload_symbols(cfg, sf))


def bit_rate(cfg: PhyConfig, sf: int) -> float:
    """Effective PHY bit rate in bits per second."""
    _require_sf(sf)
    return sf * cfg.bandwidth_hz * 2.0 ** (2 - sf) / (4 + cfg.coding_rate)


def duty_cycle(cfg: PhyConfig, sf: int) -> float:
    """Per-transmission duty cycle: airtime over the slot period.

    Raises DutyCycleError when a single transmission already exceeds the
    regulatory budget; the per-device budget with repetitions is checked at
    scenario level (replicas * duty_cycle).
    """
    rho = time_on_air(cfg, sf) / cfg.slot_seconds
    if rho > cfg.duty_cap:
        raise DutyCycleError(
            f"SF{sf} duty cycle {rho:.4%} exceeds the {cfg.duty_cap:.0%} cap "
            f"(slot {cfg.slot_seconds:.3f} s)")
    return rho


def default_slot_seconds(cfg: PhyConfig | None = None) -> float:
    """Slot period that puts two SF12 frames exactly at the duty cap.

    This is the longest application period a 2-repetition scheme can run at
    while saturating the duty budget on the slowest spreading factor.
    """
    if cfg is None:
        cfg = PhyConfig()
        return cfg.slot_seconds
    airtime = symbol_seconds(cfg, 12) * (cfg.preamble_symbols + 4.25
                                         + payload_symbols(cfg, 12))
    return 2.0 * airtime / cfg.duty_cap


def _require_sf(sf: int) -> None:
    if sf not in SF_TABLE:
        raise ValueError(f"spreading factor must be in 7..12, got {sf}")


def snr_threshold_db(sf: int) -> float:
    _require_sf(sf)
    return SF_TABLE[sf].snr_threshold_db


def sensitivity_dbm(sf: int) -> float:
    _require_sf(sf)
    return SF_TABLE[sf].sensitivity_dbm
