"""Monte Carlo validation of the outage model.

A probe device is planted at a chosen gateway distance and its uplink is
replayed many times against fresh fading, interferer and partner
realisations.  Two interference models are available:

- ``density-doubling``: each frame sees an independent thinned Poisson
  field of active co-SF interferers, active with probability
  2 * replicas * duty (the factor two being the unslotted collision
  window);
- ``explicit-offsets``: interferer devices get uniform transmit offsets in
  the slot (circular) and a collision is an actual airtime overlap.

Determinism contract: the result of every distance bin is a pure function
of (seed, bin index, trial index); bins draw from their own PCG64 streams,
so the execution order cannot leak into the numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from . import analytics, energy, geometry, netcode, phy
from .analytics import LinkBudget, SchemeKind, SchemeSpec
from .geometry import D2dParams, Deployment, RingLayout
from .phy import PhyConfig

#: normal quantile for the reported 95% binomial confidence intervals
CI_Z = 1.96

ALOHA_MODES = ("density-doubling", "explicit-offsets")

#: trials processed per vectorised chunk (keeps interferer arrays bounded)
_CHUNK_TRIALS = 20_000


@dataclass(frozen=True)
class Scenario:
    """Everything needed to replay one network configuration."""

    scheme: SchemeSpec
    density: float
    target_outage: float
    cfg: PhyConfig
    budget: LinkBudget
    d2d: D2dParams
    layout: RingLayout
    aloha_mode: str = "density-doubling"
    # test instrumentation; defaults reproduce the physical model
    pairing_mode: str = "geometric"  # geometric | always | never
    partner_placement: str = "area-uniform"  # area-uniform | co-distance

    def __post_init__(self) -> None:
        if self.density <= 0.0:
            raise ValueError("density must be positive")
        if not 0.0 < self.target_outage < 1.0:
            raise ValueError("target outage must be in (0, 1)")
        if self.aloha_mode not in ALOHA_MODES:
            raise ValueError(f"aloha mode must be one of {ALOHA_MODES}")
        if self.pairing_mode not in ("geometric", "always", "never"):
            raise ValueError(f"unknown pairing mode {self.pairing_mode!r}")
        if self.partner_placement not in ("area-uniform", "co-distance"):
            raise ValueError(
                f"unknown partner placement {self.partner_placement!r}")
        if self.cfg.bandwidth_hz != self.budget.bandwidth_hz:
            raise ValueError("phy and link-budget bandwidths disagree")
        analytics._check_scheme_duty(self.scheme, self.cfg)

    @classmethod
    def build(cls, scheme: SchemeSpec, density: float, target_outage: float,
              cfg: PhyConfig | None = None, budget: LinkBudget | None = None,
              d2d: D2dParams | None = None, layout: RingLayout | None = None,
              **kwargs) -> "Scenario":
        """Assemble a scenario, solving the ring layout when not supplied."""
        cfg = cfg or PhyConfig()
        budget = budget or LinkBudget()
        d2d = d2d or D2dParams()
        if layout is None:
            layout = analytics.solve_ring_layout(scheme, density,
                                                 target_outage, cfg, budget, d2d)
        return cls(scheme=scheme, density=density, target_outage=target_outage,
                   cfg=cfg, budget=budget, d2d=d2d, layout=layout, **kwargs)

    def coop_distance(self) -> float:
        return geometry.cooperation_distance(
            self.d2d, self.budget.carrier_hz, self.budget.path_loss_exponent)


@dataclass(frozen=True)
class TrialOutcome:
    """What happened to the probe's message in a single slot."""

    delivered: bool
    cooperated: bool
    neighbor_found: bool
    sf: int
    frames_sent: int


@dataclass(frozen=True)
class SimReport:
    """Per-bin empirical estimates for one scheme over a distance sweep."""

    scheme: str
    aloha_mode: str
    seed: int
    trials: int
    distances: np.ndarray
    sf: np.ndarray
    outage: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    cooperation_rate: np.ndarray
    neighbor_rate: np.ndarray
    mean_current_a: np.ndarray


def assign_sfs(deployment: Deployment, layout: RingLayout) -> np.ndarray:
    """Ring-based SF per device; -1 marks devices beyond the outer boundary."""
    d = deployment.distances()
    sfs = np.full(deployment.count, -1, dtype=int)
    lower = layout.inner_floor
    for sf, upper in zip(geometry.SF_RANGE, layout.boundaries):
        mask = (d > lower) & (d <= upper) if sf > 7 else (d <= upper)
        sfs[mask] = sf
        lower = upper
    return sfs


@dataclass(frozen=True)
class PairingResult:
    """Mutually exclusive partner assignment over one deployment."""

    partner: np.ndarray  # index of the partner, -1 when unpaired
    d2d_ok: np.ndarray   # pair survived its link toss (False when unpaired)


def pair_cooperators(deployment: Deployment, sfs: np.ndarray,
                     coop_dist: float, d2d: D2dParams,
                     rng: np.random.Generator) -> PairingResult:
    """Greedy mutual pairing: nearest same-SF unpaired candidate in range.

    Devices are visited in random order; each unpaired one grabs its
    nearest eligible neighbour.  Every formed pair then survives a single
    Bernoulli draw of the D2D link.
    """
    n = deployment.count
    partner = np.full(n, -1, dtype=int)
    d2d_ok = np.zeros(n, dtype=bool)
    if n == 0:
        return PairingResult(partner, d2d_ok)
    tree = cKDTree(deployment.positions)
    for i in rng.permutation(n):
        if partner[i] != -1 or sfs[i] < 0:
            continue
        candidates = [j for j in tree.query_ball_point(deployment.positions[i],
                                                       coop_dist)
                      if j != i and partner[j] == -1 and sfs[j] == sfs[i]]
        if not candidates:
            continue
        dists = np.linalg.norm(deployment.positions[candidates]
                               - deployment.positions[i], axis=1)
        j = candidates[int(np.argmin(dists))]
        partner[i], partner[j] = j, i
        ok = rng.random() >= d2d.link_outage
        d2d_ok[i] = d2d_ok[j] = ok
    return PairingResult(partner, d2d_ok)


def estimate_curve(scenario: Scenario, distances, trials: int,
                   seed: int = 0) -> SimReport:
    """Empirical outage/cooperation/current over a distance grid.

    Each bin runs ``trials`` independent slots from its own seeded stream.
    """
    distances = np.asarray(distances, dtype=float)
    if distances.ndim != 1 or distances.size == 0:
        raise ValueError("need a non-empty 1-D distance grid")
    if trials < 1:
        raise ValueError("need at least one trial")
    sfs = []
    for d in distances:
        sf = scenario.layout.sf_at(float(d))
        if sf is None:
            raise ValueError(
                f"{d} m outside the {scenario.layout.network_radius:.1f} m network")
        sfs.append(sf)

    n_bins = distances.size
    outage = np.empty(n_bins)
    coop = np.zeros(n_bins)
    neigh = np.zeros(n_bins)
    current = np.empty(n_bins)
    for b, (d, sf) in enumerate(zip(distances, sfs)):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=(seed, b))))
        failed, cooperated, neighbor = _simulate_bin(scenario, float(d), sf,
                                                     trials, rng)
        outage[b] = failed / trials
        coop[b] = cooperated / trials
        neigh[b] = neighbor / trials
        current[b] = _bin_current(scenario, sf, neigh[b])

    half = CI_Z * np.sqrt(outage * (1.0 - outage) / trials)
    return SimReport(
        scheme=scenario.scheme.kind.value, aloha_mode=scenario.aloha_mode,
        seed=seed, trials=trials, distances=distances,
        sf=np.asarray(sfs, dtype=int), outage=outage,
        ci_low=np.clip(outage - half, 0.0, 1.0),
        ci_high=np.clip(outage + half, 0.0, 1.0),
        cooperation_rate=coop, neighbor_rate=neigh, mean_current_a=current)


def run_uplink_trial(scenario: Scenario, distance: float,
                     rng: np.random.Generator) -> TrialOutcome:
    """Replay a single slot with full codec fidelity.

    The cooperative path encodes two random messages, delivers each frame
    through its own channel draw and asks the decoder whether the probe's
    message is recoverable.  The vectorised estimator uses the equivalent
    reachability rule; this path keeps the end-to-end semantics honest.
    """
    sf = scenario.layout.sf_at(distance)
    if sf is None:
        raise ValueError(f"{distance} m outside the network")
    scheme = scenario.scheme

    if scheme.kind is not SchemeKind.NCC_LORA:
        frames = scheme.replicas
        ok = _deliver_frames(scenario, np.full(frames, distance), sf, rng)
        return TrialOutcome(delivered=bool(ok.any()), cooperated=False,
                            neighbor_found=False, sf=sf, frames_sent=frames)

    neighbor, partner_d = _draw_partner(scenario, distance, sf, rng)
    cooperated = bool(neighbor and rng.random() >= scenario.d2d.link_outage)
    if scenario.pairing_mode == "always":
        neighbor, cooperated = True, True
        partner_d = partner_d if partner_d is not None else distance
    elif scenario.pairing_mode == "never":
        neighbor, cooperated = neighbor, False

    if not cooperated:
        ok = _deliver_frames(scenario, np.full(2, distance), sf, rng)
        return TrialOutcome(delivered=bool(ok.any()), cooperated=False,
                            neighbor_found=neighbor, sf=sf, frames_sent=2)

    gen = netcode.DEFAULT_GENERATOR
    field_order = gen.order
    words = [netcode.GfWord(tuple(int(s) for s in
                                  rng.integers(0, field_order, size=4)),
                            field_order) for _ in range(gen.k)]
    frames = netcode.encode(words, gen)
    frame_d = np.array([distance, partner_d, distance, partner_d])
    ok = _deliver_frames(scenario, frame_d, sf, rng)
    received = [(j, frames[j]) for j in range(gen.n) if ok[j]]
    decoded = netcode.decode(received, gen)
    delivered = decoded.messages[0] == words[0]
    return TrialOutcome(delivered=bool(delivered), cooperated=True,
                        neighbor_found=neighbor, sf=sf, frames_sent=2)


# ---------------------------------------------------------------- internals

def _bin_current(scenario: Scenario, sf: int, neighbor_rate: float) -> float:
    return energy.avg_current_scheme(scenario.scheme, scenario.cfg, sf,
                                     scenario.budget.tx_power_dbm,
                                     p_neighbor=neighbor_rate)


def _linear_constants(scenario: Scenario, sf: int):
    budget = scenario.budget
    noise_mw = analytics.dbm_to_mw(budget.noise_dbm)
    psi = analytics.db_to_linear(phy.snr_threshold_db(sf))
    delta = analytics.db_to_linear(budget.capture_threshold_db)
    p_mw = analytics.dbm_to_mw(budget.tx_power_dbm)
    return noise_mw, psi, delta, p_mw


def _gain(r: np.ndarray, scenario: Scenario) -> np.ndarray:
    budget = scenario.budget
    k = (budget.wavelength_m / (4.0 * math.pi)) ** 2
    return k * np.asarray(r, dtype=float) ** (-budget.path_loss_exponent)


def _ring_radii(scenario: Scenario, sf: int) -> tuple[float, float]:
    return scenario.layout.ring(sf)


def _sample_annulus_radii(rng: np.random.Generator, n: int,
                          lower: float, upper: float) -> np.ndarray:
    return np.sqrt(lower ** 2 + rng.random(n) * (upper ** 2 - lower ** 2))


def _deliver_frames(scenario: Scenario, frame_distances: np.ndarray, sf: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Delivery indicator per frame for one trial (both ALOHA modes)."""
    ok = _deliver_frame_matrix(scenario, frame_distances[None, :], sf, rng)
    return ok[0]


def _deliver_frame_matrix(scenario: Scenario, frame_d: np.ndarray, sf: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Vectorised delivery indicators, shape (trials, frames).

    Every frame gets a fresh Rayleigh power fade and a fresh interference
    realisation; the two ALOHA modes differ only in how the set of
    interfering frames is produced.
    """
    n_trials, n_frames = frame_d.shape
    lower, upper = _ring_radii(scenario, sf)
    noise_mw, psi, delta, p_mw = _linear_constants(scenario, sf)
    duty = phy.duty_cycle(scenario.cfg, sf)
    m = scenario.scheme.replicas
    ring_area = math.pi * (upper ** 2 - lower ** 2)

    own_fade = rng.exponential(size=(n_trials, n_frames))
    own_gain = _gain(frame_d, scenario)
    snr_ok = own_fade * own_gain * p_mw >= noise_mw * psi

    flat = n_trials * n_frames
    if scenario.aloha_mode == "density-doubling":
        # independent thinned field per frame
        lam = 2.0 * m * duty * scenario.density * ring_area
        counts = rng.poisson(lam, size=flat)
        total = int(counts.sum())
        radii = _sample_annulus_radii(rng, total, lower, upper)
        fades = rng.exponential(size=total)
        weights = _gain(radii, scenario) * fades
        interference = np.bincount(
            np.repeat(np.arange(flat), counts), weights=weights,
            minlength=flat).reshape(n_trials, n_frames)
    else:
        # one parent population per trial; actual airtime overlaps per frame
        airtime = phy.time_on_air(scenario.cfg, sf)
        slot = scenario.cfg.slot_seconds
        parents = rng.poisson(scenario.density * ring_area, size=n_trials)
        total = int(parents.sum())
        radii = _sample_annulus_radii(rng, total, lower, upper)
        parent_gain = _gain(radii, scenario)
        parent_trial = np.repeat(np.arange(n_trials), parents)
        interference = np.zeros((n_trials, n_frames))
        for f in range(n_frames):
            # offsets are circular-uniform relative to the probe frame start;
            # fades are drawn only for the (rare) overlapping frames
            offsets = rng.random((total, m)) * slot
            overlap = np.minimum(offsets, slot - offsets) < airtime
            rows = np.nonzero(overlap)[0]
            fades = rng.exponential(size=rows.size)
            interference[:, f] = np.bincount(
                parent_trial[rows], weights=parent_gain[rows] * fades,
                minlength=n_trials)

    capture_ok = own_fade * own_gain >= delta * interference
    return snr_ok & capture_ok


def _draw_partner(scenario: Scenario, distance: float, sf: int,
                  rng: np.random.Generator):
    """Neighbour existence plus a partner position for one trial."""
    found, d2 = _draw_partners_vec(scenario, distance, sf, 1, rng)
    return bool(found[0]), (float(d2[0]) if found[0] else None)


def _draw_partners_vec(scenario: Scenario, distance: float, sf: int,
                       n: int, rng: np.random.Generator):
    """Vectorised partner draw: existence flags and partner distances.

    A partner exists when the Poisson field leaves at least one same-SF
    device in the exact cooperation region; its position is uniform over
    that region (circle around the probe clipped to the annulus).
    """
    lower, upper = _ring_radii(scenario, sf)
    coop_dist = scenario.coop_distance()
    area = geometry.cooperation_area_exact(distance, coop_dist, (lower, upper))
    p_neigh = geometry.neighboring_probability(scenario.density, area)
    found = rng.random(n) < p_neigh

    d2 = np.full(n, distance)
    if scenario.partner_placement == "co-distance":
        return found, d2
    need = np.flatnonzero(found)
    pending = need
    while pending.size:
        k = pending.size
        r = coop_dist * np.sqrt(rng.random(k))
        theta = rng.random(k) * 2.0 * math.pi
        x = distance + r * np.cos(theta)
        y = r * np.sin(theta)
        rho = np.hypot(x, y)
        good = (rho >= lower) & (rho <= upper)
        d2[pending[good]] = rho[good]
        pending = pending[~good]
    return found, d2


def _simulate_bin(scenario: Scenario, distance: float, sf: int, trials: int,
                  rng: np.random.Generator) -> tuple[int, int, int]:
    """(failures, cooperations, neighbours) over ``trials`` slots."""
    failed = cooperated = neighbor = 0
    scheme = scenario.scheme
    for start in range(0, trials, _CHUNK_TRIALS):
        n = min(_CHUNK_TRIALS, trials - start)
        if scheme.kind is not SchemeKind.NCC_LORA:
            frame_d = np.full((n, scheme.replicas), distance)
            ok = _deliver_frame_matrix(scenario, frame_d, sf, rng)
            failed += int(n - ok.any(axis=1).sum())
            continue

        found, d2 = _draw_partners_vec(scenario, distance, sf, n, rng)
        coop = found & (rng.random(n) >= scenario.d2d.link_outage)
        if scenario.pairing_mode == "always":
            coop = np.ones(n, dtype=bool)
            found = np.ones_like(found)
        elif scenario.pairing_mode == "never":
            coop = np.zeros(n, dtype=bool)
        d2 = np.where(coop, d2, distance)

        # frame columns: own, partner, own parity, partner parity; the
        # fallback branch reuses the two own-distance columns as replicas
        frame_d = np.column_stack((np.full(n, distance), d2,
                                   np.full(n, distance), d2))
        ok = _deliver_frame_matrix(scenario, frame_d, sf, rng)
        others = ok[:, 1].astype(int) + ok[:, 2].astype(int) + ok[:, 3].astype(int)
        coded_ok = ok[:, 0] | (others >= 2)
        fallback_ok = ok[:, 0] | ok[:, 2]
        delivered = np.where(coop, coded_ok, fallback_ok)
        failed += int(n - delivered.sum())
        cooperated += int(coop.sum())
        neighbor += int(found.sum())
    return failed, cooperated, neighbor
