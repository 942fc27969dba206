"""Closed-form outage model: connection, capture, coding and ring solving."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

import oracles
from ncclora import analytics, phy
from ncclora.analytics import (LORA, NCC_LORA, RT_LORA, LayoutError,
                               LinkBudget, SchemeKind, SchemeSpec,
                               capture_probability, connection_probability,
                               cooperation_probability, interference_area,
                               ncc_lora_outage, ncc_outage, rt_lora_outage,
                               scheme_outage, single_tx_outage,
                               single_tx_outage_linearized, solve_ring_layout,
                               supported_devices)
from ncclora.geometry import D2dParams
from ncclora.phy import DutyCycleError, PhyConfig

# ring boundaries solved at density 1e-4 /m^2, target outage 1e-2
LORA_BOUNDARIES = (287.8399316693782, 365.9581552161717, 400.5290692698064,
                   419.6630881109709, 428.9969502310565, 433.61124531755485)
RT_BOUNDARIES = (659.79303634916, 838.8432308987935, 918.0190277358553,
                 961.8154168597632, 983.1736256713589, 993.7303083823205)
NCC_BOUNDARIES = (829.7570235998062, 1054.960055585961, 1154.159104325373,
                  1206.9748351265919, 1229.5439011142707, 1239.3434313262387)

E_INV_DISTANCE_SF7 = 6425.080864242102  # where the SF7 SNR margin hits 1


def test_unit_conversions():
    assert analytics.db_to_linear(0.0) == 1.0
    assert analytics.db_to_linear(10.0) == pytest.approx(10.0, rel=1e-15)
    assert analytics.dbm_to_mw(0.0) == 1.0
    assert analytics.dbm_to_mw(30.0) == pytest.approx(1000.0, rel=1e-15)


def test_noise_floor():
    budget = LinkBudget()
    expected = -174.0 + 6.0 + 10.0 * math.log10(125_000.0)
    assert budget.noise_dbm == pytest.approx(expected, rel=1e-15)
    wider = LinkBudget(bandwidth_hz=250_000.0)
    assert wider.noise_dbm == pytest.approx(expected + 10.0 * math.log10(2.0))


def test_connection_probability_anchors():
    budget = LinkBudget()
    assert connection_probability(1.0, 7, budget) == pytest.approx(1.0, abs=1e-9)
    assert connection_probability(E_INV_DISTANCE_SF7, 7, budget) \
        == pytest.approx(math.exp(-1.0), rel=1e-12)
    # higher SF tolerates lower SNR, so it connects better at any distance
    assert connection_probability(2000.0, 12, budget) \
        > connection_probability(2000.0, 7, budget)
    d = np.linspace(10.0, 5000.0, 40)
    conn = [connection_probability(x, 9, budget) for x in d]
    assert all(a > b for a, b in zip(conn, conn[1:]))


def test_connection_matches_rayleigh_sampling():
    budget = LinkBudget()
    rng = np.random.default_rng(41)
    fades = rng.exponential(size=500_000)
    for distance, sf in ((15_000.0, 12), (4000.0, 7)):
        margin = (analytics.dbm_to_mw(budget.noise_dbm)
                  * analytics.db_to_linear(phy.snr_threshold_db(sf))
                  / (analytics.dbm_to_mw(budget.tx_power_dbm)
                     * analytics.channel_gain(distance, budget)))
        empirical = np.mean(fades >= margin)
        p = connection_probability(distance, sf, budget)
        sigma = math.sqrt(p * (1.0 - p) / fades.size)
        assert abs(empirical - p) < 3.0 * sigma, (distance, sf)


def test_capture_without_interferers():
    cfg = PhyConfig()
    budget = LinkBudget()
    assert capture_probability(250.0, (200.0, 300.0), 12, 0.0, cfg, budget) \
        == 1.0


@pytest.mark.parametrize("distance,ring", [
    (250.0, (200.0, 300.0)),
    (50.0, (1.0, 500.0)),
    (960.0, (918.0190277358553, 961.8154168597632)),
])
def test_interference_area_matches_quadrature(distance, ring):
    # same integral evaluated two ways: closed form vs adaptive quadrature
    budget = LinkBudget()
    eta = budget.path_loss_exponent
    delta = analytics.db_to_linear(budget.capture_threshold_db)

    def weight(r):
        return 2.0 * math.pi * r / (1.0 + r ** eta / (delta * distance ** eta))

    integral, err = integrate.quad(weight, ring[0], ring[1], epsrel=1e-12)
    area = interference_area(distance, ring, budget)
    assert 2.0 * math.pi * area == pytest.approx(integral, rel=1e-8)


def test_capture_matches_field_sampling():
    # Poisson field of active interferers, Rayleigh fades integrated out:
    # the survival product 1/(1 + delta (d/r)^eta) averaged over the field
    cfg = PhyConfig()
    budget = LinkBudget()
    distance, ring, sf, rho_eff = 250.0, (200.0, 300.0), 12, 2e-4
    q = capture_probability(distance, ring, sf, rho_eff, cfg, budget)
    assert 0.7 < q < 0.9  # keep the MC comparison meaningful

    eta = budget.path_loss_exponent
    delta = analytics.db_to_linear(budget.capture_threshold_db)
    lam = 2.0 * phy.duty_cycle(cfg, sf) * rho_eff
    ring_area = math.pi * (ring[1] ** 2 - ring[0] ** 2)
    trials = 400_000
    rng = np.random.default_rng(12)
    counts = rng.poisson(lam * ring_area, size=trials)
    total = int(counts.sum())
    r = np.sqrt(ring[0] ** 2 + rng.random(total) * (ring[1] ** 2 - ring[0] ** 2))
    log_w = -np.log1p(delta * (distance / r) ** eta)
    owner = np.repeat(np.arange(trials), counts)
    per_trial = np.exp(np.bincount(owner, weights=log_w, minlength=trials))
    est = per_trial.mean()
    sigma = per_trial.std(ddof=1) / math.sqrt(trials)
    assert abs(est - q) < 3.0 * sigma


def test_single_tx_outage_composition():
    cfg = PhyConfig()
    budget = LinkBudget()
    for d in (100.0, 300.0, 420.0):
        ring = (1.0, 433.61124531755485)
        o = single_tx_outage(d, ring, 7, 1e-4, cfg, budget)
        h = connection_probability(d, 7, budget)
        q = capture_probability(d, ring, 7, 1e-4, cfg, budget)
        assert o == pytest.approx(1.0 - h * q, rel=1e-14)
        lin = single_tx_outage_linearized(d, ring, 7, 1e-4, cfg, budget)
        assert lin == pytest.approx(o, rel=0.05)
        assert lin >= o  # 1 - e^-x <= x


def test_rt_outage_powers():
    assert rt_lora_outage(0.1, 1) == pytest.approx(0.1)
    assert rt_lora_outage(0.1, 2) == pytest.approx(0.01)
    assert rt_lora_outage(0.0, 3) == 0.0
    assert rt_lora_outage(1.0, 3) == 1.0
    with pytest.raises(ValueError):
        rt_lora_outage(0.1, 0)
    with pytest.raises(ValueError):
        rt_lora_outage(1.2, 2)


def test_ncc_outage_boundaries():
    assert ncc_outage(0.0, 0.5) == 0.0
    assert ncc_outage(0.5, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert ncc_outage(1.0, 1.0) == pytest.approx(1.0, rel=1e-15)
    # partner never delivers: s1 needs its own frame or both parities,
    # which with o2 = 1 kills p2, leaving o1 * (anything with p1) cases
    assert ncc_outage(0.3, 1.0) == pytest.approx(
        oracles.ncc_outage_by_enumeration(0.3, 1.0), abs=1e-15)


def test_ncc_outage_high_snr_limit():
    # three-way diversity: outage shrinks like 3 o^3 for small o
    ratios = [ncc_outage(o, o) / (3.0 * o ** 3)
              for o in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert abs(ratios[1] - 1.0) < 0.02
    deviations = [abs(r - 1.0) for r in ratios]
    assert deviations == sorted(deviations, reverse=True)
    assert deviations[-1] < 1e-4


def test_ncc_outage_matches_pattern_enumeration():
    grid = np.linspace(0.025, 0.975, 20)
    for o1 in grid:
        for o2 in grid:
            expected = oracles.ncc_outage_by_enumeration(float(o1), float(o2))
            assert ncc_outage(float(o1), float(o2)) \
                == pytest.approx(expected, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(o1=st.floats(0.0, 1.0), o2=st.floats(0.0, 1.0),
       p=st.floats(0.0, 1.0))
def test_outage_values_stay_probabilities(o1, o2, p):
    v = ncc_outage(o1, o2)
    assert 0.0 <= v <= 1.0
    assert 0.0 <= ncc_lora_outage(o1, o2, p) <= 1.0
    # an extra replica never hurts
    assert rt_lora_outage(o1, 2) <= rt_lora_outage(o1, 1)


def test_mixture_collapses_at_extremes():
    o1, o2 = 0.07, 0.11
    assert ncc_lora_outage(o1, o2, 1.0) == pytest.approx(ncc_outage(o1, o2))
    assert ncc_lora_outage(o1, o2, 0.0) == pytest.approx(o1 * o1, rel=1e-15)
    p = 0.37
    expanded = (o1 * o1
                - p * (o1 * o1 - 2.0 * o1 * o1 * o2 - o1 * o2 * o2
                       + 2.0 * o1 * o1 * o2 * o2))
    assert ncc_lora_outage(o1, o2, p) == pytest.approx(expanded, abs=1e-15)


def test_cooperation_probability_composition():
    d2d = D2dParams()
    area = 5000.0
    p = cooperation_probability(1e-4, area, d2d)
    assert p == pytest.approx((1.0 - 0.012) * (1.0 - math.exp(-0.5)), rel=1e-12)
    assert cooperation_probability(0.0, area, d2d) == 0.0


def test_solved_layouts_reproduce_reference_values():
    for scheme, expected in ((LORA, LORA_BOUNDARIES),
                             (RT_LORA, RT_BOUNDARIES),
                             (NCC_LORA, NCC_BOUNDARIES)):
        layout = solve_ring_layout(scheme, 1e-4, 1e-2)
        for got, want in zip(layout.boundaries, expected):
            assert got == pytest.approx(want, rel=1e-9), scheme.kind


def test_layout_grows_with_target_and_shrinks_with_density():
    radii = [solve_ring_layout(RT_LORA, 1e-4, t).network_radius
             for t in (1e-3, 1e-2, 5e-2)]
    assert radii == sorted(radii)
    dense = solve_ring_layout(RT_LORA, 1e-3, 1e-2).network_radius
    assert dense < radii[1]


def test_boundary_and_interior_outage_meet_target():
    target = 1e-2
    for scheme in (LORA, RT_LORA, NCC_LORA):
        layout = solve_ring_layout(scheme, 1e-4, target)
        for sf in range(7, 13):
            lower, upper = layout.ring(sf)
            at_edge = scheme_outage(upper, layout, scheme, 1e-4)
            assert at_edge.scheme_outage == pytest.approx(target, abs=1e-7)
            assert at_edge.sf == sf
            inside = scheme_outage(0.5 * (lower + upper), layout, scheme, 1e-4)
            assert inside.scheme_outage <= target + 1e-9


def test_boundary_against_grid_scan():
    # brute-force scan of the SF7 repetition boundary in 0.1 m steps
    cfg = PhyConfig()
    budget = LinkBudget()
    target = 1e-2

    def rt_outage(d, upper):
        return single_tx_outage(d, (1.0, upper), 7, 2e-4, cfg, budget) ** 2

    solved = RT_BOUNDARIES[0]
    grid = np.arange(650.0, 670.0, 0.1)
    vals = np.array([rt_outage(d, d) for d in grid])
    crossing = int(np.searchsorted(vals, target))
    assert grid[crossing - 1] < solved <= grid[crossing] + 1e-12


def test_outage_breakdown_fields():
    layout = solve_ring_layout(NCC_LORA, 1e-4, 1e-2)
    bd = scheme_outage(300.0, layout, NCC_LORA, 1e-4)
    assert bd.sf == 7
    assert 0.0 < bd.cooperation < 1.0
    o1 = bd.single_tx_outage
    assert bd.scheme_outage == pytest.approx(
        ncc_lora_outage(o1, o1, bd.cooperation), rel=1e-12)
    # repetition fallback only: outage can never beat both branches
    assert bd.scheme_outage >= min(ncc_outage(o1, o1), o1 * o1) - 1e-15

    rt_bd = scheme_outage(300.0, solve_ring_layout(RT_LORA, 1e-4, 1e-2),
                          RT_LORA, 1e-4)
    assert rt_bd.cooperation == 0.0
    assert rt_bd.scheme_outage == pytest.approx(
        rt_bd.single_tx_outage ** 2, rel=1e-12)


def test_exact_area_mode_differs_mid_ring():
    layout = solve_ring_layout(NCC_LORA, 1e-4, 1e-2)
    approx = scheme_outage(415.0, layout, NCC_LORA, 1e-4, area_mode="approx")
    exact = scheme_outage(415.0, layout, NCC_LORA, 1e-4, area_mode="exact")
    # mid-SF7 the circle fits entirely in the ring: double the approx area,
    # so more cooperation and less outage
    assert exact.cooperation > approx.cooperation
    assert exact.scheme_outage < approx.scheme_outage
    with pytest.raises(ValueError):
        scheme_outage(415.0, layout, NCC_LORA, 1e-4, area_mode="median")


def test_unreachable_target_raises():
    # even a hairline ring at the 1 m floor keeps outage near 2.6e-10,
    # so targets below that are unreachable for SF7
    with pytest.raises(LayoutError):
        solve_ring_layout(LORA, 1e-4, 1e-10)


def test_duty_cap_blocks_repetitions_on_short_slots():
    cfg = PhyConfig(slot_seconds=150.0)
    # one transmission per slot still fits under the cap
    solve_ring_layout(LORA, 1e-4, 1e-2, cfg=cfg)
    with pytest.raises(DutyCycleError):
        solve_ring_layout(RT_LORA, 1e-4, 1e-2, cfg=cfg)


def test_scheme_specs():
    assert SchemeSpec.from_name("lora") == LORA
    assert SchemeSpec.from_name("rt-lora") == RT_LORA
    assert SchemeSpec.from_name("ncc-lora") == NCC_LORA
    assert LORA.replicas == 1
    assert RT_LORA.replicas == 2
    assert NCC_LORA.replicas == 2
    assert NCC_LORA.kind is SchemeKind.NCC_LORA
    with pytest.raises(ValueError):
        SchemeSpec.from_name("alamouti")


def test_supported_devices_scales_with_area():
    assert supported_devices(1e-4, 993.7303083823205) \
        == pytest.approx(1e-4 * math.pi * 993.7303083823205 ** 2, rel=1e-12)
    assert supported_devices(1e-4, 2.0) == pytest.approx(4e-4 * math.pi)
