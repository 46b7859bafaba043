import configparser
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jamguard.optics import (
    PLANCK,
    REF_BANDWIDTH_HZ,
    ChannelPlan,
    ChannelReading,
    Combiner,
    Edfa,
    Fiber,
    Jammer,
    LaunchConfig,
    LinkChain,
    Mux,
    Segment,
    add_measurement_noise,
    build_reference_chain,
    chain_from_config,
    chain_to_config,
    equalizing_offsets,
    parse_element,
    propagate,
    propagate_linear,
    readings_to_arrays,
)

ONE = ChannelPlan(channels_per_transmitter=1, transmitter_count=1)


def single_path(elements, plan=ONE):
    return LinkChain((Segment("only", tuple(elements), transmitters=(1,)),), plan)


def ase_dbm(nf, gain, freq_thz):
    # independent ledger: NF + G + 10 log10(h nu B / 1 mW)
    return nf + gain + 10 * math.log10(6.62607015e-34 * freq_thz * 1e12 * 12.5e9 / 1e-3)


# -- hand ledgers ------------------------------------------------------------------


def test_ledger_mux_edfa_fiber():
    # 19 dBm out would hit the default 17 dBm cap; raise it so the amplifier stays linear
    ch = single_path([Mux(1.0), Edfa(20.0, 5.0, 25.0), Fiber(50.0, 0.28)])
    r = propagate(ch, LaunchConfig((0.0,)))[0]
    assert r.power == pytest.approx(0 - 1 + 20 - 14, abs=1e-6)
    # OSNR set at the single amplifier output, fiber loss scales both terms
    expected_osnr = (0 - 1 + 20) - ase_dbm(5.0, 20.0, 193.1)
    assert r.osnr == pytest.approx(expected_osnr, abs=1e-6)


def test_ledger_two_stage_with_combiner():
    ch = single_path(
        [Mux(1.0), Edfa(14.0, 5.0, 17.0), Fiber(70.0, 0.28), Combiner(3.0), Edfa(20.0, 5.0, 17.0),
         Fiber(50.0, 0.28)]
    )
    r = propagate(ch, LaunchConfig((-10.0,)))[0]
    assert r.power == pytest.approx(-10 - 1 + 14 - 19.6 - 3 + 20 - 14, abs=1e-6)
    # two ASE contributions referred to the output, added in mW
    sig_out = -13.6
    ase1 = ase_dbm(5.0, 14.0, 193.1) - 19.6 - 3 + 20 - 14
    ase2 = ase_dbm(5.0, 20.0, 193.1) - 14
    ase_tot = 10 * math.log10(10 ** (ase1 / 10) + 10 ** (ase2 / 10))
    assert r.osnr == pytest.approx(sig_out - ase_tot, abs=1e-6)


def test_ledger_saturated_amplifier_shares_cap():
    plan = ChannelPlan(channels_per_transmitter=8, transmitter_count=1)
    ch = single_path([Mux(1.0), Edfa(20.0, 5.0, 17.0), Fiber(50.0, 0.28)], plan)
    readings = propagate(ch, LaunchConfig((0.0,)))
    # 8 x (0 - 1) dBm in, 28 dBm uncapped > 17 dBm: every channel gets cap / 8
    per_channel = 17.0 - 10 * math.log10(8) - 14.0
    for r in readings:
        assert r.power == pytest.approx(per_channel, abs=1e-6)


def test_reference_chain_structure(chain):
    assert len(chain.amplifiers()) == 7
    spans = [e.length for e in chain.transmitter_path(1) if isinstance(e, Fiber)]
    assert spans == [50.0, 70.0, 50.0]
    assert chain.root.name == "trunk"
    assert chain.plan.n_channels == 32


def test_channel_plan_indexing():
    plan = ChannelPlan()
    assert plan.channel_index(1, 7) == 7
    assert plan.channel_index(4, 8) == 32
    assert plan.owner(13) == 2
    assert plan.frequency(1) == pytest.approx(193.1)
    assert plan.frequency(32) == pytest.approx(193.1 + 31 * 0.1)
    assert len(set(plan.frequencies_hz())) == 32


def test_equalizing_offsets(chain):
    assert equalizing_offsets(chain).tolist() == pytest.approx([0.0, -8.0, -8.0, 0.0])


# -- properties ---------------------------------------------------------------------


@given(
    total=st.floats(10.0, 120.0),
    frac=st.floats(0.05, 0.95),
    p=st.floats(-22.0, 0.0),
)
def test_fiber_split_additivity(total, frac, p):
    whole = single_path([Mux(1.0), Edfa(20.0), Fiber(total)])
    parts = single_path([Mux(1.0), Edfa(20.0), Fiber(total * frac), Fiber(total * (1 - frac))])
    a = propagate(whole, LaunchConfig((p,)))[0]
    b = propagate(parts, LaunchConfig((p,)))[0]
    assert abs(a.power - b.power) < 1e-9
    assert abs(a.osnr - b.osnr) < 1e-9


@given(p=st.floats(-22.0, 0.0))
def test_clean_run_symmetry(chain, p):
    power, _ = readings_to_arrays(propagate(chain, LaunchConfig((p,) * 4)))
    for t in range(4):
        group = power[8 * t : 8 * t + 8]
        assert group.max() - group.min() <= 0.1


@given(
    base=st.floats(-22.0, 0.0),
    ch=st.integers(1, 32),
    e1=st.floats(1.0, 3.0),
    e2=st.floats(1.0, 3.0),
)
def test_jammer_monotonicity(chain, base, ch, e1, e2):
    lo, hi = sorted((e1, e2))
    powers = tuple(np.clip(base + equalizing_offsets(chain), -22, 0))
    a, _ = readings_to_arrays(propagate(chain, LaunchConfig(powers, Jammer(ch, lo))))
    b, _ = readings_to_arrays(propagate(chain, LaunchConfig(powers, Jammer(ch, hi))))
    assert b[ch - 1] >= a[ch - 1] - 1e-12
    others = np.arange(32) != ch - 1
    assert np.all(b[others] <= a[others] + 1e-12)


def test_jammer_starves_co_amplified_channels(chain):
    cfg = LaunchConfig((0.0,) * 4)
    clean, _ = readings_to_arrays(propagate(chain, cfg))
    jammed, _ = readings_to_arrays(propagate(chain, LaunchConfig(cfg.powers, Jammer(7, 3.0))))
    assert jammed[6] > clean[6]
    for k in (1, 2, 3, 4, 5, 6, 8):
        assert jammed[k - 1] < clean[k - 1]


@given(powers=st.lists(st.floats(-22.0, 0.0), min_size=4, max_size=4), eps=st.floats(1.0, 3.0))
def test_saturation_cap_respected(chain, powers, eps):
    cfg = LaunchConfig(tuple(powers), Jammer(13, eps))
    log = []
    propagate_linear(chain, cfg.channel_powers(chain.plan), amp_log=log)
    assert len(log) == 7
    cap_mw = 10 ** ((17.0 + 1e-6) / 10)
    assert max(log) <= cap_mw


@given(powers=st.lists(st.floats(-22.0, 0.0), min_size=4, max_size=4))
def test_readings_finite_and_positive_osnr(chain, powers):
    for r in propagate(chain, LaunchConfig(tuple(powers))):
        assert math.isfinite(r.power) and math.isfinite(r.osnr)
        assert r.osnr > 0


# -- noise --------------------------------------------------------------------------


def _flat(n):
    return [ChannelReading(k % 32 + 1, -10.0, 30.0) for k in range(n)]


def test_noise_zero_sigma_identity():
    r = _flat(32)
    assert add_measurement_noise(r, 0.0, 0.0, 5) == r


def test_noise_deterministic():
    r = _flat(64)
    assert add_measurement_noise(r, 0.3, 0.3, 9) == add_measurement_noise(r, 0.3, 0.3, 9)


def test_noise_sample_std():
    noisy = add_measurement_noise(_flat(10_000), 0.2, 0.2, 11)
    p, o = readings_to_arrays(noisy)
    assert 0.18 <= p.std(ddof=1) <= 0.22
    assert 0.18 <= o.std(ddof=1) <= 0.22


def test_noise_rejects_negative_sigma():
    with pytest.raises(ValueError):
        add_measurement_noise(_flat(2), -0.1, 0.0, 0)


# -- validation and config ---------------------------------------------------------------


@pytest.mark.parametrize(
    "cfg",
    [
        LaunchConfig((0.0, 0.0, 0.0)),
        LaunchConfig((1.0, 0.0, 0.0, 0.0)),
        LaunchConfig((-23.0, 0.0, 0.0, 0.0)),
        LaunchConfig((0.0,) * 4, Jammer(33, 2.0)),
        LaunchConfig((0.0,) * 4, Jammer(5, 3.5)),
        LaunchConfig((0.0,) * 4, Jammer(5, 0.5)),
    ],
)
def test_invalid_launch_rejected(chain, cfg):
    with pytest.raises(ValueError):
        propagate(chain, cfg)


def test_single_channel_saturates_default_amplifier():
    ch = single_path([Mux(1.0), Edfa(20.0, 5.0, 17.0), Fiber(50.0, 0.28)])
    assert propagate(ch, LaunchConfig((0.0,)))[0].power == pytest.approx(17.0 - 14.0, abs=1e-6)


def test_launch_above_saturation_rejected():
    ch = single_path([Mux(1.0), Edfa(20.0, 5.0, -5.0)])
    with pytest.raises(ValueError, match="saturation"):
        propagate(ch, LaunchConfig((0.0,)))


@pytest.mark.parametrize(
    "make",
    [
        lambda: Mux(-1.0),
        lambda: Combiner(-0.5),
        lambda: Fiber(0.0),
        lambda: Fiber(10.0, -0.1),
        lambda: Edfa(-3.0),
    ],
)
def test_element_invariants(make):
    with pytest.raises(ValueError):
        make()


def test_chain_validation():
    plan = ChannelPlan(channels_per_transmitter=1, transmitter_count=2)
    a = Segment("a", (Mux(),), transmitters=(1,))
    b = Segment("b", (Mux(),), transmitters=(2,))
    with pytest.raises(ValueError, match="root"):
        LinkChain((a, b), plan)
    with pytest.raises(ValueError, match="unknown"):
        LinkChain((a, Segment("b", (), upstream=("zz",), transmitters=(2,))), plan)
    with pytest.raises(ValueError, match="exactly one segment"):
        LinkChain((Segment("a", (), transmitters=(1,)),), plan)


def test_chain_config_round_trip(chain):
    text = chain_to_config(chain)
    parser = configparser.ConfigParser()
    parser.read_string(text)
    again = chain_from_config(parser)
    assert again == chain
    cfg = LaunchConfig((-5.0, -12.0, -12.0, -5.0), Jammer(27, 2.0))
    assert propagate(again, cfg) == propagate(chain, cfg)


def test_chain_preset_and_errors():
    parser = configparser.ConfigParser()
    parser.read_string("[chain]\npreset = fig1-reference\n")
    assert chain_from_config(parser) == build_reference_chain()
    parser = configparser.ConfigParser()
    parser.read_string("[chain]\npreset = nope\n")
    with pytest.raises(ValueError):
        chain_from_config(parser)
    assert parse_element("edfa:14") == Edfa(14.0)
    with pytest.raises(ValueError):
        parse_element("laser:3")


def test_constants_consistent():
    # h nu B at 193.1 THz is about -58 dBm
    assert 10 * math.log10(PLANCK * 193.1e12 * REF_BANDWIDTH_HZ * 1e3) == pytest.approx(-58.0, abs=0.1)
