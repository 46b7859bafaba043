"""
Analytic physical-layer model of the four-transmitter WDM link.

Channels are carried as linear-power arrays (mW) through a tree of
segments. Each segment launches some transmitters, merges upstream
segments, then applies its elements in order. The monitor point sits at
the end of the root segment, before the demultiplexer.

EDFA saturation is modelled as a cap on total output signal power: below
the cap every channel sees the nominal gain, above it the capped total is
shared in proportion to input power (a common compressed gain). A jammer
channel therefore pulls gain away from everything it is amplified with.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PLANCK = 6.62607015e-34  # J s
REF_BANDWIDTH_HZ = 12.5e9  # 0.1 nm at 1550 nm

LAUNCH_POWER_RANGE = (-22.0, 0.0)
EPSILON_RANGE = (1.0, 3.0)


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class ChannelPlan:
    start_frequency: float = 193.1  # THz
    spacing: float = 100.0  # GHz
    channels_per_transmitter: int = 8
    transmitter_count: int = 4

    @property
    def n_channels(self) -> int:
        return self.channels_per_transmitter * self.transmitter_count

    def frequency(self, k: int) -> float:
        """Frequency in THz of global channel ``k`` (1-based)."""
        return self.start_frequency + (k - 1) * self.spacing * 1e-3

    def frequencies_hz(self) -> np.ndarray:
        k = np.arange(self.n_channels)
        return (self.start_frequency + k * self.spacing * 1e-3) * 1e12

    def channel_index(self, transmitter: int, wavelength: int) -> int:
        return self.channels_per_transmitter * (transmitter - 1) + wavelength

    def owner(self, k: int) -> int:
        """Transmitter (1-based) that owns global channel ``k``."""
        return (k - 1) // self.channels_per_transmitter + 1

    def transmitter_channels(self, transmitter: int) -> range:
        w = self.channels_per_transmitter
        return range(w * (transmitter - 1) + 1, w * transmitter + 1)


# -- elements -----------------------------------------------------------------


@dataclass(frozen=True)
class Mux:
    insertion_loss: float = 1.0

    def __post_init__(self):
        if self.insertion_loss < 0:
            raise ValueError("insertion loss must be >= 0")


@dataclass(frozen=True)
class Combiner:
    insertion_loss: float = 3.0

    def __post_init__(self):
        if self.insertion_loss < 0:
            raise ValueError("insertion loss must be >= 0")


@dataclass(frozen=True)
class Fiber:
    length: float  # km
    attenuation: float = 0.28  # dB/km

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("fiber length must be > 0")
        if self.attenuation < 0:
            raise ValueError("attenuation must be >= 0")

    @property
    def loss(self) -> float:
        return self.length * self.attenuation


@dataclass(frozen=True)
class Edfa:
    gain: float = 20.0
    noise_figure: float = 5.0
    saturation_output: float = 17.0  # dBm, total signal

    def __post_init__(self):
        if self.gain < 0:
            raise ValueError("gain must be >= 0")
        if self.noise_figure < 0:
            raise ValueError("noise figure must be >= 0")


Element = Mux | Combiner | Fiber | Edfa


@dataclass(frozen=True)
class Segment:
    name: str
    elements: tuple = ()
    upstream: tuple[str, ...] = ()
    transmitters: tuple[int, ...] = ()


@dataclass(frozen=True)
class LinkChain:
    """A merge tree of segments ending at a single monitor point."""

    segments: tuple[Segment, ...]
    plan: ChannelPlan = field(default_factory=ChannelPlan)

    def __post_init__(self):
        names = [s.name for s in self.segments]
        if len(set(names)) != len(names):
            raise ValueError("duplicate segment names")
        by_name = dict(zip(names, self.segments))
        fed = {}
        for seg in self.segments:
            for up in seg.upstream:
                if up not in by_name:
                    raise ValueError(f"segment {seg.name!r} references unknown {up!r}")
                if up in fed:
                    raise ValueError(f"segment {up!r} feeds more than one segment")
                fed[up] = seg.name
        roots = [n for n in names if n not in fed]
        if len(roots) != 1:
            raise ValueError(f"chain must have exactly one root segment, found {roots}")
        launched = [t for s in self.segments for t in s.transmitters]
        expected = list(range(1, self.plan.transmitter_count + 1))
        if sorted(launched) != expected:
            raise ValueError("every transmitter must launch into exactly one segment")
        # every segment must reach the root without cycles
        for n in names:
            seen = set()
            while n in fed:
                if n in seen:
                    raise ValueError("segment graph contains a cycle")
                seen.add(n)
                n = fed[n]

    @property
    def root(self) -> Segment:
        fed = {up for s in self.segments for up in s.upstream}
        return next(s for s in self.segments if s.name not in fed)

    def segment(self, name: str) -> Segment:
        for s in self.segments:
            if s.name == name:
                return s
        raise KeyError(name)

    def transmitter_path(self, transmitter: int) -> list:
        """Elements seen by ``transmitter``'s channels, source to monitor."""
        downstream = {up: s.name for s in self.segments for up in s.upstream}
        seg = next(s for s in self.segments if transmitter in s.transmitters)
        path = list(seg.elements)
        while seg.name in downstream:
            seg = self.segment(downstream[seg.name])
            path.extend(seg.elements)
        return path

    def amplifiers(self) -> list[Edfa]:
        return [e for s in self.segments for e in s.elements if isinstance(e, Edfa)]

    def net_gain(self, transmitter: int) -> float:
        """Small-signal (unsaturated) end-to-end gain in dB."""
        total = 0.0
        for e in self.transmitter_path(transmitter):
            if isinstance(e, Edfa):
                total += e.gain
            elif isinstance(e, Fiber):
                total -= e.loss
            else:
                total -= e.insertion_loss
        return total


# -- launch and readings -------------------------------------------------------


@dataclass(frozen=True)
class Jammer:
    channel: int
    epsilon: float


@dataclass(frozen=True)
class LaunchConfig:
    powers: tuple[float, ...]  # dBm per transmitter
    jammer: Jammer | None = None

    def validate(self, plan: ChannelPlan, strict: bool = True):
        if len(self.powers) != plan.transmitter_count:
            raise ValueError(
                f"expected {plan.transmitter_count} launch powers, got {len(self.powers)}"
            )
        if not all(np.isfinite(self.powers)):
            raise ValueError("launch powers must be finite")
        lo, hi = LAUNCH_POWER_RANGE
        if strict and any(p < lo or p > hi for p in self.powers):
            raise ValueError(f"launch powers must lie in [{lo}, {hi}] dBm")
        if self.jammer is not None:
            if not 1 <= self.jammer.channel <= plan.n_channels:
                raise ValueError(f"jammer channel {self.jammer.channel} out of range")
            elo, ehi = EPSILON_RANGE
            if strict and not elo <= self.jammer.epsilon <= ehi:
                raise ValueError(f"jammer epsilon must lie in [{elo}, {ehi}] dB")

    def channel_powers(self, plan: ChannelPlan) -> np.ndarray:
        """Launch power (dBm) of every global channel, jammer applied."""
        p = np.repeat(np.asarray(self.powers, dtype=float), plan.channels_per_transmitter)
        if self.jammer is not None:
            p[self.jammer.channel - 1] += self.jammer.epsilon
        return p


@dataclass(frozen=True)
class ChannelReading:
    channel: int
    power: float  # dBm
    osnr: float  # dB


# -- propagation ---------------------------------------------------------------


class _State:
    __slots__ = ("sig", "ase", "present")

    def __init__(self, n):
        self.sig = np.zeros(n)
        self.ase = np.zeros(n)
        self.present = np.zeros(n, dtype=bool)

    def merge(self, other):
        if np.any(self.present & other.present):
            raise ValueError("two branches carry the same channel")
        self.sig += other.sig
        self.ase += other.ase
        self.present |= other.present


def _apply(element, state, freqs_hz, amp_log):
    if isinstance(element, Edfa):
        g = db_to_lin(element.gain)
        total_in = state.sig[state.present].sum()
        cap = db_to_lin(element.saturation_output)
        if total_in * g > cap:
            g = cap / total_in
        state.sig *= g
        # ASE referred to the amplifier output, in the reference bandwidth
        ase_new = db_to_lin(element.noise_figure) * PLANCK * freqs_hz * REF_BANDWIDTH_HZ * g * 1e3
        state.ase = state.ase * g + np.where(state.present, ase_new, 0.0)
        amp_log.append(state.sig[state.present].sum())
    else:
        loss = element.loss if isinstance(element, Fiber) else element.insertion_loss
        a = db_to_lin(-loss)
        state.sig *= a
        state.ase *= a


def propagate_linear(chain: LinkChain, launch_dbm: np.ndarray, amp_log=None):
    """Propagate per-channel launch powers (dBm); return (signal_mW, ase_mW).

    ``launch_dbm`` holds one value per global channel. ``amp_log``, if a
    list, receives the total output signal power (mW) of each amplifier in
    evaluation order.
    """
    plan = chain.plan
    launch_dbm = np.asarray(launch_dbm, dtype=float)
    if launch_dbm.shape != (plan.n_channels,):
        raise ValueError(f"need {plan.n_channels} channel powers")
    freqs = plan.frequencies_hz()
    if amp_log is None:
        amp_log = []
    launch_mw = db_to_lin(launch_dbm)

    def run(seg):
        st = _State(plan.n_channels)
        for up in seg.upstream:
            st.merge(run(chain.segment(up)))
        for t in seg.transmitters:
            idx = np.asarray(plan.transmitter_channels(t)) - 1
            src = _State(plan.n_channels)
            src.sig[idx] = launch_mw[idx]
            src.present[idx] = True
            st.merge(src)
        for e in seg.elements:
            _apply(e, st, freqs, amp_log)
        return st

    st = run(chain.root)
    return st.sig, st.ase


def propagate(chain: LinkChain, cfg: LaunchConfig, strict: bool = True) -> list[ChannelReading]:
    """Per-channel received power and OSNR at the monitor point.

    Raises ValueError if ``cfg`` is outside the launch envelope, or if any
    launched channel already exceeds an amplifier's saturation output.
    """
    plan = chain.plan
    cfg.validate(plan, strict=strict)
    launch = cfg.channel_powers(plan)
    cap = min((a.saturation_output for a in chain.amplifiers()), default=np.inf)
    if np.any(launch > cap):
        raise ValueError("launch power exceeds EDFA saturation output")
    sig, ase = propagate_linear(chain, launch)
    power = lin_to_db(sig)
    osnr = lin_to_db(sig / ase)
    return [
        ChannelReading(k + 1, float(power[k]), float(osnr[k])) for k in range(plan.n_channels)
    ]


def readings_to_arrays(readings: Sequence[ChannelReading]):
    power = np.array([r.power for r in readings])
    osnr = np.array([r.osnr for r in readings])
    return power, osnr


def add_measurement_noise(readings, sigma_power, sigma_osnr, rng_seed):
    """Add independent zero-mean Gaussian noise to power and OSNR readings."""
    if sigma_power < 0 or sigma_osnr < 0:
        raise ValueError("noise sigmas must be >= 0")
    rng = np.random.default_rng(rng_seed)
    n = len(readings)
    dp = rng.normal(0.0, 1.0, n) * sigma_power
    do = rng.normal(0.0, 1.0, n) * sigma_osnr
    return [
        ChannelReading(r.channel, r.power + float(dp[i]), r.osnr + float(do[i]))
        for i, r in enumerate(readings)
    ]


# -- presets and config files ---------------------------------------------------

EDFA_LONG = Edfa(gain=20.0, noise_figure=5.0, saturation_output=17.0)  # 5 m erbium
EDFA_SHORT = Edfa(gain=14.0, noise_figure=5.0, saturation_output=17.0)  # 2 m erbium


def build_reference_chain() -> LinkChain:
    """Four transmitters x 8 channels, OXCs replaced by 3 dB combiners."""
    mux = Mux(1.0)
    comb = Combiner(3.0)
    segs = (
        Segment("tx1", (mux, EDFA_LONG, Fiber(50.0, 0.28)), transmitters=(1,)),
        Segment("tx2", (mux, EDFA_SHORT), transmitters=(2,)),
        Segment("tx3", (mux, EDFA_SHORT), transmitters=(3,)),
        Segment("tx4", (mux, EDFA_LONG, Fiber(50.0, 0.28)), transmitters=(4,)),
        Segment("node_a", (comb, EDFA_LONG, Fiber(70.0, 0.28)), upstream=("tx1", "tx2")),
        Segment("node_b", (comb, EDFA_LONG, Fiber(70.0, 0.28)), upstream=("tx3", "tx4")),
        Segment("trunk", (comb, EDFA_LONG, Fiber(50.0, 0.28)), upstream=("node_a", "node_b")),
    )
    return LinkChain(segs, ChannelPlan())


PRESETS = {"fig1-reference": build_reference_chain}


def parse_element(text: str):
    """Parse ``kind:arg:arg`` element notation.

    mux:<loss> | combiner:<loss> | fiber:<km>[:<dB/km>] | edfa:<gain>[:<nf>[:<psat>]]
    """
    kind, *args = [t.strip() for t in text.split(":")]
    vals = [float(a) for a in args]
    kind = kind.lower()
    if kind == "mux":
        return Mux(*vals)
    if kind == "combiner":
        return Combiner(*vals)
    if kind == "fiber":
        return Fiber(*vals)
    if kind == "edfa":
        return Edfa(*vals)
    raise ValueError(f"unknown element kind {kind!r}")


def format_element(e) -> str:
    if isinstance(e, Mux):
        return f"mux:{e.insertion_loss:g}"
    if isinstance(e, Combiner):
        return f"combiner:{e.insertion_loss:g}"
    if isinstance(e, Fiber):
        return f"fiber:{e.length:g}:{e.attenuation:g}"
    return f"edfa:{e.gain:g}:{e.noise_figure:g}:{e.saturation_output:g}"


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def chain_from_config(parser: configparser.ConfigParser) -> LinkChain:
    """Build a chain from ``[plan]`` and ``[segment.<name>]`` sections.

    A ``[chain]`` section with ``preset = fig1-reference`` short-circuits to
    the embedded reference chain.
    """
    if parser.has_section("chain") and parser.has_option("chain", "preset"):
        name = parser.get("chain", "preset")
        if name not in PRESETS:
            raise ValueError(f"unknown chain preset {name!r}")
        return PRESETS[name]()
    plan = ChannelPlan()
    if parser.has_section("plan"):
        s = parser["plan"]
        plan = ChannelPlan(
            start_frequency=s.getfloat("start_frequency", plan.start_frequency),
            spacing=s.getfloat("spacing", plan.spacing),
            channels_per_transmitter=s.getint("channels_per_transmitter", plan.channels_per_transmitter),
            transmitter_count=s.getint("transmitter_count", plan.transmitter_count),
        )
    segs = []
    for sec in parser.sections():
        if not sec.startswith("segment."):
            continue
        s = parser[sec]
        segs.append(
            Segment(
                name=sec[len("segment."):],
                elements=tuple(parse_element(t) for t in _split_list(s.get("elements", ""))),
                upstream=tuple(_split_list(s.get("upstream", ""))),
                transmitters=tuple(int(t) for t in _split_list(s.get("transmitters", ""))),
            )
        )
    if not segs:
        raise ValueError("config defines no segments")
    return LinkChain(tuple(segs), plan)


def load_chain(path) -> LinkChain:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        parser.read_file(fh)
    return chain_from_config(parser)


def chain_to_config(chain: LinkChain) -> str:
    p = chain.plan
    lines = [
        "[plan]",
        f"start_frequency = {p.start_frequency:g}",
        f"spacing = {p.spacing:g}",
        f"channels_per_transmitter = {p.channels_per_transmitter}",
        f"transmitter_count = {p.transmitter_count}",
    ]
    for s in chain.segments:
        lines += ["", f"[segment.{s.name}]"]
        if s.transmitters:
            lines.append("transmitters = " + ", ".join(str(t) for t in s.transmitters))
        if s.upstream:
            lines.append("upstream = " + ", ".join(s.upstream))
        lines.append("elements = " + ", ".join(format_element(e) for e in s.elements))
    return "\n".join(lines) + "\n"


def equalizing_offsets(chain: LinkChain) -> np.ndarray:
    """Per-transmitter launch offsets (dB, <= 0) that equalise small-signal
    received power: transmitters on lossier paths get more power."""
    g = np.array([chain.net_gain(t) for t in range(1, chain.plan.transmitter_count + 1)])
    return g.min() - g


def launch_grid(chain: LinkChain, base: Iterable[float]):
    """Equalised per-transmitter launch powers for each base power."""
    off = equalizing_offsets(chain)
    return [tuple(float(b + o) for o in off) for b in base]
