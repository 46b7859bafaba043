"""
Discrete-event simulation of lightpaths under jamming and periodic reallocation.

Requests arrive as a Poisson process, each either authorized or
unauthorized, and are admitted by first-fit wavelength on the shorter of
two candidate paths, then the longer one. An authorized lightpath is
exposed while some unauthorized lightpath shares one of its links at a
wavelength offset within the attack radius.

Control events arrive as a separate Poisson process. With probability
``p_a`` the attack is detected and a reallocation runs: with probability
``p_l`` only the exposed authorized lightpaths are moved, otherwise all of
them. A moved lightpath goes to a uniformly random free (path, wavelength)
among its candidates, other than the one it held.

Each authorized lightpath's lifetime is cut into intervals at the
reallocations that target it. An interval counts as jammed if the
lightpath was exposed at any moment during it.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .topology import Topology, load_nsfnet

AUTH, UNAUTH = 0, 1
_ARRIVAL, _DEPARTURE, _CONTROL = 0, 1, 2


@dataclass(frozen=True)
class SimParams:
    arrival_rate: float = 200.0
    holding_mean: float = 10.0  # tau_c
    realloc_mean: float = 10.0  # tau_r
    unauthorized_fraction: float = 0.01
    p_a: float = 1.0
    p_l: float = 0.0
    attack_radius: int = 1
    seed: int = 0
    n_requests: int = 100_000
    warmup: int = 1_000
    record_log: bool = True

    def __post_init__(self):
        for name in ("arrival_rate", "holding_mean", "realloc_mean"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("unauthorized_fraction", "p_a", "p_l"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.attack_radius < 0:
            raise ValueError("attack_radius must be >= 0")
        if self.n_requests < 1 or self.warmup < 0:
            raise ValueError("n_requests must be >= 1 and warmup >= 0")


@dataclass
class ExposureStats:
    params: SimParams
    # per counted authorized lightpath
    intervals: np.ndarray
    jammed_intervals: np.ndarray
    realloc_instances: np.ndarray
    continued_instances: np.ndarray
    # per control event after warm-up: executed, localized, targeted, moved, active authorized
    control: np.ndarray = field(default_factory=lambda: np.zeros((0, 5), dtype=int))
    arrivals: int = 0
    admitted: int = 0
    blocked: int = 0
    start_time: float = 0.0
    end_time: float = 0.0
    mean_active: float = 0.0

    @property
    def total_intervals(self) -> int:
        return int(self.intervals.sum())

    @property
    def total_jammed(self) -> int:
        return int(self.jammed_intervals.sum())

    @property
    def total_instances(self) -> int:
        return int(self.realloc_instances.sum())

    @property
    def total_continued(self) -> int:
        return int(self.continued_instances.sum())


@dataclass
class SimResult:
    stats: ExposureStats
    log: list


def _nth_bit(mask, n):
    """Index of the ``n``-th (0-based) set bit of ``mask``."""
    for _ in range(n):
        mask &= mask - 1
    return (mask & -mask).bit_length() - 1


class _Network:
    """Wavelength occupancy; free wavelengths per link kept as integer bitmasks."""

    def __init__(self, topo: Topology, radius: int):
        self.topo = topo
        self.radius = radius
        W = topo.wavelengths
        self.owner = [[-1] * W for _ in topo.links]
        self.free = [(1 << W) - 1] * len(topo.links)
        self.links = {}  # lp -> tuple of link ids
        self.wl = {}  # lp -> wavelength
        self.path_idx = {}

    def free_mask(self, links) -> int:
        m = -1
        for l in links:
            m &= self.free[l]
        return m

    def place(self, lp, links, w, path_idx):
        bit = ~(1 << w)
        for l in links:
            self.owner[l][w] = lp
            self.free[l] &= bit
        self.links[lp] = links
        self.wl[lp] = w
        self.path_idx[lp] = path_idx

    def remove(self, lp):
        w = self.wl[lp]
        for l in self.links[lp]:
            self.owner[l][w] = -1
            self.free[l] |= 1 << w
        del self.links[lp], self.wl[lp], self.path_idx[lp]

    def occupancy(self) -> np.ndarray:
        return np.array(self.owner, dtype=np.int64).reshape(len(self.topo.links), -1)

    def neighbours(self, lp):
        """Lightpath ids within the attack radius on any of ``lp``'s links."""
        w = self.wl[lp]
        W = self.topo.wavelengths
        out = set()
        for l in self.links[lp]:
            row = self.owner[l]
            for d in range(1, self.radius + 1):
                for w2 in (w - d, w + d):
                    if 0 <= w2 < W and row[w2] >= 0:
                        out.add(row[w2])
        return out


class ExposureTracker:
    """Jamming-exposure bookkeeping shared by the random simulator and replays.

    An authorized lightpath's current interval is flagged jammed as soon as
    it is exposed; the interval closes at departure, at a reallocation that
    targets it, or at the end of the run (censoring).
    """

    def __init__(self, topo: Topology, radius: int):
        self.topo = topo
        self.net = _Network(topo, radius)
        self.cls = {}
        self.active_auth = set()
        self.counted = set()
        self.jam_flag = {}
        self.counts = {}  # lp -> [intervals, jammed, instances, continued]

    def exposed(self, lp) -> bool:
        cls = self.cls
        return any(cls[o] == UNAUTH for o in self.net.neighbours(lp))

    def first_fit(self, s, d):
        """(path index, links, wavelength) for a new request, or None if blocked."""
        for k, links in enumerate(self.topo.candidate_paths(s, d)):
            free = self.net.free_mask(links)
            if free:
                return k, links, (free & -free).bit_length() - 1
        return None

    def admit(self, lp, cls, links, w, path_idx, counted=True):
        if self.net.free_mask(links) >> w & 1 == 0:
            raise ValueError(f"lightpath {lp}: wavelength {w} is not free on its route")
        self.net.place(lp, links, w, path_idx)
        self.cls[lp] = cls
        if cls == UNAUTH:
            for o in self.net.neighbours(lp):
                if self.cls[o] == AUTH:
                    self.jam_flag[o] = True
        else:
            self.active_auth.add(lp)
            self.counts[lp] = [0, 0, 0, 0]
            if counted:
                self.counted.add(lp)
            self.jam_flag[lp] = self.exposed(lp)

    def _close(self, lp):
        c = self.counts[lp]
        c[0] += 1
        c[1] += self.jam_flag[lp]

    def release(self, lp):
        self.net.remove(lp)
        if self.cls[lp] == AUTH:
            self.active_auth.discard(lp)
            self._close(lp)

    def begin_reallocation(self, targets):
        return {lp: self.exposed(lp) for lp in targets}

    def end_reallocation(self, targets, before):
        for lp in targets:
            after = self.exposed(lp)
            c = self.counts[lp]
            c[2] += 1
            c[3] += before[lp] and after
            self._close(lp)
            self.jam_flag[lp] = after

    def move_options(self, lp, s, d):
        """Free (path, wavelength) bitmasks for ``lp`` after lifting it off the
        network, excluding the slot it held."""
        path_idx, w = self.net.path_idx[lp], self.net.wl[lp]
        self.net.remove(lp)
        cands = self.topo.candidate_paths(s, d)
        free = [self.net.free_mask(links) for links in cands]
        free[path_idx] &= ~(1 << w)
        return cands, free, (path_idx, w)

    def finish(self, params) -> "ExposureStats":
        for lp in self.active_auth:
            self._close(lp)
        self.active_auth = set()
        rows = np.array([self.counts[lp] for lp in sorted(self.counted)], dtype=np.int64)
        rows = rows.reshape(-1, 4)
        return ExposureStats(
            params=params,
            intervals=rows[:, 0],
            jammed_intervals=rows[:, 1],
            realloc_instances=rows[:, 2],
            continued_instances=rows[:, 3],
        )


def simulate(params: SimParams, topology: Topology | None = None) -> SimResult:
    """Run one simulation; see the module docstring for the model."""
    topo = topology or load_nsfnet()
    p = params
    ss = np.random.SeedSequence(p.seed)
    traffic_rng, control_rng, detect_rng, move_rng = (np.random.default_rng(s) for s in ss.spawn(4))

    total = p.warmup + p.n_requests
    arrival_t = np.cumsum(traffic_rng.exponential(1.0 / p.arrival_rate, total))
    holding = traffic_rng.exponential(p.holding_mean, total)
    pairs = topo.pairs
    pair_idx = traffic_rng.integers(len(pairs), size=total)
    cls = np.where(traffic_rng.random(total) < p.unauthorized_fraction, UNAUTH, AUTH)
    t_start = float(arrival_t[p.warmup - 1]) if p.warmup > 0 else 0.0
    t_end = float(arrival_t[-1])

    tr = ExposureTracker(topo, p.attack_radius)
    net = tr.net
    control_rows = []
    log = [] if p.record_log else None
    admitted = blocked = 0
    area = 0.0
    last_t = t_start

    heap = [(float(arrival_t[0]), 0, _ARRIVAL, 0)]
    heapq.heappush(heap, (float(control_rng.exponential(p.realloc_mean)), 1, _CONTROL, -1))
    seq = 2

    while heap:
        t, _, kind, i = heapq.heappop(heap)
        if t > t_end:
            break
        if t > t_start:
            area += len(net.links) * (t - max(last_t, t_start))
            last_t = t

        if kind == _ARRIVAL:
            if i + 1 < total:
                heapq.heappush(heap, (float(arrival_t[i + 1]), seq, _ARRIVAL, i + 1))
                seq += 1
            c = int(cls[i])
            placed = tr.first_fit(*pairs[pair_idx[i]])
            if placed is None:
                blocked += i >= p.warmup
                if log is not None:
                    log.append((t, "block", i, c))
                continue
            k, links, w = placed
            tr.admit(i, c, links, w, k, counted=i >= p.warmup)
            admitted += i >= p.warmup
            heapq.heappush(heap, (t + float(holding[i]), seq, _DEPARTURE, i))
            seq += 1
            if log is not None:
                log.append((t, "arrive", i, c, k, w))

        elif kind == _DEPARTURE:
            tr.release(i)
            if log is not None:
                log.append((t, "depart", i))

        else:
            heapq.heappush(heap, (t + float(control_rng.exponential(p.realloc_mean)), seq, _CONTROL, -1))
            seq += 1
            executed = bool(detect_rng.random() < p.p_a)
            localized = bool(detect_rng.random() < p.p_l)
            n_target = n_moved = 0
            if executed:
                auth = sorted(tr.active_auth)
                before = tr.begin_reallocation(auth)
                targets = [lp for lp in auth if before[lp]] if localized else auth
                for j in move_rng.permutation(len(targets)):
                    lp = targets[j]
                    cands, free, (k_old, w_old) = tr.move_options(lp, *pairs[pair_idx[lp]])
                    counts = [f.bit_count() for f in free]
                    n_opt = sum(counts)
                    if n_opt:
                        r = int(move_rng.integers(n_opt))
                        k = 0
                        while r >= counts[k]:
                            r -= counts[k]
                            k += 1
                        net.place(lp, cands[k], _nth_bit(free[k], r), k)
                        n_moved += 1
                    else:
                        net.place(lp, cands[k_old], w_old, k_old)
                tr.end_reallocation(targets, before)
                n_target = len(targets)
            if t > t_start:
                control_rows.append((executed, localized, n_target, n_moved, len(tr.active_auth)))
            if log is not None:
                log.append((t, "control", int(executed), int(localized), n_target, n_moved))

    if t_end > last_t:
        area += len(net.links) * (t_end - max(last_t, t_start))
    stats = tr.finish(p)
    stats.control = np.array(control_rows, dtype=int).reshape(-1, 5)
    stats.arrivals = p.n_requests
    stats.admitted = admitted
    stats.blocked = blocked
    stats.start_time = t_start
    stats.end_time = t_end
    stats.mean_active = area / (t_end - t_start) if t_end > t_start else 0.0
    return SimResult(stats, log if log is not None else [])


def replay(events, topology: Topology, attack_radius: int = 1) -> ExposureStats:
    """Run a scripted event list through the exposure accounting.

    Events, in order:
      ``("arrive", lp, cls, s, d, path_idx, wavelength)``
      ``("depart", lp)``
      ``("realloc", targets, moves)`` with ``moves`` mapping lp -> (path_idx, wavelength);
      targeted lightpaths missing from ``moves`` keep their slot.
    """
    tr = ExposureTracker(topology, attack_radius)
    ends = {}
    for ev in events:
        kind = ev[0]
        if kind == "arrive":
            _, lp, cls, s, d, k, w = ev
            links = topology.candidate_paths(s, d)[k]
            ends[lp] = (s, d)
            tr.admit(lp, cls, links, w, k)
        elif kind == "depart":
            tr.release(ev[1])
        elif kind == "realloc":
            _, targets, moves = ev
            targets = sorted(targets)
            before = tr.begin_reallocation(targets)
            for lp, (k, w) in moves.items():
                cands, free, _ = tr.move_options(lp, *ends[lp])
                if not free[k] >> w & 1:
                    raise ValueError(f"lightpath {lp}: slot ({k}, {w}) is not available")
                tr.net.place(lp, cands[k], w, k)
            tr.end_reallocation(targets, before)
        else:
            raise ValueError(f"unknown event kind {kind!r}")
    return tr.finish(SimParams(attack_radius=attack_radius))
