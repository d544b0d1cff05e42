"""Event-driven simulation of one handover under a CBR multicast stream.

A trial draws every timer once, replays the signalling of the chosen scheme
on a small event queue and pushes CBR packets through the routers.  Packets
enter at the *anchor*, the node whose forwarding decision the handover
changes: the home agent for bi-directional tunnelling, the previous access
router (AR1) for the reactive and predictive schemes.  Reachability over the
old access path is judged when a packet passes the anchor; over the new path
it is judged when the packet leaves AR2.

Packets forwarded to AR2 before the mobile node has re-attached are dropped
there; nothing is buffered.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable, Sequence

from .analytic import NetworkGeometry, Scheme
from .stochastic import PerturbedTimer, RandomSource

# same-instant ordering: routing/attachment changes act before packets
PROTOCOL, PACKET = 0, 1


@dataclass(frozen=True)
class TimerSet:
    """One perturbed timer per geometry entry; defaults are the standard timer table."""

    anticipation: PerturbedTimer = PerturbedTimer(50.0, 30.0)
    l2_handoff: PerturbedTimer = PerturbedTimer(50.0, 10.0)
    local_ip: PerturbedTimer = PerturbedTimer(0.0, 0.0)
    m1: PerturbedTimer = PerturbedTimer(2.0, 1.0)
    m2: PerturbedTimer = PerturbedTimer(2.0, 1.0)
    l1: PerturbedTimer = PerturbedTimer(20.0, 2.5)
    l2: PerturbedTimer = PerturbedTimer(20.0, 2.5)
    router_distance: PerturbedTimer = PerturbedTimer(0.0, 2.5)

    def with_router_distance(self, mean: float) -> TimerSet:
        return replace(self, router_distance=PerturbedTimer(mean, self.router_distance.perturbation))

    def sample(self, u: Sequence[float]) -> NetworkGeometry:
        """Map one uniform per timer (declaration order) onto a geometry."""
        return NetworkGeometry(
            t_Ant=self.anticipation.from_uniform(u[0]),
            t_L2=self.l2_handoff.from_uniform(u[1]),
            t_local_IP=self.local_ip.from_uniform(u[2]),
            t_m1=self.m1.from_uniform(u[3]),
            t_m2=self.m2.from_uniform(u[4]),
            t_l1=self.l1.from_uniform(u[5]),
            t_l2=self.l2.from_uniform(u[6]),
            t_l3=self.router_distance.from_uniform(u[7]),
        )

    def means(self) -> NetworkGeometry:
        return self.sample([0.5] * N_TIMERS)

    @classmethod
    def fixed(cls, g: NetworkGeometry) -> TimerSet:
        """Zero-variance timers reproducing ``g`` on every draw."""
        return cls(
            anticipation=PerturbedTimer(g.t_Ant),
            l2_handoff=PerturbedTimer(g.t_L2),
            local_ip=PerturbedTimer(g.t_local_IP),
            m1=PerturbedTimer(g.t_m1),
            m2=PerturbedTimer(g.t_m2),
            l1=PerturbedTimer(g.t_l1),
            l2=PerturbedTimer(g.t_l2),
            router_distance=PerturbedTimer(g.t_l3),
        )


N_TIMERS = len(fields(TimerSet))


@dataclass(frozen=True)
class StreamConfig:
    packet_period: float = 10.0

    def __post_init__(self):
        if not self.packet_period > 0:
            raise ValueError(f"packet_period must be > 0, got {self.packet_period}")


@dataclass(frozen=True)
class TrialConfig:
    scheme: Scheme = Scheme.REACTIVE
    timers: TimerSet = field(default_factory=TimerSet)
    stream: StreamConfig = field(default_factory=StreamConfig)


@dataclass(frozen=True)
class SchemeOutcome:
    lost_packets: int
    loss_window: float
    added_delay: float
    prediction_completed: bool | None
    sampled_timers: NetworkGeometry
    phase: float = 0.0
    delivered_packets: int = 0


class EventQueue:
    """Minimal discrete-event scheduler ordered by (time, priority, insertion)."""

    def __init__(self):
        self._heap: list = []
        self._seq = 0
        self.now = 0.0

    def schedule(self, time: float, action: Callable[[], None], priority: int = PROTOCOL):
        heapq.heappush(self._heap, (time, priority, self._seq, action))
        self._seq += 1

    def run(self):
        heap = self._heap
        while heap:
            time, _, _, action = heapq.heappop(heap)
            self.now = time
            action()


class _Handover:
    """State of one handover: mobile node attachment and the anchor's route."""

    def __init__(self, g: NetworkGeometry, scheme: Scheme):
        self.g = g
        self.scheme = scheme
        self.queue = EventQueue()
        self.attached = "AR1"
        self.forwarding = False
        if scheme is Scheme.BT:
            self.old_delay = g.t_l1 + g.t_m1
            self.fwd_delay = g.t_l2
        else:
            self.old_delay = g.t_m1
            self.fwd_delay = g.t_l3
        self.t_detach = math.nan
        self.t_attach = math.nan
        self.t_switch = math.nan
        self.completed: bool | None = None
        self.lost = 0
        self.delivered = 0

    # signalling ---------------------------------------------------------

    def detach(self):
        self.attached = None
        self.t_detach = self.queue.now

    def attach(self):
        self.attached = "AR2"
        self.t_attach = self.queue.now

    def switch_route(self):
        self.forwarding = True
        self.t_switch = self.queue.now

    def attach_and_update(self):
        # reactive / BT: binding update leaves over the new access link
        self.attach()
        now, g = self.queue.now, self.g
        upstream = g.t_l2 if self.scheme is Scheme.BT else g.t_l3
        self.queue.schedule(now + g.t_m2 + upstream, self.switch_route)

    def schedule_signalling(self):
        g, q = self.g, self.queue
        if self.scheme is Scheme.PREDICTIVE:
            # FBU to AR1, HI to AR2, HACK back to AR1 -> AR1 forwards
            hack_at = g.t_m1 + g.t_l3 + g.t_l3
            q.schedule(hack_at, self.switch_route)
            q.schedule(g.t_Ant, self.detach)
            q.schedule(g.t_Ant + g.t_L2, self.attach)
            self.completed = hack_at <= g.t_Ant
        else:
            q.schedule(0.0, self.detach)
            q.schedule(g.t_L2 + g.t_local_IP, self.attach_and_update)

    # data path ----------------------------------------------------------

    def packet_at_anchor(self):
        if self.forwarding:
            self.queue.schedule(self.queue.now + self.fwd_delay, self.packet_at_ar2, PACKET)
        elif self.attached == "AR1":
            self.delivered += 1
        else:
            self.lost += 1

    def packet_at_ar2(self):
        if self.attached == "AR2":
            self.delivered += 1
        else:
            self.lost += 1

    def event_horizon(self) -> tuple[float, float]:
        g = self.g
        if self.scheme is Scheme.PREDICTIVE:
            t_detach = g.t_Ant
            last = max(g.t_m1 + 2 * g.t_l3, g.t_Ant + g.t_L2)
        else:
            t_detach = 0.0
            last = g.t_L2 + g.t_local_IP + g.t_m2 + max(g.t_l2, g.t_l3)
        return t_detach, last

    def loss_window(self) -> float:
        """Length of anchor time whose packets are never delivered.

        Packets on the old route are lost once the node has detached; packets
        on the forwarding route are lost while they would reach AR2 before the
        node attaches there.
        """
        stranded = max(self.t_switch - self.t_detach, 0.0)
        early = max(self.t_attach - self.fwd_delay - self.t_switch, 0.0)
        return stranded + early

    def added_delay(self) -> float:
        return self.fwd_delay + self.g.t_m2 - self.old_delay


def simulate_handover(g: NetworkGeometry, scheme: Scheme, period: float, phase: float) -> SchemeOutcome:
    """Run one handover for fixed timer values.

    ``phase`` in [0, 1) places the CBR emission grid relative to the detach
    instant: packets pass the anchor at ``t_detach + (phase + n) * period``.
    """
    h = _Handover(g, scheme)
    h.schedule_signalling()
    t_detach, last = h.event_horizon()
    n_lo = math.floor((-period - t_detach) / period - phase)
    n_hi = math.ceil((last + period - t_detach) / period - phase)
    for n in range(n_lo, n_hi + 1):
        h.queue.schedule(t_detach + (phase + n) * period, h.packet_at_anchor, PACKET)
    h.queue.run()
    return SchemeOutcome(
        lost_packets=h.lost,
        loss_window=h.loss_window(),
        added_delay=h.added_delay(),
        prediction_completed=h.completed,
        sampled_timers=g,
        phase=phase,
        delivered_packets=h.delivered,
    )


def run_trial(cfg: TrialConfig, rng: RandomSource) -> SchemeOutcome:
    """One stochastic trial; draws timers (fixed order) then the CBR phase."""
    u = rng.randoms(N_TIMERS + 1).tolist()
    g = cfg.timers.sample(u)
    return simulate_handover(g, cfg.scheme, cfg.stream.packet_period, u[N_TIMERS])


def _require(cfg: TrialConfig, scheme: Scheme):
    if cfg.scheme is not scheme:
        raise ValueError(f"expected a {scheme.value} trial config, got {cfg.scheme.value}")


def run_bt_trial(cfg: TrialConfig, rng: RandomSource) -> SchemeOutcome:
    _require(cfg, Scheme.BT)
    return run_trial(cfg, rng)


def run_reactive_trial(cfg: TrialConfig, rng: RandomSource) -> SchemeOutcome:
    _require(cfg, Scheme.REACTIVE)
    return run_trial(cfg, rng)


def run_predictive_trial(cfg: TrialConfig, rng: RandomSource) -> SchemeOutcome:
    _require(cfg, Scheme.PREDICTIVE)
    return run_trial(cfg, rng)


def run_trials(cfg: TrialConfig, trials: int, seed: int, key: Iterable[int] = ()) -> list[SchemeOutcome]:
    key = tuple(key)
    return [run_trial(cfg, RandomSource(seed, *key, i)) for i in range(trials)]


def proportion_ci(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Fraction and normal-approximation half-width."""
    if n < 1:
        raise ValueError("need at least one trial")
    p = successes / n
    return p, z * math.sqrt(p * (1.0 - p) / n)


def completion_probability(cfg: TrialConfig, trials: int, seed: int, key: Iterable[int] = ()) -> tuple[float, float]:
    _require(cfg, Scheme.PREDICTIVE)
    outcomes = run_trials(cfg, trials, seed, key)
    return proportion_ci(sum(o.prediction_completed for o in outcomes), trials)


@dataclass(frozen=True)
class SweepRow:
    distance: float
    scheme: Scheme
    mean_loss_packets: float
    mean_loss_window: float
    mean_added_delay: float
    completion_probability: float | None
    ci_halfwidth: float | None
    trials: int


def _sweep_point(args) -> SweepRow:
    template, scheme, index, distance, trials, seed = args
    cfg = replace(template, scheme=scheme, timers=template.timers.with_router_distance(distance))
    # trial streams are keyed by (point, trial) only, so all schemes see common random numbers
    outcomes = run_trials(cfg, trials, seed, (index,))
    completion = hw = None
    if scheme is Scheme.PREDICTIVE:
        completion, hw = proportion_ci(sum(o.prediction_completed for o in outcomes), trials)
    return SweepRow(
        distance=distance,
        scheme=scheme,
        mean_loss_packets=math.fsum(o.lost_packets for o in outcomes) / trials,
        mean_loss_window=math.fsum(o.loss_window for o in outcomes) / trials,
        mean_added_delay=math.fsum(o.added_delay for o in outcomes) / trials,
        completion_probability=completion,
        ci_halfwidth=hw,
        trials=trials,
    )


def sweep(
    template: TrialConfig,
    values: Sequence[float],
    trials: int,
    seed: int,
    schemes: Sequence[Scheme] = (Scheme.REACTIVE, Scheme.PREDICTIVE),
    workers: int = 1,
) -> list[SweepRow]:
    """Aggregate ``trials`` trials per (router-distance mean, scheme).

    Rows come out in sweep order, schemes in the given order within a point,
    whatever ``workers`` is.
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    if trials < 1:
        raise ValueError("sweep needs at least one trial per point")
    jobs = [(template, s, i, float(v), trials, seed) for i, v in enumerate(values) for s in schemes]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(job) for job in jobs]
