"""Closed-form handover windows, handover frequencies and signalling costs.

All durations are milliseconds.  Loss expressions are read as exact
disruption-window lengths; converting to packets is left to the caller
(divide by the CBR period).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Scheme(str, enum.Enum):
    BT = "bt"  # bi-directional tunnelling via the home agent (MIPv6)
    REACTIVE = "reactive"  # M-HMIPv6
    PREDICTIVE = "predictive"  # M-FMIPv6

    @classmethod
    def parse(cls, name: str) -> Scheme:
        aliases = {"hmipv6": cls.REACTIVE, "fmipv6": cls.PREDICTIVE, "mipv6": cls.BT}
        key = name.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}") from None


class HandoverKind(str, enum.Enum):
    INTRA_MAP = "intra_map"
    INTER_MAP = "inter_map"
    ANY = "any"


class SingularityError(ArithmeticError):
    """Raised where a closed form diverges (rho = 0)."""


@dataclass(frozen=True)
class NetworkGeometry:
    """Link delays and local timers of the two-router handover model.

    ``t_m1``/``t_m2`` are the access links to the old/new router, ``t_l1``/
    ``t_l2`` the paths from old/new router to the home agent or correspondent,
    ``t_l3`` the router distance.
    """

    t_m1: float = 2.0
    t_m2: float = 2.0
    t_l1: float = 20.0
    t_l2: float = 20.0
    t_l3: float = 0.0
    t_L2: float = 50.0
    t_local_IP: float = 0.0
    t_Ant: float = 50.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class LossDelayWindow:
    loss_window: float
    added_delay: float
    delta_plus: float = 0.0
    delta_minus: float = 0.0

    @property
    def delta(self) -> float:
        return self.delta_plus - self.delta_minus

    def lost_packets(self, period: float) -> float:
        return self.loss_window / period


@dataclass(frozen=True)
class MobilityParams:
    """Call holding rate ``alpha``, cell residence rate ``eta`` and ARs per MAP ``k``."""

    alpha: float
    eta: float
    k: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.k >= 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def rho(self) -> float:
        """Call-to-mobility factor alpha / eta."""
        return self.alpha / self.eta

    @classmethod
    def from_rho(cls, rho: float, eta: float = 1.0, k: float = 1.0) -> MobilityParams:
        # alpha = rho * eta, so alpha / eta can round away from rho; keep eta = 1 for exactness
        return cls(alpha=rho * eta, eta=eta, k=k)


def handoff_decomposition(g: NetworkGeometry, t_BU: float) -> float:
    """Total handoff time: layer-2 switch, local IP setup and binding update."""
    if t_BU < 0:
        raise ValueError(f"t_BU must be >= 0, got {t_BU}")
    return g.t_L2 + g.t_local_IP + t_BU


def bt_window(g: NetworkGeometry) -> LossDelayWindow:
    return LossDelayWindow(
        loss_window=g.t_L2 + g.t_local_IP + g.t_m2 + g.t_l2,
        added_delay=(g.t_l2 - g.t_l1) + (g.t_m2 - g.t_m1),
    )


def reactive_window(g: NetworkGeometry) -> LossDelayWindow:
    return LossDelayWindow(
        loss_window=g.t_L2 + g.t_local_IP + g.t_m2 + g.t_l3,
        added_delay=g.t_l3 + g.t_m2 - g.t_m1,
    )


def anticipation_slack(g: NetworkGeometry) -> tuple[float, float]:
    """``(delta_plus, delta_minus)``: how much the forwarding set-up beats or overruns t_Ant.

    Set-up takes ``t_m1 + 2 t_l3`` (FBU to the old router, HI/HACK round trip
    to the new one).
    """
    setup = 2.0 * g.t_l3 + g.t_m1
    return max(g.t_Ant - setup, 0.0), max(setup - g.t_Ant, 0.0)


def predictive_window(g: NetworkGeometry, prediction_correct: bool = True) -> LossDelayWindow:
    plus, minus = anticipation_slack(g)
    delay = g.t_l3 + g.t_m2 - g.t_m1
    if prediction_correct:
        loss = minus + max((plus - minus) + g.t_L2 - g.t_l3, 0.0)
    else:
        loss = plus + reactive_window(g).loss_window
    return LossDelayWindow(loss_window=loss, added_delay=delay, delta_plus=plus, delta_minus=minus)


def scheme_window(scheme: Scheme, g: NetworkGeometry, prediction_correct: bool = True) -> LossDelayWindow:
    if scheme is Scheme.BT:
        return bt_window(g)
    if scheme is Scheme.REACTIVE:
        return reactive_window(g)
    return predictive_window(g, prediction_correct)


def handover_probability(p: MobilityParams, use_map: bool = False) -> float:
    """Probability that the cell residence ends before the call does."""
    if use_map:
        return 1.0 / (1.0 + math.sqrt(p.k) * p.rho)
    return 1.0 / (1.0 + p.rho)


def expected_handovers(p: MobilityParams) -> float:
    """Closed form ``1/(k rho^2) + 1/(sqrt(k) rho)``, the sum over i of i q^i.

    Diverges at rho = 0, which raises :class:`SingularityError`.
    """
    rho = p.rho
    if rho == 0:
        raise SingularityError("expected number of handovers diverges at rho = 0")
    return 1.0 / (p.k * rho * rho) + 1.0 / (math.sqrt(p.k) * rho)


def map_residence_scaling(eta_AR: float, k: float) -> float:
    """Residence rate at MAP granularity: ``eta_AR / sqrt(k)``."""
    if not eta_AR > 0:
        raise ValueError(f"eta_AR must be > 0, got {eta_AR}")
    if not k >= 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return eta_AR / math.sqrt(k)


_OVERHEAD = {
    (Scheme.REACTIVE, HandoverKind.INTRA_MAP): 1,
    (Scheme.REACTIVE, HandoverKind.INTER_MAP): 2,
    (Scheme.PREDICTIVE, HandoverKind.ANY): 7,
}


def signalling_overhead(scheme: Scheme | str, handover_kind: HandoverKind | str = HandoverKind.ANY) -> int:
    """Handover signalling messages: HMIPv6 intra-MAP 1, inter-MAP 2, FMIPv6 7."""
    scheme = Scheme.parse(scheme) if isinstance(scheme, str) else scheme
    handover_kind = HandoverKind(handover_kind)
    try:
        return _OVERHEAD[scheme, handover_kind]
    except KeyError:
        raise ValueError(
            f"no signalling count for scheme={scheme.value} with handover_kind={handover_kind.value}"
        ) from None
