"""Honeycomb cells, straight-line motion and handover prediction outcomes.

Cells are pointy-top hexagons of circumradius ``R`` addressed by axial
coordinates ``(q, r)``.  Each cell's radio coverage is the closed disk of
radius ``R`` about its centre, so neighbouring disks overlap in thin lenses
around the shared edges.  A mobile node standing in cell ``c`` that enters
the disk of neighbour ``n`` issues a prediction for ``n``.

A hexagonal tiling is the Voronoi diagram of its centres, so "the cell
containing p" is simply the nearest centre.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .analytic import MobilityParams, SingularityError, map_residence_scaling
from .engine import proportion_ci
from .stochastic import RandomSource, exponential_array

SQRT3 = math.sqrt(3.0)
AXIAL_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))

Cell = tuple[int, int]
Point = tuple[float, float]


@dataclass(frozen=True)
class CellGrid:
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"cell radius must be > 0, got {self.radius}")

    def center(self, cell: Cell) -> Point:
        q, r = cell
        return self.radius * SQRT3 * (q + r / 2.0), self.radius * 1.5 * r

    def neighbors(self, cell: Cell) -> list[Cell]:
        q, r = cell
        return [(q + dq, r + dr) for dq, dr in AXIAL_DIRECTIONS]

    def vertices(self, cell: Cell) -> list[Point]:
        cx, cy = self.center(cell)
        R = self.radius
        return [
            (cx + R * math.cos(math.radians(30 + 60 * i)), cy + R * math.sin(math.radians(30 + 60 * i)))
            for i in range(6)
        ]

    def cell_at(self, point: Point) -> Cell:
        return cell_at(point, self)


def _axial_round(qf: float, rf: float) -> Cell:
    sf = -qf - rf
    q, r, s = round(qf), round(rf), round(sf)
    dq, dr, ds = abs(q - qf), abs(r - rf), abs(s - sf)
    if dq > dr and dq > ds:
        q = -r - s
    elif dr > ds:
        r = -q - s
    return int(q), int(r)


def cell_at(point: Point, grid: CellGrid) -> Cell:
    """Axial coordinates of the hexagon containing ``point``.

    Points on a shared edge or vertex go to the lexicographically smallest
    of the tied cells.
    """
    x, y = point
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"point must be finite, got {point}")
    R = grid.radius
    guess = _axial_round((SQRT3 / 3.0 * x - y / 3.0) / R, (2.0 / 3.0 * y) / R)
    candidates = [guess, *grid.neighbors(guess)]
    dists = []
    for c in candidates:
        cx, cy = grid.center(c)
        dists.append((x - cx) ** 2 + (y - cy) ** 2)
    best = min(dists)
    tol = 1e-12 * R * R * max(1.0, abs(x) / R + abs(y) / R)
    return min(c for c, d in zip(candidates, dists) if d <= best + tol)


def in_prediction_region(point: Point, current_cell: Cell, grid: CellGrid) -> frozenset[Cell]:
    """Neighbours of ``current_cell`` whose (closed) radio disk covers ``point``."""
    x, y = point
    # closed disks; boundary points within rounding count as covered
    R2 = grid.radius ** 2 * (1.0 + 1e-12)
    cx, cy = grid.center(current_cell)
    if (x - cx) ** 2 + (y - cy) ** 2 > R2:
        return frozenset()
    found = []
    for n in grid.neighbors(current_cell):
        nx, ny = grid.center(n)
        if (x - nx) ** 2 + (y - ny) ** 2 <= R2:
            found.append(n)
    return frozenset(found)


@dataclass(frozen=True)
class Trajectory:
    """Straight segment ``origin + speed * t * direction`` for t in [0, holding_time]."""

    origin: Point
    direction: Point
    speed: float
    holding_time: float = math.inf

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError(f"speed must be > 0, got {self.speed}")
        dx, dy = self.direction
        if not math.isclose(math.hypot(dx, dy), 1.0, rel_tol=1e-9):
            raise ValueError("direction must be a unit vector")

    def position(self, t: float) -> Point:
        s = self.speed * t
        return self.origin[0] + s * self.direction[0], self.origin[1] + s * self.direction[1]

    @property
    def length(self) -> float:
        return self.speed * self.holding_time


class Outcome(str, enum.Enum):
    CORRECT = "correct"
    WRONG_CELL = "erroneous_wrong_cell"
    CALL_TERMINATED = "erroneous_call_terminated"


@dataclass(frozen=True)
class PredictionEvent:
    triggered_at: float
    cell: Cell
    predicted_cell: Cell
    outcome: Outcome


@dataclass(frozen=True)
class CellVisit:
    """Portion of a trajectory spent in one cell, in path length."""

    cell: Cell
    enter: float
    exit: float
    next_cell: Cell
    disk_entries: list[tuple[float, Cell]] = field(default_factory=list)


def walk(traj: Trajectory, grid: CellGrid, max_cells: int | None = None) -> Iterator[CellVisit]:
    """Cells visited along ``traj`` until the call ends (or ``max_cells``).

    ``disk_entries`` lists the neighbour disks entered from outside while in
    the cell, as ``(path length, neighbour)``.  Disks the node is already in
    when it enters the cell (including the one of the cell it came from) are
    not entries.
    """
    ox, oy = traj.origin
    dx, dy = traj.direction
    R = grid.radius
    R2 = R * R
    budget = traj.length
    # a start on an edge or vertex belongs to the cell the ray moves into
    cell = cell_at((ox + 1e-6 * R * dx, oy + 1e-6 * R * dy), grid)
    enter = 0.0
    visited = 0
    while True:
        cx, cy = grid.center(cell)
        exits = []
        entries = []
        for n in grid.neighbors(cell):
            nx, ny = grid.center(n)
            ux, uy = nx - cx, ny - cy
            du = dx * ux + dy * uy
            if du > 0:
                mx, my = cx + ux / 2.0, cy + uy / 2.0
                exits.append((((mx - ox) * ux + (my - oy) * uy) / du, n))
            wx, wy = ox - nx, oy - ny
            b = wx * dx + wy * dy
            disc = b * b - (wx * wx + wy * wy - R2)
            if disc > 0:
                s_in = -b - math.sqrt(disc)
                if s_in > enter:
                    entries.append((s_in, n))
        # bisectors at or behind the entry point only matter for rays grazing an edge
        exits = sorted(e for e in exits if e[0] > enter + 1e-9 * R)
        exit_s, nxt = exits[0]
        if len(exits) > 1 and exits[1][0] - exit_s <= 1e-9 * R:
            # through a vertex: take the cell just past the crossing
            ahead = exit_s + 1e-6 * R
            nxt = cell_at((ox + ahead * dx, oy + ahead * dy), grid)
            if nxt == cell:
                nxt = exits[0][1]
        entries = sorted(e for e in entries if e[0] < exit_s and e[0] <= budget)
        yield CellVisit(cell, enter, exit_s, nxt, entries)
        visited += 1
        if exit_s > budget or (max_cells is not None and visited >= max_cells):
            return
        cell, enter = nxt, exit_s


def classify_predictions(
    traj: Trajectory, grid: CellGrid, max_cells: int | None = None
) -> tuple[list[PredictionEvent], int]:
    """Prediction events along ``traj`` and the number of handovers performed.

    Pass ``max_cells`` for calls that never end; predictions made in the
    last visited cell are then classified by the cell it exits into.
    """
    if math.isinf(traj.length) and max_cells is None:
        raise ValueError("an endless call needs max_cells")
    events = []
    handovers = 0
    budget = traj.length
    for visit in walk(traj, grid, max_cells):
        ended = visit.exit > budget
        for s_in, predicted in visit.disk_entries:
            if ended:
                outcome = Outcome.CALL_TERMINATED
            elif predicted == visit.next_cell:
                outcome = Outcome.CORRECT
            else:
                outcome = Outcome.WRONG_CELL
            events.append(PredictionEvent(s_in / traj.speed, visit.cell, predicted, outcome))
        if not ended:
            handovers += 1
    return events, handovers


def uniform_point_in_cell(grid: CellGrid, cell: Cell, u0: float, u1: float, u2: float) -> Point:
    """Uniform point in a hexagon from three uniforms.

    The hexagon splits into three congruent rhombi spanned by alternate
    vertex vectors; ``u0`` picks the rhombus, ``u1``/``u2`` the position.
    """
    j = min(int(3 * u0), 2)
    R = grid.radius
    a1 = math.radians(30 + 120 * j)
    a2 = a1 + math.radians(120)
    cx, cy = grid.center(cell)
    return (
        cx + R * (u1 * math.cos(a1) + u2 * math.cos(a2)),
        cy + R * (u1 * math.sin(a1) + u2 * math.sin(a2)),
    )


def crofton_mean_chord(grid: CellGrid) -> float:
    """Mean chord of a hexagon under isotropic random lines: pi * area / perimeter."""
    R = grid.radius
    return math.pi * (1.5 * SQRT3 * R * R) / (6.0 * R)


def measure_residence_time(
    grid: CellGrid,
    speed: float,
    crossings: int = 10**5,
    seed: int = 0,
    per_trajectory: int = 50,
) -> float:
    """Mean time between successive cell-boundary crossings of straight walks.

    Trajectories start uniformly in cell (0, 0) with uniform heading; the
    partial first residence is discarded.
    """
    if not speed > 0:
        raise ValueError(f"speed must be > 0, got {speed}")
    n_traj = max(1, math.ceil(crossings / per_trajectory))
    u = RandomSource(seed, 0).randoms((n_traj, 4))
    R = grid.radius
    j = np.minimum((3 * u[:, 0]).astype(int), 2)
    a1 = np.radians(30 + 120 * j)
    a2 = a1 + np.radians(120)
    ox = R * (u[:, 1] * np.cos(a1) + u[:, 2] * np.cos(a2))
    oy = R * (u[:, 1] * np.sin(a1) + u[:, 2] * np.sin(a2))
    theta = 2 * math.pi * u[:, 3]
    dx, dy = np.cos(theta), np.sin(theta)

    # centre-to-neighbour offsets for pointy-top axial directions
    offsets = np.array([grid.center(d) for d in AXIAL_DIRECTIONS])
    ux, uy = offsets[:, 0], offsets[:, 1]
    du = dx[:, None] * ux[None, :] + dy[:, None] * uy[None, :]
    cx = np.zeros(n_traj)
    cy = np.zeros(n_traj)
    last = np.full(n_traj, np.nan)
    total = 0.0
    count = 0
    rows = np.arange(n_traj)
    for step in range(per_trajectory + 1):
        mx = cx[:, None] + ux[None, :] / 2 - ox[:, None]
        my = cy[:, None] + uy[None, :] / 2 - oy[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(du > 0, (mx * ux + my * uy) / du, np.inf)
        k = np.argmin(s, axis=1)
        exit_s = s[rows, k]
        if step > 0:
            total += float(np.sum(exit_s - last))
            count += n_traj
        last = exit_s
        cx = cx + ux[k]
        cy = cy + uy[k]
    return total / count / speed


@dataclass(frozen=True)
class PredictionRates:
    trials: int
    predictions: int
    correct: int
    wrong_cell: int
    terminated: int
    handovers: int

    def _rate(self, n: int) -> float:
        return n / self.predictions if self.predictions else math.nan

    @property
    def correct_rate(self) -> float:
        return self._rate(self.correct)

    @property
    def wrong_cell_rate(self) -> float:
        return self._rate(self.wrong_cell)

    @property
    def terminated_rate(self) -> float:
        return self._rate(self.terminated)

    @property
    def erroneous_rate(self) -> float:
        return self._rate(self.wrong_cell + self.terminated)

    def halfwidth(self, count: int) -> float:
        if not self.predictions:
            return math.nan
        return proportion_ci(count, self.predictions)[1]

    @property
    def mean_handovers(self) -> float:
        return self.handovers / self.trials


def simulate_prediction_outcomes(
    p: MobilityParams,
    grid: CellGrid,
    speed: float,
    trials: int,
    seed: int = 0,
    mean_residence: float | None = None,
    spawn_cell: Cell = (0, 0),
) -> PredictionRates:
    """Classify handover predictions of random straight-line calls.

    Only ``p.rho`` is used: the call holding rate is ``rho / mean_residence``
    where the mean residence is measured on the grid at this speed, so the
    geometric walk and the exponential model share the same rho.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not p.rho > 0:
        raise ValueError("rho must be > 0: calls with no holding rate never end")
    if mean_residence is None:
        mean_residence = measure_residence_time(grid, speed, seed=seed)
    alpha = p.rho / mean_residence
    counts = {o: 0 for o in Outcome}
    handovers = 0
    for i in range(trials):
        u = RandomSource(seed, 1, i).randoms(5).tolist()
        origin = uniform_point_in_cell(grid, spawn_cell, u[0], u[1], u[2])
        theta = 2.0 * math.pi * u[3]
        holding = -math.log1p(-u[4]) / alpha
        traj = Trajectory(origin, (math.cos(theta), math.sin(theta)), speed, holding)
        events, n = classify_predictions(traj, grid)
        handovers += n
        for e in events:
            counts[e.outcome] += 1
    return PredictionRates(
        trials=trials,
        predictions=sum(counts.values()),
        correct=counts[Outcome.CORRECT],
        wrong_cell=counts[Outcome.WRONG_CELL],
        terminated=counts[Outcome.CALL_TERMINATED],
        handovers=handovers,
    )


def count_handovers(p: MobilityParams, trials: int, seed: int = 0, block: int = 1 << 16) -> float:
    """Mean handovers per call from racing residence draws against the holding time.

    Residence times are exponential with the MAP-granularity rate
    ``eta / sqrt(k)``; a handover is counted each time a residence ends
    before the remaining holding time.
    """
    if p.rho == 0:
        raise SingularityError("handover count diverges at rho = 0")
    if trials < 1:
        raise ValueError("need at least one trial")
    eta = map_residence_scaling(p.eta, p.k)
    total = 0
    for b, start in enumerate(range(0, trials, block)):
        n = min(block, trials - start)
        rng = RandomSource(seed, 2, b)
        remaining = exponential_array(p.alpha, rng.randoms(n))
        while remaining.size:
            residence = exponential_array(eta, rng.randoms(remaining.size))
            crossed = residence < remaining
            total += int(crossed.sum())
            remaining = remaining[crossed] - residence[crossed]
    return total / trials
