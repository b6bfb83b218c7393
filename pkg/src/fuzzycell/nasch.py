"""Classical Nagel-Schreckenberg cellular automaton baseline.

Crisp single-lane CA: integer cell positions, integer velocities up to
``v_max``, parallel rule per step: accelerate, brake to the gap,
randomize (slow down by one with probability ``p``), move.  Velocities
are cells per step; the physical cell length plays no role in the
dynamics.

Randomness comes from numpy's PCG64 generator (``numpy.random
.default_rng``).  Every vehicle consumes exactly one draw per step, in
vehicle-index order, whether or not the randomization applies, so a
trajectory is fully determined by the initial state and the seed.  The
ensemble runner gives run ``i`` the seed ``base_seed + i`` and is
bit-identical to stepping each run individually.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "NaschState",
    "NaschEnsemble",
    "nasch_step",
    "trajectory",
    "monte_carlo",
    "queue_length",
    "queue_state",
    "ring_uniform",
]


@dataclass(eq=False)
class NaschState:
    """One road snapshot: vehicle ``i`` sits at ``positions[i]``.

    Positions are stored unwrapped (monotonic) so ring gaps stay simple
    differences; the ``cells`` property reduces them to cell indexes.
    The bundled PCG64 generator advances as steps are taken, so stepping
    a state invalidates its ancestors for further stepping.
    """

    road_length: int
    boundary: str
    positions: np.ndarray
    velocities: np.ndarray
    v_max: int
    p: float
    rng_seed: int
    step: int = 0
    rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64)
        self.velocities = np.asarray(self.velocities, dtype=np.int64)
        if self.boundary not in ("open", "ring"):
            raise ValueError("boundary must be 'open' or 'ring'")
        if self.road_length < 1:
            raise ValueError("road_length must be at least 1")
        if self.v_max < 1:
            raise ValueError("v_max must be at least 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("randomization probability must lie in [0, 1]")
        if self.positions.size:
            if np.any(np.diff(self.positions) <= 0):
                raise ValueError("positions must be strictly increasing")
            if np.any(self.velocities < 0) or np.any(self.velocities > self.v_max):
                raise ValueError("velocities must lie in [0, v_max]")
            if self.boundary == "ring":
                span = int(self.positions[-1] - self.positions[0])
                if span >= self.road_length or self.positions.size > self.road_length:
                    raise ValueError("ring vehicles must occupy distinct cells")
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)

    @property
    def cells(self) -> np.ndarray:
        """Occupancy by cell: vehicle index, or -1 for empty cells."""
        out = np.full(self.road_length, -1, dtype=np.int64)
        pos = self.positions % self.road_length if self.boundary == "ring" else self.positions
        inside = (pos >= 0) & (pos < self.road_length)
        out[pos[inside]] = np.arange(self.positions.size)[inside]
        return out


def queue_state(
    count: int,
    road_length: int,
    v_max: int = 3,
    p: float = 0.2,
    seed: int = 0,
    start: int = 0,
    spacing: int = 1,
) -> NaschState:
    """A stopped column of vehicles on an open road."""
    positions = start + spacing * np.arange(count, dtype=np.int64)
    return NaschState(
        road_length, "open", positions, np.zeros(count, dtype=np.int64), v_max, p, seed
    )


def ring_uniform(
    count: int, road_length: int, v_max: int = 3, p: float = 0.2, seed: int = 0
) -> NaschState:
    """Stopped vehicles spread evenly around a ring road."""
    positions = np.array([i * road_length // count for i in range(count)], dtype=np.int64)
    return NaschState(
        road_length, "ring", positions, np.zeros(count, dtype=np.int64), v_max, p, seed
    )


def _gaps(positions: np.ndarray, road_length: int, boundary: str, v_max: int) -> np.ndarray:
    gap = np.empty_like(positions)
    gap[:-1] = positions[1:] - positions[:-1] - 1
    if boundary == "ring":
        gap[-1] = positions[0] + road_length - positions[-1] - 1
    else:
        gap[-1] = v_max  # open downstream end never brakes the front vehicle
    return gap


def nasch_step(state: NaschState) -> NaschState:
    """One parallel update: accelerate, brake, randomize, move.

    Consumes one uniform draw per vehicle from the state's generator (in
    vehicle-index order) even when the randomization cannot apply.
    """
    pos = state.positions
    if pos.size == 0:
        return replace(state, step=state.step + 1)
    vel = np.minimum(state.velocities + 1, state.v_max)
    vel = np.minimum(vel, _gaps(pos, state.road_length, state.boundary, state.v_max))
    draws = state.rng.random(pos.size)
    vel = np.where(draws < state.p, np.maximum(vel - 1, 0), vel)
    return replace(state, positions=pos + vel, velocities=vel, step=state.step + 1)


def trajectory(state: NaschState, steps: int) -> list[NaschState]:
    """The initial state followed by ``steps`` successive updates."""
    out = [state]
    for _ in range(steps):
        state = nasch_step(state)
        out.append(state)
    return out


def queue_length(state: NaschState, initial_positions: np.ndarray) -> int:
    """Crisp queue length: vehicles still at their start cell with v = 0.

    Counted from the rear: the length is the largest x such that
    vehicles 0..x-1 are all still queued.
    """
    in_queue = (state.positions == initial_positions) & (state.velocities == 0)
    if in_queue.all():
        return int(in_queue.size)
    return int(np.argmin(in_queue))


@dataclass(frozen=True)
class NaschEnsemble:
    """Per-run, per-step observables from independent seeded runs.

    ``queue_lengths[i, t]`` is the crisp queue length of run i after t
    steps (column 0 is the initial state); ``total_velocity[i, t]`` sums
    the vehicle velocities applied during step t+1, and ``crossings``
    counts vehicles passing the cell-0 seam on a ring (site flow).
    """

    road_length: int
    boundary: str
    v_max: int
    p: float
    runs: int
    steps: int
    base_seed: int
    queue_lengths: np.ndarray
    total_velocity: np.ndarray
    crossings: np.ndarray


def monte_carlo(initial: NaschState, steps: int, runs: int, base_seed: int) -> NaschEnsemble:
    """Run ``runs`` independent copies of ``initial`` for ``steps`` steps.

    Run i re-seeds the generator with ``base_seed + i``; draws follow the
    same order as :func:`nasch_step`, so each row reproduces exactly what
    individual stepping with that seed would produce.  All runs advance
    together on (runs x vehicles) arrays.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    n = initial.positions.size
    if n == 0:
        zeros = np.zeros((runs, steps), dtype=np.int64)
        return NaschEnsemble(
            initial.road_length, initial.boundary, initial.v_max, initial.p,
            runs, steps, base_seed,
            np.zeros((runs, steps + 1), dtype=np.int64), zeros, zeros.copy(),
        )
    pos = np.tile(initial.positions, (runs, 1))
    vel = np.tile(initial.velocities, (runs, 1))
    start = initial.positions.copy()
    draws = np.empty((runs, steps, n), dtype=np.float64)
    for i in range(runs):
        draws[i] = np.random.default_rng(base_seed + i).random((steps, n))

    qlen = np.empty((runs, steps + 1), dtype=np.int64)
    total_v = np.empty((runs, steps), dtype=np.int64)
    crossings = np.empty((runs, steps), dtype=np.int64)
    qlen[:, 0] = _batch_queue_length(pos, vel, start)
    ring = initial.boundary == "ring"
    C = initial.road_length
    for t in range(steps):
        vel = np.minimum(vel + 1, initial.v_max)
        gap = np.empty_like(pos)
        if n > 1:
            gap[:, :-1] = pos[:, 1:] - pos[:, :-1] - 1
        gap[:, -1] = pos[:, 0] + C - pos[:, -1] - 1 if ring else initial.v_max
        vel = np.minimum(vel, gap)
        vel = np.where(draws[:, t, :] < initial.p, np.maximum(vel - 1, 0), vel)
        new_pos = pos + vel
        total_v[:, t] = vel.sum(axis=1)
        crossings[:, t] = (new_pos // C - pos // C).sum(axis=1) if ring else 0
        pos = new_pos
        qlen[:, t + 1] = _batch_queue_length(pos, vel, start)
    return NaschEnsemble(
        C, initial.boundary, initial.v_max, initial.p, runs, steps, base_seed,
        qlen, total_v, crossings,
    )


def _batch_queue_length(pos, vel, start):
    in_queue = (pos == start) & (vel == 0)
    out = np.argmin(in_queue, axis=1)
    out[in_queue.all(axis=1)] = start.size
    return out
