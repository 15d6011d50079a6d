"""
Asymmetric double-sided two-way ranging over a broadcast schedule.

Every node transmits once in a first pass; all but the last node transmit
again in a second pass. For a pair ``x < y`` the first-pass messages of ``x``
and ``y`` act as poll and response and the second-pass message of ``x`` as the
final, which gives the four durations of the double-sided exchange. Each
message is received by every other node, so ``2n - 1`` transmissions range
all ``n(n-1)/2`` pairs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_REPLY_DELAY = 300e-6
DEFAULT_JITTER = 100e-12


class TooFewNodes(ValueError):
    pass


class InvalidTranscript(ValueError):
    pass


@dataclass(frozen=True)
class BroadcastPlan:
    """
    Transmission order and, per pair, the indices of its three messages.

    ``slots[(x, y)] = (poll, response, final)`` index into ``transmissions``.
    """

    n_nodes: int
    transmissions: tuple[int, ...]
    slots: dict[tuple[int, int], tuple[int, int, int]]

    def __len__(self) -> int:
        return len(self.transmissions)


def schedule_broadcast(n_nodes: int = 6) -> BroadcastPlan:
    if n_nodes < 2:
        raise TooFewNodes("ranging needs at least two nodes")
    tx = tuple(range(n_nodes)) + tuple(range(n_nodes - 1))
    slots = {(x, y): (x, y, n_nodes + x) for x, y in itertools.combinations(range(n_nodes), 2)}
    return BroadcastPlan(n_nodes, tx, slots)


@dataclass(frozen=True)
class ClockModel:
    """Per-node clock errors: frequency offset (ppm), phase offset (s) and timestamp jitter (s)."""

    ppm: tuple[float, ...]
    phase: tuple[float, ...]
    jitter: tuple[float, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if not (len(self.ppm) == len(self.phase) == len(self.jitter)):
            raise ValueError("clock parameter lengths differ")
        if any(abs(p) > 100 for p in self.ppm):
            raise ValueError("|ppm| must not exceed 100")
        if any(j < 0 for j in self.jitter):
            raise ValueError("jitter must be non-negative")

    @classmethod
    def ideal(cls, n_nodes: int = 6, seed: int = 0) -> "ClockModel":
        return cls((0.0,) * n_nodes, (0.0,) * n_nodes, (0.0,) * n_nodes, seed)

    @classmethod
    def uniform(
        cls,
        n_nodes: int = 6,
        ppm: float | Sequence[float] = 0.0,
        phase: float | Sequence[float] = 0.0,
        jitter: float | Sequence[float] = DEFAULT_JITTER,
        seed: int = 0,
    ) -> "ClockModel":
        def expand(v):
            return tuple(float(x) for x in np.broadcast_to(np.asarray(v, dtype=float), (n_nodes,)))

        return cls(expand(ppm), expand(phase), expand(jitter), seed)

    @property
    def n_nodes(self) -> int:
        return len(self.ppm)


@dataclass(frozen=True)
class RangingTranscript:
    """The four durations for one pair, each in the clock of the node that measured it."""

    pair: tuple[int, int]
    round1: float
    reply1: float
    round2: float
    reply2: float
    true_distance: float

    def to_json(self) -> str:
        d = asdict(self)
        d["pair"] = list(self.pair)
        return json.dumps(d)

    @classmethod
    def from_json(cls, line: str) -> "RangingTranscript":
        d = json.loads(line)
        return cls(
            pair=tuple(d["pair"]),
            round1=float(d["round1"]),
            reply1=float(d["reply1"]),
            round2=float(d["round2"]),
            reply2=float(d["reply2"]),
            true_distance=float(d["true_distance"]),
        )


def distance_matrix(true_distances: ArrayLike, n_nodes: int) -> NDArray[np.float64]:
    """Symmetric matrix from pair distances listed in ``itertools.combinations`` order."""
    d = np.asarray(true_distances, dtype=float)
    if d.ndim == 2:
        return d
    D = np.zeros((n_nodes, n_nodes))
    for k, (x, y) in enumerate(itertools.combinations(range(n_nodes), 2)):
        D[x, y] = D[y, x] = d[k]
    return D


def _true_event_times(plan: BroadcastPlan, D: NDArray, reply: NDArray) -> NDArray[np.float64]:
    """Transmit times ``tx[k]`` and reception times ``rx[k, j]`` in true time."""
    tof = D / SPEED_OF_LIGHT
    nk = len(plan.transmissions)
    tx = np.zeros(nk)
    for k in range(1, nk):
        prev, node = plan.transmissions[k - 1], plan.transmissions[k]
        tx[k] = tx[k - 1] + tof[prev, node] + reply[node]
    nodes = np.array(plan.transmissions)
    rx = tx[:, None] + tof[nodes, :]
    return np.concatenate((tx[:, None], rx), axis=1)


def simulate_durations(
    true_distances: ArrayLike,
    clocks: ClockModel,
    reply_delays: float | ArrayLike = DEFAULT_REPLY_DELAY,
    trials: int = 1,
) -> NDArray[np.float64]:
    """
    Durations ``(round1, reply1, round2, reply2)`` for every pair.

    Returns
    -------
    numpy.ndarray, shape (trials, n_pairs, 4)
    """
    n = clocks.n_nodes
    plan = schedule_broadcast(n)
    D = distance_matrix(true_distances, n)
    if np.any(D < 0):
        raise ValueError("distances must be non-negative")
    reply = np.broadcast_to(np.asarray(reply_delays, dtype=float), (n,))
    if np.any(reply <= 0):
        raise ValueError("reply delays must be positive")

    events = _true_event_times(plan, D, reply)  # (nk, 1 + n): tx time then rx time per node
    nodes = np.array(plan.transmissions)
    scale = 1.0 + 1e-6 * np.asarray(clocks.ppm)
    phase = np.asarray(clocks.phase)
    jitter = np.asarray(clocks.jitter)
    rng = np.random.default_rng(clocks.seed)

    # local timestamps: tx in the transmitter's clock, rx[k, j] in receiver j's clock
    tx_local = scale[nodes] * events[:, 0] + phase[nodes]
    rx_local = scale[None, :] * events[:, 1:] + phase[None, :]
    tx_local = tx_local + jitter[nodes] * rng.standard_normal((trials, len(nodes)))
    rx_local = rx_local + jitter[None, :] * rng.standard_normal((trials,) + rx_local.shape)

    out = np.empty((trials, len(plan.slots), 4))
    for k, ((x, y), (poll, resp, final)) in enumerate(plan.slots.items()):
        A = tx_local[:, poll]
        B = rx_local[:, poll, y]
        C = tx_local[:, resp]
        Dx = rx_local[:, resp, x]
        E = tx_local[:, final]
        F = rx_local[:, final, y]
        out[:, k, 0] = Dx - A
        out[:, k, 1] = C - B
        out[:, k, 2] = F - C
        out[:, k, 3] = E - Dx
    return out


def simulate_ranging(
    true_distances: ArrayLike,
    clocks: ClockModel,
    reply_delays: float | ArrayLike = DEFAULT_REPLY_DELAY,
) -> list[RangingTranscript]:
    """One round of the broadcast schedule under the given clock errors."""
    n = clocks.n_nodes
    D = distance_matrix(true_distances, n)
    dur = simulate_durations(D, clocks, reply_delays, trials=1)[0]
    pairs = list(itertools.combinations(range(n), 2))
    return [
        RangingTranscript((x, y), *map(float, dur[k]), true_distance=float(D[x, y]))
        for k, (x, y) in enumerate(pairs)
    ]


def ads_twr_tof(round1, reply1, round2, reply2):
    """Time of flight from the four double-sided durations; works elementwise on arrays."""
    round1, reply1, round2, reply2 = (np.asarray(v, dtype=float) for v in (round1, reply1, round2, reply2))
    den = round1 + round2 + reply1 + reply2
    if np.any(den <= 0):
        raise InvalidTranscript("duration sum must be positive")
    return (round1 * round2 - reply1 * reply2) / den


def recover_distance(t: RangingTranscript) -> float:
    return float(SPEED_OF_LIGHT * ads_twr_tof(t.round1, t.reply1, t.round2, t.reply2))


def single_sided_distance(t: RangingTranscript) -> float:
    """Single-sided estimate ``c * (round1 - reply1) / 2`` from the same transcript."""
    return SPEED_OF_LIGHT * 0.5 * (t.round1 - t.reply1)


def tof_timestamp_sensitivity(round1: float, reply1: float, round2: float, reply2: float) -> NDArray[np.float64]:
    """
    First-order sensitivity of the time of flight to the six raw timestamps.

    Order is (A, B, C, D, E, F): poll tx, poll rx, response tx, response rx,
    final tx, final rx. Durations are ``round1 = D - A``, ``reply1 = C - B``,
    ``round2 = F - C`` and ``reply2 = E - D``.
    """
    S = round1 + round2 + reply1 + reply2
    T = (round1 * round2 - reply1 * reply2) / S
    d_r1 = (round2 - T) / S
    d_r2 = (round1 - T) / S
    d_p1 = (-reply2 - T) / S
    d_p2 = (-reply1 - T) / S
    return np.array([-d_r1, -d_p1, d_p1 - d_r2, d_r1 - d_p2, d_p2, d_r2])


def dump_transcripts(transcripts: Iterable[RangingTranscript], path: str | Path) -> None:
    with open(path, "w") as fh:
        for t in transcripts:
            fh.write(t.to_json() + "\n")


def load_transcripts(path: str | Path) -> list[RangingTranscript]:
    with open(path) as fh:
        return [RangingTranscript.from_json(line) for line in fh if line.strip()]
