"""Search utilities shared by the unit and acceptance suites."""

from __future__ import annotations

from collections import deque

from triphibian.errors import RejectedTransition
from triphibian.fsm import Event, GuardUpdate, ModeMachine, MorphProgress, step

ALPHABET = (
    *Event,
    *(GuardUpdate(**{flag: value}) for flag in ("at_water_edge", "airborne", "on_ground")
      for value in (True, False)),
    MorphProgress(0.0),
    MorphProgress(0.5),
    MorphProgress(1.0),
)


def explore(start: ModeMachine, depth: int = 12):
    """Breadth-first search over every event sequence up to ``depth``.

    Returns ``(parents, edges)``: the shortest event path to each reachable
    machine, and every accepted ``(before, event, after)`` transition.
    """
    parents = {start: None}
    edges = []
    frontier = deque([(start, 0)])
    while frontier:
        m, d = frontier.popleft()
        if d == depth:
            continue
        for ev in ALPHABET:
            try:
                nxt = step(m, ev)
            except RejectedTransition:
                continue
            edges.append((m, ev, nxt))
            if nxt not in parents:
                parents[nxt] = (m, ev)
                frontier.append((nxt, d + 1))
    return parents, edges


def event_path(parents, target: ModeMachine) -> list:
    out = []
    while parents[target] is not None:
        target, ev = parents[target]
        out.append(ev)
    return out[::-1]
