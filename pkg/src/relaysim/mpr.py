"""Multipoint-relay selection heuristics.

Every node picks, from its one-hop neighbors, a relay set whose advertised
neighborhoods cover all of its two-hop nodes.  Selection runs in two steps:

1. every neighbor that is the *only* coverer of some two-hop node is
   selected outright (without it that node is unreachable in two hops);
2. remaining relays are added greedily until the uncovered set is empty
   (or, for the threshold heuristic, until every two-hop node's accumulated
   coverage probability has reached the threshold or no candidate helps).

The greedy step ranks candidates by a per-heuristic score; ties go to the
candidate with the larger advertised list, then to the lower node id.

The four scores, for candidate v seen from ego u with c_u(v) = number of
currently uncovered nodes v covers:

  original    s = c_u(v)                      (link quality ignored)
  score       s = c_u(v) * p(u, v)
  expected    s = p(u, v) * mean of p(v, w) over covered uncovered w
  threshold   same score as expected, but nodes leave the uncovered set
              only once their coverage level 1 - prod(1 - p(v_i, w)) over
              the selected relays covering w reaches the threshold.

A threshold of 0 is satisfied immediately, so only step-1 (mandatory)
relays are chosen; a threshold of 1 can never be satisfied and selection
stops only when no candidate covers anything anymore.

This module is the readable reference implementation; the compiled kernel
in ``_core`` replays exactly the same decision sequence on flat arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .model import Heuristic, ParameterError, TwoHopView

__all__ = [
    "RelaySelection",
    "mandatory_relays",
    "additional_coverage",
    "coverage_level",
    "select",
    "select_original",
    "select_score",
    "select_expected",
    "select_threshold",
]


@dataclass(frozen=True)
class RelaySelection:
    """Outcome of one node's relay selection.

    ``relays`` is in selection order (mandatory relays first, ascending by
    id, then greedy picks in pick order); ``residual_uncovered`` is what
    remained uncovered when selection stopped — always empty except for
    the threshold heuristic with a high threshold.
    """

    ego: int
    relays: tuple[int, ...]
    mandatory: frozenset[int]
    residual_uncovered: frozenset[int]


def mandatory_relays(view: TwoHopView) -> tuple[int, ...]:
    """Step-1 relays: each neighbor that uniquely covers some two-hop node."""
    relays, _, _, _ = _mandatory_pass(view)
    return tuple(relays)


def additional_coverage(
    view: TwoHopView, v: int, uncovered: Iterable[int]
) -> int:
    """How many of the given uncovered nodes candidate ``v`` advertises."""
    if v not in view.two_hop:
        raise ParameterError(f"candidate {v} is not a one-hop neighbor of {view.ego}")
    advertised = {w for w, _ in view.two_hop[v]}
    return sum(1 for w in set(uncovered) if w in advertised)


def coverage_level(
    view: TwoHopView, relays: Iterable[int], target: int
) -> float:
    """Accumulated coverage 1 - prod(1 - p(v, target)) over selected relays.

    Only relays that actually advertise ``target`` contribute.
    """
    prob = {v: dict(view.two_hop[v]) for v, _ in view.one_hop}
    q = 1.0
    for v in relays:
        if v not in prob:
            raise ParameterError(f"relay {v} is not a one-hop neighbor of {view.ego}")
        p = prob[v].get(target)
        if p is not None:
            q *= 1.0 - p
    return 1.0 - q


def select(
    view: TwoHopView, heuristic: Heuristic, threshold: float | None = None
) -> RelaySelection:
    """Run relay selection with the given heuristic.

    ``threshold`` is required for ``Heuristic.THRESHOLD`` and rejected for
    the others.
    """
    if heuristic is Heuristic.THRESHOLD:
        if threshold is None:
            raise ParameterError("threshold heuristic requires a threshold value")
        return select_threshold(view, threshold)
    if threshold is not None:
        raise ParameterError(f"{heuristic.value} heuristic takes no threshold")
    if heuristic is Heuristic.ORIGINAL:
        return select_original(view)
    if heuristic is Heuristic.SCORE:
        return select_score(view)
    return select_expected(view)


def select_original(view: TwoHopView) -> RelaySelection:
    return _greedy(view, Heuristic.ORIGINAL, 0.0)


def select_score(view: TwoHopView) -> RelaySelection:
    return _greedy(view, Heuristic.SCORE, 0.0)


def select_expected(view: TwoHopView) -> RelaySelection:
    return _greedy(view, Heuristic.EXPECTED, 0.0)


def select_threshold(view: TwoHopView, threshold: float) -> RelaySelection:
    if not (0.0 <= threshold <= 1.0):
        raise ParameterError(f"threshold must be in [0, 1], got {threshold}")
    return _greedy(view, Heuristic.THRESHOLD, threshold)


# --------------------------------------------------------------------------
# implementation


def _mandatory_pass(view: TwoHopView):
    """Shared step 1: coverage targets, per-target coverer counts, and the
    mandatory relays (ascending id)."""
    targets = view.uncovered_init
    # Per-candidate advertised list restricted to coverage targets,
    # preserving ascending order.
    target_adj: dict[int, list[tuple[int, float]]] = {}
    cover_count: dict[int, int] = {}
    for v, _ in view.one_hop:
        restricted = [(w, p) for (w, p) in view.two_hop[v] if w in targets]
        target_adj[v] = restricted
        for w, _ in restricted:
            cover_count[w] = cover_count.get(w, 0) + 1
    relays = [
        v
        for v, _ in view.one_hop
        if any(cover_count[w] == 1 for w, _ in target_adj[v])
    ]
    return relays, target_adj, cover_count, targets


def _greedy(view: TwoHopView, kind: Heuristic, threshold: float) -> RelaySelection:
    relays, target_adj, _, targets = _mandatory_pass(view)
    selected = set(relays)
    n_mandatory = len(relays)
    p_ego = dict(view.one_hop)

    if kind is Heuristic.THRESHOLD:
        # Coverage level per target is 1 - q[w]; q starts at 1 and picks up
        # a (1 - p) factor per selected relay advertising w.  Mandatory
        # relays contribute before the first threshold check.
        q = {w: 1.0 for w in targets}
        for v in relays:
            for w, p in target_adj[v]:
                q[w] *= 1.0 - p
        uncovered = {w for w in targets if not (1.0 - q[w] >= threshold)}
    else:
        uncovered = set(targets)
        for v in relays:
            for w, _ in target_adj[v]:
                uncovered.discard(w)

    while uncovered:
        best_v = -1
        best_s = 0.0
        best_deg = -1
        for v, _ in view.one_hop:
            if v in selected:
                continue
            covered = 0
            p_sum = 0.0
            for w, p in target_adj[v]:
                if w in uncovered:
                    covered += 1
                    p_sum += p
            if covered == 0:
                continue
            if kind is Heuristic.ORIGINAL:
                s = float(covered)
            elif kind is Heuristic.SCORE:
                s = float(covered) * p_ego[v]
            else:  # EXPECTED, and THRESHOLD reuses the expected ranking
                s = p_ego[v] * (p_sum / covered)
            deg = len(view.two_hop[v])
            if (
                best_v < 0
                or s > best_s
                or (s == best_s and (deg > best_deg or (deg == best_deg and v < best_v)))
            ):
                best_v, best_s, best_deg = v, s, deg
        if best_v < 0:
            break
        relays.append(best_v)
        selected.add(best_v)
        if kind is Heuristic.THRESHOLD:
            for w, p in target_adj[best_v]:
                if w in uncovered:
                    q[w] *= 1.0 - p
                    if 1.0 - q[w] >= threshold:
                        uncovered.discard(w)
        else:
            for w, _ in target_adj[best_v]:
                uncovered.discard(w)

    return RelaySelection(
        ego=view.ego,
        relays=tuple(relays),
        mandatory=frozenset(relays[:n_mandatory]),
        residual_uncovered=frozenset(uncovered),
    )
