"""Waitlist-driven reachability over the interval-expression domain.

The classic configurable-analysis loop: pop a state, compute abstract
successors, merge each successor into compatible reached states at the
same location (widening or union per the precision, never across states
whose important variables differ), then add it if no reached state covers
it.  Budgets are polled between pops so the invariant engine can cut a
round short; an exhausted run is flagged incomplete and its reached set
must not be published as an invariant.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from threading import Event
from typing import Dict, List, Optional

from .domain import (AbstractState, Precision, differ, merge, stop, transfer)
from .normalize import NormalizedCfa


@dataclass
class CpaResult:
    reached: List[AbstractState]
    complete: bool
    pops: int

    def at_location(self, loc: int) -> List[AbstractState]:
        return [s for s in self.reached if s.location == loc]


def cpa_algorithm(ncfa: NormalizedCfa, init: AbstractState, pi: Precision,
                  cancel: Optional[Event] = None,
                  deadline: Optional[float] = None,
                  max_pops: Optional[int] = None) -> CpaResult:
    cfa = ncfa.cfa
    out_index: Dict[int, list] = {}
    for e in cfa.edges:
        out_index.setdefault(e.src, []).append(e)

    reached: Dict[int, List[AbstractState]] = {init.location: [init]}
    waitlist: deque = deque([init])
    pops = 0
    while waitlist:
        if cancel is not None and cancel.is_set():
            return _result(reached, False, pops)
        if deadline is not None and time.monotonic() > deadline:
            return _result(reached, False, pops)
        if max_pops is not None and pops >= max_pops:
            return _result(reached, False, pops)
        state = waitlist.popleft()
        pops += 1
        for edge in out_index.get(state.location, []):
            succ = transfer(state, edge, pi)
            if succ.is_bottom:
                continue
            bucket = reached.setdefault(succ.location, [])
            for old in list(bucket):
                if differ(old, succ, pi):
                    continue
                merged = merge(old, succ, pi)
                if merged != old:
                    bucket.remove(old)
                    try:
                        waitlist.remove(old)
                    except ValueError:
                        pass
                    # Merging two compatible states can collapse them onto a
                    # result already present; appending it again would let
                    # duplicates multiply through bucket and waitlist.
                    if merged not in bucket:
                        bucket.append(merged)
                        waitlist.append(merged)
            if not stop(succ, bucket):
                bucket.append(succ)
                waitlist.append(succ)
    return _result(reached, True, pops)


def _result(reached: Dict[int, List[AbstractState]], complete: bool,
            pops: int) -> CpaResult:
    flat = [s for loc in sorted(reached) for s in reached[loc]]
    return CpaResult(flat, complete, pops)


def render_reached(result: CpaResult) -> str:
    """One line per state: ``loc: var ∈ intervalset, ...``."""
    lines = [str(s) for s in result.reached]
    if not result.complete:
        lines.append("(incomplete: budget exhausted)")
    return "\n".join(lines)
