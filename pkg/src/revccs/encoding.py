"""Denotation of processes as configuration structures.

A plain process denotes a structure by structural induction.  A coherent
reversible term denotes an address: the structure of its origin together
with the configuration reached by replaying its past.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

from . import confstruct as cs
from .confstruct import ConfStruct, Morphism
from .syntax import (Hole, Nil, Par, Prefix, Process, Restrict, Sum,
                     count_holes, instantiate, is_collapsed, push_restrictions,
                     unparse, detect_auto_conflict_or_concurrency)
from .rccs import (RTerm, _sorted_process, backward_steps, erase,
                   forward_steps, normalize, state_key, trace_to_origin)


class NoMatchingEvent(ValueError):
    """No event of the origin's structure matches a replayed transition."""


class AmbiguousEvent(ValueError):
    """Several events match a replayed transition; the origin has an
    autoconflict or autoconcurrency, so addresses are not unique."""


@functools.lru_cache(maxsize=None)
def encode_ccs(p: Process) -> ConfStruct:
    if isinstance(p, Nil):
        return cs.EMPTY
    if isinstance(p, Prefix):
        return cs.prefix(p.action, encode_ccs(p.body))
    if isinstance(p, Sum):
        return cs.coproduct(encode_ccs(p.left), encode_ccs(p.right))
    if isinstance(p, Par):
        return cs.parallel(encode_ccs(p.left), encode_ccs(p.right))
    if isinstance(p, Restrict):
        return cs.restrict_name(encode_ccs(p.body), p.name)
    raise TypeError(f"cannot encode {p!r}")


@dataclass(frozen=True)
class Address:
    """Where a reversible term sits inside its origin's structure."""

    struct: ConfStruct
    origin: Process
    config: frozenset

    def residual(self) -> ConfStruct:
        return cs.residual(self.struct, self.config)

    def to_json(self) -> dict:
        ids = cs.canonical_event_ids(self.struct)
        return {"origin": cs.to_json(self.struct),
                "current": sorted(ids[e] for e in self.config)}


def address(origin_struct: ConfStruct, trace) -> frozenset:
    """Replay a forward trace inside the origin's structure.

    ``trace`` is a list of (label, term-after-the-step) pairs.  At each step
    exactly one extension event must carry the step's action and leave a
    residual the remaining term's denotation embeds into; fewer or more
    matches violate the collapse / no-autoconflict preconditions.
    """
    x = frozenset()
    for step, (lbl, after) in enumerate(trace):
        remainder = encode_ccs(erase(after))
        matches = []
        for e in origin_struct.extensions(x):
            if origin_struct.label(e) != lbl.action:
                continue
            if cs.embeds(remainder,
                         cs.residual(origin_struct, x | {e})) is not None:
                matches.append(e)
        if not matches:
            raise NoMatchingEvent(f"step {step} ({lbl}) matches no event")
        if len(matches) > 1:
            raise AmbiguousEvent(
                f"step {step} ({lbl}) matches {len(matches)} events")
        x = x | {matches[0]}
    return x


_address_cache: dict = {}


def encode_rccs(t: RTerm, strict: bool = True) -> Address:
    """Address of a coherent reversible term.

    With ``strict`` the origin must be collapsed and free of autoconflict
    and autoconcurrency, the conditions under which addresses are unique.
    """
    t = normalize(t)
    key = (state_key(t), strict)
    if key in _address_cache:
        return _address_cache[key]
    states, labels = trace_to_origin(t)
    # normalize the origin: undoing a step restores the fired branch
    # leftmost and re-seats hoisted restrictions, so congruent states would
    # otherwise disagree on event identities
    origin_p = _sorted_process(push_restrictions(erase(states[0])))
    if strict:
        if not is_collapsed(origin_p):
            raise ValueError(f"origin is not collapsed: {unparse(origin_p)}")
        clashes = detect_auto_conflict_or_concurrency(origin_p)
        if clashes:
            raise ValueError(
                f"origin has an autoconflict or autoconcurrency on "
                f"{clashes[0].label}: {unparse(origin_p)}")
    struct = encode_ccs(origin_p)
    x = address(struct, list(zip(labels, states[1:])))
    addr = Address(struct, origin_p, x)
    _address_cache[key] = addr
    return addr


# ---------------------------------------------------------------------------
# Context projection: the partial event map from the structure of a filled
# context onto the structure of the plugged process.

@dataclass(frozen=True)
class ContextProjection:
    whole: ConfStruct      # denotation of the filled context
    part: ConfStruct       # denotation of the plugged process
    map: Morphism


def project(context: Process, p: Process) -> ContextProjection:
    whole = encode_ccs(instantiate(context, p))
    inner = encode_ccs(p)
    mapping = {}
    for e in whole.events:
        target = _project_event(context, p, e)
        if target is not None and target in inner.events:
            mapping[e] = target
    return ContextProjection(whole, inner, Morphism(whole, inner, mapping))


def _project_event(c: Process, p: Process, e):
    if isinstance(c, Hole):
        return e
    if isinstance(c, Prefix):
        inner = encode_ccs(instantiate(c.body, p))
        outer = encode_ccs(instantiate(c, p))
        guard = next(iter(outer.events - inner.events))
        if e == guard:
            return None
        return _project_event(c.body, p, e)
    if isinstance(c, Sum):
        side, sub = e
        branch = c.left if side == 1 else c.right
        if count_holes(branch) == 0:
            return None
        return _project_event(branch, p, sub)
    if isinstance(c, Par):
        _tag, e1, e2 = e
        if count_holes(c.left) > 0:
            return None if e1 is None else _project_event(c.left, p, e1)
        return None if e2 is None else _project_event(c.right, p, e2)
    if isinstance(c, Restrict):
        return _project_event(c.body, p, e)
    return None


# ---------------------------------------------------------------------------
# Operational correspondence between term transitions and structure moves

class CorrespondenceFailure(AssertionError):
    """A term transition and the structure moves at its address disagree."""


@dataclass
class CorrespondenceReport:
    ok: bool = True
    states_checked: int = 0
    mismatches: list = field(default_factory=list)

    def fail(self, msg: str):
        self.ok = False
        self.mismatches.append(msg)

    def raise_on_failure(self):
        if not self.ok:
            raise CorrespondenceFailure("; ".join(self.mismatches))


def check_operational_correspondence(t: RTerm,
                                     max_states: Optional[int] = 500
                                     ) -> CorrespondenceReport:
    """Check, over every reachable state, that forward steps match extension
    events and backward steps match retraction events, with equal labels."""
    report = CorrespondenceReport()
    t = normalize(t)
    seen = {state_key(t)}
    frontier = [t]
    while frontier:
        cur = frontier.pop()
        report.states_checked += 1
        if max_states is not None and report.states_checked > max_states:
            report.fail("state bound exceeded")
            return report
        addr = encode_rccs(cur)
        exts = {e: addr.struct.label(e) for e in addr.struct.extensions(addr.config)}
        rets = {e: addr.struct.label(e) for e in addr.struct.retractions(addr.config)}
        fwd = forward_steps(cur, check=False)
        bwd = backward_steps(cur, check=False)
        used = set()
        for lbl, nxt in fwd:
            naddr = encode_rccs(nxt)
            delta = naddr.config - addr.config
            if (len(delta) != 1 or not addr.config <= naddr.config
                    or next(iter(delta)) not in exts):
                report.fail(f"forward step {lbl} from {cur} has no matching event")
                continue
            e = next(iter(delta))
            used.add(e)
            if exts[e] != lbl.action:
                report.fail(f"forward step {lbl} from {cur} hit label {exts[e]}")
            k = state_key(nxt)
            if k not in seen:
                seen.add(k)
                frontier.append(nxt)
        if set(exts) - used:
            report.fail(f"unmatched extension events at {cur}: "
                        f"{sorted(map(repr, set(exts) - used))}")
        usedb = set()
        for lbl, nxt in bwd:
            naddr = encode_rccs(nxt)
            delta = addr.config - naddr.config
            if (len(delta) != 1 or not naddr.config <= addr.config
                    or next(iter(delta)) not in rets):
                report.fail(f"backward step {lbl} from {cur} has no matching event")
                continue
            e = next(iter(delta))
            usedb.add(e)
            if rets[e] != lbl.action:
                report.fail(f"backward step {lbl} from {cur} hit label {rets[e]}")
            k = state_key(nxt)
            if k not in seen:
                seen.add(k)
                frontier.append(nxt)
        if set(rets) - usedb:
            report.fail(f"unmatched retraction events at {cur}: "
                        f"{sorted(map(repr, set(rets) - usedb))}")
    return report
