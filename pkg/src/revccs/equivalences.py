"""Behavioural equivalences over configuration structures and terms.

Three deciders live here: hereditary history-preserving bisimulation on
structures (a pruning fixpoint over triples, cross-checked by an explicit
game-graph oracle), back-and-forth barbed bisimulation (on structures and on
reversible terms) and plain forward bisimulation on erased processes.  When
the history-preserving game fails, a discriminating context is synthesized
from the losing configuration and verified in the barbed game.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from . import confstruct as cs
from .confstruct import ConfStruct
from .syntax import (Context, HOLE, NIL, Par, Prefix, Process, Restrict, Sum,
                     all_names, fresh_name, free_names, inp, instantiate,
                     unparse)
from .rccs import (RTerm, ccs_state_key, ccs_steps, forward_steps, lift,
                   normalize, reachable_states, state_key)


class BoundExceeded(RuntimeError):
    """The oracle refuses structures beyond its configured size."""


_EMPTY_TRIPLE = (frozenset(), frozenset(), frozenset())


@dataclass
class EquivalenceVerdict:
    related: bool
    failing_stratum: Optional[tuple] = None   # ("F", i) or ("B", i)
    witness: Optional[str] = None
    context: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "related": self.related,
            "failing_stratum": (self.failing_stratum[1]
                                if self.failing_stratum else None),
            "witness": self.witness,
            "context": self.context,
        }


# ---------------------------------------------------------------------------
# Order-respecting label bijections between configurations

_order_cache: dict = {}


def _causal(c: ConfStruct, x: frozenset) -> frozenset:
    key = (c, x)
    if key not in _order_cache:
        _order_cache[key] = cs.causal_order(c, x)
    return _order_cache[key]


def _order_maps(c1: ConfStruct, x1: frozenset, c2: ConfStruct, x2: frozenset,
                both_ways: bool) -> list[dict]:
    """Label-preserving bijections from x1 to x2 that preserve the causal
    order, and also reflect it when ``both_ways`` is set."""
    if len(x1) != len(x2):
        return []
    o1, o2 = _causal(c1, x1), _causal(c2, x2)
    events1 = sorted(x1, key=repr)
    out: list[dict] = []
    mapping: dict = {}
    used: set = set()

    def compatible(e1, e2) -> bool:
        if c1.label(e1) != c2.label(e2):
            return False
        for d1, d2 in mapping.items():
            if ((d1, e1) in o1) != ((d2, e2) in o2):
                if (d1, e1) in o1 or both_ways:
                    return False
            if ((e1, d1) in o1) != ((e2, d2) in o2):
                if (e1, d1) in o1 or both_ways:
                    return False
        return True

    def rec(i: int):
        if i == len(events1):
            out.append(dict(mapping))
            return
        e1 = events1[i]
        for e2 in x2:
            if e2 in used or not compatible(e1, e2):
                continue
            mapping[e1] = e2
            used.add(e2)
            rec(i + 1)
            del mapping[e1]
            used.discard(e2)

    rec(0)
    return out


def _all_triples(c1: ConfStruct, c2: ConfStruct, both_ways: bool) -> set:
    triples = set()
    for x1 in c1.configs:
        for x2 in c2.configs:
            for f in _order_maps(c1, x1, c2, x2, both_ways):
                triples.add((x1, x2, frozenset(f.items())))
    return triples


def _forth_ok(triple, c1, c2, reference) -> Optional[str]:
    x1, x2, fs = triple
    for e1 in c1.extensions(x1):
        if not any((x1 | {e1}, x2 | {e2}, fs | {(e1, e2)}) in reference
                   for e2 in c2.extensions(x2)):
            return f"left extension {c1.label(e1)} unanswered"
    for e2 in c2.extensions(x2):
        if not any((x1 | {e1}, x2 | {e2}, fs | {(e1, e2)}) in reference
                   for e1 in c1.extensions(x1)):
            return f"right extension {c2.label(e2)} unanswered"
    return None


def _back_ok(triple, c1, c2, reference) -> Optional[str]:
    x1, x2, fs = triple
    f = dict(fs)
    g = {e2: e1 for e1, e2 in fs}
    for e1 in c1.retractions(x1):
        e2 = f[e1]
        if ((x2 - {e2}) not in c2.configs
                or (x1 - {e1}, x2 - {e2}, fs - {(e1, e2)}) not in reference):
            return f"left retraction {c1.label(e1)} unanswered"
    for e2 in c2.retractions(x2):
        e1 = g[e2]
        if ((x1 - {e1}) not in c1.configs
                or (x1 - {e1}, x2 - {e2}, fs - {(e1, e2)}) not in reference):
            return f"right retraction {c2.label(e2)} unanswered"
    return None


# ---------------------------------------------------------------------------
# Hereditary history-preserving bisimulation: greatest fixpoint over triples

_hhpb_cache: dict = {}


def hhpb_relation(c1: ConfStruct, c2: ConfStruct) -> set:
    """The maximal back-and-forth history-preserving bisimulation, as the
    set of surviving triples (x1, x2, frozen bijection)."""
    relation, _ = _hhpb_gfp(c1, c2)
    return relation


def _hhpb_gfp(c1: ConfStruct, c2: ConfStruct):
    relation = _all_triples(c1, c2, both_ways=True)
    reasons: dict = {}
    changed = True
    while changed:
        changed = False
        for triple in list(relation):
            reason = (_forth_ok(triple, c1, c2, relation)
                      or _back_ok(triple, c1, c2, relation))
            if reason is not None:
                relation.discard(triple)
                reasons.setdefault(triple, reason)
                changed = True
    return relation, reasons


def hhpb(c1: ConfStruct, c2: ConfStruct) -> EquivalenceVerdict:
    """Decide the history-preserving game with backward moves.

    Related configurations carry a label- and order-isomorphism of their
    events; forward challenges extend it, backward challenges retract the
    image of the retracted event.  On failure the cardinality strata locate
    the shallowest excluded configuration.
    """
    key = (c1, c2)
    if key in _hhpb_cache:
        return _hhpb_cache[key]
    relation, reasons = _hhpb_gfp(c1, c2)
    related = _EMPTY_TRIPLE in relation
    if related:
        verdict = EquivalenceVerdict(True)
    else:
        stratum, witness = _diagnose(c1, c2)
        if witness is None:
            witness = reasons.get(_EMPTY_TRIPLE)
        verdict = EquivalenceVerdict(False, stratum, witness)
    _hhpb_cache[key] = verdict
    return verdict


# ---------------------------------------------------------------------------
# Cardinality strata: forward layers computed from the largest configuration
# size down, backward layers from size zero up.

@dataclass
class StratifiedRelation:
    k: int                                      # largest left cardinality
    forth: list = field(default_factory=list)   # forth[i]: triples of size i
    back: list = field(default_factory=list)

    def covered(self, i: int, x1: frozenset, backward: bool) -> bool:
        layer = (self.forth[i] & self.back[i]) if backward else self.forth[i]
        return any(t[0] == x1 for t in layer)


def build_stratification(c1: ConfStruct, c2: ConfStruct) -> StratifiedRelation:
    """Approximate the game by configuration size.

    The top forward layer holds every label- and order-preserving bijection
    between largest configurations; layer i keeps the triples whose forward
    challenges are answered inside layer i+1.  Backward layer 0 is forward
    layer 0; backward layer i keeps the triples of forward layer i whose
    retractions land in the meet of the two layers below.
    """
    k = c1.max_card()
    by_card: dict[int, set] = defaultdict(set)
    for t in _all_triples(c1, c2, both_ways=False):
        by_card[len(t[0])].add(t)
    forth = [set() for _ in range(k + 1)]
    forth[k] = by_card[k]
    for i in range(k - 1, -1, -1):
        forth[i] = {t for t in by_card[i]
                    if _forth_ok(t, c1, c2, forth[i + 1]) is None}
    back = [set() for _ in range(k + 1)]
    back[0] = forth[0]
    for i in range(1, k + 1):
        ref = forth[i - 1] & back[i - 1]
        back[i] = {t for t in forth[i] if _back_ok(t, c1, c2, ref) is None}
    return StratifiedRelation(k, forth, back)


def _config_label_names(c: ConfStruct, x: frozenset) -> str:
    return "{" + ",".join(sorted(str(c.label(e)) for e in x)) + "}"


def _diagnose(c1: ConfStruct, c2: ConfStruct):
    """Least stratum whose layers exclude some left configuration."""
    strata = build_stratification(c1, c2)
    by_card: dict[int, list] = defaultdict(list)
    for x1 in c1.configs:
        by_card[len(x1)].append(x1)
    for i in range(strata.k + 1):
        for x1 in sorted(by_card[i], key=lambda x: sorted(map(repr, x))):
            if not strata.covered(i, x1, backward=False):
                return ("F", i), (f"configuration {_config_label_names(c1, x1)} "
                                  f"unmatched in forward stratum {i}")
        for x1 in sorted(by_card[i], key=lambda x: sorted(map(repr, x))):
            if not strata.covered(i, x1, backward=True):
                return ("B", i), (f"configuration {_config_label_names(c1, x1)} "
                                  f"unmatched in backward stratum {i}")
    return None, None


# ---------------------------------------------------------------------------
# Game-graph oracle: same game, decided by attacker-win propagation

def hhpb_oracle(c1: ConfStruct, c2: ConfStruct, bound: int = 10) -> bool:
    """Independent decision of the history-preserving game.

    Builds the bipartite challenge/response graph explicitly and propagates
    attacker wins by the standard attractor computation; the defender wins
    every infinite play.
    """
    if len(c1.events) + len(c2.events) > bound:
        raise BoundExceeded(
            f"{len(c1.events)} + {len(c2.events)} events exceed bound {bound}")
    triples = _all_triples(c1, c2, both_ways=True)

    def challenges(t):
        x1, x2, fs = t
        f = dict(fs)
        g = {e2: e1 for e1, e2 in fs}
        out = []
        for e1 in c1.extensions(x1):
            out.append([(x1 | {e1}, x2 | {e2}, fs | {(e1, e2)})
                        for e2 in c2.extensions(x2)])
        for e2 in c2.extensions(x2):
            out.append([(x1 | {e1}, x2 | {e2}, fs | {(e1, e2)})
                        for e1 in c1.extensions(x1)])
        for e1 in c1.retractions(x1):
            resp = (x1 - {e1}, x2 - {f[e1]}, fs - {(e1, f[e1])})
            out.append([resp] if (x2 - {f[e1]}) in c2.configs else [])
        for e2 in c2.retractions(x2):
            resp = (x1 - {g[e2]}, x2 - {e2}, fs - {(g[e2], e2)})
            out.append([resp] if (x1 - {g[e2]}) in c1.configs else [])
        return out

    # a defender node is (attacker triple, challenge index)
    succ: dict = {}
    preds: dict = defaultdict(list)
    for t in triples:
        chs = challenges(t)
        succ[("A", t)] = [("D", t, k) for k in range(len(chs))]
        for k, responses in enumerate(chs):
            valid = [r for r in responses if r in triples]
            succ[("D", t, k)] = [("A", r) for r in valid]
            preds[("A", t)]  # touch so every node exists
            for r in valid:
                preds[("A", r)].append(("D", t, k))
        for node in succ[("A", t)]:
            preds[node].append(("A", t))

    attacker_wins: set = set()
    remaining = {node: len(nxt) for node, nxt in succ.items()}
    queue = [node for node, nxt in succ.items()
             if node[0] == "D" and not nxt]
    attacker_wins.update(queue)
    while queue:
        node = queue.pop()
        for p in preds[node]:
            if p in attacker_wins:
                continue
            if p[0] == "A":
                attacker_wins.add(p)
                queue.append(p)
            else:
                remaining[p] -= 1
                if remaining[p] == 0:
                    attacker_wins.add(p)
                    queue.append(p)
    if _EMPTY_TRIPLE not in triples:
        return False
    return ("A", _EMPTY_TRIPLE) not in attacker_wins


# ---------------------------------------------------------------------------
# Back-and-forth barbed bisimulation on structures

def _config_barbs(c: ConfStruct, x: frozenset) -> frozenset:
    return frozenset(c.label(e) for e in c.extensions(x)
                     if not c.label(e).is_tau)


def barbed_bf_bisim_structs(c1: ConfStruct, c2: ConfStruct
                            ) -> EquivalenceVerdict:
    """Barb-preserving bisimulation matching silent moves both ways."""
    def taus(c, x, forward):
        moves = c.extensions(x) if forward else c.retractions(x)
        return [e for e in moves if c.label(e).is_tau]

    pairs = {(x1, x2) for x1 in c1.configs for x2 in c2.configs}
    reasons: dict = {}
    changed = True
    while changed:
        changed = False
        for pair in list(pairs):
            x1, x2 = pair
            reason = None
            if _config_barbs(c1, x1) != _config_barbs(c2, x2):
                reason = "barbs differ"
            else:
                for forward in (True, False):
                    word = "silent move" if forward else "silent undo"
                    step = (lambda x, e: x | {e}) if forward else (lambda x, e: x - {e})
                    if any(not any((step(x1, e1), step(x2, e2)) in pairs
                                   for e2 in taus(c2, x2, forward))
                           for e1 in taus(c1, x1, forward)):
                        reason = f"left {word} unanswered"
                        break
                    if any(not any((step(x1, e1), step(x2, e2)) in pairs
                                   for e1 in taus(c1, x1, forward))
                           for e2 in taus(c2, x2, forward)):
                        reason = f"right {word} unanswered"
                        break
            if reason is not None:
                pairs.discard(pair)
                reasons.setdefault(pair, reason)
                changed = True
    start = (frozenset(), frozenset())
    if start in pairs:
        return EquivalenceVerdict(True)
    return EquivalenceVerdict(False, witness=reasons.get(start))


# ---------------------------------------------------------------------------
# Back-and-forth barbed bisimulation on reversible terms

def _term_game(t: RTerm, max_states: Optional[int]):
    graph = reachable_states(t, max_states)
    tau_fwd = defaultdict(set)
    tau_bwd = defaultdict(set)
    for src, lbl, dst in graph.edges:
        if lbl.action.is_tau:
            tau_fwd[src].add(dst)
            tau_bwd[dst].add(src)
    barb_map = {}
    for key, term in graph.nodes.items():
        barb_map[key] = frozenset(l.action for l, _ in forward_steps(term, check=False)
                                  if not l.action.is_tau)
    return graph, tau_fwd, tau_bwd, barb_map


def barbed_bf_bisim_terms(t1: RTerm, t2: RTerm,
                          max_states: Optional[int] = None
                          ) -> EquivalenceVerdict:
    """The barbed back-and-forth game played on reachable state graphs."""
    g1, fwd1, bwd1, barbs1 = _term_game(normalize(t1), max_states)
    g2, fwd2, bwd2, barbs2 = _term_game(normalize(t2), max_states)
    pairs = {(k1, k2) for k1 in g1.nodes for k2 in g2.nodes
             if barbs1[k1] == barbs2[k2]}
    reasons: dict = {}
    changed = True
    while changed:
        changed = False
        for pair in list(pairs):
            k1, k2 = pair
            reason = None
            for moves1, moves2, word in ((fwd1, fwd2, "silent move"),
                                         (bwd1, bwd2, "silent undo")):
                if any(not any((d1, d2) in pairs for d2 in moves2[k2])
                       for d1 in moves1[k1]):
                    reason = f"left {word} unanswered at {g1.nodes[k1]}"
                    break
                if any(not any((d1, d2) in pairs for d1 in moves1[k1])
                       for d2 in moves2[k2]):
                    reason = f"right {word} unanswered at {g2.nodes[k2]}"
                    break
            if reason is not None:
                pairs.discard(pair)
                reasons.setdefault(pair, reason)
                changed = True
    start = (g1.initial, g2.initial)
    if start in pairs:
        return EquivalenceVerdict(True)
    if barbs1[g1.initial] != barbs2[g2.initial]:
        return EquivalenceVerdict(False, witness="barbs differ at the start")
    return EquivalenceVerdict(False, witness=reasons.get(start))


# ---------------------------------------------------------------------------
# Context synthesis

def _factor(label, barb_name: str) -> Process:
    return Sum(Prefix(label.dual(), NIL), Prefix(inp(barb_name), NIL))


def _candidate(labels, taken) -> Context:
    ctx: Context = HOLE
    chosen: set = set()
    for label in labels:
        barb = fresh_name("c", taken | chosen)
        chosen.add(barb)
        ctx = Par(_factor(label, barb), ctx)
    return ctx


def synthesize_context(p1: Process, p2: Process,
                       max_factors: int = 8
                       ) -> Optional[tuple[Context, frozenset]]:
    """Search for a context separating two processes in the barbed game.

    The bare hole is tried first.  Then, for each configuration of either
    denotation, a parallel tester offers the co-action of every visible
    event in it guarded against a fresh barb, so consuming the tester leaves
    an observable trace; refinements add one tester for an enabled extension.
    Every candidate is verified before being returned, together with the
    configuration it was built from.
    """
    taken = all_names(p1) | all_names(p2)
    from .encoding import encode_ccs

    def discriminates(ctx: Context) -> bool:
        return not barbed_bf_bisim_structs(
            encode_ccs(instantiate(ctx, p1)),
            encode_ccs(instantiate(ctx, p2))).related

    if discriminates(HOLE):
        return HOLE, frozenset()

    seen: set = set()
    candidates: list[tuple] = []
    for struct in (encode_ccs(p1), encode_ccs(p2)):
        for x in sorted(struct.configs, key=lambda x: (len(x), sorted(map(repr, x)))):
            labels = sorted((struct.label(e) for e in x
                             if not struct.label(e).is_tau), key=str)
            if labels and len(labels) <= max_factors:
                candidates.append((tuple(labels), x))
            ext_labels = sorted({struct.label(e) for e in struct.extensions(x)
                                 if not struct.label(e).is_tau}, key=str)
            for extra in ext_labels:
                if len(labels) + 1 <= max_factors:
                    candidates.append((tuple(labels) + (extra,), x))
    candidates.sort(key=lambda c: (len(c[0]), tuple(map(str, c[0]))))
    for labels, x in candidates:
        sig = tuple(sorted(map(str, labels)))
        if sig in seen:
            continue
        seen.add(sig)
        ctx = _candidate(labels, taken)
        if discriminates(ctx):
            return ctx, x
    return None


def default_context_family(p1: Process, p2: Process) -> list[Context]:
    """A small family probing each visible action, restriction and guarding."""
    taken = all_names(p1) | all_names(p2)
    family: list[Context] = [HOLE]
    labels = set()
    from .encoding import encode_ccs
    for struct in (encode_ccs(p1), encode_ccs(p2)):
        for e in struct.events:
            if not struct.label(e).is_tau:
                labels.add(struct.label(e))
    for label in sorted(labels, key=str):
        family.append(Par(_factor(label, fresh_name("c", taken)), HOLE))
    for name in sorted(free_names(p1) | free_names(p2)):
        family.append(Restrict(name, HOLE))
    family.append(Prefix(inp(fresh_name("g", taken)), HOLE))
    return family


@dataclass
class CongruenceReport:
    """Closure of the equivalences under a context family.

    ``consistent`` holds when relatedness of the bare processes carries over
    to every instantiated pair, in both games; results speak only for the
    family tried, never for all contexts.
    """

    base_related: bool
    entries: list = field(default_factory=list)  # (context, hhpb ok, barbed ok)

    @property
    def consistent(self) -> bool:
        return (not self.base_related
                or all(h and b for _, h, b in self.entries))

    @property
    def discriminating(self) -> list:
        return [ctx for ctx, h, b in self.entries if not (h and b)]


def check_congruence_closure(p1: Process, p2: Process,
                             contexts: Optional[list[Context]] = None,
                             max_states: int = 5000) -> CongruenceReport:
    """Play both games under each context of the family."""
    from .encoding import encode_ccs
    if contexts is None:
        contexts = default_context_family(p1, p2)
    report = CongruenceReport(hhpb(encode_ccs(p1), encode_ccs(p2)).related)
    for ctx in contexts:
        q1, q2 = instantiate(ctx, p1), instantiate(ctx, p2)
        hh = hhpb(encode_ccs(q1), encode_ccs(q2)).related
        barbed = barbed_bf_bisim_terms(lift(q1), lift(q2),
                                       max_states=max_states).related
        report.entries.append((ctx, hh, barbed))
    return report


# ---------------------------------------------------------------------------
# Forward-only bisimulation on plain processes

def forward_strong_bisim(p1: Process, p2: Process) -> bool:
    """Classical strong bisimilarity of the erased, forward-only semantics."""
    def explore(p):
        nodes = {}
        succs = defaultdict(list)
        start = ccs_state_key(p)
        nodes[start] = p
        frontier = [p]
        while frontier:
            cur = frontier.pop()
            ck = ccs_state_key(cur)
            for a, nxt in ccs_steps(cur):
                nk = ccs_state_key(nxt)
                if nk not in nodes:
                    nodes[nk] = nxt
                    frontier.append(nxt)
                move = ((a.kind, a.channel), nk)
                if move not in succs[ck]:
                    succs[ck].append(move)
        return start, nodes, succs

    s1, nodes1, succ1 = explore(p1)
    s2, nodes2, succ2 = explore(p2)
    pairs = {(k1, k2) for k1 in nodes1 for k2 in nodes2}
    changed = True
    while changed:
        changed = False
        for pair in list(pairs):
            k1, k2 = pair
            ok = (all(any(a == b and (d1, d2) in pairs for b, d2 in succ2[k2])
                      for a, d1 in succ1[k1])
                  and all(any(a == b and (d1, d2) in pairs for a, d1 in succ1[k1])
                          for b, d2 in succ2[k2]))
            if not ok:
                pairs.discard(pair)
                changed = True
    return (s1, s2) in pairs
