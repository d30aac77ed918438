"""Command line front end.

Subcommands: ``parse`` (check and normalize concrete syntax), ``encode``
(denote a process as a configuration structure), ``step`` (run a process and
inspect its transitions), ``check`` (decide an equivalence) and
``discriminate`` (explain inequivalence with a context).

Exit codes: 0 for success or "related", 1 for "not related", 2 for errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import confstruct as cs
from . import syntax
from .syntax import collapse, parse, parse_context, unparse
from .rccs import (backward_steps, barbs, erase, forward_steps, lift,
                   normalize, origin, reachable_states)
from .encoding import encode_ccs, encode_rccs
from .equivalences import (EquivalenceVerdict, barbed_bf_bisim_terms,
                           forward_strong_bisim, hhpb, synthesize_context)


@dataclass
class RunConfig:
    fmt: str = "text"
    max_events: int = 10
    max_context: int = 8
    par_collapse: bool = True
    contexts_file: str | None = None


def _add_common(sub):
    sub.add_argument("--format", dest="fmt", choices=("text", "json", "dot"),
                     default="text")
    sub.add_argument("--max-events", type=int, default=10,
                     help="size guard for denotations (event count)")
    sub.add_argument("--max-context", type=int, default=8,
                     help="largest number of tester factors to synthesize")
    sub.add_argument("--no-par-collapse", action="store_true",
                     help="do not merge identical parallel prefixes")
    sub.add_argument("--contexts", dest="contexts_file", default=None,
                     help="file of candidate contexts, one per line")


def _config(args) -> RunConfig:
    return RunConfig(fmt=args.fmt, max_events=args.max_events,
                     max_context=args.max_context,
                     par_collapse=not args.no_par_collapse,
                     contexts_file=args.contexts_file)


def _prepare(text: str, cfg: RunConfig):
    return collapse(parse(text), par_rule=cfg.par_collapse)


def _guard_events(struct, cfg: RunConfig):
    if len(struct.events) > cfg.max_events:
        raise ValueError(
            f"denotation has {len(struct.events)} events, over the "
            f"--max-events bound of {cfg.max_events}")


def cmd_parse(args) -> int:
    cfg = _config(args)
    term = parse(args.process)
    collapsed = collapse(term, par_rule=cfg.par_collapse)
    if cfg.fmt == "json":
        print(json.dumps({"input": unparse(term), "collapsed": unparse(collapsed),
                          "is_collapsed": term == collapsed}))
    else:
        print(unparse(collapsed))
    return 0


def cmd_encode(args) -> int:
    cfg = _config(args)
    term = _prepare(args.process, cfg)
    clashes = syntax.detect_auto_conflict_or_concurrency(term)
    if clashes:
        raise ValueError(
            "term is outside the encodable fragment (auto-concurrency or "
            "auto-conflict): " + "; ".join(str(c) for c in clashes))
    struct = encode_ccs(term)
    _guard_events(struct, cfg)
    if cfg.fmt == "json":
        print(json.dumps(cs.to_json(struct)))
    elif cfg.fmt == "dot":
        print(cs.to_dot(struct))
    else:
        data = cs.to_json(struct)
        print(f"{len(data['events'])} events, {len(data['configurations'])} configurations")
        for ev in data["events"]:
            print(f"  {ev['id']}: {ev['label']}")
        for x in data["configurations"]:
            print("  {" + ",".join(x) + "}")
    return 0


def cmd_step(args) -> int:
    cfg = _config(args)
    term = normalize(lift(_prepare(args.process, cfg)))
    if args.do:
        for wanted in args.do.split(","):
            wanted = wanted.strip()
            moves = ([(l, t) for l, t in forward_steps(term)
                      if str(l.action) == wanted]
                     + [(l, t) for l, t in backward_steps(term)
                        if wanted.endswith("*") and str(l.action) == wanted[:-1]])
            if not moves:
                print(f"no transition on {wanted!r} from {erase(term)}",
                      file=sys.stderr)
                return 2
            term = moves[0][1]
    if cfg.fmt == "dot":
        print(reachable_states(term).to_dot())
        return 0
    info = {
        "state": str(term),
        "process": unparse(erase(term)),
        "origin": unparse(origin(term)),
        "barbs": sorted(str(a) for a in barbs(term)),
        "forward": [{"label": str(l), "to": unparse(erase(t))}
                    for l, t in forward_steps(term)],
        "backward": [{"label": str(l), "to": unparse(erase(t))}
                     for l, t in backward_steps(term)],
    }
    if cfg.fmt == "json":
        print(json.dumps(info))
    else:
        print(f"state:   {info['state']}")
        print(f"process: {info['process']}")
        print(f"origin:  {info['origin']}")
        print(f"barbs:   {' '.join(info['barbs']) or '(none)'}")
        for move in info["forward"]:
            print(f"  {move['label']} -> {move['to']}")
        for move in info["backward"]:
            print(f"  {move['label']} -> {move['to']}")
    return 0


def _emit_verdict(verdict: EquivalenceVerdict, cfg: RunConfig) -> int:
    if cfg.fmt == "json":
        print(json.dumps(verdict.to_json()))
    else:
        print("related" if verdict.related else "not related")
        if verdict.failing_stratum:
            kind, depth = verdict.failing_stratum
            print(f"fails at stratum {kind}{depth}")
        if verdict.witness:
            print(f"witness: {verdict.witness}")
        if verdict.context:
            print(f"context: {verdict.context}")
    return 0 if verdict.related else 1


def cmd_check(args) -> int:
    cfg = _config(args)
    p1 = _prepare(args.left, cfg)
    p2 = _prepare(args.right, cfg)
    if args.equiv == "hhpb":
        s1, s2 = encode_ccs(p1), encode_ccs(p2)
        _guard_events(s1, cfg)
        _guard_events(s2, cfg)
        verdict = hhpb(s1, s2)
    elif args.equiv in ("barbed", "bfbarb"):
        verdict = barbed_bf_bisim_terms(lift(p1), lift(p2))
    else:
        verdict = EquivalenceVerdict(forward_strong_bisim(p1, p2))
    return _emit_verdict(verdict, cfg)


def cmd_discriminate(args) -> int:
    cfg = _config(args)
    p1 = _prepare(args.left, cfg)
    p2 = _prepare(args.right, cfg)
    s1, s2 = encode_ccs(p1), encode_ccs(p2)
    _guard_events(s1, cfg)
    _guard_events(s2, cfg)
    verdict = hhpb(s1, s2)
    if verdict.related:
        print("processes are HHPB-related; nothing to discriminate",
              file=sys.stderr)
        return 2
    if not verdict.related:
        ctx = None
        if cfg.contexts_file:
            with open(cfg.contexts_file) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    cand = parse_context(line)
                    from .equivalences import barbed_bf_bisim_structs
                    related = barbed_bf_bisim_structs(
                        encode_ccs(syntax.instantiate(cand, p1)),
                        encode_ccs(syntax.instantiate(cand, p2))).related
                    if not related:
                        ctx = cand
                        break
        else:
            found = synthesize_context(p1, p2, max_factors=cfg.max_context)
            ctx = found[0] if found else None
        if ctx is not None:
            verdict = EquivalenceVerdict(False, verdict.failing_stratum,
                                         verdict.witness, unparse(ctx))
    return _emit_verdict(verdict, cfg)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="revccs",
        description="workbench for reversible process calculus equivalences")
    subs = ap.add_subparsers(dest="command", required=True)

    p = subs.add_parser("parse", help="parse and normalize a process")
    p.add_argument("process")
    _add_common(p)
    p.set_defaults(func=cmd_parse)

    p = subs.add_parser("encode", help="denote a process as a structure")
    p.add_argument("process")
    _add_common(p)
    p.set_defaults(func=cmd_encode)

    p = subs.add_parser("step", help="run a process and list transitions")
    p.add_argument("process")
    p.add_argument("--do", default=None,
                   help="comma separated actions to perform first; a "
                        "trailing * undoes the action")
    _add_common(p)
    p.set_defaults(func=cmd_step)

    p = subs.add_parser("check", help="decide an equivalence")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--equiv",
                   choices=("hhpb", "barbed", "bfbarb", "forward", "strong"),
                   default="hhpb")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = subs.add_parser("discriminate",
                        help="decide and, on failure, produce a context")
    p.add_argument("left")
    p.add_argument("right")
    _add_common(p)
    p.set_defaults(func=cmd_discriminate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (syntax.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
