"""Command-line interface: ``efgdom <command> ...``.

Exit status is 0 on success, 1 when the input is a bad game or a check
cannot be carried out, and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dominance, efg, game as gm, lp, reducer, seqform

log = logging.getLogger("efgdom")


class DomainError(Exception):
    pass


def load_game(path: str) -> gm.GameTree:
    p = Path(path)
    try:
        if p.suffix == ".json":
            return efg.from_json(p.read_text())
        return efg.read_efg(p)
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None


def save_game(game: gm.GameTree, path: str) -> None:
    p = Path(path)
    if p.suffix == ".json":
        p.write_text(json.dumps(efg.to_json(game), indent=1) + "\n")
    else:
        efg.save_efg(game, p)


def emit(obj, as_json: bool, text: str) -> None:
    if as_json:
        print(json.dumps(obj, indent=2))
    else:
        print(text)


def resolve_player(game: gm.GameTree, spec: str) -> int:
    if spec in game.players:
        return game.players.index(spec)
    try:
        k = int(spec)
    except ValueError:
        raise DomainError(f"no player {spec!r}") from None
    if not 1 <= k <= game.num_players:
        raise DomainError(f"player number must be between 1 and {game.num_players}")
    return k - 1


def resolve_infoset(game: gm.GameTree, player: int, spec: str) -> int:
    try:
        return game.infoset_by_name(player, spec).id
    except KeyError as exc:
        raise DomainError(exc.args[0]) from None


def resolve_action(game: gm.GameTree, infoset: int, spec: str) -> int:
    actions = game.infosets[infoset].actions
    if spec in actions:
        return actions.index(spec)
    if spec.startswith("#") and spec[1:].isdigit() and int(spec[1:]) < len(actions):
        return int(spec[1:])
    raise DomainError(f"info set has no action {spec!r} (actions: {', '.join(actions)})")


# -- commands -------------------------------------------------------------------

def cmd_validate(args) -> int:
    game = load_game(args.game)
    report = gm.validate(game)
    recall = {game.players[p]: sorted(gm.check_perfect_recall(game, p).violations)
              for p in range(game.num_players)}
    ok = not report.violations and not any(recall.values())
    doc = {"valid": ok, "violations": report.violations, "imperfect_recall": recall}
    lines = [f"{game.title or args.game}: {'ok' if ok else 'INVALID'}"]
    lines += [f"  {v}" for v in report.violations]
    lines += [f"  {name} lacks perfect recall at info sets {sets}"
              for name, sets in recall.items() if sets]
    emit(doc, args.json, "\n".join(lines))
    return 0 if ok else 1


def _matrix_doc(M) -> list:
    return np.asarray(M.todense() if hasattr(M, "todense") else M).tolist()


def cmd_sequence_form(args) -> int:
    game = load_game(args.game)
    if game.num_players != 2:
        raise DomainError("sequence form needs a two-player game")
    sf = seqform.build_sequence_form(game)
    doc = {
        "d": [sf.seqs[0].d, sf.seqs[1].d],
        "c": [sf.seqs[0].c, sf.seqs[1].c],
        "payoff_nonzeros": [int(sf.A.nnz), int(sf.B.nnz)],
        "sequences": [[sf.seqs[p].label(k) for k in range(sf.seqs[p].d)] for p in (0, 1)],
    }
    if args.full:
        doc.update(E=_matrix_doc(sf.E), e=sf.e.tolist(), F=_matrix_doc(sf.F), f=sf.f.tolist(),
                   A=_matrix_doc(sf.A), B=_matrix_doc(sf.B))
    text = (f"player 1: {doc['d'][0]} sequences, {doc['c'][0]} constraints\n"
            f"player 2: {doc['d'][1]} sequences, {doc['c'][1]} constraints\n"
            f"payoff nonzeros: {doc['payoff_nonzeros'][0]} / {doc['payoff_nonzeros'][1]}")
    emit(doc, args.json, text)
    return 0


def cmd_check(args) -> int:
    game = load_game(args.game)
    player = resolve_player(game, args.player)
    infoset = resolve_infoset(game, player, args.infoset)
    action = resolve_action(game, infoset, args.action)
    config = dominance.CheckConfig(
        mode=dominance.STRICT_THEN_WEAK if args.weak else dominance.STRICT_ONLY,
        eps=args.eps, strong_scan_first=not args.no_strong)
    v = dominance.check_action(game, player, infoset, action, config)
    doc = v.to_dict()
    doc["infoset"] = reducer.infoset_label(game, infoset)
    print(json.dumps(doc, indent=2))
    return 0


def cmd_reduce(args) -> int:
    game = load_game(args.game)
    config = reducer.ReduceConfig(
        mode=args.mode, max_rounds=args.max_rounds, order=args.order,
        strong_scan_first=not args.no_strong, eps=args.eps, schedule=args.schedule,
        jobs=args.jobs)

    def progress(rnd):
        log.info("round %d: removed %s", rnd.round, rnd.counts(game.num_players))

    reduced, rlog = reducer.reduce_iteratively(game, config, progress)
    if args.out:
        save_game(reduced, args.out)
    if args.log:
        Path(args.log).write_text(rlog.to_json(indent=1) + "\n")
    doc = {"rounds": rlog.counts(), "terminated": rlog.terminated}
    lines = [f"round {k}: " + ", ".join(f"{game.players[p]} {n}" for p, n in enumerate(c))
             for k, c in enumerate(rlog.counts(), start=1)]
    lines.append(f"terminated: {rlog.terminated}")
    emit(doc, args.json, "\n".join(lines))
    return 0


def cmd_gen(args) -> int:
    from .poker import aof, equity
    config = aof.AofConfig.from_bb(args.stack_bb, args.sb, args.bb)
    if args.mc_samples:
        table = equity.monte_carlo_table(args.mc_samples, args.seed)
    else:
        path = args.equity or os.environ.get("EFG_EQUITY_TABLE") or equity.DEFAULT_TABLE
        try:
            table = equity.EquityTable.read_csv(path)
        except (OSError, ValueError, KeyError) as exc:
            raise DomainError(f"cannot load equity table {path}: {exc}") from None
    game = aof.gen_aof_game(config, table, showdown=args.showdown)
    save_game(game, args.out)
    print(f"wrote {args.out}: {len(game.nodes)} nodes, {len(game.infosets)} info sets",
          file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    from .poker import aof
    try:
        doc = json.loads(Path(args.log).read_text())
    except OSError as exc:
        raise DomainError(f"cannot read {args.log}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"{args.log} is not JSON: {exc}") from None
    grids = aof.grid_report(reducer.ReductionLog.from_dict(doc))
    out = {f"P{p + 1}": g for p, g in grids.items()}
    text = "\n\n".join(f"P{p + 1}\n{aof.format_grid(g)}" for p, g in grids.items())
    emit(out, args.json, text)
    return 0


def cmd_solve(args) -> int:
    game = load_game(args.game)
    if game.num_players != 2 or not game.is_zero_sum(1e-9):
        raise DomainError("solve needs a two-player zero-sum game")
    sol = seqform.solve_zero_sum(game)
    doc = {"value": sol.value, "x": sol.x.tolist(), "y": sol.y.tolist()}
    emit(doc, args.json, f"value for {game.players[0]}: {sol.value:.10g}")
    return 0


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="efgdom", description="Dominated actions in extensive-form games.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a game for structural problems")
    p.add_argument("game")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sequence-form", help="sequence-form dimensions (and matrices)")
    p.add_argument("game")
    p.add_argument("--full", action="store_true", help="include E, e, F, f, A, B")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sequence_form)

    p = sub.add_parser("check", help="test one action for dominance")
    p.add_argument("game")
    p.add_argument("--player", required=True, help="player number (1-based) or name")
    p.add_argument("--infoset", required=True, help="info set name, number or #id")
    p.add_argument("--action", required=True, help="action label or #index")
    p.add_argument("--weak", action="store_true", help="also test weak dominance")
    p.add_argument("--eps", type=float, help="absolute equality tolerance")
    p.add_argument("--no-strong", action="store_true", help="skip the leaf-comparison scan")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", help="iteratively remove dominated actions")
    p.add_argument("game")
    p.add_argument("--out", help="write the reduced game here")
    p.add_argument("--log", help="write the JSON removal log here")
    p.add_argument("--mode", choices=("strict", "weak"), default="strict")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--order", choices=("depth", "declaration"), default="depth")
    p.add_argument("--schedule", choices=(reducer.PER_PLAYER, reducer.SIMULTANEOUS),
                   default=reducer.SIMULTANEOUS)
    p.add_argument("--eps", type=float)
    p.add_argument("--no-strong", action="store_true")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("gen", help="generate a game")
    gen = p.add_subparsers(dest="family", required=True)
    q = gen.add_parser("poker-aof", help="two-player all-in-or-fold hold'em")
    q.add_argument("--stack-bb", type=float, default=8)
    q.add_argument("--sb", type=int, default=100)
    q.add_argument("--bb", type=int, default=200)
    q.add_argument("--equity", help="equity table CSV (default: shipped table)")
    q.add_argument("--mc-samples", type=int, help="use sampled equities instead (approximate)")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--showdown", choices=("outcomes", "expected"), default="outcomes")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_gen)

    p = sub.add_parser("report", help="summaries of reduction logs")
    rep = p.add_subparsers(dest="kind", required=True)
    q = rep.add_parser("grid", help="13x13 shove/fold grids from an all-in-or-fold log")
    q.add_argument("--log", required=True)
    q.add_argument("--json", action="store_true")
    q.set_defaults(func=cmd_report)

    p = sub.add_parser("solve", help="value of a two-player zero-sum game")
    p.add_argument("game")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (DomainError, efg.EfgError, efg.GameSchemaError, dominance.NotCheckable,
            seqform.ImperfectRecallError, seqform.StructuralError, lp.LpError,
            reducer.RemovalError, ValueError) as exc:
        print(f"efgdom: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
