"""Command-line frontend.

Subcommands: ingest, train, update, recommend, evaluate, sweep, graph,
dump-model. Flags beat config-file values, which beat dataset defaults.
The CIPREC_THREADS environment variable caps training worker counts.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ciprec import analysis, config, persistence
from ciprec.cip_i import CipIModel
from ciprec.cip_u import CipUModel
from ciprec.deepcip import DeepCipRecommender, TrainConfig, train as train_embeddings
from ciprec.fism import FismModel
from ciprec.ingest import EventLog, all_cips, build_profiles, parse_events, temporal_split
from ciprec.popularity import PopularityModel


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--dataset", choices=sorted(config.DATASET_DEFAULTS),
                   help="apply this dataset's default hyper-parameters")


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--path", help="raw consumption log file")
    p.add_argument("--format", dest="fmt", choices=["ml-tab", "ml-dcolon", "csv"],
                   help="raw log format")
    p.add_argument("--events", help="canonical events file (CIPREC1 events)")
    p.add_argument("--split", help="train,valid,test event counts (e.g. 75000,5000,20000)")


def _add_hyper(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dh", type=int, dest="delta_h", help="hammock distance threshold")
    p.add_argument("--delta", type=int, help="pack gap threshold, seconds")
    p.add_argument("--delta-minutes", type=int, help="pack gap threshold, minutes")
    p.add_argument("--k", type=int, help="neighborhood size")
    p.add_argument("--window", type=int, help="skip-gram window")
    p.add_argument("--top", type=int, dest="top_n", help="recommendation list size")
    p.add_argument("--dim", type=int, help="embedding/factor dimension")
    p.add_argument("--negatives", type=int, help="negative samples per pair")
    p.add_argument("--lr", type=float, help="initial learning rate")
    p.add_argument("--epochs", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, help="profile-size normalization exponent")


def _overrides(args) -> dict:
    keys = ("delta_h", "delta", "window", "top_n", "dim", "negatives", "lr",
            "epochs", "workers", "seed", "alpha", "model")
    out = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "delta_minutes", None) is not None:
        out["delta"] = args.delta_minutes * 60
    k = getattr(args, "k", None)
    if k is not None:
        out["k_users"] = k
        out["k_items"] = k
    if getattr(args, "min_weight", None) is not None:
        out["min_weight"] = args.min_weight
    if getattr(args, "hop_back", None) is not None:
        out["hop_back"] = args.hop_back
    if getattr(args, "hop_fwd", None) is not None:
        out["hop_fwd"] = args.hop_fwd
    return out


def _resolve(args) -> config.RunConfig:
    file_cfg = config.load_config_file(args.config) if args.config else None
    cfg = config.resolve(getattr(args, "dataset", None), file_cfg, _overrides(args))
    cap = os.environ.get("CIPREC_THREADS")
    if cap:
        cfg.workers = max(1, min(cfg.workers, int(cap)))
    return cfg


def _load_log(args, cfg: config.RunConfig) -> EventLog:
    if getattr(args, "events", None):
        return persistence.load_events(args.events)
    path = getattr(args, "path", None) or cfg.path
    if not path:
        raise SystemExit("need --events or --path/--format")
    fmt = getattr(args, "fmt", None) or cfg.fmt
    if not fmt:
        raise SystemExit("need --format (or --dataset) for a raw log")
    return parse_events(path, fmt)


def _split(args, cfg: config.RunConfig, log: EventLog):
    spec = getattr(args, "split", None)
    if spec:
        parts = [int(x) for x in spec.split(",")]
        if len(parts) != 3:
            raise SystemExit("--split needs train,valid,test")
        return temporal_split(log, *parts)
    if cfg.n_train is not None:
        return temporal_split(log, cfg.n_train, cfg.n_valid or 0, cfg.n_test or 0)
    return None


def _train_config(cfg: config.RunConfig) -> TrainConfig:
    return TrainConfig(dim=cfg.dim, window=cfg.window, negatives=cfg.negatives,
                       lr=cfg.lr, epochs=cfg.epochs, workers=cfg.workers,
                       seed=cfg.seed)


def _build_model(kind: str, store, cfg: config.RunConfig):
    if kind == "cip-u":
        return CipUModel.train(store, cfg.delta_h, cfg.k_users)
    if kind == "cip-i":
        return CipIModel.train(store, cfg.delta, cfg.k_items)
    if kind == "deepcip":
        corpus = all_cips(store, cfg.delta)
        emb = train_embeddings(corpus, _train_config(cfg))
        return DeepCipRecommender(emb, store, cfg.delta)
    if kind == "fism":
        return FismModel.train(store, cfg.delta, cfg.dim, cfg.alpha, cfg.seed)
    if kind == "popularity":
        return PopularityModel.train(store)
    raise SystemExit(f"unknown model kind {kind!r}")


def _events_from_profiles(store) -> EventLog:
    triples = []
    for u in sorted(store.profiles):
        prof = store.profiles[u]
        for p, (i, t) in enumerate(zip(prof.items, prof.ts)):
            triples.append((t, u, p, i))
    triples.sort()
    users = np.asarray([t[1] for t in triples], dtype=np.int64)
    items = np.asarray([t[3] for t in triples], dtype=np.int64)
    ts = np.asarray([t[0] for t in triples], dtype=np.int64)
    return EventLog(users, items, ts, np.full(len(triples), np.nan),
                    store.user_ids, store.item_ids)


def cmd_ingest(args) -> int:
    cfg = _resolve(args)
    log = _load_log(args, cfg)
    persistence.dump_events(log, args.out)
    print(f"{len(log)} events, {log.num_users} users, {log.num_items} items "
          f"-> {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve(args)
    if not args.model:
        raise SystemExit("--model is required")
    log = _load_log(args, cfg)
    splits = _split(args, cfg, log)
    train_log = splits[0] if splits else log
    store = build_profiles(train_log)
    model = _build_model(args.model, store, cfg)
    events_path = args.out + ".events"
    persistence.dump_events(train_log, events_path)
    persistence.save_model(model, args.out, events_path)
    print(f"trained {args.model} on {len(train_log)} events -> {args.out}")
    return 0


def _batches_from_log(log: EventLog) -> dict[int, list[tuple[int, int]]]:
    out: dict[int, list[tuple[int, int]]] = {}
    for k in range(len(log)):
        out.setdefault(int(log.users[k]), []).append(
            (int(log.items[k]), int(log.ts[k])))
    return out


def _remap_batches(log: EventLog, store) -> dict[int, list[tuple[int, int]]]:
    """Convert a new-events log's dense ids into the store's id space,
    extending the store's dictionaries for unseen raw ids."""
    user_index = {r: k for k, r in enumerate(store.user_ids)}
    item_index = {r: k for k, r in enumerate(store.item_ids)}
    out: dict[int, list[tuple[int, int]]] = {}
    for k in range(len(log)):
        u_raw = log.user_ids[int(log.users[k])]
        i_raw = log.item_ids[int(log.items[k])]
        u = user_index.get(u_raw)
        if u is None:
            u = user_index[u_raw] = len(store.user_ids)
            store.user_ids.append(u_raw)
            store.num_users += 1
        i = item_index.get(i_raw)
        if i is None:
            i = item_index[i_raw] = len(store.item_ids)
            store.item_ids.append(i_raw)
            store.num_items += 1
        out.setdefault(u, []).append((i, int(log.ts[k])))
    return out


def cmd_update(args) -> int:
    model = persistence.load_model(args.model_file)
    new_log = _load_log(args, _resolve(args))
    store = model.profiles
    batches = _remap_batches(new_log, store)
    if isinstance(model, CipUModel):
        model.apply_batch(batches)
    elif isinstance(model, CipIModel):
        model.apply_events(batches)
    elif isinstance(model, DeepCipRecommender):
        model.observe(batches)
    else:
        for u in sorted(batches):
            for item, t in batches[u]:
                store.add_event(u, item, t)
        if isinstance(model, PopularityModel):
            model.refresh()
    events_path = args.model_file + ".events"
    persistence.dump_events(_events_from_profiles(store), events_path)
    persistence.save_model(model, args.model_file, events_path)
    print(f"applied {len(new_log)} events -> {args.model_file}")
    return 0


def cmd_recommend(args) -> int:
    model = persistence.load_model(args.model_file)
    store = model.profiles
    user_index = {r: k for k, r in enumerate(store.user_ids)}
    u = user_index.get(args.user, -1)
    recs = model.recommend(u, args.top)
    print(" ".join(str(store.item_ids[i]) for i in recs))
    return 0


def _replay_hook(model, cfg: config.RunConfig):
    buffer: dict[int, list[tuple[int, int]]] = {}
    count = [0]

    def flush():
        if not buffer:
            return
        if isinstance(model, CipUModel):
            model.apply_batch(dict(buffer))
        elif isinstance(model, CipIModel):
            model.apply_events(dict(buffer))
        elif isinstance(model, DeepCipRecommender):
            model.observe(dict(buffer))
        else:
            for u in sorted(buffer):
                for item, t in buffer[u]:
                    model.profiles.add_event(u, item, t)
            if isinstance(model, PopularityModel):
                model.refresh()
        buffer.clear()

    def hook(u: int, i: int, t: int) -> None:
        buffer.setdefault(u, []).append((i, t))
        count[0] += 1
        if count[0] % cfg.batch_q == 0:
            flush()

    return hook


def cmd_evaluate(args) -> int:
    cfg = _resolve(args)
    if not args.model:
        raise SystemExit("--model is required")
    log = _load_log(args, cfg)
    splits = _split(args, cfg, log)
    if splits is None:
        raise SystemExit("evaluate needs --split or a --dataset with defaults")
    train_log, _, test_log = splits
    if len(test_log) == 0:
        raise SystemExit("test split is empty")
    store = build_profiles(train_log)
    model = _build_model(args.model, store, cfg)
    hook = _replay_hook(model, cfg) if args.replay else None
    report = analysis.precision_at_n(model, test_log, cfg.top_n, on_event=hook)
    _emit_reports([report], args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve(args)
    if not args.model:
        raise SystemExit("--model is required")
    grid: dict[str, list] = {}
    for spec in args.grid or []:
        if "=" not in spec:
            raise SystemExit(f"bad --grid {spec!r}, expected key=v1,v2,...")
        key, _, vals = spec.partition("=")
        if key not in vars(cfg):
            raise SystemExit(f"unknown grid key {key!r}")
        parsed = []
        for v in vals.split(","):
            try:
                parsed.append(int(v))
            except ValueError:
                parsed.append(float(v))
        grid[key] = parsed
    if not grid:
        raise SystemExit("sweep needs at least one --grid key=v1,v2")
    log = _load_log(args, cfg)
    splits = _split(args, cfg, log)
    if splits is None:
        raise SystemExit("sweep needs --split or a --dataset with defaults")
    train_log, valid_log, _ = splits
    if len(valid_log) == 0:
        raise SystemExit("validation split is empty")
    store = build_profiles(train_log)

    def build(point: dict):
        merged = config.resolve(None, vars(cfg).copy(), point)
        merged.model = args.model
        return _build_model(args.model, store, merged)

    reports = analysis.sweep(build, grid, valid_log, cfg.top_n)
    _emit_reports(reports, args.out)
    return 0


def _emit_reports(reports, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            analysis.write_reports(reports, fh)
    else:
        analysis.write_reports(reports, sys.stdout)


def cmd_graph(args) -> int:
    cfg = _resolve(args)
    log = _load_log(args, cfg)
    splits = _split(args, cfg, log)
    store = build_profiles(splits[0] if splits else log)
    graph = analysis.build_item_graph(store, cfg.hop_back, cfg.hop_fwd,
                                      cfg.min_weight)
    analysis.export_edge_list(graph, args.out)
    print(f"{len(graph)} edges over {len(graph.nodes)} items -> {args.out}")
    if args.graphml:
        analysis.export_graphml(graph, args.graphml)
    if args.partition:
        part = analysis.load_partition(args.partition)
        print(f"modularity {analysis.modularity(graph, part):.6f}")
    return 0


def cmd_dump_model(args) -> int:
    model = persistence.load_model(args.model_file)
    store = model.profiles
    print(f"kind: {model.kind}")
    print(f"params: {getattr(model, 'params', {})}")
    print(f"users: {store.num_users} items: {store.num_items} "
          f"profiles: {len(store)}")
    if args.out:
        events_path = args.out + ".events"
        persistence.dump_events(_events_from_profiles(store), events_path)
        persistence.save_model(model, args.out, events_path)
        print(f"rewritten -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ciprec",
                                 description="pack-based incremental recommenders")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw log into a canonical events file")
    _add_common(p)
    _add_input(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a model and persist it")
    _add_common(p)
    _add_input(p)
    _add_hyper(p)
    p.add_argument("--model", choices=config.MODEL_KINDS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("update", help="apply one batch of new events to a model")
    _add_common(p)
    _add_input(p)
    p.add_argument("--model-file", required=True)
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("recommend", help="top-N items for one user")
    p.add_argument("--model-file", required=True)
    p.add_argument("--user", type=int, required=True, help="raw user id")
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="temporal-replay precision on the test split")
    _add_common(p)
    _add_input(p)
    _add_hyper(p)
    p.add_argument("--model", choices=config.MODEL_KINDS)
    p.add_argument("--replay", action="store_true",
                   help="fold test events into the model as they replay")
    p.add_argument("--out", help="write the report CSV here instead of stdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid-search hyper-parameters on the validation split")
    _add_common(p)
    _add_input(p)
    _add_hyper(p)
    p.add_argument("--model", choices=config.MODEL_KINDS)
    p.add_argument("--grid", action="append", help="key=v1,v2,... (repeatable)")
    p.add_argument("--out", help="write the report CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("graph", help="export the co-consumption item graph")
    _add_common(p)
    _add_input(p)
    p.add_argument("--hop-back", type=int, dest="hop_back")
    p.add_argument("--hop-fwd", type=int, dest="hop_fwd")
    p.add_argument("--min-weight", type=float, dest="min_weight")
    p.add_argument("--out", required=True)
    p.add_argument("--graphml", help="also write GraphML here")
    p.add_argument("--partition", help="node,community CSV to score")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("dump-model", help="print a model file's summary")
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", help="re-serialize the model here")
    p.set_defaults(func=cmd_dump_model)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
