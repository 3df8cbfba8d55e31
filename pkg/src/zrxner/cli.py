"""Batch command-line interface.

Subcommands: align, pretrain, finetune, tag, eval, project. Every command
honors --seed and an optional --config file of flat key=value lines (flags
override the file); the effective configuration is embedded in every
checkpoint written. Exit codes: 0 success, 2 input or usage error,
3 artifact or version error, 4 numerical failure.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import fields

import numpy as np

from . import align as al
from .checkpoint import text_to_config
from .corpus import (
    IOB2,
    build_vocab,
    convert_scheme,
    correct_tag_ratio_by_length,
    entity_f1,
    read_conll,
    write_conll,
)
from .embeddings import load_vec_text, normalize
from .errors import (
    AlignmentError,
    CheckpointError,
    NumericalError,
    ParseError,
    UsageError,
)
from .numeric import Rng, svd_square
from .persist import load_mapper, load_model, save_mapper, save_model, save_table
from .trainer import (
    EvalSet,
    TrainingConfig,
    augmented_finetune,
    best_state,
    common_space_tables,
    multi_seed_report,
    pretrain_source,
    restore_state,
    snapshot_state,
)
from .tagger import Tagger, predict

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ARTIFACT = 3
EXIT_NUMERIC = 4


def _read_config_file(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return text_to_config(fh.read())


def _flat_overlay(cls, prefix, file_cfg, overrides):
    """file config then CLI overrides, parsed into a dataclass."""
    flat = {k: v for k, v in file_cfg.items() if k.startswith(prefix + ".")}
    for name, value in overrides.items():
        if value is not None:
            flat[f"{prefix}.{name}"] = str(value)
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, raw in flat.items():
        name = key[len(prefix) + 1 :]
        if name not in known:
            raise UsageError(f"unknown {prefix} config key {name!r}")
        kwargs[name] = raw
    return kwargs


def _training_config(file_cfg, **overrides):
    flat = {
        f"train.{k}": v
        for k, v in _flat_overlay(TrainingConfig, "train", file_cfg, overrides).items()
    }
    return TrainingConfig.from_flat(flat)


def _align_config(file_cfg, **overrides):
    kwargs = _flat_overlay(al.AlignConfig, "align", file_cfg, overrides)
    typed = {}
    for f in fields(al.AlignConfig):
        if f.name in kwargs:
            caster = type(f.default)
            typed[f.name] = caster(kwargs[f.name])
    return al.AlignConfig(**typed)


def _load_table(path, limit, language):
    with open(path, "r", encoding="utf-8") as fh:
        table = load_vec_text(fh, limit=limit, language=language)
    return normalize(table, "unit")


def _read_dataset(path, language, role, scheme, tag_col=-1, token_col=0):
    with open(path, "r", encoding="utf-8") as fh:
        return read_conll(fh, token_col=token_col, tag_col=tag_col,
                          language=language, role=role, scheme=scheme)


def _convert_dataset(dataset, to_scheme):
    if dataset.scheme == to_scheme:
        return dataset
    for sent in dataset:
        if sent.tags is not None:
            sent.tags = convert_scheme(sent.tags, dataset.scheme, to_scheme)
    dataset.scheme = to_scheme
    return dataset


# ---------------------------------------------------------------------------
# align


def _identical_string_p1(space_table, moving_table, mapper, k, cap=5000):
    """CSLS P@1 over words spelled identically in both vocabularies."""
    shared = [
        (moving_table.index(w), space_table.index(w))
        for w in moving_table.words[:cap]
        if w in space_table
    ]
    if not shared:
        return float("nan")
    m_idx = [m for m, _ in shared]
    mapped = moving_table.vectors[m_idx] @ mapper.w.T
    best, _ = al.csls_top1(mapped, space_table.vectors, k)
    hits = sum(1 for rank, (_, s) in enumerate(shared) if best[rank] == s)
    return hits / len(shared)


def cmd_align(args):
    file_cfg = _read_config_file(args.config)
    config = _align_config(
        file_cfg, w_steps=args.w_steps, disc_steps=args.disc_steps,
        batch_size=args.batch_size, disc_hidden=args.disc_hidden,
        vocab_cap=args.vocab_cap, csls_k=args.csls_k,
        dict_top_n=args.dict_top_n, restarts=args.restarts,
    )
    src = _load_table(args.src_emb, args.limit, "src")
    tgt = _load_table(args.tgt_emb, args.limit, "tgt")
    if src.dim != tgt.dim:
        raise UsageError(
            f"dimension mismatch: source {src.dim} vs target {tgt.dim}"
        )
    if args.direction == "s2t":
        space, moving, direction = tgt, src, al.S_TO_T
    else:
        space, moving, direction = src, tgt, al.T_TO_S
    rng = Rng(args.seed)
    game_log = []
    mapper = al.adversarial_train(space, moving, rng, config, log=game_log)
    mapper.direction = direction
    history = []
    if args.refine_iters > 0:
        mapper = al.refine(
            space, moving, mapper, args.refine_iters, k=config.csls_k,
            top_n=config.dict_top_n,
            criterion_sample_n=config.criterion_sample_n, history=history,
        )
    p1 = _identical_string_p1(space, moving, mapper, config.csls_k)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for step, d_loss, a_loss in game_log:
                fh.write(f"adversarial\t{step}\t{d_loss:.6f}\t{a_loss:.6f}\n")
            for iteration, criterion, size in history:
                fh.write(f"refine\t{iteration}\t{criterion:.6f}\t{size}\n")
    if args.dict_out:
        dico = al.induce_dictionary(
            space, moving, mapper, config.csls_k, config.dict_top_n
        )
        with open(args.dict_out, "w", encoding="utf-8") as fh:
            for moving_idx, space_idx in dico.pairs:
                if args.direction == "s2t":
                    tgt_word = space.words[space_idx]
                    src_word = moving.words[moving_idx]
                else:
                    tgt_word = moving.words[moving_idx]
                    src_word = space.words[space_idx]
                fh.write(f"{tgt_word} {src_word}\n")
    extra = {
        "seed": args.seed,
        "refine_iters": args.refine_iters,
        "identical_string_p1": "nan" if math.isnan(p1) else f"{p1:.4f}",
    }
    extra.update({f"align.{f.name}": getattr(config, f.name)
                  for f in fields(al.AlignConfig)})
    save_mapper(args.out, mapper, extra)
    if args.export_mapped:
        from .embeddings import apply_mapper

        mapped = apply_mapper(moving, mapper.w)
        save_table(args.export_mapped, mapped, {"seed": args.seed,
                                                "mapper": args.out})
    print(f"mapper saved to {args.out}")
    print(f"orthogonality_error\t{mapper.orthogonality_error():.2e}")
    print(f"identical_string_p1\t{p1:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# pretrain


def _build_eval_sets(args, model_scheme, src_table, tgt_table):
    token_col = getattr(args, "token_col", 0)
    tag_col = getattr(args, "tag_col", -1)
    sets = []
    if args.dev:
        dev = _convert_dataset(
            _read_dataset(args.dev, "src", "dev", args.input_scheme,
                          tag_col=tag_col, token_col=token_col),
            model_scheme,
        )
        sets.append(EvalSet("src_dev", "src", src_table, dev))
    if getattr(args, "tgt_dev", None):
        if tgt_table is None:
            raise UsageError("--tgt-dev requires --tgt-emb")
        ds = _convert_dataset(
            _read_dataset(args.tgt_dev, "tgt", "dev", args.input_scheme,
                          tag_col=tag_col, token_col=token_col),
            model_scheme,
        )
        sets.append(EvalSet("tgt_dev", "tgt", tgt_table, ds))
    if getattr(args, "tgt_test", None):
        if tgt_table is None:
            raise UsageError("--tgt-test requires --tgt-emb")
        ds = _convert_dataset(
            _read_dataset(args.tgt_test, "tgt", "test", args.input_scheme,
                          tag_col=tag_col, token_col=token_col),
            model_scheme,
        )
        sets.append(EvalSet("tgt_test", "tgt", tgt_table, ds))
    return sets


def cmd_pretrain(args):
    file_cfg = _read_config_file(args.config)
    config = _training_config(
        file_cfg, variant=args.variant, scheme=args.scheme,
        selection=args.select, seed=args.seed, epochs=args.epochs,
        batch_size=args.batch_size, eval_interval=args.eval_interval,
        dropout=args.dropout, lr0=args.lr0, char_dim=args.char_dim,
        char_hidden=args.char_hidden, word_hidden=args.word_hidden,
        head_hidden=args.head_hidden, emb_limit=args.limit,
        constrained_decoding=args.constrained or None,
    )
    train = _convert_dataset(
        _read_dataset(args.train, "src", "train", args.input_scheme,
                      tag_col=args.tag_col, token_col=args.token_col),
        config.scheme,
    )
    if any(s.tags is None for s in train):
        raise UsageError("training data must carry a tag column")
    src_raw = _load_table(args.src_emb, config.emb_limit, "src")
    tgt_raw = (
        _load_table(args.tgt_emb, config.emb_limit, "tgt")
        if args.tgt_emb else None
    )
    mapper = None
    if args.mapper:
        mapper, mapper_cfg = load_mapper(args.mapper)
        config.direction = mapper.direction
    elif config.variant != "source_mono":
        raise UsageError(f"variant {config.variant} requires --mapper")
    src_table, tgt_table = common_space_tables(src_raw, tgt_raw, mapper)
    datasets = [train]
    eval_sets = _build_eval_sets(args, config.scheme, src_table, tgt_table)
    datasets.extend(ev.dataset for ev in eval_sets)
    _, char_vocab = build_vocab(datasets)
    tags = sorted({t for s in train for t in s.tags})
    model = Tagger(
        config.tagger_config(src_table.dim, tags), char_vocab,
        Rng(config.seed),
    )
    rng = Rng(config.seed)
    log_stream = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        records = pretrain_source(
            model, train, src_table, config, rng, eval_sets, log_stream
        )
    finally:
        if log_stream:
            log_stream.close()
    chosen, state = best_state(records, config.selection)
    restore_state(model, state)
    tables = {"src": src_table}
    if tgt_table is not None:
        tables["tgt"] = tgt_table
    save_model(args.out, model, config, tables, {
        "stage": "pretrain",
        "selected_step": chosen.step,
        "selected_f1": f"{chosen.scores[config.selection]:.6f}",
    })
    print(f"model saved to {args.out}")
    for name, score in sorted(chosen.scores.items()):
        print(f"{name}\t{100 * score:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# finetune


def cmd_finetune(args):
    model, config, tables, raw_cfg = load_model(args.checkpoint)
    file_cfg = _read_config_file(args.config)
    config = _training_config(
        {**config.to_flat(), **file_cfg},
        selection=args.select, rounds=args.rounds, n_steps=args.n_steps,
        patience=args.patience, eval_interval=args.eval_interval,
    )
    src_train = _convert_dataset(
        _read_dataset(args.src_train, "src", "train", args.input_scheme,
                      tag_col=args.tag_col, token_col=args.token_col),
        config.scheme,
    )
    tgt_train = _read_dataset(
        args.tgt_train, "tgt", "train", config.scheme, tag_col=None,
        token_col=args.token_col,
    )
    src_table = tables.get("src")
    tgt_table = tables.get("tgt")
    if tgt_table is None:
        if not args.tgt_emb:
            raise UsageError("checkpoint has no target table; pass --tgt-emb")
        tgt_raw = _load_table(args.tgt_emb, config.emb_limit, "tgt")
        mapper = load_mapper(args.mapper)[0] if args.mapper else None
        _, tgt_table = common_space_tables(src_table, tgt_raw, mapper)
    args.dev = args.src_dev
    eval_sets = _build_eval_sets(args, config.scheme, src_table, tgt_table)
    if not any(ev.name == config.selection for ev in eval_sets):
        raise UsageError(
            f"selection mode {config.selection} has no evaluation split"
        )
    seeds = [int(s) for s in args.seeds.split(",") if s]
    if not seeds:
        raise UsageError("at least one seed is required")
    base_state = snapshot_state(model)
    per_seed = {}
    paths = {}
    for seed in seeds:
        run_model = model
        if "tgt" not in run_model.encoders:
            run_model.add_target_encoder(Rng(seed))
        restore_state(run_model, base_state)
        run_model.encoders["tgt"].copy_from(run_model.encoders["src"])
        run_config = TrainingConfig.from_flat(config.to_flat())
        run_config.seed = seed
        run_config.variant = "cross_augmented"
        log_stream = (
            open(f"{args.log}.seed{seed}", "w", encoding="utf-8")
            if args.log else None
        )
        try:
            records = augmented_finetune(
                run_model, src_train, tgt_train, src_table, tgt_table,
                run_config, Rng(seed), eval_sets, log_stream,
            )
        finally:
            if log_stream:
                log_stream.close()
        chosen, state = best_state(records, run_config.selection)
        restore_state(run_model, state)
        out_path = f"{args.out}.seed{seed}.zrx"
        save_model(out_path, run_model, run_config,
                   {"src": src_table, "tgt": tgt_table}, {
                       "stage": "finetune",
                       "selected_step": chosen.step,
                   })
        per_seed[seed] = {k: 100 * v for k, v in chosen.scores.items()}
        paths[seed] = out_path
        print(f"seed {seed}: " + " ".join(
            f"{k}={v:.2f}" for k, v in sorted(per_seed[seed].items())
        ))
    best_seed = max(
        seeds, key=lambda s: per_seed[s].get(config.selection, float("-inf"))
    )
    manifest = {
        "command": "finetune",
        "config": {k: str(v) for k, v in sorted(config.to_flat().items())},
        "seeds": seeds,
        "metrics": {str(s): per_seed[s] for s in seeds},
        "checkpoints": {str(s): paths[s] for s in seeds},
        "selected_checkpoint": paths[best_seed],
        "selection": config.selection,
    }
    if len(seeds) >= 2:
        manifest["aggregate"] = multi_seed_report(list(per_seed.values()))
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"selected checkpoint: {paths[best_seed]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# tag / eval / project


def cmd_tag(args):
    model, config, tables, _ = load_model(args.checkpoint)
    lang = args.language
    if lang not in model.encoders:
        lang = "src"
    table = tables.get(args.language)
    if table is None:
        table = tables.get("src")
    if table is None:
        raise CheckpointError("checkpoint carries no embedding table")
    dataset = _read_dataset(args.input, args.language, "test", config.scheme,
                            tag_col=None, token_col=args.token_col)
    out_scheme = IOB2 if args.to_iob2 else config.scheme
    for sent in dataset:
        tags = predict(model, lang, table, sent.tokens)
        if out_scheme != config.scheme:
            tags = convert_scheme(tags, config.scheme, out_scheme)
        sent.tags = tags
    with open(args.output, "w", encoding="utf-8") as fh:
        write_conll(dataset, fh)
    print(f"tagged {dataset.size} sentences -> {args.output}")
    return EXIT_OK


def cmd_eval(args):
    gold = _read_dataset(args.gold, "", "test", args.scheme,
                         tag_col=args.tag_col, token_col=args.token_col)
    pred = _read_dataset(args.pred, "", "test", args.scheme,
                         tag_col=args.tag_col, token_col=args.token_col)
    if gold.size != pred.size:
        raise UsageError(
            f"gold has {gold.size} sentences, predictions {pred.size}"
        )
    for i, (g, p) in enumerate(zip(gold, pred)):
        if g.tokens != p.tokens:
            raise UsageError(
                f"sentence {i} diverges: {' '.join(g.tokens)!r} vs "
                f"{' '.join(p.tokens)!r}"
            )
    report = entity_f1(gold, [s.tags for s in pred])
    print("type\tprecision\trecall\tf1")
    o = report.overall
    print(f"ALL\t{100 * o.precision:.2f}\t{100 * o.recall:.2f}\t{100 * o.f1:.2f}")
    for name in sorted(report.per_type):
        t = report.per_type[name]
        print(
            f"{name}\t{100 * t.precision:.2f}\t{100 * t.recall:.2f}"
            f"\t{100 * t.f1:.2f}"
        )
    print(f"repaired_pred\t{report.pred_repairs}")
    if args.curve_out:
        curve = correct_tag_ratio_by_length(
            gold, [s.tags for s in pred], args.buckets
        )
        with open(args.curve_out, "w", encoding="utf-8") as fh:
            for (lo, hi), ratio in sorted(curve.items()):
                fh.write(f"{lo}-{hi}\t{ratio:.6f}\n")
    return EXIT_OK


def _pca_2d(vectors):
    centered = vectors - vectors.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / max(len(centered), 1)
    u, s, _ = svd_square(cov)
    components = u[:, :2]
    # deterministic sign: largest-magnitude entry positive
    for col in range(components.shape[1]):
        pivot = np.abs(components[:, col]).argmax()
        if components[pivot, col] < 0:
            components[:, col] *= -1
    return centered @ components, s


def cmd_project(args):
    if args.emb:
        table = _load_table(args.emb, args.limit, "")
        words, vectors = table.words, table.vectors
    elif args.checkpoint:
        model, _, tables, _ = load_model(args.checkpoint)
        lang = args.language
        if lang not in tables:
            raise UsageError(f"checkpoint has no table for {lang!r}")
        words = tables[lang].words[: args.limit]
        vectors = tables[lang].vectors[: args.limit]
    else:
        raise UsageError("pass --emb or --checkpoint")
    tag_of = {}
    if args.tags:
        with open(args.tags, "r", encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) >= 2:
                    tag_of[parts[0]] = parts[1]
    coords, spectrum = _pca_2d(np.asarray(vectors, dtype=np.float64))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "x", "y", "tag"])
        for i, word in enumerate(words):
            writer.writerow([
                word, f"{coords[i, 0]:.6f}", f"{coords[i, 1]:.6f}",
                tag_of.get(word, ""),
            ])
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            json.dump({
                "command": "project",
                "method": "pca",
                "rows": len(words),
                "explained_variance": [float(x) for x in spectrum[:2]],
                "total_variance": float(spectrum.sum()),
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"projected {len(words)} rows (method=pca) -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument surface


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zrxner",
        description="Zero-resource cross-lingual NER toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="learn an unsupervised embedding mapper")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    p.add_argument("--direction", choices=("s2t", "t2s"), default="s2t")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refine-iters", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--dict-out")
    p.add_argument("--export-mapped",
                   help="also write the mapped table as a checkpoint")
    p.add_argument("--log")
    p.add_argument("--config")
    p.add_argument("--limit", type=int, default=200000)
    p.add_argument("--w-steps", type=int)
    p.add_argument("--disc-steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--disc-hidden", type=int)
    p.add_argument("--vocab-cap", type=int)
    p.add_argument("--csls-k", type=int)
    p.add_argument("--dict-top-n", type=int)
    p.add_argument("--restarts", type=int)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("pretrain", help="train the source model")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--tgt-dev")
    p.add_argument("--tgt-test")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb")
    p.add_argument("--mapper")
    p.add_argument("--variant", default=None)
    p.add_argument("--scheme", default=None)
    p.add_argument("--input-scheme", default="IOB1")
    p.add_argument("--token-col", type=int, default=0)
    p.add_argument("--tag-col", type=int, default=-1)
    p.add_argument("--select", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--eval-interval", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--lr0", type=float, default=None)
    p.add_argument("--char-dim", type=int, default=None)
    p.add_argument("--char-hidden", type=int, default=None)
    p.add_argument("--word-hidden", type=int, default=None)
    p.add_argument("--head-hidden", type=int, default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--constrained", action="store_true", default=False)
    p.add_argument("--out", required=True)
    p.add_argument("--log")
    p.add_argument("--config")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="augmented fine-tuning on target data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--src-train", required=True)
    p.add_argument("--tgt-train", required=True)
    p.add_argument("--src-dev")
    p.add_argument("--tgt-dev")
    p.add_argument("--tgt-test")
    p.add_argument("--tgt-emb")
    p.add_argument("--mapper")
    p.add_argument("--select", default=None)
    p.add_argument("--seeds", default="0")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--n-steps", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--eval-interval", type=int, default=None)
    p.add_argument("--input-scheme", default="IOB1")
    p.add_argument("--token-col", type=int, default=0)
    p.add_argument("--tag-col", type=int, default=-1)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.add_argument("--log")
    p.add_argument("--config")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("tag", help="tag a CoNLL file with a trained model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--language", choices=("src", "tgt"), default="tgt")
    p.add_argument("--to-iob2", action="store_true")
    p.add_argument("--token-col", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)  # tagging is deterministic
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", help="entity-level scoring of predictions")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--scheme", default=IOB2)
    p.add_argument("--curve-out")
    p.add_argument("--buckets", type=int, default=10)
    p.add_argument("--token-col", type=int, default=0)
    p.add_argument("--tag-col", type=int, default=-1)
    p.add_argument("--seed", type=int, default=0)  # scoring is deterministic
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("project", help="2-D PCA export of an embedding table")
    p.add_argument("--emb")
    p.add_argument("--checkpoint")
    p.add_argument("--language", choices=("src", "tgt"), default="tgt")
    p.add_argument("--tags")
    p.add_argument("--limit", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=0)  # projection is deterministic
    p.set_defaults(func=cmd_project)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except (NumericalError, AlignmentError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
