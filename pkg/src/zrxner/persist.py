"""Serialize mappers, tagger models, and their embedding tables into the
checkpoint container.

Trainable tensors are stored in float64 (bit-exact round trips); frozen
embedding tables are stored in float32. Vocabulary lists ride in the flat
config block: words are whitespace-free by construction, characters are
stored as one string in index order.
"""

import numpy as np

from .align import LinearMapper
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import PAD_CHAR, UNK_CHAR
from .embeddings import EmbeddingTable
from .errors import CheckpointError
from .numeric import RNG_ALGORITHM, Rng
from .tagger import Tagger
from .trainer import TrainingConfig


def save_mapper(path, mapper, extra_config=None):
    config = {
        "kind": "mapper",
        "direction": mapper.direction,
        "dim": mapper.dim,
        "rng": RNG_ALGORITHM,
    }
    if extra_config:
        config.update(extra_config)
    save_checkpoint(path, config, {"mapper.w": mapper.w})


def load_mapper(path):
    config, tensors = load_checkpoint(path)
    if config.get("kind") != "mapper":
        raise CheckpointError(f"{path} is not a mapper checkpoint")
    return LinearMapper(tensors["mapper.w"], config["direction"]), config


def save_table(path, table, extra_config=None):
    """Export one embedding table (e.g. a mapped vocabulary) on its own."""
    config = {
        "kind": "table",
        "language": table.language,
        "words": " ".join(table.words),
        "dim": table.dim,
    }
    if extra_config:
        config.update(extra_config)
    save_checkpoint(path, config, {"vectors": table.vectors.astype(np.float32)})


def load_table(path):
    config, tensors = load_checkpoint(path)
    if config.get("kind") != "table":
        raise CheckpointError(f"{path} is not an embedding-table checkpoint")
    table = EmbeddingTable(
        config["words"].split(" "),
        tensors["vectors"].astype(np.float64),
        config.get("language", ""),
    )
    return table, config


def _chars_to_text(char_vocab):
    ordered = sorted(char_vocab.items(), key=lambda kv: kv[1])
    chars = []
    for ch, idx in ordered:
        if ch in (PAD_CHAR, UNK_CHAR):
            continue
        chars.append(ch)
    return "".join(chars)


def _chars_from_text(text):
    vocab = {PAD_CHAR: 0, UNK_CHAR: 1}
    for ch in text:
        vocab[ch] = len(vocab)
    return vocab


def save_model(path, model, train_config, tables, extra_config=None):
    """Persist a tagger with its common-space embedding tables.

    tables maps language keys ('src', 'tgt') to the EmbeddingTables the
    model was trained against, so tagging needs nothing but the checkpoint.
    """
    config = {
        "kind": "tagger",
        "rng": RNG_ALGORITHM,
        "tags": " ".join(model.cfg.tags),
        "chars": _chars_to_text(model.char_vocab),
        "languages": " ".join(sorted(model.encoders)),
        "word_dim": model.cfg.word_dim,
        # structural truth; the variant name alone does not pin these for
        # fine-tuned models (cross_augmented inherits its base's structure)
        "model.use_char": model.cfg.use_char,
        "model.tied": model.cfg.tied,
    }
    config.update(train_config.to_flat())
    if extra_config:
        config.update(extra_config)
    tensors = dict(model.all_parameters())
    for lang, table in tables.items():
        if table is None:
            continue
        config[f"emb.{lang}.words"] = " ".join(table.words)
        config[f"emb.{lang}.language"] = table.language
        tensors[f"emb.{lang}.vectors"] = table.vectors.astype(np.float32)
    save_checkpoint(path, config, tensors)


def load_model(path):
    """Rebuild (model, train_config, tables, raw config) from a checkpoint."""
    config, tensors = load_checkpoint(path)
    if config.get("kind") != "tagger":
        raise CheckpointError(f"{path} is not a tagger checkpoint")
    train_config = TrainingConfig.from_flat(config)
    tags = config["tags"].split(" ")
    char_vocab = _chars_from_text(config.get("chars", ""))
    languages = tuple(config["languages"].split(" "))
    tagger_cfg = train_config.tagger_config(int(config["word_dim"]), tags)
    if "model.use_char" in config:
        tagger_cfg.use_char = config["model.use_char"] == "True"
    if "model.tied" in config:
        tagger_cfg.tied = config["model.tied"] == "True"
    model = Tagger(tagger_cfg, char_vocab, Rng(train_config.seed), languages)
    params = model.all_parameters()
    missing = set(params) - set(tensors)
    if missing:
        raise CheckpointError(f"checkpoint lacks tensors: {sorted(missing)}")
    for name, arr in params.items():
        np.copyto(arr, tensors[name])
    tables = {}
    for key in tensors:
        if not (key.startswith("emb.") and key.endswith(".vectors")):
            continue
        lang = key[len("emb.") : -len(".vectors")]
        tables[lang] = EmbeddingTable(
            config[f"emb.{lang}.words"].split(" "),
            tensors[key].astype(np.float64),
            config.get(f"emb.{lang}.language", lang),
        )
    return model, train_config, tables, config
