"""Three-stage training pipeline: source pretraining in the common embedding
space, stochastic length-thresholded pseudo-labeling, and joint augmented
fine-tuning of the source and target models around one shared head.

The learning rate follows max(lr0 / (1 + decay * epoch), floor) with the
epoch counter continuing across stages (one fine-tuning round advances it by
one). Models are evaluated every eval_interval batches; the best snapshot
per selection split is retained.
"""

import math
from dataclasses import dataclass, fields

import numpy as np

from .corpus import IOBES, Dataset, TaggedSentence, entity_f1
from .embeddings import apply_mapper
from .errors import NumericalError, UsageError
from .numeric import clipped_sgd_step, sample_uniform_int
from .tagger import (
    TaggerConfig,
    backward_pass,
    dropout_mask,
    predict,
)

VARIANTS = (
    "source_mono",
    "cross_word_nochar",
    "cross_word",
    "cross_shared",
    "cross_augmented",
)
SELECTIONS = ("src_dev", "tgt_dev", "tgt_test")


@dataclass
class TrainingConfig:
    lr0: float = 0.1
    decay: float = 0.01
    lr_floor: float = 0.0001
    clip: float = 5.0
    dropout: float = 0.5
    epochs: int = 30
    batch_size: int = 16
    eval_interval: int = 150
    max_sentence_length: int = 250
    n_steps: int = 0  # fine-tuning steps per round; 0 = one source epoch
    rounds: int = 20  # hard cap on fine-tuning rounds
    patience: int = 5
    variant: str = "cross_word"
    direction: str = "s_to_t"
    selection: str = "src_dev"
    seed: int = 0
    scheme: str = IOBES
    char_dim: int = 25
    char_hidden: int = 25
    word_hidden: int = 100
    head_hidden: int = 100
    constrained_decoding: bool = False
    emb_limit: int = 200000
    source_term: bool = True  # ablation hook: drop the source-batch loss term

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UsageError(f"unknown variant {self.variant!r}")
        if self.selection not in SELECTIONS:
            raise UsageError(f"unknown selection mode {self.selection!r}")

    @property
    def use_char(self):
        return self.variant != "cross_word_nochar"

    @property
    def tied(self):
        return self.variant in ("cross_shared", "cross_augmented")

    def tagger_config(self, word_dim, tags):
        return TaggerConfig(
            word_dim=word_dim,
            tags=list(tags),
            scheme=self.scheme,
            char_dim=self.char_dim,
            char_hidden=self.char_hidden,
            word_hidden=self.word_hidden,
            head_hidden=self.head_hidden,
            use_char=self.use_char,
            tied=self.tied,
            dropout=self.dropout,
            constrained_decoding=self.constrained_decoding,
        )

    def to_flat(self):
        return {f"train.{f.name}": str(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_flat(cls, flat):
        kwargs = {}
        for f in fields(cls):
            key = f"train.{f.name}"
            if key not in flat:
                continue
            raw = flat[key]
            if f.type == "bool" or isinstance(f.default, bool):
                kwargs[f.name] = raw == "True"
            elif isinstance(f.default, int):
                kwargs[f.name] = int(raw)
            elif isinstance(f.default, float):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)


def lr_at(config, epoch):
    """max(lr0 / (1 + decay * epoch), floor), exactly."""
    if epoch < 0:
        raise UsageError("epoch must be nonnegative")
    return max(config.lr0 / (1.0 + config.decay * epoch), config.lr_floor)


def common_space_tables(src_table, tgt_table, mapper):
    """Project one side through the mapper so both tables share a space.

    s_to_t maps the source vectors into the target space; t_to_s maps the
    target vectors into the source space. source_mono passes mapper=None and
    keeps both tables native.
    """
    if mapper is None:
        return src_table, tgt_table
    if src_table is not None and tgt_table is not None \
            and src_table.dim != tgt_table.dim:
        raise UsageError("embedding dimensions differ between languages")
    if mapper.direction == "s_to_t":
        return apply_mapper(src_table, mapper.w), tgt_table
    mapped_tgt = apply_mapper(tgt_table, mapper.w) if tgt_table is not None else None
    return src_table, mapped_tgt


@dataclass
class EvalSet:
    name: str  # src_dev | tgt_dev | tgt_test
    lang: str
    table: object
    dataset: Dataset


@dataclass
class CheckpointRecord:
    step: int
    epoch: int
    scores: dict
    state: dict = None  # tensor copies, kept only when some metric improved


def snapshot_state(model):
    return {name: arr.copy() for name, arr in model.all_parameters().items()}


def restore_state(model, state):
    """Write saved tensor values back in place (aliasing is preserved)."""
    params = model.all_parameters()
    for name, saved in state.items():
        np.copyto(params[name], saved)


def evaluate_model(model, eval_sets):
    """Entity F1 per evaluation split; target splits use the target encoder
    once it exists, the source encoder before that."""
    scores = {}
    for ev in eval_sets:
        lang = ev.lang if ev.lang in model.encoders else "src"
        preds = [
            predict(model, lang, ev.table, sent.tokens) for sent in ev.dataset
        ]
        scores[ev.name] = entity_f1(ev.dataset, preds).overall.f1
    return scores


class _Tracker:
    """Keeps eval records; stores tensor state when any tracked metric
    improves (strictly), so ties keep the earliest state."""

    def __init__(self, model, log_stream=None):
        self.model = model
        self.records = []
        self.best = {}
        self.log_stream = log_stream

    def evaluate(self, eval_sets, step, epoch, lr, losses):
        scores = evaluate_model(self.model, eval_sets)
        improved = False
        for name, f1 in scores.items():
            if f1 > self.best.get(name, -1.0):
                self.best[name] = f1
                improved = True
        record = CheckpointRecord(
            step=step,
            epoch=epoch,
            scores=scores,
            state=snapshot_state(self.model) if improved else None,
        )
        self.records.append(record)
        if self.log_stream is not None:
            loss_s, loss_ts, loss_tt = losses
            self.log_stream.write(
                f"{step}\t{loss_s:.6f}\t{loss_ts:.6f}\t{loss_tt:.6f}"
                f"\t{lr:.6f}\t" +
                "\t".join(f"{k}={v:.4f}" for k, v in sorted(scores.items())) +
                "\n"
            )
        return scores


def select_model(checkpoints, selection):
    """Checkpoint with the best F1 on the selection split; ties go to the
    earliest."""
    if not checkpoints:
        raise UsageError("no checkpoints to select from")
    scored = [c for c in checkpoints if selection in c.scores]
    if not scored:
        raise UsageError(f"no checkpoint carries a {selection!r} score")
    best = scored[0]
    for record in scored[1:]:
        if record.scores[selection] > best.scores[selection]:
            best = record
    return best


def best_state(checkpoints, selection):
    """Tensor state of the selected checkpoint (records without a stored
    state fall back to the nearest earlier stored one with the same score)."""
    chosen = select_model(checkpoints, selection)
    if chosen.state is not None:
        return chosen, chosen.state
    for record in checkpoints:
        if record.state is not None and \
                record.scores.get(selection) == chosen.scores[selection]:
            return chosen, record.state
    raise UsageError("selected checkpoint has no stored state")


def _prepare_labeled(model, table, dataset, max_len):
    prepared = []
    for sent in dataset:
        if sent.tags is None:
            raise UsageError("labeled dataset required")
        if len(sent) > max_len:
            continue
        prepared.append(model.prepare(table, sent.tokens, sent.tags))
    return prepared


def _draw_batch(rng, prepared, batch_size):
    idx = rng.integers(len(prepared), min(batch_size, len(prepared)))
    return [prepared[i] for i in idx]


def _masks_for(rng, batch, model):
    if model.cfg.dropout <= 0:
        return None
    return [
        dropout_mask(rng, (len(p), model.cfg.input_dim), model.cfg.dropout)
        for p in batch
    ]


def pretrain_source(model, dataset, table, config, rng, eval_sets,
                    log_stream=None):
    """Clipped-SGD training of theta_s on the (mapped) source data.

    Shuffled batches, the epoch-decayed learning rate, an evaluation every
    config.eval_interval batches plus one final evaluation; returns the list
    of CheckpointRecords.
    """
    prepared = _prepare_labeled(model, table, dataset, config.max_sentence_length)
    if not prepared:
        raise UsageError("empty training dataset")
    params = model.named_parameters("src")
    tracker = _Tracker(model, log_stream)
    step = 0
    loss_acc, loss_n = 0.0, 0
    lr = lr_at(config, 0)
    for epoch in range(config.epochs):
        lr = lr_at(config, epoch)
        order = rng.permutation(len(prepared))
        for lo in range(0, len(order), config.batch_size):
            batch = [prepared[i] for i in order[lo : lo + config.batch_size]]
            masks = _masks_for(rng, batch, model)
            loss, grads = backward_pass(model, "src", table, batch, masks)
            clipped_sgd_step(params, grads, lr, config.clip)
            loss_acc += loss
            loss_n += 1
            step += 1
            if step % config.eval_interval == 0:
                tracker.evaluate(
                    eval_sets, step, epoch, lr,
                    (loss_acc / loss_n, float("nan"), float("nan")),
                )
                loss_acc, loss_n = 0.0, 0
    if not tracker.records or tracker.records[-1].step != step:
        tracker.evaluate(
            eval_sets, step, config.epochs - 1, lr,
            (loss_acc / max(loss_n, 1), float("nan"), float("nan")),
        )
    return tracker.records


@dataclass
class PseudoDataset:
    dataset: Dataset
    threshold: int
    generation_round: int

    @property
    def sentences(self):
        return self.dataset.sentences


def generate_pseudo_labels(model, table, dataset, rng, generation_round=0,
                           lo=None, hi=None):
    """Length-thresholded self-labeled target data.

    Draws l uniformly between the observed minimum and maximum sentence
    lengths (overridable via lo/hi), keeps sentences no longer than l, and
    tags them with the source model. If nothing survives, l is resampled
    once before giving up.
    """
    if not dataset.sentences:
        raise UsageError("empty target dataset")
    lengths = [len(s) for s in dataset]
    lo = min(lengths) if lo is None else lo
    hi = max(lengths) if hi is None else hi
    kept = []
    threshold = None
    for _ in range(2):
        threshold = sample_uniform_int(rng, lo, hi)
        kept = [s for s in dataset if len(s) <= threshold]
        if kept:
            break
    if not kept:
        raise UsageError("no target sentences at or below the length threshold")
    labeled = [
        TaggedSentence(list(s.tokens),
                       predict(model, "src", table, s.tokens))
        for s in kept
    ]
    pseudo = Dataset(labeled, role="train", language=dataset.language,
                     scheme=model.cfg.scheme)
    return PseudoDataset(pseudo, threshold, generation_round)


def augmented_finetune(model, src_dataset, tgt_dataset, src_table, tgt_table,
                       config, rng, eval_sets, log_stream=None):
    """Joint fine-tuning: per step, theta_s trains on one source batch plus
    one pseudo-labeled target batch, theta_t trains on the target batch; the
    shared head and character table receive gradients from all three terms.

    Pseudo-labels are regenerated with a fresh length threshold every round.
    Stops after config.rounds rounds or config.patience rounds without
    improvement on the selection split. Returns the CheckpointRecord list
    (the first record is the initialization).
    """
    if "tgt" not in model.encoders:
        model.add_target_encoder(rng)
    src_prepared = _prepare_labeled(
        model, src_table, src_dataset, config.max_sentence_length
    )
    if not src_prepared:
        raise UsageError("empty source dataset")
    if not tgt_dataset.sentences:
        raise UsageError("empty target dataset")
    params_s = model.named_parameters("src")
    params_t = model.named_parameters("tgt")
    tracker = _Tracker(model, log_stream)
    n_steps = config.n_steps or math.ceil(len(src_prepared) / config.batch_size)
    step = 0
    lr = lr_at(config, config.epochs)
    tracker.evaluate(eval_sets, step, config.epochs, lr,
                     (float("nan"), float("nan"), float("nan")))
    best_sel = tracker.best.get(config.selection, -1.0)
    stall_rounds = 0
    initial_round_loss = None
    for round_idx in range(config.rounds):
        epoch = config.epochs + round_idx
        lr = lr_at(config, epoch)
        pseudo = generate_pseudo_labels(
            model, tgt_table, tgt_dataset, rng, round_idx
        )
        tgt_prepared = [
            model.prepare(tgt_table, s.tokens, s.tags)
            for s in pseudo.sentences
        ]
        losses = np.zeros(3)
        loss_n = 0
        round_loss = 0.0
        for _ in range(n_steps):
            batch_s = _draw_batch(rng, src_prepared, config.batch_size)
            batch_t = _draw_batch(rng, tgt_prepared, config.batch_size)
            if config.source_term:
                loss_s, grads_s = backward_pass(
                    model, "src", src_table, batch_s,
                    _masks_for(rng, batch_s, model),
                )
            else:
                loss_s, grads_s = float("nan"), {}
            loss_ts, grads_ts = backward_pass(
                model, "src", tgt_table, batch_t, _masks_for(rng, batch_t, model)
            )
            for name, g in grads_ts.items():
                if name in grads_s:
                    grads_s[name] += g
                else:
                    grads_s[name] = g
            clipped_sgd_step(params_s, grads_s, lr, config.clip)
            loss_tt, grads_tt = backward_pass(
                model, "tgt", tgt_table, batch_t, _masks_for(rng, batch_t, model)
            )
            clipped_sgd_step(params_t, grads_tt, lr, config.clip)
            losses += (loss_s, loss_ts, loss_tt)
            loss_n += 1
            round_loss += float(np.nansum([loss_s, loss_ts, loss_tt]))
            step += 1
            if step % config.eval_interval == 0:
                tracker.evaluate(eval_sets, step, epoch, lr, losses / loss_n)
                losses[:] = 0.0
                loss_n = 0
        round_loss /= max(n_steps, 1)
        if initial_round_loss is None:
            initial_round_loss = round_loss
        elif round_loss > 10.0 * initial_round_loss:
            raise NumericalError(
                f"fine-tuning diverged: round loss {round_loss:.3f} vs "
                f"initial {initial_round_loss:.3f}"
            )
        if loss_n or not tracker.records or tracker.records[-1].step != step:
            tracker.evaluate(
                eval_sets, step, epoch, lr,
                losses / loss_n if loss_n else (np.nan, np.nan, np.nan),
            )
        sel = tracker.best.get(config.selection, -1.0)
        if sel > best_sel:
            best_sel = sel
            stall_rounds = 0
        else:
            stall_rounds += 1
            if stall_rounds >= config.patience:
                break
    return tracker.records


def multi_seed_report(run_metrics):
    """Sample mean, standard deviation (n-1 denominator), and maximum for
    every metric over per-seed runs."""
    if len(run_metrics) < 2:
        raise UsageError("at least two runs are required")
    keys = sorted(set().union(*(m.keys() for m in run_metrics)))
    report = {}
    for key in keys:
        values = [m[key] for m in run_metrics if key in m]
        arr = np.array(values, dtype=np.float64)
        report[key] = {
            "mean": float(arr.mean()),
            "std": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            "max": float(arr.max()),
        }
    return report
