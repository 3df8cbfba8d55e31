"""CoNLL-format corpora: parsing, tag-scheme conversion, entity extraction,
vocabulary construction, and entity-level precision/recall/F1.

Tag schemes follow the usual chunking conventions: IOB1 (I- opens a chunk,
B- only splits adjacent same-type chunks), IOB2 (every chunk opens with B-),
IOBES (adds E- for ends and S- for singletons). Invalid continuations are
repaired as new span starts, conlleval-style, and the repair count is
surfaced because pseudo-labeled data routinely contains them.
"""

from collections import Counter
from dataclasses import dataclass, field

from .errors import ParseError, UsageError

IOB1 = "IOB1"
IOB2 = "IOB2"
IOBES = "IOBES"
SCHEMES = (IOB1, IOB2, IOBES)

_SCHEME_PREFIXES = {IOB1: "BI", IOB2: "BI", IOBES: "BIES"}

DOCSTART = "-DOCSTART-"
UNK_WORD = "<unk>"
PAD_CHAR = "<pad>"
UNK_CHAR = "<unk>"


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int  # inclusive
    type: str


@dataclass
class TaggedSentence:
    tokens: list
    tags: list = None

    def __post_init__(self):
        if not self.tokens:
            raise UsageError("empty sentence")
        if self.tags is not None and len(self.tags) != len(self.tokens):
            raise UsageError(
                f"{len(self.tags)} tags for {len(self.tokens)} tokens"
            )

    def __len__(self):
        return len(self.tokens)


@dataclass
class Dataset:
    sentences: list
    role: str = "train"  # train | dev | test
    language: str = ""
    scheme: str = IOB2

    @property
    def size(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __len__(self):
        return len(self.sentences)


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise UsageError(f"unknown tag scheme {scheme!r}; expected one of {SCHEMES}")


def split_label(tag, scheme):
    """'B-PER' -> ('B', 'PER'); 'O' -> ('O', None). Raises on malformed labels."""
    if tag == "O":
        return "O", None
    if "-" not in tag:
        raise UsageError(f"label {tag!r} is not parseable as prefix-type")
    prefix, typ = tag.split("-", 1)
    if prefix not in _SCHEME_PREFIXES[scheme] or not typ:
        raise UsageError(f"label {tag!r} is invalid under scheme {scheme}")
    return prefix, typ


def _chunk_start(prev_prefix, prev_type, prefix, typ):
    if prefix == "O":
        return False
    if prev_prefix == "O":
        return True
    if prev_type != typ:
        return True
    return prefix in "BS" or prev_prefix in "ES"


def _chunk_end(prev_prefix, prev_type, prefix, typ):
    if prev_prefix == "O":
        return False
    if prefix == "O":
        return True
    if prev_type != typ:
        return True
    return prefix in "BS" or prev_prefix in "ES"


def scan_entities(tags, scheme):
    """Extract typed spans, repairing invalid continuations as new span starts.

    Returns (spans, repairs) where repairs counts positions whose strict
    scheme reading was violated (I/E opening a chunk under IOB2/IOBES, a B
    under IOB1 that does not split a same-type chunk, an IOBES chunk closed
    without E or S).
    """
    _check_scheme(scheme)
    spans = []
    repairs = 0
    open_start = None
    open_type = None
    prev_prefix, prev_type = "O", None
    prev_open_prefix = None  # prefix of the last token of the open chunk
    for i, tag in enumerate(tags):
        prefix, typ = split_label(tag, scheme)
        if open_start is not None and _chunk_end(prev_prefix, prev_type, prefix, typ):
            spans.append(EntitySpan(open_start, i - 1, open_type))
            if scheme == IOBES and prev_open_prefix not in ("E", "S"):
                repairs += 1
            open_start = None
        if _chunk_start(prev_prefix, prev_type, prefix, typ):
            if scheme == IOBES and prefix in "IE":
                repairs += 1
            elif scheme == IOB2 and prefix == "I":
                repairs += 1
            elif scheme == IOB1 and prefix == "B" and not (
                prev_prefix in "BI" and prev_type == typ
            ):
                repairs += 1
            open_start = i
            open_type = typ
        if prefix != "O":
            prev_open_prefix = prefix
        prev_prefix, prev_type = prefix, typ
    if open_start is not None:
        spans.append(EntitySpan(open_start, len(tags) - 1, open_type))
        if scheme == IOBES and prev_open_prefix not in ("E", "S"):
            repairs += 1
    return spans, repairs


def extract_entities(tags, scheme):
    """Typed spans only; see scan_entities for the repair count."""
    return scan_entities(tags, scheme)[0]


def _emit_spans(length, spans, scheme):
    tags = ["O"] * length
    prev_end = {}  # end index -> type, for IOB1 adjacency
    for span in sorted(spans, key=lambda s: s.start):
        n = span.end - span.start + 1
        if scheme == IOB2:
            tags[span.start] = f"B-{span.type}"
            for i in range(span.start + 1, span.end + 1):
                tags[i] = f"I-{span.type}"
        elif scheme == IOBES:
            if n == 1:
                tags[span.start] = f"S-{span.type}"
            else:
                tags[span.start] = f"B-{span.type}"
                for i in range(span.start + 1, span.end):
                    tags[i] = f"I-{span.type}"
                tags[span.end] = f"E-{span.type}"
        else:  # IOB1: B- only when adjacent to a same-type chunk on the left
            first = "B" if prev_end.get(span.start - 1) == span.type else "I"
            tags[span.start] = f"{first}-{span.type}"
            for i in range(span.start + 1, span.end + 1):
                tags[i] = f"I-{span.type}"
        prev_end[span.end] = span.type
    return tags


def convert_scheme(tags, from_scheme, to_scheme):
    """Re-encode a valid tag sequence; entity spans and types are preserved."""
    _check_scheme(from_scheme)
    _check_scheme(to_scheme)
    spans, _ = scan_entities(tags, from_scheme)
    return _emit_spans(len(tags), spans, to_scheme)


def _iter_lines(stream):
    if isinstance(stream, (str, bytes)):
        text = stream.decode("utf-8") if isinstance(stream, bytes) else stream
        yield from text.splitlines()
        return
    for line in stream:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        yield line.rstrip("\n")


def read_conll(stream, token_col=0, tag_col=-1, language="", role="train",
               scheme=IOB2):
    """Parse whitespace-column CoNLL text into a Dataset.

    Sentences are blank-line separated; -DOCSTART- blocks are dropped.
    tag_col=None loads unlabeled data; tag_col=-1 means the last column.
    Ragged rows (a missing requested column) raise ParseError with the
    1-based line number.
    """
    sentences = []
    tokens, tags = [], []

    def flush():
        nonlocal tokens, tags
        if tokens and tokens[0] != DOCSTART:
            sentences.append(
                TaggedSentence(tokens, tags if tag_col is not None else None)
            )
        tokens, tags = [], []

    for lineno, line in enumerate(_iter_lines(stream), start=1):
        cols = line.split()
        if not cols:
            flush()
            continue
        if token_col >= len(cols):
            raise ParseError(f"missing token column {token_col}", line=lineno)
        tokens.append(cols[token_col])
        if tag_col is not None:
            if tag_col == -1:
                if len(cols) < 2:
                    raise ParseError("missing tag column", line=lineno)
                tags.append(cols[-1])
            else:
                if tag_col >= len(cols):
                    raise ParseError(f"missing tag column {tag_col}", line=lineno)
                tags.append(cols[tag_col])
    flush()
    return Dataset(sentences, role=role, language=language, scheme=scheme)


def write_conll(dataset, stream):
    """Inverse of read_conll: 'token tag' rows, blank line between sentences."""
    for sent in dataset:
        for i, token in enumerate(sent.tokens):
            if sent.tags is not None:
                stream.write(f"{token} {sent.tags[i]}\n")
            else:
                stream.write(f"{token}\n")
        stream.write("\n")


@dataclass
class Prf:
    correct: int = 0
    gold: int = 0
    pred: int = 0

    @property
    def precision(self):
        return self.correct / self.pred if self.pred else 0.0

    @property
    def recall(self):
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class F1Report:
    overall: Prf = field(default_factory=Prf)
    per_type: dict = field(default_factory=dict)
    gold_repairs: int = 0
    pred_repairs: int = 0


def entity_f1(gold, pred_tags, scheme=None):
    """Exact span-and-type matching (conlleval semantics), overall and per type.

    gold is a labeled Dataset; pred_tags is one tag sequence per sentence.
    """
    if scheme is None:
        scheme = gold.scheme
    if len(pred_tags) != len(gold.sentences):
        raise UsageError(
            f"{len(pred_tags)} predictions for {len(gold.sentences)} sentences"
        )
    report = F1Report()
    for sent, pred in zip(gold.sentences, pred_tags):
        if sent.tags is None:
            raise UsageError("gold dataset is unlabeled")
        if len(pred) != len(sent):
            raise UsageError(
                f"length mismatch: {len(pred)} predicted tags for "
                f"{len(sent)}-token sentence"
            )
        gspans, grep = scan_entities(sent.tags, scheme)
        pspans, prep = scan_entities(pred, scheme)
        report.gold_repairs += grep
        report.pred_repairs += prep
        gset = set(gspans)
        for span in gspans:
            stats = report.per_type.setdefault(span.type, Prf())
            stats.gold += 1
            report.overall.gold += 1
        for span in pspans:
            stats = report.per_type.setdefault(span.type, Prf())
            stats.pred += 1
            report.overall.pred += 1
            if span in gset:
                stats.correct += 1
                report.overall.correct += 1
    return report


def build_vocab(datasets, embedding_vocab=None):
    """Word index per language plus one character index shared by all languages.

    Words are dataset surface forms, most frequent first (ties broken
    lexicographically), with <unk> at index 0. The character index covers
    every corpus character and reserves <pad>=0 and <unk>=1. Passing the
    embedding vocabulary marks which words will resolve to pretrained
    vectors; it does not add entries.
    """
    if not datasets:
        raise UsageError("at least one dataset is required")
    word_counts = {}
    char_counts = Counter()
    for ds in datasets:
        counts = word_counts.setdefault(ds.language, Counter())
        for sent in ds:
            for token in sent.tokens:
                counts[token] += 1
                char_counts.update(token)
    word_index = {}
    for lang, counts in word_counts.items():
        index = {UNK_WORD: 0}
        for word, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            index[word] = len(index)
        word_index[lang] = index
    char_index = {PAD_CHAR: 0, UNK_CHAR: 1}
    for ch, _ in sorted(char_counts.items(), key=lambda kv: (-kv[1], kv[0])):
        char_index[ch] = len(char_index)
    if embedding_vocab is not None:
        covered = {
            lang: sum(1 for w in idx if w in embedding_vocab)
            for lang, idx in word_index.items()
        }
        return word_index, char_index, covered
    return word_index, char_index


def correct_tag_ratio_by_length(gold, pred_tags, buckets):
    """Per length-bucket ratio of correctly tagged tokens (Figure-3 style curve).

    buckets is either an int bucket width or explicit (lo, hi) inclusive
    ranges. Buckets containing no sentences are absent from the result.
    """
    if len(pred_tags) != len(gold.sentences):
        raise UsageError("gold and predictions are not aligned")
    if isinstance(buckets, int):
        if buckets <= 0:
            raise UsageError("bucket width must be positive")
        width = buckets
        max_len = max((len(s) for s in gold.sentences), default=0)
        ranges = [
            (lo, lo + width - 1) for lo in range(1, max_len + 1, width)
        ]
    else:
        ranges = [(int(lo), int(hi)) for lo, hi in buckets]
    totals = {r: [0, 0] for r in ranges}  # correct, total
    for sent, pred in zip(gold.sentences, pred_tags):
        if len(pred) != len(sent):
            raise UsageError("length mismatch in correct_tag_ratio_by_length")
        m = len(sent)
        for r in ranges:
            if r[0] <= m <= r[1]:
                totals[r][0] += sum(1 for g, p in zip(sent.tags, pred) if g == p)
                totals[r][1] += m
                break
    return {r: c / t for r, (c, t) in totals.items() if t > 0}
