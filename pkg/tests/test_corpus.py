import io

import numpy as np
import pytest

from zrxner.corpus import (
    IOB1,
    IOB2,
    IOBES,
    Dataset,
    EntitySpan,
    TaggedSentence,
    build_vocab,
    convert_scheme,
    correct_tag_ratio_by_length,
    entity_f1,
    extract_entities,
    read_conll,
    scan_entities,
    write_conll,
)
from zrxner.errors import ParseError, UsageError

from oracles import emit_iobes, iobes_spans_naive, random_valid_spans

TWO_SENTENCES = """\
-DOCSTART- -X- -X- O

John B-PER
Smith I-PER
visited O
Paris B-LOC

EU B-ORG
rejects O
it O
"""


def spans(pairs):
    return [EntitySpan(*p) for p in pairs]


def test_read_conll_basic():
    ds = read_conll(io.StringIO(TWO_SENTENCES))
    assert ds.size == 2
    assert ds.sentences[0].tokens == ["John", "Smith", "visited", "Paris"]
    assert ds.sentences[0].tags == ["B-PER", "I-PER", "O", "B-LOC"]
    assert ds.sentences[1].tokens == ["EU", "rejects", "it"]


def test_read_conll_empty_stream():
    assert read_conll(io.StringIO("")).size == 0


def test_read_conll_unlabeled():
    ds = read_conll(io.StringIO("a\nb\n\nc\n"), tag_col=None)
    assert ds.size == 2
    assert ds.sentences[0].tags is None


def test_read_conll_ragged_row_has_line_number():
    with pytest.raises(ParseError, match="line 2"):
        read_conll(io.StringIO("a B-PER\nb\n"))


def test_read_conll_explicit_columns():
    ds = read_conll(io.StringIO("x NNP B-LOC\n"), token_col=0, tag_col=2)
    assert ds.sentences[0].tags == ["B-LOC"]
    with pytest.raises(ParseError, match="line 1"):
        read_conll(io.StringIO("x NNP\n"), token_col=0, tag_col=2)


def test_conll_round_trip():
    ds = read_conll(io.StringIO(TWO_SENTENCES))
    out = io.StringIO()
    write_conll(ds, out)
    again = read_conll(io.StringIO(out.getvalue()))
    for a, b in zip(ds, again):
        assert a.tokens == b.tokens
        assert a.tags == b.tags


def test_convert_iob1_to_iob2():
    got = convert_scheme(["I-PER", "I-PER", "O", "I-LOC"], IOB1, IOB2)
    assert got == ["B-PER", "I-PER", "O", "B-LOC"]


def test_convert_iob2_to_iobes():
    got = convert_scheme(["B-PER", "I-PER", "O", "B-LOC"], IOB2, IOBES)
    assert got == ["B-PER", "E-PER", "O", "S-LOC"]


def test_convert_iob1_adjacent_chunks():
    # B- in IOB1 splits adjacent same-type chunks; conversion must keep both.
    tags = ["I-ORG", "B-ORG", "I-ORG"]
    assert extract_entities(tags, IOB1) == spans([(0, 0, "ORG"), (1, 2, "ORG")])
    assert convert_scheme(tags, IOB1, IOB2) == ["B-ORG", "B-ORG", "I-ORG"]
    assert convert_scheme(["B-ORG", "B-ORG", "I-ORG"], IOB2, IOB1) == tags


def test_convert_round_trips():
    rng = np.random.default_rng(17)
    for _ in range(200):
        length = int(rng.integers(1, 12))
        iobes = emit_iobes(
            length, random_valid_spans(rng, length, ["PER", "LOC", "ORG"])
        )
        iob2 = convert_scheme(iobes, IOBES, IOB2)
        assert convert_scheme(iob2, IOB2, IOBES) == iobes
        iob1 = convert_scheme(iob2, IOB2, IOB1)
        assert convert_scheme(iob1, IOB1, IOB2) == iob2
        # composition invariant: IOB1 -> IOB2 -> IOBES preserves the spans
        assert extract_entities(
            convert_scheme(convert_scheme(iob1, IOB1, IOB2), IOB2, IOBES), IOBES
        ) == extract_entities(iob1, IOB1)


def test_convert_rejects_malformed_label():
    with pytest.raises(UsageError):
        convert_scheme(["BPER"], IOB2, IOBES)
    with pytest.raises(UsageError):
        convert_scheme(["S-PER"], IOB2, IOBES)  # S- is not an IOB2 prefix


def test_extract_simple():
    got = extract_entities(["B-PER", "I-PER", "O", "B-LOC"], IOB2)
    assert got == spans([(0, 1, "PER"), (3, 3, "LOC")])


def test_extract_all_o():
    assert extract_entities(["O", "O", "O"], IOB2) == []


def test_extract_matches_naive_scanner():
    rng = np.random.default_rng(23)
    for _ in range(300):
        length = int(rng.integers(1, 15))
        tags = emit_iobes(
            length, random_valid_spans(rng, length, ["PER", "LOC", "ORG", "MISC"])
        )
        got = [(s.start, s.end, s.type) for s in extract_entities(tags, IOBES)]
        assert got == iobes_spans_naive(tags)


def test_invalid_continuation_repaired_and_counted():
    got, repairs = scan_entities(["B-PER", "I-LOC", "O"], IOB2)
    assert got == spans([(0, 0, "PER"), (1, 1, "LOC")])
    assert repairs == 1
    got, repairs = scan_entities(["I-PER", "I-PER"], IOB2)
    assert got == spans([(0, 1, "PER")])
    assert repairs == 1
    got, repairs = scan_entities(["E-LOC", "O", "B-PER"], IOBES)
    assert got == spans([(0, 0, "LOC"), (2, 2, "PER")])
    assert repairs == 2  # E- start, unterminated B-


def test_entity_f1_half_type_mismatch():
    gold = Dataset(
        [TaggedSentence(list("abcd"), ["B-PER", "I-PER", "O", "B-LOC"])],
        scheme=IOB2,
    )
    report = entity_f1(gold, [["B-PER", "I-PER", "O", "B-ORG"]])
    assert report.overall.precision == pytest.approx(0.5)
    assert report.overall.recall == pytest.approx(0.5)
    assert report.overall.f1 == pytest.approx(0.5)
    assert report.per_type["PER"].f1 == pytest.approx(1.0)
    assert report.per_type["ORG"].precision == 0.0
    assert report.per_type["LOC"].recall == 0.0


def test_entity_f1_perfect():
    gold = Dataset(
        [TaggedSentence(list("abc"), ["B-PER", "O", "B-LOC"])], scheme=IOB2
    )
    report = entity_f1(gold, [["B-PER", "O", "B-LOC"]])
    assert report.overall.f1 == pytest.approx(1.0)


def test_entity_f1_boundary_miss_is_zero():
    gold = Dataset([TaggedSentence(list("ab"), ["B-PER", "I-PER"])], scheme=IOB2)
    report = entity_f1(gold, [["B-PER", "O"]])
    assert report.overall.precision == 0.0
    assert report.overall.recall == 0.0
    assert report.overall.f1 == 0.0


def test_entity_f1_symmetry():
    # precision(gold, pred) == recall(pred, gold)
    rng = np.random.default_rng(31)
    for _ in range(20):
        length = int(rng.integers(2, 12))
        a = emit_iobes(length, random_valid_spans(rng, length, ["PER", "LOC"]))
        b = emit_iobes(length, random_valid_spans(rng, length, ["PER", "LOC"]))
        ds_a = Dataset([TaggedSentence(["w"] * length, a)], scheme=IOBES)
        ds_b = Dataset([TaggedSentence(["w"] * length, b)], scheme=IOBES)
        assert entity_f1(ds_a, [b]).overall.precision == pytest.approx(
            entity_f1(ds_b, [a]).overall.recall
        )


def test_entity_f1_length_mismatch():
    gold = Dataset([TaggedSentence(["a", "b"], ["O", "O"])])
    with pytest.raises(UsageError):
        entity_f1(gold, [["O"]])


def test_build_vocab_words_and_unk():
    ds = Dataset(
        [TaggedSentence(["a", "b"]), TaggedSentence(["b", "c"])], language="en"
    )
    word_index, char_index = build_vocab([ds])
    assert set(word_index["en"]) == {"<unk>", "a", "b", "c"}
    assert word_index["en"]["<unk>"] == 0
    assert word_index["en"]["b"] == 1  # most frequent first


def test_build_vocab_shared_chars():
    en = Dataset([TaggedSentence(["abc"])], language="en")
    es = Dataset([TaggedSentence(["xyz"])], language="es")
    _, char_index = build_vocab([en, es])
    for ch in "abcxyz":
        assert ch in char_index
    assert char_index["<pad>"] == 0
    assert char_index["<unk>"] == 1


def test_build_vocab_char_coverage():
    ds = Dataset([TaggedSentence(["Ħêłlo", "wörld"])], language="x")
    _, char_index = build_vocab([ds])
    for sent in ds:
        for token in sent.tokens:
            for ch in token:
                assert ch in char_index or "<unk>" in char_index


def test_correct_tag_ratio_perfect():
    gold = Dataset(
        [
            TaggedSentence(["a"] * 3, ["O", "B-PER", "O"]),
            TaggedSentence(["a"] * 7, ["O"] * 7),
        ],
        scheme=IOB2,
    )
    curve = correct_tag_ratio_by_length(gold, [s.tags for s in gold], buckets=5)
    assert curve == {(1, 5): 1.0, (6, 10): 1.0}


def test_correct_tag_ratio_all_o_prediction():
    tags = ["B-PER", "O", "O", "B-LOC", "O"]
    gold = Dataset([TaggedSentence(["w"] * 5, tags)], scheme=IOB2)
    curve = correct_tag_ratio_by_length(gold, [["O"] * 5], buckets=10)
    assert curve[(1, 10)] == pytest.approx(3 / 5)


def test_correct_tag_ratio_empty_bucket_absent():
    gold = Dataset([TaggedSentence(["w"] * 2, ["O", "O"])], scheme=IOB2)
    curve = correct_tag_ratio_by_length(
        gold, [["O", "O"]], buckets=[(1, 2), (3, 4)]
    )
    assert (3, 4) not in curve


def test_correct_tag_ratio_degrading_predictor():
    # Construct noise that flips tags on long sentences only, recount by hand.
    gold_sents = []
    preds = []
    for length in (2, 2, 8, 8):
        tags = ["O"] * length
        gold_sents.append(TaggedSentence(["w"] * length, tags))
        if length > 4:
            pred = ["B-PER"] + ["O"] * (length - 1)  # one wrong token
        else:
            pred = list(tags)
        preds.append(pred)
    gold = Dataset(gold_sents, scheme=IOB2)
    curve = correct_tag_ratio_by_length(gold, preds, buckets=4)
    assert curve[(1, 4)] == pytest.approx(1.0)
    assert curve[(5, 8)] == pytest.approx(14 / 16)
    assert curve[(5, 8)] < curve[(1, 4)]


def test_docstart_excluded():
    text = "-DOCSTART- O\n\na O\n\n-DOCSTART- O\n\nb O\n"
    ds = read_conll(io.StringIO(text))
    assert [s.tokens for s in ds] == [["a"], ["b"]]
