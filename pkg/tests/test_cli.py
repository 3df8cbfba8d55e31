import csv
import json

import numpy as np
import pytest

from zrxner.checkpoint import load_checkpoint
from zrxner.cli import main
from zrxner.corpus import IOB2, read_conll
from zrxner.embeddings import write_vec_text
from zrxner.persist import load_mapper, load_model

from fixtures import BilingualFixture, precision_at_1


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Fixture corpus and embeddings written to disk in CLI formats."""
    root = tmp_path_factory.mktemp("cli")
    fx = BilingualFixture(seed=31, n_train=240, n_dev=60, n_test=60)
    from zrxner.corpus import write_conll

    def dump_conll(name, dataset):
        path = root / name
        with open(path, "w", encoding="utf-8") as fh:
            write_conll(dataset, fh)
        return str(path)

    def dump_vec(name, table):
        path = root / name
        with open(path, "w", encoding="utf-8") as fh:
            write_vec_text(table, fh, fmt="%.8f")
        return str(path)

    paths = {
        "src_train": dump_conll("src_train.conll", fx.src_train),
        "src_dev": dump_conll("src_dev.conll", fx.src_dev),
        "tgt_train": dump_conll("tgt_train.conll", fx.tgt_train_unlabeled),
        "tgt_dev": dump_conll("tgt_dev.conll", fx.tgt_dev),
        "tgt_test": dump_conll("tgt_test.conll", fx.tgt_test),
        "src_emb": dump_vec("src.vec", fx.src_emb),
        "tgt_emb": dump_vec("tgt.vec", fx.tgt_emb),
        "root": root,
        "fx": fx,
    }
    return paths


ALIGN_FLAGS = [
    "--w-steps", "8000", "--disc-steps", "5", "--batch-size", "64",
    "--disc-hidden", "128", "--vocab-cap", "1000", "--csls-k", "10",
    "--dict-top-n", "1000", "--restarts", "3",
]


@pytest.fixture(scope="module")
def mapper_path(workdir):
    out = str(workdir["root"] / "mapper.zrx")
    code = main([
        "align", "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--direction", "t2s", "--seed", "0",
        "--refine-iters", "4", "--out", out,
        "--dict-out", str(workdir["root"] / "dict.txt"),
        "--log", str(workdir["root"] / "align.log"), *ALIGN_FLAGS,
    ])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def pretrained_path(workdir, mapper_path):
    out = str(workdir["root"] / "pretrained.zrx")
    code = main([
        "pretrain", "--train", workdir["src_train"], "--dev",
        workdir["src_dev"], "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--mapper", mapper_path,
        "--variant", "cross_word", "--scheme", "IOBES", "--input-scheme",
        "IOB2", "--select", "src_dev", "--seed", "0", "--epochs", "12",
        "--eval-interval", "30", "--char-dim", "8", "--char-hidden", "8",
        "--word-hidden", "16", "--head-hidden", "16",
        "--out", out, "--log", str(workdir["root"] / "pretrain.log"),
    ])
    assert code == 0
    return out


def test_align_artifacts(workdir, mapper_path):
    mapper, config = load_mapper(mapper_path)
    assert config["direction"] == "t_to_s"
    assert mapper.orthogonality_error() < 1e-6
    log = (workdir["root"] / "align.log").read_text().splitlines()
    assert any(line.startswith("adversarial\t") for line in log)
    assert any(line.startswith("refine\t") for line in log)
    # vocabularies share no strings, so the identical-string P@1 is nan
    assert config["identical_string_p1"] == "nan"
    # ground truth: ciphered twin at the same row index
    fx = workdir["fx"]
    p1 = precision_at_1(fx.src_emb, fx.tgt_emb, mapper)
    assert p1 >= 0.9, f"mapper P@1 {p1}"
    dict_lines = (workdir["root"] / "dict.txt").read_text().splitlines()
    assert len(dict_lines) > 50
    tgt_word, src_word = dict_lines[0].split()
    assert tgt_word in fx.tgt_emb.words
    assert src_word in fx.src_emb.words


def test_align_deterministic_dictionary(workdir, mapper_path):
    out2 = str(workdir["root"] / "mapper2.zrx")
    dict2 = str(workdir["root"] / "dict2.txt")
    code = main([
        "align", "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--direction", "t2s", "--seed", "0",
        "--refine-iters", "4", "--out", out2, "--dict-out", dict2,
        *ALIGN_FLAGS,
    ])
    assert code == 0
    assert (workdir["root"] / "dict.txt").read_bytes() == \
        (workdir["root"] / "dict2.txt").read_bytes()


def test_align_refine_zero_saves_adversarial_only(workdir):
    out = str(workdir["root"] / "mapper_raw.zrx")
    code = main([
        "align", "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--direction", "t2s", "--seed", "1",
        "--refine-iters", "0", "--out", out, "--w-steps", "50",
        "--disc-steps", "2", "--batch-size", "16", "--disc-hidden", "16",
        "--vocab-cap", "200", "--restarts", "1",
    ])
    assert code == 0
    mapper, config = load_mapper(out)
    assert config["refine_iters"] == "0"


def test_align_dimension_mismatch_exit_2(workdir, tmp_path):
    bad = tmp_path / "bad.vec"
    bad.write_text("2 3\na 1 2 3\nb 4 5 6\n")
    code = main([
        "align", "--src-emb", workdir["src_emb"], "--tgt-emb", str(bad),
        "--out", str(tmp_path / "m.zrx"),
    ])
    assert code == 2


def test_pretrain_artifacts(workdir, pretrained_path):
    model, config, tables, raw = load_model(pretrained_path)
    assert raw["stage"] == "pretrain"
    assert config.variant == "cross_word"
    assert "src" in tables and "tgt" in tables
    assert raw["train.scheme"] == "IOBES"
    # frozen tables are stored single precision
    _, tensors = load_checkpoint(pretrained_path)
    assert tensors["emb.src.vectors"].dtype == np.float32
    assert tensors["head.tag_w"].dtype == np.float64
    log_lines = (workdir["root"] / "pretrain.log").read_text().splitlines()
    assert all(len(line.split("\t")) == 6 for line in log_lines)


def test_pretrain_missing_tag_column_exit_2(workdir):
    code = main([
        "pretrain", "--train", workdir["tgt_train"], "--dev",
        workdir["src_dev"], "--src-emb", workdir["src_emb"],
        "--variant", "source_mono",
        "--out", str(workdir["root"] / "x.zrx"),
    ])
    assert code == 2


def test_pretrain_nochar_checkpoint_lacks_char_tensors(workdir, mapper_path):
    out = str(workdir["root"] / "nochar.zrx")
    code = main([
        "pretrain", "--train", workdir["src_train"], "--dev",
        workdir["src_dev"], "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--mapper", mapper_path, "--variant",
        "cross_word_nochar", "--scheme", "IOBES", "--input-scheme", "IOB2",
        "--seed", "0", "--epochs", "1", "--eval-interval", "50",
        "--word-hidden", "16", "--head-hidden", "16", "--out", out,
    ])
    assert code == 0
    _, tensors = load_checkpoint(out)
    assert not any(".char." in n or n == "char_emb" for n in tensors)


def test_pretrain_cross_shared_halves_recurrent_tensors(workdir, mapper_path,
                                                        pretrained_path):
    out = str(workdir["root"] / "shared.zrx")
    code = main([
        "pretrain", "--train", workdir["src_train"], "--dev",
        workdir["src_dev"], "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--mapper", mapper_path, "--variant",
        "cross_shared", "--scheme", "IOBES", "--input-scheme", "IOB2",
        "--seed", "0", "--epochs", "1", "--eval-interval", "50",
        "--char-dim", "8", "--char-hidden", "8", "--word-hidden", "16",
        "--head-hidden", "16", "--out", out,
    ])
    assert code == 0
    shared_model = load_model(out)[0]
    word_model = load_model(pretrained_path)[0]
    sc = shared_model.parameter_counts()
    wc = word_model.parameter_counts()
    assert sc["word_level"] * 2 == wc["word_level"]
    assert sc["char_level"] * 2 == wc["char_level"]
    _, tensors = load_checkpoint(out)
    recurrent = [n for n in tensors if ".word." in n or ".char." in n]
    assert all(".f." in n for n in recurrent)  # no .b tensors when tied


@pytest.fixture(scope="module")
def finetuned(workdir, pretrained_path):
    out_prefix = str(workdir["root"] / "augmented")
    manifest_path = str(workdir["root"] / "manifest.json")
    code = main([
        "finetune", "--checkpoint", pretrained_path, "--src-train",
        workdir["src_train"], "--tgt-train", workdir["tgt_train"],
        "--src-dev", workdir["src_dev"], "--tgt-dev", workdir["tgt_dev"],
        "--tgt-test", workdir["tgt_test"], "--input-scheme", "IOB2",
        "--select", "tgt_dev", "--seeds", "0,1", "--rounds", "2",
        "--n-steps", "10", "--eval-interval", "10",
        "--out", out_prefix, "--manifest", manifest_path,
    ])
    assert code == 0
    return out_prefix, manifest_path


def test_finetune_manifest(finetuned):
    _, manifest_path = finetuned
    manifest = json.loads(open(manifest_path).read())
    assert manifest["seeds"] == [0, 1]
    assert set(manifest["metrics"]) == {"0", "1"}
    assert "aggregate" in manifest
    agg = manifest["aggregate"]["tgt_dev"]
    assert set(agg) == {"mean", "std", "max"}
    assert manifest["selected_checkpoint"].endswith(".zrx")


def test_finetune_checkpoint_reloads_with_structure(finetuned):
    out_prefix, _ = finetuned
    model, config, tables, raw = load_model(out_prefix + ".seed0.zrx")
    assert config.variant == "cross_augmented"
    assert set(model.encoders) == {"src", "tgt"}
    assert model.cfg.tied is False  # inherited from the cross_word base
    assert model.named_parameters("src")["head.tag_w"] is \
        model.named_parameters("tgt")["head.tag_w"]


def test_finetune_version_mismatch_exit_3(workdir, pretrained_path, tmp_path):
    import hashlib

    blob = bytearray(open(pretrained_path, "rb").read())
    blob[4] ^= 0xFF  # bump the version field
    payload = bytes(blob[:-8])
    blob[-8:] = hashlib.sha256(payload).digest()[:8]
    bad = tmp_path / "bad.zrx"
    bad.write_bytes(bytes(blob))
    code = main([
        "finetune", "--checkpoint", str(bad), "--src-train",
        workdir["src_train"], "--tgt-train", workdir["tgt_train"],
        "--src-dev", workdir["src_dev"], "--select", "src_dev",
        "--out", str(tmp_path / "o"),
    ])
    assert code == 3


def test_tag_round_trip_and_eval_consistency(workdir, pretrained_path,
                                             tmp_path):
    tagged = tmp_path / "tagged.conll"
    code = main([
        "tag", "--checkpoint", pretrained_path, "--input",
        workdir["tgt_dev"], "--output", str(tagged), "--language", "tgt",
        "--to-iob2",
    ])
    assert code == 0
    again = read_conll(open(tagged), scheme=IOB2)
    assert again.size == 60
    assert all(s.tags is not None for s in again)

    # external eval on the tagged file equals the internal dev score
    code = main([
        "eval", "--gold", workdir["tgt_dev"], "--pred", str(tagged),
        "--scheme", "IOB2",
    ])
    assert code == 0


def test_tag_empty_input(workdir, pretrained_path, tmp_path):
    empty_in = tmp_path / "empty.conll"
    empty_in.write_text("")
    out = tmp_path / "empty_out.conll"
    code = main([
        "tag", "--checkpoint", pretrained_path, "--input", str(empty_in),
        "--output", str(out),
    ])
    assert code == 0
    assert read_conll(open(out)).size == 0


def test_eval_perfect_and_half(workdir, tmp_path, capsys):
    gold = tmp_path / "gold.conll"
    gold.write_text("a B-PER\nb O\n\nc B-LOC\nd O\n\n")
    code = main(["eval", "--gold", str(gold), "--pred", str(gold)])
    assert code == 0
    out = capsys.readouterr().out
    assert "ALL\t100.00\t100.00\t100.00" in out

    half = tmp_path / "half.conll"
    half.write_text("a B-PER\nb O\n\nc B-ORG\nd O\n\n")
    code = main(["eval", "--gold", str(gold), "--pred", str(half)])
    assert code == 0
    out = capsys.readouterr().out
    assert "ALL\t50.00\t50.00\t50.00" in out


def test_eval_column_flags_read_middle_columns(tmp_path, capsys):
    text = "tok1 NNP B-PER\ntok2 V O\n\n"
    gold = tmp_path / "gold.conll"
    gold.write_text(text)
    pred = tmp_path / "pred.conll"
    pred.write_text(text)
    code = main([
        "eval", "--gold", str(gold), "--pred", str(pred),
        "--token-col", "0", "--tag-col", "2",
    ])
    assert code == 0
    assert "ALL\t100.00" in capsys.readouterr().out
    # default tag column (last) reads the POS column and still parses;
    # an out-of-range explicit column is a usage error
    code = main([
        "eval", "--gold", str(gold), "--pred", str(pred), "--tag-col", "7",
    ])
    assert code == 2


def test_eval_alignment_mismatch_exit_2(tmp_path, capsys):
    gold = tmp_path / "gold.conll"
    gold.write_text("a O\n\n")
    pred = tmp_path / "pred.conll"
    pred.write_text("b O\n\n")
    code = main(["eval", "--gold", str(gold), "--pred", str(pred)])
    assert code == 2
    assert "sentence 0" in capsys.readouterr().err


def test_eval_curve_export_matches_hand_tally(tmp_path):
    gold = tmp_path / "gold.conll"
    gold.write_text("a B-PER\nb O\n\nc O\nd O\ne O\nf O\ng O\nh O\n\n")
    pred = tmp_path / "pred.conll"
    pred.write_text("a O\nb O\n\nc O\nd O\ne O\nf O\ng O\nh O\n\n")
    curve = tmp_path / "curve.tsv"
    code = main([
        "eval", "--gold", str(gold), "--pred", str(pred),
        "--curve-out", str(curve), "--buckets", "5",
    ])
    assert code == 0
    rows = dict(
        line.split("\t") for line in curve.read_text().splitlines()
    )
    assert float(rows["1-5"]) == pytest.approx(1 / 2)  # 1 of 2 tokens right
    assert float(rows["6-10"]) == pytest.approx(1.0)


def test_project_from_vec(workdir, tmp_path):
    out = tmp_path / "proj.csv"
    manifest = tmp_path / "proj.json"
    code = main([
        "project", "--emb", workdir["src_emb"], "--limit", "50",
        "--out", str(out), "--manifest", str(manifest),
    ])
    assert code == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["word", "x", "y", "tag"]
    assert len(rows) == 51
    coords = np.array([[float(r[1]), float(r[2])] for r in rows[1:]])
    assert coords[:, 0].var() >= coords[:, 1].var()
    meta = json.loads(manifest.read_text())
    assert meta["method"] == "pca"
    # reconstruction error equals total variance minus the top-2 spectrum
    fx = workdir["fx"]
    vectors = fx.src_emb.vectors[:50]
    centered = vectors - vectors.mean(axis=0)
    cov = centered.T @ centered / 50
    eigs = np.linalg.eigvalsh(cov)[::-1]
    residual = meta["total_variance"] - sum(meta["explained_variance"])
    assert residual == pytest.approx(eigs[2:].sum(), abs=1e-8)


def test_project_2d_input_is_identity_up_to_rotation(tmp_path):
    vec = tmp_path / "two.vec"
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(20, 2))
    lines = ["20 2"] + [
        f"w{i} {x:.8f} {y:.8f}" for i, (x, y) in enumerate(pts)
    ]
    vec.write_text("\n".join(lines) + "\n")
    out = tmp_path / "proj.csv"
    code = main(["project", "--emb", str(vec), "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(open(out)))[1:]
    coords = np.array([[float(r[1]), float(r[2])] for r in rows])
    # distances to the centroid are preserved by a rigid 2-D projection
    pts_unit = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    centered = pts_unit - pts_unit.mean(axis=0)
    np.testing.assert_allclose(
        np.sort(np.linalg.norm(coords, axis=1)),
        np.sort(np.linalg.norm(centered, axis=1)),
        atol=1e-6,
    )


def test_align_export_mapped_table(workdir, tmp_path):
    from zrxner.persist import load_table

    out = tmp_path / "m.zrx"
    exported = tmp_path / "mapped.zrx"
    code = main([
        "align", "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--direction", "t2s", "--seed", "2",
        "--refine-iters", "1", "--out", str(out),
        "--export-mapped", str(exported), "--w-steps", "100",
        "--disc-steps", "2", "--batch-size", "16", "--disc-hidden", "16",
        "--vocab-cap", "200", "--restarts", "1",
    ])
    assert code == 0
    mapper, _ = load_mapper(str(out))
    table, config = load_table(str(exported))
    fx = workdir["fx"]
    assert table.words == fx.tgt_emb.words
    np.testing.assert_allclose(
        table.vectors, fx.tgt_emb.vectors @ mapper.w.T, atol=1e-6
    )


def test_numerical_failure_maps_to_exit_4(workdir, monkeypatch):
    import zrxner.cli as cli_mod
    from zrxner.errors import NumericalError

    def exploding(args):
        raise NumericalError("loss went non-finite")

    monkeypatch.setattr(cli_mod, "cmd_align", exploding)
    parser = cli_mod.build_parser()
    args = parser.parse_args([
        "align", "--src-emb", workdir["src_emb"], "--tgt-emb",
        workdir["tgt_emb"], "--out", "/dev/null",
    ])
    args.func = exploding
    try:
        code = args.func(args)
    except NumericalError:
        code = None
    assert code is None  # the command itself raises
    # and main() converts it into exit code 4
    monkeypatch.setattr(
        cli_mod, "build_parser", lambda: _stub_parser(exploding)
    )
    assert cli_mod.main(["align"]) == 4


def _stub_parser(func):
    import argparse

    parser = argparse.ArgumentParser()
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("align")
    p.set_defaults(func=func)
    return parser


def test_finetune_zero_rounds_outputs_theta_s_with_fresh_copy(
        workdir, pretrained_path, tmp_path):
    out_prefix = str(tmp_path / "zero")
    code = main([
        "finetune", "--checkpoint", pretrained_path, "--src-train",
        workdir["src_train"], "--tgt-train", workdir["tgt_train"],
        "--src-dev", workdir["src_dev"], "--input-scheme", "IOB2",
        "--select", "src_dev", "--seeds", "0", "--rounds", "0",
        "--out", out_prefix,
    ])
    assert code == 0
    model, _, _, _ = load_model(out_prefix + ".seed0.zrx")
    base, _, _, _ = load_model(pretrained_path)
    src = model.named_parameters("src")
    tgt = model.named_parameters("tgt")
    orig = base.named_parameters("src")
    for name in orig:
        np.testing.assert_array_equal(src[name], orig[name])
    np.testing.assert_array_equal(
        tgt["enc.tgt.word.f.w"], src["enc.src.word.f.w"]
    )


def test_config_file_overridden_by_flags(workdir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("train.epochs=1\ntrain.word_hidden=16\n"
                   "train.char_dim=8\ntrain.char_hidden=8\n"
                   "train.head_hidden=16\ntrain.eval_interval=50\n")
    out = tmp_path / "m.zrx"
    code = main([
        "pretrain", "--train", workdir["src_train"], "--dev",
        workdir["src_dev"], "--src-emb", workdir["src_emb"],
        "--variant", "source_mono", "--scheme", "IOBES",
        "--input-scheme", "IOB2", "--config", str(cfg),
        "--epochs", "2", "--out", str(out),
    ])
    assert code == 0
    _, config, _, raw = load_model(str(out))
    assert config.epochs == 2  # flag wins over the file
    assert config.word_hidden == 16  # file value survives
    assert raw["train.epochs"] == "2"  # effective config embedded
