import json

import pytest

from nestner.cli import main
from nestner.config import RunConfig, read_config_file, resolve
from nestner.corpus import read_jsonl, write_jsonl
from nestner.errors import ConfigError
from nestner.metrics import depth_histogram
from nestner.synthetic import generate_synthetic

TINY = ["--d-model", "8", "--n-layers", "2", "--n-heads", "2", "--d-ff", "16", "--max-len", "64"]


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "synth.jsonl"
    assert main(["gen-synth", str(path), "--n-sentences", "40", "--seed", "3"]) == 0
    return path


def test_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nepochs = 7\norder = greedy  # trailing\ntag_layer = none\n")
    assert read_config_file(path) == {"epochs": 7, "order": "greedy", "tag_layer": None}
    config = resolve(path, {"epochs": "3", "seed": None})
    assert (config.epochs, config.order, config.tag_layer, config.seed) == (3, "greedy", None, 0)
    assert resolve().epochs == RunConfig().epochs


@pytest.mark.parametrize("text", ["colour = red\n", "epochs = many\n", "order = sideways\n", "just words\n"])
def test_config_errors(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        resolve(path)


def test_gen_synth(tmp_path, corpus_file):
    corpus = read_jsonl(corpus_file)
    assert len(corpus) == 40 and set(depth_histogram(corpus)) == {0, 1, 2}
    again = tmp_path / "again.jsonl"
    main(["gen-synth", str(again), "--n-sentences", "40", "--seed", "3"])
    assert again.read_bytes() == corpus_file.read_bytes()
    flat = tmp_path / "flat.jsonl"
    main(["gen-synth", str(flat), "--n-sentences", "20", "--max-depth", "0"])
    assert set(depth_histogram(read_jsonl(flat))) == {0}


def test_train_predict_evaluate(tmp_path, corpus_file, capsys):
    ckpt, log = tmp_path / "m.ckpt", tmp_path / "train.log"
    code = main(["train", "--train", str(corpus_file), "--out", str(ckpt), "--log", str(log),
                 "--epochs", "2", "--order", "large_to_short", *TINY])
    out = capsys.readouterr().out
    assert code == 0 and ckpt.exists()
    assert out.startswith("config: ") and "config: order = large_to_short" in out
    assert "order: large_to_short" in out
    assert len(log.read_text().splitlines()) == 2 and "dev_f1=" in log.read_text()

    pred = tmp_path / "pred.jsonl"
    assert main(["predict", str(ckpt), str(corpus_file), str(pred), "--workers", "2"]) == 0
    assert len(read_jsonl(pred)) == 40

    records = tmp_path / "eval.jsonl"
    assert main(["evaluate", str(corpus_file), str(corpus_file), "--records", str(records)]) == 0
    report = capsys.readouterr().out
    assert "Precision" in report and "1.0000" in report
    assert json.loads(records.read_text().splitlines()[0])["f1"] == 1.0


def test_config_file_and_override(tmp_path, corpus_file, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epochs = 1\norder = greedy\n")
    code = main(["train", "--train", str(corpus_file), "--out", str(tmp_path / "m.ckpt"),
                 "--config", str(cfg), "--order", "short_to_large", *TINY])
    out = capsys.readouterr().out
    assert code == 0 and "config: epochs = 1" in out and "config: order = short_to_large" in out


def test_predict_empty_corpus(tmp_path, corpus_file):
    ckpt = tmp_path / "m.ckpt"
    main(["train", "--train", str(corpus_file), "--out", str(ckpt), "--epochs", "1", *TINY])
    empty, out = tmp_path / "empty.jsonl", tmp_path / "out.jsonl"
    empty.write_text("")
    assert main(["predict", str(ckpt), str(empty), str(out)]) == 0
    assert out.read_text() == ""


def test_exit_codes(tmp_path, corpus_file):
    assert main(["train", "--train", str(tmp_path / "missing.jsonl"), "--out", "x"]) == 2
    assert main(["train", "--train", str(corpus_file), "--out", "x", "--colour", "red"]) == 2
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("colour = red\n")
    assert main(["train", "--train", str(corpus_file), "--out", "x", "--config", str(bad_cfg)]) == 2
    assert main([]) == 2

    ckpt = tmp_path / "m.ckpt"
    main(["train", "--train", str(corpus_file), "--out", str(ckpt), "--epochs", "1", *TINY])
    old = tmp_path / "old.ckpt"
    old.write_bytes(ckpt.read_bytes().replace(b"format_version=1", b"format_version=0", 1))
    assert main(["predict", str(old), str(corpus_file), str(tmp_path / "p.jsonl")]) == 3

    short = tmp_path / "short.jsonl"
    write_jsonl(short, read_jsonl(corpus_file)[:5])
    assert main(["evaluate", str(short), str(corpus_file)]) == 4


def test_evaluate_disjoint_is_zero(tmp_path, capsys):
    corpus = generate_synthetic(12, seed=0)
    gold, pred = tmp_path / "g.jsonl", tmp_path / "p.jsonl"
    write_jsonl(gold, corpus)
    from nestner.annotations import Sentence
    write_jsonl(pred, [Sentence(s.tokens, set(), s.doc_id) for s in corpus])
    assert main(["evaluate", str(pred), str(gold)]) == 0
    assert "micro" in capsys.readouterr().out


@pytest.mark.parametrize("kind, rows", [("order", 3), ("layer", 3), ("scheme", 4)])
def test_ablate_shapes(tmp_path, corpus_file, capsys, kind, rows):
    records = tmp_path / "ab.jsonl"
    code = main(["ablate", kind, "--train", str(corpus_file), "--seeds", "1", "--epochs", "1",
                 "--records", str(records), *TINY])
    out = capsys.readouterr().out
    assert code == 0
    lines = [json.loads(x) for x in records.read_text().splitlines()]
    summaries = [r for r in lines if r.get("summary")]
    assert len(summaries) == rows
    if kind == "scheme":
        assert "write BIO" in out and "read BIOUL" in out
