"""Exporter tests against a tiny locally built BERT checkpoint (offline)."""

import json
import subprocess
import sys

import numpy as np
import pytest

from embed_export import (
    ExportError,
    ExportJob,
    export_embeddings,
    format_float,
    read_pairs,
    render_lines,
)


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    d = tmp_path_factory.mktemp("tiny-bert")
    vocab = [
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
        "the", "cat", "sat", "##s", "hello", "world", "dog", "ran",
        "a", "on", "mat", "rug", "red", "blue",
    ]
    (d / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(d / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(d)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=32,
    )
    BertModel(config).save_pretrained(d)
    return d


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "pairs.tsv"
    path.write_text(
        "p1\tthe cat sat\tthe dog ran\np2\thello world\tcats sat\n",
        encoding="utf-8",
    )
    return path


def _job(encoder_dir, dataset_path, out, **kw):
    return ExportJob(model=str(encoder_dir), dataset=str(dataset_path), out=str(out), **kw)


def _load_jsonl(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return json.loads(lines[0]), [json.loads(l) for l in lines[1:]]


# --- sentence granularity ---


def test_sentence_export_record_count_and_header(encoder_dir, dataset_path, tmp_path):
    out = tmp_path / "s.jsonl"
    count = export_embeddings(_job(encoder_dir, dataset_path, out, pooling="mean"))
    header, records = _load_jsonl(out)
    assert count == 4 and len(records) == 4
    assert header == {
        "type": "header",
        "model": f"{encoder_dir}#pooling=mean#layer=-1",
        "dim": 16,
        "granularity": "sentence",
    }
    assert [(r["pair_id"], r["side"]) for r in records] == [
        ("p1", "A"), ("p1", "B"), ("p2", "A"), ("p2", "B"),
    ]
    assert all(len(r["vector"]) == 16 for r in records)


def test_sentence_export_passes_sidecar_validation(encoder_dir, dataset_path, tmp_path):
    embedstore = pytest.importorskip("semrel.embedstore")
    out = tmp_path / "s.jsonl"
    export_embeddings(_job(encoder_dir, dataset_path, out))
    store = embedstore.load_embeddings(out)
    assert store.dim == 16
    assert store.granularity == "sentence"
    assert all(store.has(pid, side) for pid in ("p1", "p2") for side in ("A", "B"))


def test_reexport_is_byte_identical(encoder_dir, dataset_path, tmp_path):
    out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    export_embeddings(_job(encoder_dir, dataset_path, out1))
    export_embeddings(_job(encoder_dir, dataset_path, out2))
    assert out1.read_bytes() == out2.read_bytes()


def test_batch_size_does_not_change_vectors(encoder_dir, dataset_path, tmp_path):
    outs = []
    for bs in (1, 3):
        out = tmp_path / f"bs{bs}.jsonl"
        export_embeddings(_job(encoder_dir, dataset_path, out, batch_size=bs))
        outs.append(_load_jsonl(out)[1])
    for rec1, rec2 in zip(*outs):
        assert rec1["pair_id"] == rec2["pair_id"] and rec1["side"] == rec2["side"]
        assert np.allclose(rec1["vector"], rec2["vector"], atol=1e-5)


def test_cls_pooling_takes_first_position(encoder_dir, dataset_path, tmp_path):
    import torch
    from transformers import AutoModel, AutoTokenizer

    out = tmp_path / "cls.jsonl"
    export_embeddings(_job(encoder_dir, dataset_path, out, pooling="cls"))
    header, records = _load_jsonl(out)
    assert "#pooling=cls#" in header["model"]

    tokenizer = AutoTokenizer.from_pretrained(encoder_dir)
    model = AutoModel.from_pretrained(encoder_dir).eval()
    with torch.no_grad():
        enc = tokenizer(["the cat sat"], return_tensors="pt")
        expected = model(**enc).last_hidden_state[0, 0].numpy().astype(np.float64)
    got = records[0]["vector"]
    assert got == [format_float(v) for v in expected]


def test_layer_zero_differs_from_last_layer(encoder_dir, dataset_path, tmp_path):
    out0, out1 = tmp_path / "l0.jsonl", tmp_path / "l1.jsonl"
    export_embeddings(_job(encoder_dir, dataset_path, out0, layer=0))
    export_embeddings(_job(encoder_dir, dataset_path, out1, layer=-1))
    _, rec0 = _load_jsonl(out0)
    _, rec1 = _load_jsonl(out1)
    assert any(a["vector"] != b["vector"] for a, b in zip(rec0, rec1))


def test_layer_out_of_range(encoder_dir, dataset_path, tmp_path):
    with pytest.raises(ExportError, match="layer 7"):
        export_embeddings(_job(encoder_dir, dataset_path, tmp_path / "x.jsonl", layer=7))


# --- token granularity ---


def test_token_indices_cover_each_word(encoder_dir, dataset_path, tmp_path):
    out = tmp_path / "t.jsonl"
    export_embeddings(_job(encoder_dir, dataset_path, out, granularity="token"))
    header, records = _load_jsonl(out)
    assert header["granularity"] == "token"
    p1a = [r["token_index"] for r in records if r["pair_id"] == "p1" and r["side"] == "A"]
    assert p1a == [0, 1, 2]
    # "cats sat" -> two words even though "cats" splits into two subwords
    p2b = [r["token_index"] for r in records if r["pair_id"] == "p2" and r["side"] == "B"]
    assert p2b == [0, 1]


def test_token_export_passes_sidecar_validation(encoder_dir, dataset_path, tmp_path):
    embedstore = pytest.importorskip("semrel.embedstore")
    out = tmp_path / "t.jsonl"
    export_embeddings(_job(encoder_dir, dataset_path, out, granularity="token"))
    store = embedstore.load_embeddings(out)
    assert store.granularity == "token"
    assert store.dim == 16


def test_one_word_sentence_pooling_matches_token_vector(encoder_dir, tmp_path):
    data = tmp_path / "one.tsv"
    data.write_text("q1\tcats\thello\n", encoding="utf-8")
    sent_out, tok_out = tmp_path / "sent.jsonl", tmp_path / "tok.jsonl"
    export_embeddings(_job(encoder_dir, data, sent_out, pooling="mean"))
    export_embeddings(_job(encoder_dir, data, tok_out, granularity="token"))
    _, sent_records = _load_jsonl(sent_out)
    _, tok_records = _load_jsonl(tok_out)
    sent_a = next(r for r in sent_records if r["pair_id"] == "q1" and r["side"] == "A")
    tok_a = [r for r in tok_records if r["pair_id"] == "q1" and r["side"] == "A"]
    assert len(tok_a) == 1
    assert sent_a["vector"] == tok_a[0]["vector"]


def test_token_granularity_rejects_cls_pooling(encoder_dir, dataset_path, tmp_path):
    with pytest.raises(ExportError, match="mean"):
        _job(encoder_dir, dataset_path, tmp_path / "x.jsonl",
             granularity="token", pooling="cls")


# --- serialization and input validation ---


def test_render_lines_rejects_dimension_drift():
    records = [
        {"pair_id": "p1", "side": "A", "vector": [0.1, 0.2]},
        {"pair_id": "p1", "side": "B", "vector": [0.1, 0.2, 0.3]},
    ]
    with pytest.raises(ExportError, match="dimension drift"):
        render_lines("m#pooling=mean#layer=-1", "sentence", records)


def test_format_float_is_idempotent():
    for x in (0.123456789123, 1e-12, 3.0, -2.5e8):
        once = format_float(x)
        assert format_float(once) == once


def test_read_pairs_validation(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("p1\tonly one text\n", encoding="utf-8")
    with pytest.raises(ExportError, match="columns"):
        read_pairs(bad)
    dup = tmp_path / "dup.tsv"
    dup.write_text("p1\ta\tb\np1\tc\td\n", encoding="utf-8")
    with pytest.raises(ExportError, match="duplicate"):
        read_pairs(dup)
    empty = tmp_path / "empty.tsv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ExportError, match="empty"):
        read_pairs(empty)
    with pytest.raises(ExportError, match="cannot read"):
        read_pairs(tmp_path / "gone.tsv")
    scored = tmp_path / "scored.tsv"
    scored.write_text("p1\ta text\tb text\t0.5\n", encoding="utf-8")
    assert read_pairs(scored) == [("p1", "a text", "b text")]


def test_unknown_pooling_and_bad_batch(encoder_dir, dataset_path, tmp_path):
    with pytest.raises(ExportError, match="pooling"):
        _job(encoder_dir, dataset_path, tmp_path / "x.jsonl", pooling="max")
    with pytest.raises(ExportError, match="batch"):
        _job(encoder_dir, dataset_path, tmp_path / "x.jsonl", batch_size=0)


# --- CLI ---


def _run(*args):
    return subprocess.run(
        [sys.executable, "-m", "embed_export", *map(str, args)],
        capture_output=True,
        text=True,
    )


def test_cli_export(encoder_dir, dataset_path, tmp_path):
    out = tmp_path / "cli.jsonl"
    proc = _run("export", "--model", encoder_dir, "--dataset", dataset_path,
                "--pooling", "mean", "--granularity", "sentence",
                "--layer", "-1", "--out", out, "--batch-size", "2")
    assert proc.returncode == 0, proc.stderr
    assert "wrote 4 record(s)" in proc.stderr
    header, records = _load_jsonl(out)
    assert header["dim"] == 16 and len(records) == 4


def test_cli_unloadable_encoder_is_nonzero(dataset_path, tmp_path):
    proc = _run("export", "--model", tmp_path / "no-model", "--dataset", dataset_path,
                "--out", tmp_path / "x.jsonl")
    assert proc.returncode == 1
    assert "error:" in proc.stderr and "cannot load encoder" in proc.stderr


def test_cli_usage_error_is_exit_2():
    proc = _run("export", "--model", "m")
    assert proc.returncode == 2
