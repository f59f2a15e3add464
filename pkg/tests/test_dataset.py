import json
import random
from pathlib import Path

import pytest

from nl2vega.dataset import (
    MAX_SOURCE_LEN,
    SEG_COL,
    SEG_DATA,
    SEG_NL,
    SEG_SPECIAL,
    SEG_TEMPLATE,
    SEG_VAL,
    AugmentedItem,
    NvPair,
    Vocabulary,
    augment_corpus,
    augment_pair,
    build_source_sequence,
    build_vocabulary,
    bundled_corpus_path,
    decode_tokens,
    encode_corpus,
    encode_example,
    load_corpus,
)
from nl2vega.errors import CorpusError, EncodingError
from nl2vega.vega_zero import ColumnSchema, DatabaseSchema, TableSchema, parse, tokenize

GOLDEN_VOCAB = Path(__file__).parent / "goldens" / "mini_corpus_vocab.txt"


def small_pair(values=("york",), nl="count rows by name"):
    label = parse(tokenize("mark bar data emp encoding x name y aggregate count name"))
    schema = DatabaseSchema((
        TableSchema("emp", (ColumnSchema("name", "categorical"), ColumnSchema("pay", "numeric")), values),
    ))
    return NvPair(nl_query=nl, label=label, table="emp", schema=schema)


class TestLoadCorpus:
    def test_bundled_corpus_loads_cleanly(self):
        result = load_corpus(bundled_corpus_path())
        assert len(result.pairs) == 64
        assert result.rejects == []
        assert all(p.split == "train" for p in result.pairs)
        assert all(p.hardness is not None for p in result.pairs)

    def test_malformed_records_become_rejects(self, tmp_path):
        good = json.loads(bundled_corpus_path().read_text().splitlines()[0])
        lines = [json.dumps(good)] * 18
        lines.append("not json at all")
        bad = dict(good)
        del bad["label"]
        lines.append(json.dumps(bad))
        path = tmp_path / "c.jsonl"
        path.write_text("\n".join(lines) + "\n")

        result = load_corpus(path)
        assert len(result.pairs) == 18
        assert len(result.rejects) == 2
        assert result.rejects[0].line == 19
        assert "label" in result.rejects[1].reason

    def test_too_many_rejects_is_an_error(self, tmp_path):
        good = bundled_corpus_path().read_text().splitlines()[0]
        path = tmp_path / "c.jsonl"
        path.write_text(good + "\n" + "garbage\n" * 3)
        with pytest.raises(CorpusError, match="rejected"):
            load_corpus(path)

    def test_empty_corpus_is_an_error(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(CorpusError, match="no records"):
            load_corpus(path)

    def test_label_must_validate_against_schema(self, tmp_path):
        good = json.loads(bundled_corpus_path().read_text().splitlines()[0])
        bad = dict(good)
        bad["label"] = bad["label"].replace("x san_id", "x no_such")
        path = tmp_path / "c.jsonl"
        path.write_text("\n".join([json.dumps(good)] * 10 + [json.dumps(bad)]) + "\n")
        result = load_corpus(path)
        assert len(result.rejects) == 1
        assert "does not validate" in result.rejects[0].reason

    def test_csv_round_trip(self, tmp_path):
        import csv

        records = [json.loads(l) for l in bundled_corpus_path().read_text().splitlines()[:5]]
        path = tmp_path / "c.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(records[0]))
            writer.writeheader()
            for r in records:
                row = dict(r)
                row["schema"] = json.dumps(r["schema"])
                row["values"] = json.dumps(r["values"])
                writer.writerow(row)

        result = load_corpus(path, fmt="csv")
        assert len(result.pairs) == 5
        assert result.pairs[0].nl_query == records[0]["nl"]
        assert result.pairs[0].label_text == records[0]["label"]

    def test_rejects_report_is_written(self, tmp_path):
        good = bundled_corpus_path().read_text().splitlines()[0]
        path = tmp_path / "c.jsonl"
        path.write_text("\n".join([good] * 12 + ["broken"]) + "\n")
        result = load_corpus(path)
        report = tmp_path / "rejects.jsonl"
        result.write_rejects(report)
        rows = [json.loads(l) for l in report.read_text().splitlines()]
        assert rows == [{"line": 13, "reason": rows[0]["reason"], "raw": "broken"}]


class TestSourceSequence:
    def test_placeholder_variant_layout(self):
        seq = build_source_sequence(small_pair(), chart_given=False)
        expected = (
            "<N> count rows by name </N> "
            "<C> mark [T] data emp encoding x [X] y aggregate [AggFunction] [Y] color [Z] "
            "transform filter [F] group [G] bin [B] sort [S] topk [K] </C> "
            "<D> emp <COL> name pay </COL> <VAL> york </VAL> </D>"
        )
        assert seq.text == expected
        assert not seq.chart_given

    def test_segment_ids_by_section(self):
        seq = build_source_sequence(small_pair(), chart_given=False)
        S, N, T, D, C, V = SEG_SPECIAL, SEG_NL, SEG_TEMPLATE, SEG_DATA, SEG_COL, SEG_VAL
        expected = (
            [S] + [N] * 4 + [S, S] + [T] * 24 + [S, S] + [D]
            + [S] + [C] * 2 + [S, S] + [V] + [S, S]
        )
        assert list(seq.segment_ids) == expected

    def test_chart_given_fills_the_mark_slot(self):
        seq = build_source_sequence(small_pair(), chart_given=True)
        assert "[T]" not in seq.tokens
        i = seq.tokens.index("mark")
        assert seq.tokens[i + 1] == "bar"
        assert seq.chart_given

    def test_nl_text_is_tokenized(self):
        pair = small_pair(nl='Show names LIKE "york", please!')
        seq = build_source_sequence(pair, chart_given=False)
        n = list(seq.tokens)
        assert n[1 : n.index("</N>")] == ["show", "names", "like", '"york"', ",", "please", "!"]

    def test_long_value_lists_are_capped(self):
        pair = small_pair(values=tuple(f"v{i}" for i in range(40)))
        seq = build_source_sequence(pair, chart_given=False)
        vals = seq.tokens[seq.tokens.index("<VAL>") + 1 : seq.tokens.index("</VAL>")]
        assert len(vals) == 16

    def test_oversized_source_truncates_values_first(self):
        pair = small_pair(nl="count rows by name " * 70)
        seq = build_source_sequence(pair, chart_given=False)
        assert len(seq.tokens) == MAX_SOURCE_LEN
        # the schema scaffolding survives; the single value and some NL are gone
        assert seq.tokens[-1] == "</D>"
        assert "<VAL>" in seq.tokens and "</VAL>" in seq.tokens
        assert "york" not in seq.tokens


class TestAugment:
    def test_two_variants_share_the_label(self):
        items = augment_pair(small_pair())
        assert len(items) == 2
        assert [it.chart_given for it in items] == [False, True]
        assert items[0].label_tokens == items[1].label_tokens
        assert items[0].label_text == "mark bar data emp encoding x name y aggregate count name"

    def test_corpus_augmentation_doubles_items(self):
        pairs = load_corpus(bundled_corpus_path()).pairs
        items = augment_corpus(pairs)
        assert len(items) == 2 * len(pairs)
        assert all(len(it.source.tokens) <= MAX_SOURCE_LEN for it in items)


class TestVocabulary:
    def test_reserved_ids_are_fixed(self):
        vocab = Vocabulary(["zz", "aa"])
        assert [vocab.pad_id, vocab.sos_id, vocab.eos_id, vocab.unk_id] == [0, 1, 2, 3]
        assert vocab.tokens == ["<pad>", "<sos>", "<eos>", "<unk>", "aa", "zz"]

    def test_order_independent(self):
        tokens = ["mark", "bar", "emp", "x", "<COL>"]
        a = Vocabulary(tokens)
        b = Vocabulary(list(reversed(tokens)) + ["bar"])
        assert a.tokens == b.tokens

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocabulary(augment_corpus(load_corpus(bundled_corpus_path()).pairs))
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        again = Vocabulary.load(path)
        assert again.tokens == vocab.tokens
        assert len(again) == len(vocab)

    def test_load_rejects_shuffled_reserved_ids(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("<sos>\n<pad>\n<eos>\n<unk>\na\n")
        with pytest.raises(CorpusError, match="reserved"):
            Vocabulary.load(path)

    def test_bundled_corpus_vocabulary_matches_golden(self):
        vocab = build_vocabulary(augment_corpus(load_corpus(bundled_corpus_path()).pairs))
        golden = GOLDEN_VOCAB.read_text().splitlines()
        assert vocab.tokens == golden
        assert len(vocab) == 199


class TestEncoding:
    def test_round_trip_ids(self):
        item = augment_pair(small_pair())[0]
        vocab = build_vocabulary([item])
        ex = encode_example(item, vocab)
        assert decode_tokens(ex.source_ids, vocab) == list(item.source.tokens)
        assert ex.label_ids[0] == vocab.sos_id
        assert ex.label_ids[-1] == vocab.eos_id
        assert decode_tokens(ex.label_ids, vocab) == list(item.label_tokens)
        assert ex.source_segment_ids == item.source.segment_ids

    def test_unknown_source_token_becomes_unk(self):
        item = augment_pair(small_pair())[0]
        vocab = build_vocabulary([item])
        novel = augment_pair(small_pair(nl="count zzzunseen by name"))[0]
        ex = encode_example(novel, vocab)
        assert vocab.unk_id in ex.source_ids

    def test_unknown_label_token_is_an_error(self):
        item = augment_pair(small_pair())[0]
        vocab = Vocabulary(item.source.tokens)  # label tokens all in source here except none
        bad = AugmentedItem(item.source, ("mark", "zz_not_in_vocab"), item.pair)
        with pytest.raises(EncodingError, match="closed vocabulary"):
            encode_example(bad, vocab)

    def test_full_corpus_encodes(self):
        pairs = load_corpus(bundled_corpus_path()).pairs
        items = augment_corpus(pairs)
        vocab = build_vocabulary(items)
        encoded = encode_corpus(items, vocab)
        assert len(encoded) == len(items)
        top = len(vocab)
        for enc in encoded:
            assert all(0 <= i < top for i in enc.example.source_ids)
            assert all(0 <= i < top for i in enc.example.label_ids)
            assert vocab.unk_id not in enc.example.label_ids
