import hashlib
import json

import numpy as np
import pytest

from nl2vega.dataset import (
    augment_corpus,
    build_vocabulary,
    bundled_corpus_path,
    encode_corpus,
    load_corpus,
)
from nl2vega.evaluation import (
    EvalReport,
    chart_type_accuracy,
    correct_systematic_errors,
    evaluate,
    guided_accuracy,
    guided_predictions,
    hardness_report,
    normalized_match,
    teacher_forced,
    template_breakdown,
    token_accuracy,
    word_class,
)
from nl2vega.guided import DecoderMeta, batch_of_one, guided_search
from nl2vega.model import ModelConfig, Seq2Seq, build_network, train
from nl2vega.vega_zero import parse, serialize


def corpus():
    result = load_corpus(bundled_corpus_path())
    items = augment_corpus(result.pairs)
    return result.pairs, items, build_vocabulary(items)


def random_net(vocab, seed=11):
    cfg = ModelConfig(d_model=32, n_heads=2, n_layers=1, d_ff=64, dropout=0.0,
                      max_len=256, learning_rate=0.0005, epochs=1, batch_size=8, seed=seed)
    return Seq2Seq(cfg, len(vocab), dtype=np.float32)


class TestWordClass:
    def test_partition(self):
        assert word_class("mark") == "easy_template"
        assert word_class("transform") == "easy_template"
        assert word_class("filter") == "hard_template"
        assert word_class("topk") == "hard_template"
        assert word_class("price") == "non_template"
        assert word_class("<eos>") == "non_template"

    def test_classes_cover_label_length(self):
        _, items, _ = corpus()
        for item in items:
            classes = [word_class(t) for t in item.label_tokens]
            assert len(classes) == len(item.label_tokens)


class TestNormalizedMatch:
    def test_clause_order_variance_still_matches(self):
        canonical = ("mark bar data emp encoding x name y aggregate count name "
                     "transform filter name = 'a' sort y desc")
        shuffled = ("mark bar data emp encoding x name y aggregate count name "
                    "transform sort y desc filter name = 'a'")
        assert normalized_match(shuffled, canonical)

    def test_unparseable_prediction_never_matches(self):
        assert not normalized_match("mark mark mark", "mark bar data emp encoding x a y aggregate none b")


class TestTokenAccuracyOracle:
    def test_matches_stepwise_recount_on_20_items(self):
        _, items, vocab = corpus()
        subset = items[:20]
        net = random_net(vocab)
        results = teacher_forced(net, vocab, subset)

        # independent route: incremental decode_step over the gold prefix
        recount = []
        for item, res in zip(subset, results):
            batch = batch_of_one(item, vocab)
            memory = net.encode(batch)
            gold_ids = [vocab.id_of(t) for t in item.label_tokens] + [vocab.eos_id]
            prefix = [vocab.sos_id]
            predicted = []
            for target in gold_ids:
                logits = net.decode_step(memory[0], batch.src_mask[0], prefix)
                predicted.append(vocab.token_of(int(np.argmax(logits))))
                prefix.append(target)
            gold = list(item.label_tokens) + ["<eos>"]
            assert list(res.gold) == gold
            assert list(res.predicted) == predicted
            recount.extend((p == g, item.chart_given) for p, g in zip(predicted, gold))

        rates = token_accuracy(results)
        assert rates["overall"] == sum(c for c, _ in recount) / len(recount)
        only = [c for c, given in recount if not given]
        plus = [c for c, given in recount if given]
        assert rates["query_only"] == sum(only) / len(only)
        assert rates["query_plus_chart"] == sum(plus) / len(plus)

    def test_empty_items_rejected(self):
        _, _, vocab = corpus()
        with pytest.raises(ValueError):
            teacher_forced(random_net(vocab), vocab, [])
        with pytest.raises(ValueError):
            token_accuracy([])


class TestGuidedAccuracyOracle:
    def test_matches_string_comparison_recount(self):
        _, items, vocab = corpus()
        subset = items[:20]
        net = random_net(vocab, seed=17)
        preds = guided_predictions(net, vocab, subset)

        flags = []
        for item, p in zip(subset, preds):
            rerun = guided_search(net, vocab, batch_of_one(item, vocab),
                                  DecoderMeta.from_item(item))
            assert rerun.text == p.result.text
            flags.append((serialize(parse(rerun.text)) == serialize(parse(item.label_text)),
                          item.chart_given))
        rates = guided_accuracy(preds)
        assert rates["overall"] == sum(c for c, _ in flags) / len(flags)

    def test_random_model_is_valid_but_rarely_right(self):
        _, items, vocab = corpus()
        net = random_net(vocab, seed=23)
        preds = guided_predictions(net, vocab, items[:16])
        for p in preds:
            parse(p.result.text)  # grammar holds even for an untrained model
        assert guided_accuracy(preds)["overall"] <= 0.25


class TestTemplateBreakdown:
    def test_perfect_predictions_have_zero_incorrect(self):
        _, items, _ = corpus()
        labels = [list(i.label_tokens) for i in items[:10]]
        out = template_breakdown(labels, labels)
        for c in ("easy_template", "hard_template", "non_template"):
            assert out.class_accuracy[c] == 1.0
            assert out.incorrect_counts[c]["max"] == 0
        assert out.excluded_items == 0

    def test_single_wrong_hard_word(self):
        gold = ["mark", "bar", "data", "emp", "encoding", "x", "a", "y",
                "aggregate", "none", "b"]
        pred = list(gold)
        pred[5] = "color"  # x -> still a hard-template token, wrong
        out = template_breakdown([pred], [gold])
        assert out.incorrect_counts["hard_template"]["max"] == 1
        assert out.incorrect_counts["easy_template"]["max"] == 0
        assert out.incorrect_counts["non_template"]["max"] == 0

    def test_length_mismatch_is_flagged_not_scored(self):
        gold = ["mark", "bar", "data", "emp"]
        out = template_breakdown([["mark", "bar"]], [gold])
        assert out.excluded_items == 1
        assert out.class_total == {"easy_template": 0, "hard_template": 0, "non_template": 0}
        assert out.class_counts["total"]["mean"] == 4.0

    def test_counts_recount_on_20_items(self):
        _, items, vocab = corpus()
        subset = items[:20]
        net = random_net(vocab)
        results = teacher_forced(net, vocab, subset)
        out = template_breakdown([r.predicted for r in results], [r.gold for r in results])

        per_class = {"easy_template": [0, 0], "hard_template": [0, 0], "non_template": [0, 0]}
        template_counts = []
        for r in results:
            template_counts.append(sum(word_class(g) != "non_template" for g in r.gold))
            for p, g in zip(r.predicted, r.gold):
                c = word_class(g)
                per_class[c][1] += 1
                per_class[c][0] += p == g
        for c, (correct, total) in per_class.items():
            assert out.class_accuracy[c] == correct / total
            assert out.class_correct[c] == correct
            assert out.class_total[c] == total
        assert out.class_counts["template"]["mean"] == sum(template_counts) / 20


class TestChartTypeAccuracy:
    def test_all_bar_predictor_on_uniform_corpus(self):
        labels = [["mark", m, "data", "t"] for m in ("arc", "bar", "line", "point")]
        preds = [["mark", "bar", "data", "t"]] * 4
        out = chart_type_accuracy(preds, labels, [False] * 4)
        assert out["raw"]["overall"] == 0.25

    def test_perfect_predictor(self):
        labels = [["mark", "bar"], ["mark", "arc"]]
        out = chart_type_accuracy(labels, labels, [False, True])
        assert out["raw"] == {"overall": 1.0, "query_only": 1.0, "query_plus_chart": 1.0}

    def test_narrowing_rescues_given_charts_only(self):
        labels = [["mark", "bar"], ["mark", "arc"]]
        preds = [["mark", "line"], ["mark", "line"]]
        out = chart_type_accuracy(preds, labels, [False, True])
        assert out["raw"]["overall"] == 0.0
        assert out["narrowed"] == {"overall": 0.5, "query_only": 0.0, "query_plus_chart": 1.0}

    def test_recount_on_20_items(self):
        _, items, vocab = corpus()
        subset = items[:20]
        net = random_net(vocab)
        results = teacher_forced(net, vocab, subset)
        flags = [i.chart_given for i in subset]
        out = chart_type_accuracy([r.predicted for r in results],
                                  [r.gold for r in results], flags)
        hand = [r.predicted[1] == r.gold[1] for r in results]
        assert out["raw"]["overall"] == sum(hand) / 20
        assert out["narrowed"]["query_plus_chart"] == (
            sum(h or f for h, f in zip(hand, flags) if f) / sum(flags))


class TestHardnessReport:
    def test_all_true_gives_rate_one(self):
        table = hardness_report([True] * 4, ["Easy", "Medium", "Hard", "Extra Hard"])
        assert all(row["rate"] == 1.0 for level, row in table.items()
                   if row["success"] + row["failure"] > 0)

    def test_hand_counted_mix(self):
        flags = [True, False, True, True, False, False, True, False, True, True]
        levels = ["Easy", "Easy", "Easy", "Medium", "Medium",
                  "Hard", "Hard", "Extra Hard", None, "bogus"]
        table = hardness_report(flags, levels)
        assert table["Easy"] == {"success": 2, "failure": 1, "rate": 2 / 3}
        assert table["Medium"] == {"success": 1, "failure": 1, "rate": 0.5}
        assert table["Hard"] == {"success": 1, "failure": 1, "rate": 0.5}
        assert table["Extra Hard"] == {"success": 0, "failure": 1, "rate": 0.0}
        assert table["Unlabeled"] == {"success": 2, "failure": 0, "rate": 1.0}

    def test_success_plus_failure_equals_level_count(self):
        flags = [True, False, True]
        levels = ["Easy", "Easy", "Hard"]
        table = hardness_report(flags, levels)
        assert sum(r["success"] + r["failure"] for r in table.values()) == 3


class TestCorrection:
    WILDCARD_RAW = ("mark bar data customer encoding x cust_name y aggregate none "
                    "acc_bal transform filter cust_name like '%a' sort y desc")
    SPACING_RAW = ('mark bar data employees encoding x hire_date y aggregate count '
                   'hire_date transform filter salary between 8000 and 12000 and '
                   'commission_pct!= "null" or department_id!= 40 sort y asc '
                   'bin x by weekday')

    def test_wildcard_golden(self):
        fixed = correct_systematic_errors(self.WILDCARD_RAW)
        assert fixed == self.WILDCARD_RAW.replace("'%a'", "'%a%'")

    def test_spacing_golden(self):
        fixed = correct_systematic_errors(self.SPACING_RAW)
        assert 'commission_pct != "null"' in fixed
        assert "department_id != 40" in fixed
        parse(fixed)  # repaired text is grammatical
        label = fixed
        assert not normalized_match(self.SPACING_RAW, label)
        assert normalized_match(fixed, label)

    def test_idempotent_over_corpus_labels(self):
        pairs, _, _ = corpus()
        for pair in pairs:
            text = pair.label_text
            assert correct_systematic_errors(text) == text
        for raw in (self.WILDCARD_RAW, self.SPACING_RAW):
            once = correct_systematic_errors(raw)
            assert correct_systematic_errors(once) == once

    def test_quoted_and_midword_text_untouched(self):
        assert correct_systematic_errors("filter note = 'a!=b'") == "filter note = 'a!=b'"
        assert correct_systematic_errors("filter name = ab!=cd") == "filter name = ab!=cd"
        assert correct_systematic_errors("filter v like 'a%'") == "filter v like 'a%'"
        assert correct_systematic_errors("filter v like '%'") == "filter v like '%'"

    def test_unquoted_pattern_repaired(self):
        assert correct_systematic_errors("filter v like %a") == "filter v like %a%"


class TestEvaluate:
    def overfit_report(self):
        result = load_corpus(bundled_corpus_path())
        pairs = sorted(result.pairs, key=lambda p: len(p.label_text))[:2]
        items = augment_corpus(pairs)
        vocab = build_vocabulary(augment_corpus(result.pairs))
        encoded = encode_corpus(items, vocab)
        cfg = ModelConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32, dropout=0.0,
                          max_len=96, learning_rate=0.005, epochs=150,
                          batch_size=2, seed=3)
        ckpt = train(encoded, encoded, cfg, vocab)
        return evaluate(build_network(ckpt, dtype=np.float32), vocab, items), items

    def test_overfit_model_scores_one_everywhere(self):
        report, items = self.overfit_report()
        assert report.n_items == len(items)
        assert report.token_accuracy["overall"] == 1.0
        assert report.guided_exact_match["overall"] == 1.0
        assert report.correction_delta["matches_before"] == len(items)

    def test_rates_bounded_and_correction_never_hurts(self):
        _, items, vocab = corpus()
        report = evaluate(random_net(vocab, seed=31), vocab, items[:12])
        for rates in (report.token_accuracy, report.guided_exact_match):
            assert all(0.0 <= v <= 1.0 for v in rates.values())
        for mode in report.chart_type_accuracy.values():
            assert all(0.0 <= v <= 1.0 for v in mode.values())
        assert report.correction_delta["matches_after"] >= report.correction_delta["matches_before"]
        for row in report.hardness.values():
            assert row["success"] + row["failure"] >= 0
        assert sum(r["success"] + r["failure"] for r in report.hardness.values()) == 12

    def test_report_serializes_and_dumps(self, tmp_path):
        report, items = self.overfit_report()
        data = json.loads(report.to_json())
        assert data["n_items"] == len(items)
        assert "template" in data and "hardness" in data
        text = report.text_tables()
        for title in ("accuracy", "word class accuracy", "chart type accuracy",
                      "exact match by hardness", "systematic error correction"):
            assert title in text
        dump = tmp_path / "items.jsonl"
        report.write_item_dump(dump)
        lines = [json.loads(l) for l in dump.read_text().splitlines()]
        assert len(lines) == len(items)
        assert all(l["match"] for l in lines)
        assert {"source", "label", "prediction", "hardness", "classes"} <= set(lines[0])

    def test_external_variant_pipeline(self):
        _, items, vocab = corpus()
        subset = items[:6]
        dim = 8

        def provider(item):
            vecs = []
            for tok in item.source.tokens:
                h = hashlib.sha256(tok.encode()).digest()
                vecs.append([b / 255.0 for b in h[:dim]])
            return np.asarray(vecs, dtype=np.float32)

        cfg = ModelConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32, dropout=0.0,
                          max_len=256, learning_rate=0.0005, epochs=1, batch_size=4,
                          seed=7, encoder_variant="external", external_dim=dim)
        net = Seq2Seq(cfg, len(vocab), dtype=np.float32)
        report = evaluate(net, vocab, subset, external=provider)
        assert report.n_items == 6
        for p in report.predictions:
            parse(p.result.text)
