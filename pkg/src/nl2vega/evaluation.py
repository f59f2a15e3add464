"""Accuracy metrics, breakdown tables and post-hoc repair of decoder output.

Two views of model quality: teacher-forced next-token accuracy (how often the
model predicts the next label token given the gold prefix) and guided
exact match (how often constrained decoding reproduces the whole label, up to
parse normalization). Both split by whether the chart type was given in the
source. Breakdowns slice by template word class, chart type and corpus
hardness, and `correct_systematic_errors` repairs two recurring surface
mistakes in raw predictions before rescoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .dataset import (
    HARDNESS_LEVELS,
    AugmentedItem,
    Vocabulary,
    decode_tokens,
    encode_example,
)
from .errors import Nl2VegaError
from .guided import DecodeResult, DecoderMeta, batch_of_one, guided_search
from .model.network import Seq2Seq, make_batch
from .vega_zero import parse, serialize

EASY_TEMPLATE_WORDS = frozenset({"mark", "data", "encoding", "aggregate", "transform"})
HARD_TEMPLATE_WORDS = frozenset({"x", "y", "color", "filter", "group", "bin", "sort", "topk"})

WORD_CLASSES = ("easy_template", "hard_template", "non_template")

ExternalProvider = Callable[[AugmentedItem], np.ndarray]


def word_class(token: str) -> str:
    if token in EASY_TEMPLATE_WORDS:
        return "easy_template"
    if token in HARD_TEMPLATE_WORDS:
        return "hard_template"
    return "non_template"


def normalized_match(predicted_text: str, label_text: str) -> bool:
    """Exact match after parse normalization; unparseable predictions never match."""
    try:
        pred = serialize(parse(predicted_text))
    except Nl2VegaError:
        return False
    return pred == serialize(parse(label_text))


# ---------------------------------------------------------------- predictions

@dataclass(frozen=True)
class TeacherForcedResult:
    """Aligned gold/predicted label tokens for one item (pad positions dropped)."""

    gold: tuple[str, ...]
    predicted: tuple[str, ...]
    chart_given: bool


def teacher_forced(net: Seq2Seq, vocab: Vocabulary, items: Sequence[AugmentedItem],
                   external: Optional[ExternalProvider] = None,
                   batch_size: int = 16) -> list[TeacherForcedResult]:
    if not items:
        raise ValueError("cannot score an empty item list")
    results: list[TeacherForcedResult] = []
    for start in range(0, len(items), batch_size):
        chunk = items[start:start + batch_size]
        examples = [encode_example(it, vocab) for it in chunk]
        ext = [external(it) for it in chunk] if external else None
        batch = make_batch(examples, vocab.pad_id, dtype=net.dtype, external=ext)
        picks = np.argmax(net.forward(batch), axis=-1)
        for i, item in enumerate(chunk):
            live = batch.label_mask[i]
            gold = decode_tokens(batch.label_out[i][live], vocab, strip_special=False)
            pred = decode_tokens(picks[i][live], vocab, strip_special=False)
            results.append(TeacherForcedResult(tuple(gold), tuple(pred), item.chart_given))
    return results


@dataclass(frozen=True)
class GuidedPrediction:
    item: AugmentedItem
    result: DecodeResult
    match: bool
    corrected_match: bool

    @property
    def chart_given(self) -> bool:
        return self.item.chart_given


def guided_predictions(net: Seq2Seq, vocab: Vocabulary, items: Sequence[AugmentedItem],
                       external: Optional[ExternalProvider] = None,
                       max_len: int = 64) -> list[GuidedPrediction]:
    if not items:
        raise ValueError("cannot score an empty item list")
    out: list[GuidedPrediction] = []
    for item in items:
        ext = external(item) if external else None
        batch = batch_of_one(item, vocab, external=ext, dtype=net.dtype)
        result = guided_search(net, vocab, batch, DecoderMeta.from_item(item), max_len)
        label = item.label_text
        out.append(GuidedPrediction(
            item=item,
            result=result,
            match=normalized_match(result.text, label),
            corrected_match=normalized_match(correct_systematic_errors(result.text), label),
        ))
    return out


# -------------------------------------------------------------------- metrics

def _split_rate(pairs: Sequence[tuple[bool, bool]]) -> dict[str, float]:
    """pairs of (correct, chart_given) -> rates keyed by source variant."""
    def rate(selected):
        return (sum(c for c, _ in selected) / len(selected)) if selected else 0.0
    return {
        "overall": rate(pairs),
        "query_only": rate([p for p in pairs if not p[1]]),
        "query_plus_chart": rate([p for p in pairs if p[1]]),
    }


def token_accuracy(results: Sequence[TeacherForcedResult]) -> dict[str, float]:
    """Correct next-token predictions over all teacher-forced positions."""
    if not results:
        raise ValueError("cannot score an empty result list")
    pairs = [(p == g, r.chart_given)
             for r in results for g, p in zip(r.gold, r.predicted)]
    return _split_rate(pairs)


def guided_accuracy(predictions: Sequence[GuidedPrediction],
                    corrected: bool = False) -> dict[str, float]:
    if not predictions:
        raise ValueError("cannot score an empty prediction list")
    pairs = [(p.corrected_match if corrected else p.match, p.chart_given)
             for p in predictions]
    return _split_rate(pairs)


def _stats(values: Sequence[int]) -> dict[str, float]:
    if not values:
        return {"mean": 0.0, "min": 0, "max": 0}
    return {"mean": sum(values) / len(values), "min": min(values), "max": max(values)}


@dataclass
class TemplateBreakdown:
    class_accuracy: dict[str, float]
    class_correct: dict[str, int]
    class_total: dict[str, int]
    class_counts: dict[str, dict[str, float]]      # template / non_template / total
    incorrect_counts: dict[str, dict[str, float]]  # per word class
    excluded_items: int

    def to_dict(self) -> dict:
        return {
            "class_accuracy": self.class_accuracy,
            "class_correct": self.class_correct,
            "class_total": self.class_total,
            "class_counts": self.class_counts,
            "incorrect_counts": self.incorrect_counts,
            "excluded_items": self.excluded_items,
        }


def template_breakdown(predictions: Sequence[Sequence[str]],
                       labels: Sequence[Sequence[str]]) -> TemplateBreakdown:
    """Per word class accuracy and per-item count statistics.

    Label-side counts cover every item; position-aligned error counts skip
    items whose prediction length differs and report how many were skipped.
    """
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    count_rows = {"template": [], "non_template": [], "total": []}
    incorrect_rows = {c: [] for c in WORD_CLASSES}
    correct = {c: 0 for c in WORD_CLASSES}
    total = {c: 0 for c in WORD_CLASSES}
    excluded = 0
    for pred, gold in zip(predictions, labels):
        classes = [word_class(t) for t in gold]
        template = sum(c != "non_template" for c in classes)
        count_rows["template"].append(template)
        count_rows["non_template"].append(len(gold) - template)
        count_rows["total"].append(len(gold))
        if len(pred) != len(gold):
            excluded += 1
            continue
        wrong = {c: 0 for c in WORD_CLASSES}
        for p, g, c in zip(pred, gold, classes):
            total[c] += 1
            if p == g:
                correct[c] += 1
            else:
                wrong[c] += 1
        for c in WORD_CLASSES:
            incorrect_rows[c].append(wrong[c])
    return TemplateBreakdown(
        class_accuracy={c: (correct[c] / total[c]) if total[c] else 0.0
                        for c in WORD_CLASSES},
        class_correct=correct,
        class_total=total,
        class_counts={k: _stats(v) for k, v in count_rows.items()},
        incorrect_counts={c: _stats(v) for c, v in incorrect_rows.items()},
        excluded_items=excluded,
    )


def _mark_token(tokens: Sequence[str]) -> Optional[str]:
    for i, tok in enumerate(tokens):
        if tok == "mark" and i + 1 < len(tokens):
            return tokens[i + 1]
    return None


def chart_type_accuracy(predictions: Sequence[Sequence[str]],
                        labels: Sequence[Sequence[str]],
                        chart_given: Sequence[bool]) -> dict[str, dict[str, float]]:
    """Mark-token accuracy, raw and with the given chart forced when available."""
    if not (len(predictions) == len(labels) == len(chart_given)):
        raise ValueError("predictions, labels and flags differ in length")
    raw, narrowed = [], []
    for pred, gold, given in zip(predictions, labels, chart_given):
        want = _mark_token(gold)
        got = _mark_token(pred)
        ok = want is not None and got == want
        raw.append((ok, given))
        narrowed.append((ok or given, given))
    return {"raw": _split_rate(raw), "narrowed": _split_rate(narrowed)}


def hardness_report(match_flags: Sequence[bool],
                    hardness_labels: Sequence[Optional[str]]) -> dict[str, dict]:
    if len(match_flags) != len(hardness_labels):
        raise ValueError("flags and hardness labels differ in length")
    table: dict[str, dict] = {}
    for level in tuple(HARDNESS_LEVELS) + ("Unlabeled",):
        flags = [m for m, h in zip(match_flags, hardness_labels)
                 if (h if h in HARDNESS_LEVELS else "Unlabeled") == level]
        if not flags and level == "Unlabeled":
            continue
        success = sum(flags)
        table[level] = {
            "success": success,
            "failure": len(flags) - success,
            "rate": (success / len(flags)) if flags else 0.0,
        }
    return table


# ------------------------------------------------------------------ repair

def _fix_unequal_spacing(text: str) -> str:
    # a space goes before "!=" when it clings to the previous word; quoted
    # literals and mid-word occurrences are left alone
    out: list[str] = []
    quote = None
    for i, ch in enumerate(text):
        if quote:
            out.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
            out.append(ch)
            continue
        if (ch == "!" and text[i + 1:i + 2] == "="
                and out and not out[-1].isspace()
                and (i + 2 >= len(text) or text[i + 2].isspace() or text[i + 2] in "\"'")):
            out.append(" ")
        out.append(ch)
    return "".join(out)


def _fix_like_patterns(text: str) -> str:
    # the chunk after an unquoted "like" is a pattern: a leading wildcard
    # without its closing twin gains one, inside the quotes when present
    chunks: list[tuple[int, int, str, bool]] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        if text[i] in "\"'":
            end = text.find(text[i], i + 1)
            end = n - 1 if end < 0 else end
            chunks.append((i, end + 1, text[i:end + 1], True))
            i = end + 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        chunks.append((i, j, text[i:j], False))
        i = j
    edits: list[tuple[int, int, str]] = []
    for prev, cur in zip(chunks, chunks[1:]):
        if prev[3] or prev[2] != "like":
            continue
        start, end, tok, quoted = cur
        if quoted and len(tok) >= 2 and tok[-1] == tok[0]:
            q, inner = tok[0], tok[1:-1]
        else:
            q, inner = "", tok
        if inner.startswith("%") and not inner.endswith("%"):
            edits.append((start, end, q + inner + "%" + q))
    for start, end, replacement in reversed(edits):
        text = text[:start] + replacement + text[end:]
    return text


def correct_systematic_errors(text: str) -> str:
    """Repair two recurring surface errors in predicted queries.

    Unbalanced leading wildcards in like patterns gain the trailing "%", and
    "!=" stuck to the preceding word gets a space. Everything else, including
    quoted literal content, is untouched, and the repair is idempotent.
    """
    return _fix_like_patterns(_fix_unequal_spacing(text))


# ------------------------------------------------------------------- report

@dataclass
class EvalReport:
    n_items: int
    token_accuracy: dict[str, float]
    guided_exact_match: dict[str, float]
    template: TemplateBreakdown
    chart_type_accuracy: dict[str, dict[str, float]]
    hardness: dict[str, dict]
    correction_delta: dict[str, Union[int, float]]
    predictions: list[GuidedPrediction] = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "token_accuracy": self.token_accuracy,
            "guided_exact_match": self.guided_exact_match,
            "template": self.template.to_dict(),
            "chart_type_accuracy": self.chart_type_accuracy,
            "hardness": self.hardness,
            "correction_delta": self.correction_delta,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def text_tables(self) -> str:
        sections = []
        rows = [[name, f"{self.token_accuracy[key]:.4f}",
                 f"{self.guided_exact_match[key]:.4f}"]
                for name, key in (("overall", "overall"),
                                  ("query only", "query_only"),
                                  ("query + chart", "query_plus_chart"))]
        sections.append(_table("accuracy", ["items", "token acc", "exact match"], rows))

        t = self.template
        rows = [[c, str(t.class_correct[c]), str(t.class_total[c]),
                 f"{t.class_accuracy[c]:.4f}"] for c in WORD_CLASSES]
        sections.append(_table("word class accuracy",
                               ["class", "correct", "total", "accuracy"], rows))

        rows = [[k, f"{v['mean']:.2f}", str(v["min"]), str(v["max"])]
                for k, v in t.class_counts.items()]
        sections.append(_table("label word counts per item",
                               ["group", "mean", "min", "max"], rows))

        rows = [[c, f"{v['mean']:.2f}", str(v["min"]), str(v["max"])]
                for c, v in t.incorrect_counts.items()]
        rows.append(["excluded items", str(t.excluded_items), "", ""])
        sections.append(_table("incorrect predictions per item",
                               ["class", "mean", "min", "max"], rows))

        rows = [[mode, f"{r['overall']:.4f}", f"{r['query_only']:.4f}",
                 f"{r['query_plus_chart']:.4f}"]
                for mode, r in self.chart_type_accuracy.items()]
        sections.append(_table("chart type accuracy",
                               ["mode", "overall", "query only", "query + chart"], rows))

        rows = [[level, str(row["success"]), str(row["failure"]), f"{row['rate']:.4f}"]
                for level, row in self.hardness.items()]
        sections.append(_table("exact match by hardness",
                               ["level", "success", "failure", "rate"], rows))

        d = self.correction_delta
        rows = [["before", str(d["matches_before"]), f"{d['rate_before']:.4f}"],
                ["after", str(d["matches_after"]), f"{d['rate_after']:.4f}"]]
        sections.append(_table("systematic error correction",
                               ["stage", "matches", "rate"], rows))
        return "\n\n".join(sections)

    def write_item_dump(self, path: Union[str, Path]) -> None:
        """One JSON record per item for offline error analysis."""
        with open(path, "w", encoding="utf-8") as fh:
            for p in self.predictions:
                fh.write(json.dumps({
                    "source": p.item.source.text,
                    "label": p.item.label_text,
                    "prediction": p.result.text,
                    "match": p.match,
                    "corrected_match": p.corrected_match,
                    "truncated": p.result.truncated,
                    "chart_given": p.chart_given,
                    "hardness": p.item.pair.hardness,
                    "classes": [word_class(t) for t in p.item.label_tokens],
                }) + "\n")


def _table(title: str, headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [title, fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def evaluate(net: Seq2Seq, vocab: Vocabulary, items: Sequence[AugmentedItem],
             external: Optional[ExternalProvider] = None,
             max_len: int = 64) -> EvalReport:
    """Score a model on items and assemble every breakdown in one report."""
    forced = teacher_forced(net, vocab, items, external)
    guided = guided_predictions(net, vocab, items, external, max_len)

    preds = [r.predicted for r in forced]
    golds = [r.gold for r in forced]
    flags = [it.chart_given for it in items]
    before = sum(p.match for p in guided)
    after = sum(p.corrected_match for p in guided)
    return EvalReport(
        n_items=len(items),
        token_accuracy=token_accuracy(forced),
        guided_exact_match=guided_accuracy(guided),
        template=template_breakdown(preds, golds),
        chart_type_accuracy=chart_type_accuracy(preds, golds, flags),
        hardness=hardness_report([p.match for p in guided],
                                 [it.pair.hardness for it in items]),
        correction_delta={
            "matches_before": before,
            "matches_after": after,
            "rate_before": before / len(items),
            "rate_after": after / len(items),
        },
        predictions=guided,
    )
