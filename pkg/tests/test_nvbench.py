import json
import os
from pathlib import Path

import pytest

from nl2vega.dataset import load_corpus
from nl2vega.errors import CorpusError
from nl2vega.nvbench import import_nvbench

FIXTURE = Path(__file__).parent / "fixtures" / "nvbench_mini"


@pytest.fixture(scope="module")
def imported(tmp_path_factory):
    out = tmp_path_factory.mktemp("imported")
    report = import_nvbench(FIXTURE, out)
    return report, out


class TestFixtureImport:
    def test_split_counts(self, imported):
        report, _ = imported
        # train.csv: 10 rows = 3 pairs x 2 variants + 3 malformed + 1 duplicate
        train = report.splits["train"]
        assert train.rows == 10
        assert train.pairs == 3
        assert train.vis_queries == 2
        assert train.encoded_items == 6
        dev = report.splits["dev"]
        assert (dev.rows, dev.pairs, dev.vis_queries, dev.encoded_items) == (2, 1, 1, 2)
        test = report.splits["test"]
        assert (test.rows, test.pairs, test.vis_queries, test.encoded_items) == (4, 2, 2, 4)

    def test_reject_reasons_are_counted(self, imported):
        report, _ = imported
        reasons = report.splits["train"].rejects
        assert reasons["multi-table pair"] == 1
        assert reasons["source lacks <N> ... </N>"] == 1
        assert sum(c for r, c in reasons.items() if r.startswith("label does not parse")) == 1

    def test_output_loads_as_corpus(self, imported):
        _, out = imported
        result = load_corpus(out / "train.jsonl")
        assert len(result.pairs) == 3
        assert result.rejects == []
        assert {p.split for p in result.pairs} == {"train"}

    def test_column_kinds_inferred_from_usage(self, imported):
        _, out = imported
        record = json.loads((out / "train.jsonl").read_text().splitlines()[0])
        kinds = {c["name"]: c["kind"] for c in record["schema"]["columns"]}
        assert kinds == {"carrier": "categorical", "price": "numeric", "flight_date": "temporal"}

    def test_nl_and_values_extracted(self, imported):
        _, out = imported
        records = [json.loads(l) for l in (out / "train.jsonl").read_text().splitlines()]
        nls = {r["nl"] for r in records}
        assert "show flights by carrier" in nls
        assert all(r["values"] == ["delta", "united"] for r in records)
        assert all(r["table"] == "flights" for r in records)

    def test_report_and_rejects_files_written(self, imported):
        report, out = imported
        on_disk = json.loads((out / "report.json").read_text())
        assert on_disk == report.to_dict()
        lines = [json.loads(l) for l in (out / "rejects.jsonl").read_text().splitlines()]
        assert sum(r["count"] for r in lines) == 3
        assert report.summary_line() == "vis queries 2/1/2, encoded items 6/2/4 (train/dev/test)"

    def test_quoted_filter_value_stays_categorical(self, imported):
        _, out = imported
        record = json.loads((out / "test.jsonl").read_text().splitlines()[0])
        kinds = {c["name"]: c["kind"] for c in record["schema"]["columns"]}
        assert kinds["carrier"] == "categorical"
        assert 'filter carrier = "delta"' in record["label"]


class TestBadInput:
    def test_missing_directory(self, tmp_path):
        with pytest.raises(CorpusError, match="not a directory"):
            import_nvbench(tmp_path / "nope", tmp_path / "out")

    def test_missing_split_file(self, tmp_path):
        (tmp_path / "train.csv").write_text("source,labels\n")
        with pytest.raises(CorpusError, match="missing split file"):
            import_nvbench(tmp_path, tmp_path / "out")

    def test_wrong_columns(self, tmp_path):
        for name in ("train", "dev", "test"):
            (tmp_path / f"{name}.csv").write_text("a,b\n1,2\n")
        with pytest.raises(CorpusError, match="source/labels"):
            import_nvbench(tmp_path, tmp_path / "out")


@pytest.mark.skipif(
    "NL2VEGA_NVBENCH" not in os.environ,
    reason="set NL2VEGA_NVBENCH to the benchmark directory to check published split sizes",
)
class TestPublishedDataset:
    def test_published_split_sizes(self, tmp_path):
        report = import_nvbench(os.environ["NL2VEGA_NVBENCH"], tmp_path / "out")
        queries = [report.splits[s].vis_queries for s in ("train", "dev", "test")]
        items = [report.splits[s].encoded_items for s in ("train", "dev", "test")]
        assert queries == [2988, 186, 625]
        assert items == [25238, 1430, 4920]
