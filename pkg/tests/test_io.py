import json

import numpy as np
import pytest

from postcal import io
from postcal.calibration import BinSummary, calib_error_ci
from postcal.chain import forward_backward
from postcal.errors import ValidationError


class TestPredictionPairs:
    def test_json_lines(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        path.write_text('{"q": 0.25, "y": 1}\n{"q": 0.75, "y": 0}\n')
        pairs = io.read_prediction_pairs(path)
        np.testing.assert_allclose(pairs, [[0.25, 1.0], [0.75, 0.0]])

    def test_headerless_csv(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_text("0.25,1\n0.75,0\n")
        pairs = io.read_prediction_pairs(path)
        np.testing.assert_allclose(pairs, [[0.25, 1.0], [0.75, 0.0]])

    def test_out_of_range_q_names_the_line(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        path.write_text('{"q": 0.5, "y": 1}\n{"q": 1.5, "y": 0}\n')
        with pytest.raises(ValidationError, match="line 2"):
            io.read_prediction_pairs(path)

    def test_bad_label_and_bad_json(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        path.write_text('{"q": 0.5, "y": 2}\n')
        with pytest.raises(ValidationError, match="line 1"):
            io.read_prediction_pairs(path)
        path.write_text('{"q": 0.5, "y": 1}\nnot json {\n')
        with pytest.raises(ValidationError, match="line 2"):
            io.read_prediction_pairs(path)

    def test_csv_column_count(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_text("0.5,1,9\n")
        with pytest.raises(ValidationError, match="two comma-separated"):
            io.read_prediction_pairs(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_text("\n")
        with pytest.raises(ValidationError, match="no prediction pairs"):
            io.read_prediction_pairs(path)


class TestCalibrationReport:
    def test_schema_and_values(self, tmp_path):
        summaries = [BinSummary(0.4, 0.5, 50), BinSummary(0.8, 0.7, 50)]
        report = calib_error_ci(summaries, 100, num_samples=100, seed=3)
        path = tmp_path / "report.json"
        io.write_calibration_report(path, report, summaries, n=100, bin_size=50)
        payload = json.loads(path.read_text())
        assert set(payload) == {
            "calib_err",
            "calib_err_avg",
            "stderr",
            "ci_lo",
            "ci_hi",
            "n",
            "bin_size",
            "num_samples",
            "seed",
            "bins",
        }
        assert payload["n"] == 100 and payload["seed"] == 3
        assert len(payload["bins"]) == 2
        assert set(payload["bins"][0]) == {"q_hat", "p_hat", "size", "stderr"}

    def test_low_confidence_flag_for_undersized_input(self, tmp_path):
        summaries = [BinSummary(0.4, 0.5, 10)]
        report = calib_error_ci(summaries, 10, num_samples=50, seed=0)
        path = tmp_path / "report.json"
        io.write_calibration_report(path, report, summaries, n=10, bin_size=5000)
        assert json.loads(path.read_text())["low_confidence"] is True


class TestTaggedCorpus:
    def test_round_trip_with_escaped_slash(self, tmp_path):
        sentences = [[("either/or", "CC"), ("cat", "NN")], [("a", "DT")]]
        path = tmp_path / "corpus.txt"
        io.write_tagged_corpus(path, sentences)
        text = path.read_text()
        assert "either\\/or/CC" in text
        assert io.read_tagged_corpus(path) == sentences

    def test_malformed_token_names_line(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("a/DT\nnotoken\n")
        with pytest.raises(ValidationError, match="line 2"):
            io.read_tagged_corpus(path)


class TestLatticeFile:
    def test_import_and_inference(self, tmp_path):
        payload = {
            "tags": ["A", "B"],
            "transitions": [[0.1, -0.3], [0.0, 0.2]],
            "start": [0.0, -0.1],
            "stop": [0.2, 0.0],
            "sentences": [
                {"emissions": [[0.5, -0.5], [0.0, 0.0]], "gold": ["A", "B"]},
                {"emissions": [[1.0, 0.0]]},
            ],
        }
        path = tmp_path / "lattice.json"
        path.write_text(json.dumps(payload))
        tags, lattices, golds = io.read_lattice_file(path)
        assert tags == ("A", "B")
        assert golds == [["A", "B"], None]
        m = forward_backward(lattices[0])
        np.testing.assert_allclose(m.single.sum(axis=1), 1.0, atol=1e-9)

    def test_gold_length_mismatch(self, tmp_path):
        payload = {
            "tags": ["A"],
            "transitions": [[0.0]],
            "sentences": [{"emissions": [[0.0], [0.0]], "gold": ["A"]}],
        }
        path = tmp_path / "lattice.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ValidationError, match="sentence 1"):
            io.read_lattice_file(path)

    def test_missing_keys(self, tmp_path):
        path = tmp_path / "lattice.json"
        path.write_text(json.dumps({"tags": ["A"]}))
        with pytest.raises(ValidationError):
            io.read_lattice_file(path)


class TestCorefDocuments:
    def test_read_with_gold(self, tmp_path):
        record = {
            "doc_id": "d1",
            "num_mentions": 3,
            "score_rows": [[0.0], [0.1, 0.2], [0.0, -0.5, 1.0]],
            "gold_entities": [[1, 3], [2]],
        }
        path = tmp_path / "docs.jsonl"
        path.write_text(json.dumps(record) + "\n")
        ((doc, gold),) = io.read_coref_documents(path)
        assert doc.doc_id == "d1" and doc.num_mentions == 3
        assert gold.entities == ((1, 3), (2,))

    def test_mention_count_mismatch(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text(json.dumps({"num_mentions": 2, "score_rows": [[0.0]]}) + "\n")
        with pytest.raises(ValidationError, match="line 1"):
            io.read_coref_documents(path)

    def test_ragged_row_shape_error(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text(json.dumps({"num_mentions": 2, "score_rows": [[0.0], [0.1]]}) + "\n")
        with pytest.raises(ValidationError, match="line 1"):
            io.read_coref_documents(path)

    def test_gold_must_cover_mentions(self, tmp_path):
        record = {"num_mentions": 2, "score_rows": [[0.0], [0.0, 0.0]], "gold_entities": [[1]]}
        path = tmp_path / "docs.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(ValidationError, match="line 1"):
            io.read_coref_documents(path)


class TestEventCorpus:
    def test_read(self, tmp_path):
        record = {
            "doc_id": "a",
            "date": "1990-10-05",
            "mentions": [{"countries": ["IRQ"], "attack_agent": False}, {"attack_agent": True}],
            "score_rows": [[0.0], [0.0, 0.3]],
        }
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(record) + "\n")
        (doc,) = io.read_event_corpus(path)
        assert doc.mentions[0].countries == frozenset({"IRQ"})
        assert doc.mentions[1].attack_agent is True

    def test_bad_date(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps({"date": "Oct 5", "mentions": [], "score_rows": []}) + "\n")
        with pytest.raises(ValidationError, match="line 1"):
            io.read_event_corpus(path)

    def test_mention_score_mismatch(self, tmp_path):
        record = {"date": "1990-01-01", "mentions": [{"countries": []}], "score_rows": []}
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(ValidationError, match="line 1"):
            io.read_event_corpus(path)


def test_curve_csv_header(tmp_path):
    from postcal.calibration import CurvePoint

    path = tmp_path / "bins.csv"
    io.write_curve_csv(path, [CurvePoint(0.5, 0.4, 10, 0.1549)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "q_hat,p_hat,size,stderr"
    assert lines[1].startswith("0.5,0.4,10,")
