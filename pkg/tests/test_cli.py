import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from postcal.cli import main

SVG_NS = "{http://www.w3.org/2000/svg}"


def write_pairs(path, n=800, seed=0):
    rng = np.random.default_rng(seed)
    with open(path, "w") as fh:
        for _ in range(n):
            q = float(rng.beta(2, 2))
            y = int(rng.random() < q)
            fh.write(json.dumps({"q": q, "y": y}) + "\n")


def write_coref_docs(path, num_docs=4, seed=1, gold=False):
    rng = np.random.default_rng(seed)
    with open(path, "w") as fh:
        for d in range(num_docs):
            n = int(rng.integers(2, 5))
            rows = [list(rng.normal(0, 1.5, size=i + 1)) for i in range(n)]
            record = {"doc_id": f"doc-{d}", "num_mentions": n, "score_rows": rows}
            if gold:
                entities, taken = [], 0
                while taken < n:
                    size = int(rng.integers(1, n - taken + 1))
                    entities.append(list(range(taken + 1, taken + size + 1)))
                    taken += size
                record["gold_entities"] = entities
            fh.write(json.dumps(record) + "\n")


def write_event_corpus(path, num_docs=8, seed=2):
    rng = np.random.default_rng(seed)
    with open(path, "w") as fh:
        for d in range(num_docs):
            n = int(rng.integers(2, 4))
            mentions = [
                {
                    "countries": ["IRQ"] if rng.random() < 0.6 else [],
                    "attack_agent": bool(rng.random() < 0.6),
                }
                for _ in range(n)
            ]
            record = {
                "doc_id": f"doc-{d}",
                "date": f"1990-{1 + int(rng.integers(0, 12)):02d}-10",
                "mentions": mentions,
                "score_rows": [list(rng.normal(0, 1, size=i + 1)) for i in range(n)],
            }
            fh.write(json.dumps(record) + "\n")


def write_tagged(path, sentences):
    with open(path, "w") as fh:
        for sent in sentences:
            fh.write(" ".join(f"{w}/{t}" for w, t in sent) + "\n")


def svg_marker_count(path):
    root = ET.parse(path).getroot()
    for group in root.iter(f"{SVG_NS}g"):
        if group.get("id") == "bin-points":
            return len(group.findall(f".//{SVG_NS}use"))
    raise AssertionError("bin-points group missing from SVG")


class TestCalibCommands:
    def test_eval_writes_report_bins_and_svg(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.jsonl"
        write_pairs(pairs)
        out = tmp_path / "report.json"
        svg = tmp_path / "curve.svg"
        code = main(
            [
                "calib", "eval",
                "--input", str(pairs),
                "--bin-size", "200",
                "--samples", "500",
                "--seed", "42",
                "--out", str(out),
                "--svg", str(svg),
            ]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["bin_size"] == 200 and payload["n"] == 800
        bins_csv = tmp_path / "report_bins.csv"
        assert bins_csv.exists()
        assert svg_marker_count(svg) == len(payload["bins"])

    def test_eval_rejects_malformed_line_with_exit_2(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.jsonl"
        pairs.write_text('{"q": 0.5, "y": 1}\n{"q": 1.5, "y": 0}\n')
        code = main(["calib", "eval", "--input", str(pairs), "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_input_exits_1(self, tmp_path, capsys):
        code = main(
            ["calib", "eval", "--input", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "r.json")]
        )
        assert code == 1

    def test_bad_sample_count_exits_3(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.jsonl"
        write_pairs(pairs, n=50)
        code = main(
            [
                "calib", "eval",
                "--input", str(pairs),
                "--bin-size", "10",
                "--samples", "1",
                "--out", str(tmp_path / "r.json"),
            ]
        )
        assert code == 3

    def test_curve_fixed_width(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.jsonl"
        write_pairs(pairs)
        out = tmp_path / "curve.csv"
        code = main(
            ["calib", "curve", "--input", str(pairs), "--fixed-width", "0.1", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "q_hat,p_hat,size,stderr"
        assert len(lines) > 2

    def test_decompose(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.csv"
        pairs.write_text("0.5,1\n0.5,0\n")
        out = tmp_path / "dec.json"
        code = main(["calib", "decompose", "--input", str(pairs), "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["brier"] == pytest.approx(0.25)
        assert payload["calib_mse"] == pytest.approx(0.0)
        assert payload["refinement"] == pytest.approx(0.25)


class TestTagExperiment:
    SENTENCES = [
        [("the", "D"), ("cat", "N"), ("sat", "V")],
        [("the", "D"), ("dog", "N"), ("ran", "V")],
        [("a", "D"), ("cat", "N"), ("sat", "V")],
        [("the", "D"), ("cat", "N")],
    ]

    def test_hmm_route_writes_table(self, tmp_path, capsys):
        train = tmp_path / "train.txt"
        test = tmp_path / "test.txt"
        write_tagged(train, self.SENTENCES)
        write_tagged(test, self.SENTENCES[:2])
        out = tmp_path / "table.csv"
        svg = tmp_path / "bars.svg"
        code = main(
            [
                "tag", "experiment",
                "--train", str(train),
                "--test", str(test),
                "--top-k", "3",
                "--bin-size", "2",
                "--samples", "100",
                "--out", str(out),
                "--svg", str(svg),
            ]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("label,gold_count,num_pairs")
        assert lines[-1].startswith("(average)")
        assert len(lines) == 1 + 3 + 1
        assert svg.exists()

    def test_pair_label_route(self, tmp_path, capsys):
        train = tmp_path / "train.txt"
        test = tmp_path / "test.txt"
        write_tagged(train, self.SENTENCES)
        write_tagged(test, self.SENTENCES)
        out = tmp_path / "table.csv"
        code = main(
            [
                "tag", "experiment",
                "--train", str(train),
                "--test", str(test),
                "--pair-labels",
                "--top-k", "2",
                "--bin-size", "2",
                "--samples", "100",
                "--out", str(out),
            ]
        )
        assert code == 0
        body = out.read_text()
        assert "D+N" in body

    def test_lattice_route_requires_gold(self, tmp_path, capsys):
        payload = {
            "tags": ["A", "B"],
            "transitions": [[0.0, 0.0], [0.0, 0.0]],
            "sentences": [{"emissions": [[0.3, -0.3]]}],
        }
        lattice = tmp_path / "lat.json"
        lattice.write_text(json.dumps(payload))
        code = main(
            ["tag", "experiment", "--lattice", str(lattice), "--out", str(tmp_path / "t.csv")]
        )
        assert code == 2

    def test_requires_some_input(self, tmp_path, capsys):
        code = main(["tag", "experiment", "--out", str(tmp_path / "t.csv")])
        assert code == 3


class TestCorefCommands:
    def test_sample_emits_one_record_per_pair(self, tmp_path, capsys):
        docs = tmp_path / "docs.jsonl"
        write_coref_docs(docs, num_docs=4)
        out = tmp_path / "pairs.jsonl"
        clusterings = tmp_path / "clusters.jsonl"
        code = main(
            [
                "coref", "sample",
                "--scores", str(docs),
                "--num-samples", "50",
                "--seed", "7",
                "--pairwise", str(out),
                "--clusterings", str(clusterings),
            ]
        )
        assert code == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        from postcal.io import read_coref_documents

        expected = sum(
            doc.num_mentions * (doc.num_mentions - 1) // 2
            for doc, _ in read_coref_documents(docs)
        )
        assert len(records) == expected
        assert all(r["i"] < r["j"] and 0.0 <= r["q"] <= 1.0 for r in records)
        cluster_records = [json.loads(line) for line in clusterings.read_text().splitlines()]
        assert len(cluster_records) == 4 * 50

    def test_sample_is_byte_deterministic(self, tmp_path, capsys):
        docs = tmp_path / "docs.jsonl"
        write_coref_docs(docs, num_docs=3)
        out1 = tmp_path / "a.jsonl"
        out2 = tmp_path / "b.jsonl"
        for out in (out1, out2):
            assert (
                main(
                    [
                        "coref", "sample",
                        "--scores", str(docs),
                        "--num-samples", "40",
                        "--seed", "11",
                        "--pairwise", str(out),
                    ]
                )
                == 0
            )
        assert out1.read_bytes() == out2.read_bytes()

    def test_calib_requires_gold(self, tmp_path, capsys):
        docs = tmp_path / "docs.jsonl"
        write_coref_docs(docs, num_docs=2, gold=False)
        code = main(
            [
                "coref", "calib",
                "--scores", str(docs),
                "--num-samples", "30",
                "--out", str(tmp_path / "r.json"),
            ]
        )
        assert code == 2

    def test_calib_with_gold(self, tmp_path, capsys):
        docs = tmp_path / "docs.jsonl"
        write_coref_docs(docs, num_docs=6, gold=True)
        out = tmp_path / "r.json"
        code = main(
            [
                "coref", "calib",
                "--scores", str(docs),
                "--num-samples", "60",
                "--ci-samples", "200",
                "--bin-size", "5",
                "--out", str(out),
            ]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert 0.0 <= payload["calib_err"] <= 1.0


class TestEventsCommand:
    def test_aggregate_rows_and_determinism(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        write_event_corpus(corpus)
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        flagged = tmp_path / "flags.jsonl"
        svg = tmp_path / "bands.svg"
        args = [
            "events", "aggregate",
            "--corpus", str(corpus),
            "--country", "IRQ",
            "--period", "quarter",
            "--samples", "50",
            "--seed", "7",
        ]
        assert main(args + ["--out", str(out1), "--flagged", str(flagged), "--svg", str(svg)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().strip().splitlines()
        assert lines[0] == "country,period_start,mean,sd,ci_lo,ci_hi,mc_stderr,num_samples"
        from postcal.events import period_start
        from postcal.io import read_event_corpus

        periods = {period_start(d.date, "quarter") for d in read_event_corpus(corpus)}
        assert len(lines) == 1 + len(periods)
        assert svg.exists()
        for line in flagged.read_text().splitlines():
            record = json.loads(line)
            assert 0.25 <= record["indicator_mean"] <= 0.75

    def test_multiple_countries(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        write_event_corpus(corpus)
        out = tmp_path / "multi.csv"
        code = main(
            [
                "events", "aggregate",
                "--corpus", str(corpus),
                "--country", "IRQ",
                "--country", "USA",
                "--samples", "30",
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        body = out.read_text()
        assert ("IRQ" in body) and ("USA" in body)
