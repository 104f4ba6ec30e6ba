"""Readers and writers for the file formats the command line speaks.

Validation failures carry 1-based line numbers so malformed records can be
located.  Writers format numbers with ``repr`` so identical computations
produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calibration import BinSummary, CalibReport, CurvePoint, ScoreDecomposition, reliability_curve
from .chain import TagLattice
from .classify import BinaryDocument
from .coref import Clustering, CorefDocument, PairwiseMarginals
from .errors import ValidationError
from .events import AnnotatedDocument, EventBand, EventQueryResult, FlaggedDocument, Mention
from .tagging import LabelCalibration, format_label


def _json_lines(path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise ValidationError(f"line {lineno}: expected a JSON object")
            yield lineno, record


def read_prediction_pairs(path) -> np.ndarray:
    """Load (q, y) pairs from JSON lines or two-column headerless CSV."""
    text = Path(path).read_text(encoding="utf-8")
    rows: list[tuple[float, float]] = []
    jsonl = text.lstrip()[:1] == "{"
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if jsonl:
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or "q" not in record or "y" not in record:
                raise ValidationError(f"line {lineno}: expected an object with fields 'q' and 'y'")
            q_raw, y_raw = record["q"], record["y"]
        else:
            parts = line.split(",")
            if len(parts) != 2:
                raise ValidationError(f"line {lineno}: expected two comma-separated columns")
            q_raw, y_raw = parts
        try:
            q = float(q_raw)
            y = float(y_raw)
        except (TypeError, ValueError):
            raise ValidationError(f"line {lineno}: q and y must be numeric") from None
        if not 0.0 <= q <= 1.0:
            raise ValidationError(f"line {lineno}: q={q} is outside [0, 1]")
        if y not in (0.0, 1.0):
            raise ValidationError(f"line {lineno}: y={y_raw} must be 0 or 1")
        rows.append((q, y))
    if not rows:
        raise ValidationError("input contains no prediction pairs")
    return np.array(rows)


def write_calibration_report(
    path,
    report: CalibReport,
    summaries: Sequence[BinSummary],
    n: int,
    bin_size: int,
) -> None:
    points = reliability_curve(summaries)
    payload: dict = {
        "calib_err": report.calib_err,
        "calib_err_avg": report.calib_err_avg,
        "stderr": report.stderr,
        "ci_lo": report.ci_lo,
        "ci_hi": report.ci_hi,
        "n": int(n),
        "bin_size": int(bin_size),
        "num_samples": report.num_samples,
        "seed": report.seed,
        "bins": [
            {"q_hat": p.q_hat, "p_hat": p.p_hat, "size": p.size, "stderr": p.stderr}
            for p in points
        ],
    }
    if n < bin_size:
        payload["low_confidence"] = True
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_curve_csv(path, points: Sequence[CurvePoint]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q_hat", "p_hat", "size", "stderr"])
        for p in points:
            writer.writerow([repr(p.q_hat), repr(p.p_hat), p.size, repr(p.stderr)])


def write_decomposition(path, decomposition: ScoreDecomposition) -> None:
    payload = {
        "brier": decomposition.brier,
        "cross_entropy": decomposition.cross_entropy,
        "calib_mse": decomposition.calib_mse,
        "refinement": decomposition.refinement,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _split_token(token: str, lineno: int) -> tuple[str, str]:
    cut = -1
    for i, ch in enumerate(token):
        if ch == "/" and (i == 0 or token[i - 1] != "\\"):
            cut = i
    if cut <= 0 or cut == len(token) - 1:
        raise ValidationError(f"line {lineno}: token {token!r} is not of the form word/TAG")
    return token[:cut].replace("\\/", "/"), token[cut + 1 :]


def read_tagged_corpus(path) -> list[list[tuple[str, str]]]:
    """One sentence per line, tokens as word/TAG; '\\/' escapes a literal slash."""
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            sentences.append([_split_token(tok, lineno) for tok in line.split()])
    if not sentences:
        raise ValidationError("tagged corpus contains no sentences")
    return sentences


def write_tagged_corpus(path, sentences: Sequence[Sequence[tuple[str, str]]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(" ".join(f"{w.replace('/', chr(92) + '/')}/{t}" for w, t in sent))
            fh.write("\n")


def read_binary_documents(path) -> list[BinaryDocument]:
    """JSON lines with 'features' (list of strings) and 'label' (0/1)."""
    docs = []
    for lineno, record in _json_lines(path):
        features = record.get("features")
        label = record.get("label")
        if not isinstance(features, list) or not all(isinstance(f, str) for f in features):
            raise ValidationError(f"line {lineno}: 'features' must be a list of strings")
        if label not in (0, 1):
            raise ValidationError(f"line {lineno}: 'label' must be 0 or 1")
        docs.append(BinaryDocument(features=frozenset(features), label=int(label)))
    if not docs:
        raise ValidationError("document file contains no records")
    return docs


def read_lattice_file(path) -> tuple[tuple[str, ...], list[TagLattice], list[list[str] | None]]:
    """Externally produced chain potentials.

    JSON object with 'tags', 'transitions' (K x K), optional 'start' and
    'stop' vectors (default zero), and 'sentences', each carrying
    'emissions' (L x K) and optionally 'gold' tags.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid lattice JSON: {exc.msg}") from exc
    try:
        tags = tuple(payload["tags"])
        transitions = np.asarray(payload["transitions"], dtype=float)
        sentences = payload["sentences"]
    except (KeyError, TypeError) as exc:
        raise ValidationError("lattice file needs 'tags', 'transitions', and 'sentences'") from exc
    k = len(tags)
    start = np.asarray(payload.get("start", np.zeros(k)), dtype=float)
    stop = np.asarray(payload.get("stop", np.zeros(k)), dtype=float)
    lattices = []
    golds: list[list[str] | None] = []
    for idx, sent in enumerate(sentences, start=1):
        emissions = np.asarray(sent.get("emissions"), dtype=float)
        lattices.append(
            TagLattice(tags=tags, emissions=emissions, transitions=transitions, start=start, stop=stop)
        )
        gold = sent.get("gold")
        if gold is not None:
            gold = [str(t) for t in gold]
            if len(gold) != emissions.shape[0]:
                raise ValidationError(f"sentence {idx}: gold tags do not match the lattice length")
        golds.append(gold)
    if not lattices:
        raise ValidationError("lattice file contains no sentences")
    return tags, lattices, golds


def write_label_table_csv(path, rows: Sequence[LabelCalibration], average: float) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["label", "gold_count", "num_pairs", "calib_err", "calib_err_avg", "stderr", "ci_lo", "ci_hi"]
        )
        for row in rows:
            r = row.report
            writer.writerow(
                [
                    format_label(row.label),
                    row.gold_count,
                    row.num_pairs,
                    repr(r.calib_err),
                    repr(r.calib_err_avg),
                    repr(r.stderr),
                    repr(r.ci_lo),
                    repr(r.ci_hi),
                ]
            )
        # the closing row is the unweighted mean of the per-label point estimates
        writer.writerow(["(average)", "", "", repr(average), "", "", "", ""])


def read_coref_documents(path) -> list[tuple[CorefDocument, Clustering | None]]:
    """JSON lines with 'num_mentions', 'score_rows', optional 'gold_entities'."""
    docs = []
    for lineno, record in _json_lines(path):
        rows = record.get("score_rows")
        if not isinstance(rows, list):
            raise ValidationError(f"line {lineno}: 'score_rows' must be a list of score lists")
        declared = record.get("num_mentions")
        if declared is not None and declared != len(rows):
            raise ValidationError(
                f"line {lineno}: num_mentions={declared} but {len(rows)} score rows"
            )
        try:
            doc = CorefDocument(score_rows=rows, doc_id=str(record.get("doc_id", f"doc-{lineno}")))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
        gold = record.get("gold_entities")
        clustering = None
        if gold is not None:
            try:
                clustering = Clustering.from_sets([[int(m) for m in e] for e in gold])
            except (TypeError, ValueError, ValidationError) as exc:
                raise ValidationError(f"line {lineno}: bad gold_entities ({exc})") from exc
            if clustering.num_mentions != doc.num_mentions:
                raise ValidationError(
                    f"line {lineno}: gold entities cover {clustering.num_mentions} mentions, "
                    f"document has {doc.num_mentions}"
                )
        docs.append((doc, clustering))
    if not docs:
        raise ValidationError("coreference file contains no documents")
    return docs


def write_pairwise_marginals(path, items: Iterable[tuple[str, PairwiseMarginals]]) -> None:
    """One record per unordered mention pair per document: {doc_id, i, j, q}."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, pm in items:
            for i, j, q in pm.pairs():
                fh.write(json.dumps({"doc_id": doc_id, "i": i, "j": j, "q": q}))
                fh.write("\n")


def write_clustering_samples(path, items: Iterable[tuple[str, int, Clustering]]) -> None:
    """One record per sampled clustering: {doc_id, sample, entities}."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, sample, clustering in items:
            record = {
                "doc_id": doc_id,
                "sample": sample,
                "entities": [list(entity) for entity in clustering.entities],
            }
            fh.write(json.dumps(record))
            fh.write("\n")


def read_event_corpus(path) -> list[AnnotatedDocument]:
    """JSON lines: {doc_id, date, mentions: [{countries, attack_agent}], score_rows}."""
    corpus = []
    for lineno, record in _json_lines(path):
        try:
            date = dt.date.fromisoformat(str(record.get("date")))
        except ValueError:
            raise ValidationError(f"line {lineno}: 'date' must be YYYY-MM-DD") from None
        raw_mentions = record.get("mentions")
        if not isinstance(raw_mentions, list):
            raise ValidationError(f"line {lineno}: 'mentions' must be a list")
        mentions = []
        for m in raw_mentions:
            if not isinstance(m, dict):
                raise ValidationError(f"line {lineno}: each mention must be an object")
            countries = m.get("countries", [])
            if not isinstance(countries, list) or not all(isinstance(c, str) for c in countries):
                raise ValidationError(f"line {lineno}: 'countries' must be a list of strings")
            mentions.append(
                Mention(countries=frozenset(countries), attack_agent=bool(m.get("attack_agent", False)))
            )
        try:
            scores = CorefDocument(
                score_rows=record.get("score_rows", []),
                doc_id=str(record.get("doc_id", f"doc-{lineno}")),
            )
            corpus.append(
                AnnotatedDocument(
                    doc_id=str(record.get("doc_id", f"doc-{lineno}")),
                    date=date,
                    mentions=tuple(mentions),
                    scores=scores,
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
    if not corpus:
        raise ValidationError("event corpus contains no documents")
    return corpus


def write_event_series_csv(
    path, rows: Iterable[tuple[EventQueryResult, EventBand]]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["country", "period_start", "mean", "sd", "ci_lo", "ci_hi", "mc_stderr", "num_samples"]
        )
        for result, band in rows:
            writer.writerow(
                [
                    result.country,
                    result.period.isoformat(),
                    repr(band.mean),
                    repr(band.sd),
                    repr(band.ci_lo),
                    repr(band.ci_hi),
                    repr(band.mc_stderr),
                    len(result.samples),
                ]
            )


def write_flagged_documents(path, flags: Iterable[FlaggedDocument]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for flag in flags:
            fh.write(
                json.dumps(
                    {
                        "doc_id": flag.doc_id,
                        "country": flag.country,
                        "indicator_mean": flag.indicator_mean,
                    }
                )
            )
            fh.write("\n")
