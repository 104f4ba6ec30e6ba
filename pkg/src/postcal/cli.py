"""Command-line entry point.

Exit codes: 0 on success, 1 on I/O failure, 2 when input data fails
validation, 3 when a parameter is out of range.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io, plots
from .calibration import (
    DEFAULT_BIN_SIZE,
    DEFAULT_CI_SAMPLES,
    DEFAULT_SEED,
    calibration_analysis,
    decomposition_by_unique_q,
    fixed_width_binning,
    reliability_curve,
    sort_and_bin,
    bin_stats,
)
from .chain import forward_backward, train_hmm
from .coref import (
    DEFAULT_COREF_SAMPLES,
    Clustering,
    antecedent_distributions,
    coref_pairwise_calibration,
    pairwise_from_labels,
    PairwiseMarginals,
    sample_component_labels,
)
from .errors import NoDataError, ParameterError, ValidationError
from .events import (
    DEFAULT_EVENT_SAMPLES,
    document_indicator_matrix,
    event_count_series,
    flag_uncertain_documents,
    series_bands,
)
from .tagging import extract_tag_prediction_pairs, per_label_calibration

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_PARAMETER = 3


def _derived_path(out: str, suffix: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + suffix))


def cmd_calib_eval(args) -> int:
    pairs = io.read_prediction_pairs(args.input)
    report, summaries = calibration_analysis(
        pairs, bin_size=args.bin_size, num_samples=args.samples, seed=args.seed
    )
    io.write_calibration_report(args.out, report, summaries, n=len(pairs), bin_size=args.bin_size)
    points = reliability_curve(summaries)
    io.write_curve_csv(args.bins or _derived_path(args.out, "_bins.csv"), points)
    if args.svg:
        plots.reliability_plot(points, args.svg)
    print(
        f"calib_err={report.calib_err:.6f} "
        f"ci=[{report.ci_lo:.6f}, {report.ci_hi:.6f}] n={len(pairs)} bins={len(summaries)}"
    )
    return EXIT_OK


def cmd_calib_curve(args) -> int:
    pairs = io.read_prediction_pairs(args.input)
    if args.fixed_width is not None:
        summaries = fixed_width_binning(pairs, args.fixed_width)
    else:
        binning = sort_and_bin(pairs, args.bin_size)
        summaries = bin_stats(binning, pairs)
    points = reliability_curve(summaries)
    io.write_curve_csv(args.out, points)
    if args.svg:
        plots.reliability_plot(points, args.svg)
    print(f"bins={len(points)} n={len(pairs)}")
    return EXIT_OK


def cmd_calib_decompose(args) -> int:
    pairs = io.read_prediction_pairs(args.input)
    decomposition = decomposition_by_unique_q(pairs)
    io.write_decomposition(args.out, decomposition)
    print(
        f"brier={decomposition.brier:.6f} calib_mse={decomposition.calib_mse:.6f} "
        f"refinement={decomposition.refinement:.6f} cross_entropy={decomposition.cross_entropy:.6f}"
    )
    return EXIT_OK


def _tag_marginals(args):
    if args.lattice:
        tags, lattices, golds = io.read_lattice_file(args.lattice)
        if any(g is None for g in golds):
            raise ValidationError("every lattice sentence needs gold tags for calibration")
    else:
        if not (args.train and args.test):
            raise ParameterError("provide either --lattice or both --train and --test")
        model = train_hmm(io.read_tagged_corpus(args.train), pseudocount=args.pseudocount)
        test = io.read_tagged_corpus(args.test)
        lattices = [model.lattice([w for w, _ in sent]) for sent in test]
        golds = [[t for _, t in sent] for sent in test]
        tags = model.tags
    return tags, [forward_backward(lat) for lat in lattices], golds


def cmd_tag_experiment(args) -> int:
    tags, marginals, golds = _tag_marginals(args)
    if args.pair_labels:
        seen: dict[tuple[str, str], int] = {}
        for sent in golds:
            for a, b in zip(sent[:-1], sent[1:]):
                if a in tags and b in tags:
                    seen[(a, b)] = seen.get((a, b), 0) + 1
    else:
        seen = {}
        for sent in golds:
            for t in sent:
                if t in tags:
                    seen[t] = seen.get(t, 0) + 1
    # Rank candidates by gold frequency before extraction so only the
    # reported labels are materialized.
    candidates = sorted(seen, key=lambda lab: (-seen[lab], str(lab)))[: args.top_k]
    if not candidates:
        raise ValidationError("no gold labels found in the evaluation data")
    pairs_by_label = extract_tag_prediction_pairs(marginals, golds, tags, candidates)
    rows, average = per_label_calibration(
        pairs_by_label,
        bin_size=args.bin_size,
        top_k=len(candidates),
        num_samples=args.samples,
        seed=args.seed,
    )
    io.write_label_table_csv(args.out, rows, average)
    if args.svg:
        plots.label_error_plot(rows, average, args.svg)
    print(f"labels={len(rows)} average_calib_err={average:.6f}")
    return EXIT_OK


def cmd_coref_sample(args) -> int:
    docs = io.read_coref_documents(args.scores)
    marginal_items = []
    clustering_items = []
    for d, (doc, _) in enumerate(docs):
        dists = antecedent_distributions(doc)
        labels = sample_component_labels(dists, args.num_samples, args.seed, stream_path=(d,))
        marginal_items.append(
            (
                doc.doc_id,
                PairwiseMarginals(
                    q=pairwise_from_labels(labels), num_samples=args.num_samples, seed=args.seed
                ),
            )
        )
        if args.clusterings:
            for s in range(args.num_samples):
                clustering_items.append((doc.doc_id, s, Clustering.from_labels(labels[s])))
    io.write_pairwise_marginals(args.pairwise, marginal_items)
    if args.clusterings:
        io.write_clustering_samples(args.clusterings, clustering_items)
    total_pairs = sum(pm.num_mentions * (pm.num_mentions - 1) // 2 for _, pm in marginal_items)
    print(f"documents={len(docs)} pairs={total_pairs} samples={args.num_samples}")
    return EXIT_OK


def cmd_coref_calib(args) -> int:
    docs = io.read_coref_documents(args.scores)
    scored = []
    for d, (doc, gold) in enumerate(docs):
        dists = antecedent_distributions(doc)
        labels = sample_component_labels(dists, args.num_samples, args.seed, stream_path=(d,))
        pm = PairwiseMarginals(
            q=pairwise_from_labels(labels), num_samples=args.num_samples, seed=args.seed
        )
        scored.append((pm, gold))
    report, summaries = coref_pairwise_calibration(
        scored, bin_size=args.bin_size, num_samples=args.ci_samples, seed=args.seed
    )
    n = sum(pm.num_mentions * (pm.num_mentions - 1) // 2 for pm, _ in scored)
    io.write_calibration_report(args.out, report, summaries, n=n, bin_size=args.bin_size)
    points = reliability_curve(summaries)
    io.write_curve_csv(args.bins or _derived_path(args.out, "_bins.csv"), points)
    if args.svg:
        plots.reliability_plot(points, args.svg, title="Pairwise coreference reliability")
    print(f"calib_err={report.calib_err:.6f} pairs={n} documents={len(docs)}")
    return EXIT_OK


def cmd_events_aggregate(args) -> int:
    corpus = io.read_event_corpus(args.corpus)
    csv_rows = []
    flagged = []
    series_map = {}
    for country in args.country:
        matrix = document_indicator_matrix(corpus, country, args.samples, args.seed)
        series = event_count_series(
            corpus, country, args.samples, args.seed, period=args.period, indicator_matrix=matrix
        )
        bands = series_bands(series)
        series_map[country] = (series, bands)
        csv_rows.extend(zip(series, bands))
        if args.flagged:
            flagged.extend(
                flag_uncertain_documents(
                    corpus,
                    country,
                    args.samples,
                    args.seed,
                    bounds=(args.flag_lo, args.flag_hi),
                    indicator_matrix=matrix,
                )
            )
    io.write_event_series_csv(args.out, csv_rows)
    if args.flagged:
        io.write_flagged_documents(args.flagged, flagged)
    if args.svg:
        plots.event_band_plot(series_map, args.svg, period=args.period)
    print(f"countries={len(args.country)} periods={len(csv_rows)} samples={args.samples}")
    return EXIT_OK


def _add_common(parser, *, samples_default: int, samples_flag: str = "--samples") -> None:
    parser.add_argument(samples_flag, type=int, default=samples_default)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="postcal",
        description="Calibration analysis and Monte Carlo uncertainty propagation.",
    )
    top = parser.add_subparsers(dest="command", required=True)

    calib = top.add_parser("calib", help="calibration of prediction-label pairs")
    calib_sub = calib.add_subparsers(dest="subcommand", required=True)

    ev = calib_sub.add_parser("eval", help="calibration error with confidence interval")
    ev.add_argument("--input", required=True, help="pairs file (JSON lines or q,y CSV)")
    ev.add_argument("--bin-size", type=int, default=DEFAULT_BIN_SIZE)
    _add_common(ev, samples_default=DEFAULT_CI_SAMPLES)
    ev.add_argument("--out", required=True, help="report JSON path")
    ev.add_argument("--bins", help="bins CSV path (default: report name + _bins.csv)")
    ev.add_argument("--svg", help="reliability plot path")
    ev.set_defaults(func=cmd_calib_eval)

    curve = calib_sub.add_parser("curve", help="reliability curve points")
    curve.add_argument("--input", required=True)
    curve.add_argument("--bin-size", type=int, default=DEFAULT_BIN_SIZE)
    curve.add_argument(
        "--fixed-width",
        type=float,
        help="use equal-width bins of this width instead of equal-count bins",
    )
    curve.add_argument("--out", required=True, help="curve CSV path")
    curve.add_argument("--svg", help="reliability plot path")
    curve.set_defaults(func=cmd_calib_curve)

    dec = calib_sub.add_parser("decompose", help="Brier score decomposition")
    dec.add_argument("--input", required=True)
    dec.add_argument("--out", required=True, help="decomposition JSON path")
    dec.set_defaults(func=cmd_calib_decompose)

    tag = top.add_parser("tag", help="sequence-tagging calibration experiments")
    tag_sub = tag.add_subparsers(dest="subcommand", required=True)
    exp = tag_sub.add_parser("experiment", help="per-label calibration table from chain marginals")
    exp.add_argument("--train", help="tagged training corpus (word/TAG lines)")
    exp.add_argument("--test", help="tagged evaluation corpus")
    exp.add_argument("--lattice", help="imported chain potentials JSON (with gold tags)")
    exp.add_argument("--pseudocount", type=float, default=1.0)
    exp.add_argument("--pair-labels", action="store_true", help="calibrate adjacent tag pairs")
    exp.add_argument("--top-k", type=int, default=10)
    exp.add_argument("--bin-size", type=int, default=DEFAULT_BIN_SIZE)
    _add_common(exp, samples_default=DEFAULT_CI_SAMPLES)
    exp.add_argument("--out", required=True, help="table CSV path")
    exp.add_argument("--svg", help="per-label bar chart path")
    exp.set_defaults(func=cmd_tag_experiment)

    coref = top.add_parser("coref", help="clustering posterior sampling")
    coref_sub = coref.add_subparsers(dest="subcommand", required=True)

    samp = coref_sub.add_parser("sample", help="pairwise marginals from posterior samples")
    samp.add_argument("--scores", required=True, help="antecedent score documents (JSON lines)")
    _add_common(samp, samples_default=DEFAULT_COREF_SAMPLES, samples_flag="--num-samples")
    samp.add_argument("--pairwise", required=True, help="pairwise marginals output (JSON lines)")
    samp.add_argument("--clusterings", help="optional sampled clusterings output (JSON lines)")
    samp.set_defaults(func=cmd_coref_sample)

    ccal = coref_sub.add_parser("calib", help="pairwise calibration against gold entities")
    ccal.add_argument("--scores", required=True)
    _add_common(ccal, samples_default=DEFAULT_COREF_SAMPLES, samples_flag="--num-samples")
    ccal.add_argument("--ci-samples", type=int, default=DEFAULT_CI_SAMPLES)
    ccal.add_argument("--bin-size", type=int, default=DEFAULT_BIN_SIZE)
    ccal.add_argument("--out", required=True, help="report JSON path")
    ccal.add_argument("--bins", help="bins CSV path")
    ccal.add_argument("--svg", help="reliability plot path")
    ccal.set_defaults(func=cmd_coref_calib)

    events = top.add_parser("events", help="event-count series with credible intervals")
    events_sub = events.add_subparsers(dest="subcommand", required=True)
    agg = events_sub.add_parser("aggregate", help="per-period counts for countries")
    agg.add_argument("--corpus", required=True, help="annotated corpus (JSON lines)")
    agg.add_argument(
        "--country", action="append", required=True, help="country code; repeatable"
    )
    agg.add_argument("--period", choices=["month", "quarter"], default="quarter")
    _add_common(agg, samples_default=DEFAULT_EVENT_SAMPLES)
    agg.add_argument("--out", required=True, help="series CSV path")
    agg.add_argument("--flagged", help="high-uncertainty documents output (JSON lines)")
    agg.add_argument("--flag-lo", type=float, default=0.25)
    agg.add_argument("--flag-hi", type=float, default=0.75)
    agg.add_argument("--svg", help="band plot path")
    agg.set_defaults(func=cmd_events_aggregate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, NoDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    sys.exit(main())
