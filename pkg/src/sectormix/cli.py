"""Command-line interface: simulate, deconvolve, evaluate, derank, plot.

Exit codes: 0 on success, 1 when the estimation itself fails (degenerate
sector, singular mixing, ...), 2 when an input cannot be read or parsed.
Failures print a single-line JSON error record to stderr. Reports embed
the effective configuration but never paths, so identical inputs produce
byte-identical files wherever they are written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any

from . import io as sio
from .analyze import de_rank, e1_error
from .errors import ParseError, SectormixError, ValidationError
from .markers import MarkerConfig
from .model import ExpressionMatrix, validate_mixing_matrix
from .pipeline import run_pipeline
from .preprocess import PreprocessConfig
from .synth import Lognormal, SynthConfig, Uniform, generate


class _InputFailure(Exception):
    """Wraps a validation error raised while ingesting an input file."""

    def __init__(self, cause: SectormixError):
        self.cause = cause
        super().__init__(str(cause))


def _ingest(reader, path: str):
    """Read an input file, converting validation failures to input failures.

    A file that fails validation on the way in is a bad input (exit 2),
    not an estimation failure (exit 1).
    """
    try:
        return reader(path)
    except ValidationError as exc:
        raise _InputFailure(exc) from exc


def _read_expression_input(path: str) -> ExpressionMatrix:
    return _ingest(sio.read_expression, path)


def _mixing_flag(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            "expected 4 comma-separated values (row-major 2x2 matrix)"
        )
    try:
        a, b, c, d = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return a, b, c, d


def _add_preprocess_options(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--norm",
        choices=("mean", "mode", "none"),
        default="mean",
        help="per-sample normalization method (default: mean)",
    )
    p.add_argument(
        "--norm-kind",
        choices=("l1", "l2"),
        default="l2",
        help="norm used for gene filtering and ray averaging (default: l2)",
    )
    p.add_argument(
        "--delta",
        type=float,
        default=None,
        help="lower gene-norm bound; default: 2nd percentile of the norms",
    )
    p.add_argument(
        "--gamma",
        type=float,
        default=None,
        help="upper gene-norm bound; default: 99.8th percentile of the norms",
    )
    p.add_argument(
        "--mode-bins",
        type=int,
        default=64,
        help="histogram bins for mode normalization (default: 64)",
    )


def _add_marker_options(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--epsilon",
        type=float,
        default=0.01,
        help="ratio-band width for marker detection (default: 0.01)",
    )
    p.add_argument(
        "--epsilon-mode",
        choices=("absolute", "relative"),
        default="relative",
        help="interpret epsilon as an absolute width or relative to the "
        "ratio extreme (default: relative)",
    )
    p.add_argument(
        "--min-markers",
        type=int,
        default=1,
        help="minimum marker genes required per source (default: 1)",
    )


def _add_out_option(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--out",
        default=".",
        help="output directory (default: current directory)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sectormix",
        description="Blind two-source unmixing of non-negative expression "
        "profiles via the sector geometry of the sample scatter.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate", help="generate a synthetic mixed dataset with truth"
    )
    sim.add_argument("--n-genes", type=int, default=2000)
    sim.add_argument("--n-mg1", type=int, default=5)
    sim.add_argument("--n-mg2", type=int, default=5)
    sim.add_argument(
        "--mixing",
        type=_mixing_flag,
        default=(0.75, 0.25, 0.25, 0.75),
        help="row-major proportion matrix (default: 0.75,0.25,0.25,0.75)",
    )
    sim.add_argument("--law", choices=("lognormal", "uniform"), default="lognormal")
    sim.add_argument("--law-mu", type=float, default=2.0)
    sim.add_argument("--law-sigma", type=float, default=1.0)
    sim.add_argument("--law-lo", type=float, default=1.0)
    sim.add_argument("--law-hi", type=float, default=100.0)
    sim.add_argument("--marker-leak", type=float, default=0.0)
    sim.add_argument("--noise-sigma", type=float, default=0.0)
    sim.add_argument("--sample-dev-sigma", type=float, default=0.0)
    sim.add_argument("--fold-change", type=float, default=2.0)
    sim.add_argument("--seed", type=int, default=0)
    _add_out_option(sim)
    sim.set_defaults(func=cmd_simulate)

    dec = sub.add_parser(
        "deconvolve", help="estimate markers, proportions and sources"
    )
    dec.add_argument("input", help="mixed expression table (tsv or csv)")
    dec.add_argument(
        "--truth",
        default=None,
        help="truth sidecar; adds e1_vs_truth to the diagnostics",
    )
    dec.add_argument(
        "--clamp",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="clamp negative source estimates to zero (default: on)",
    )
    _add_preprocess_options(dec)
    _add_marker_options(dec)
    _add_out_option(dec)
    dec.set_defaults(func=cmd_deconvolve)

    ev = sub.add_parser(
        "evaluate", help="score a result against a truth sidecar"
    )
    ev.add_argument("result", help="result.json from deconvolve")
    ev.add_argument("truth", help="truth sidecar json")
    ev.add_argument(
        "--report",
        choices=("json", "tsv"),
        default="json",
        help="evaluation report format (default: json)",
    )
    _add_out_option(ev)
    ev.set_defaults(func=cmd_evaluate)

    der = sub.add_parser(
        "derank", help="rank genes by the mixing-invariant ratio x1/x2"
    )
    der.add_argument("input", help="expression table (tsv or csv)")
    der.add_argument(
        "--direction",
        choices=("ascending", "descending"),
        default="descending",
    )
    _add_out_option(der)
    der.set_defaults(func=cmd_derank)

    plot = sub.add_parser(
        "plot", help="scatter the two samples with the estimated rays"
    )
    plot.add_argument("input", help="mixed expression table (tsv or csv)")
    plot.add_argument(
        "--result",
        default=None,
        help="result.json; overlays the estimated rays and marker genes",
    )
    _add_preprocess_options(plot)
    _add_out_option(plot)
    plot.set_defaults(func=cmd_plot)

    return parser


def _preprocess_config(args) -> PreprocessConfig:
    return PreprocessConfig(
        norm_method=args.norm,
        delta=args.delta,
        gamma=args.gamma,
        norm_kind=args.norm_kind,
        mode_bins=args.mode_bins,
    )


def _marker_config(args) -> MarkerConfig:
    return MarkerConfig(
        epsilon=args.epsilon,
        epsilon_mode=args.epsilon_mode,
        min_markers_per_source=args.min_markers,
    )


def cmd_simulate(args) -> int:
    law = (
        Lognormal(args.law_mu, args.law_sigma)
        if args.law == "lognormal"
        else Uniform(args.law_lo, args.law_hi)
    )
    mixing = validate_mixing_matrix(
        ((args.mixing[0], args.mixing[1]), (args.mixing[2], args.mixing[3])),
        form="proportion",
    )
    config = SynthConfig(
        n_genes=args.n_genes,
        n_mg1=args.n_mg1,
        n_mg2=args.n_mg2,
        mixing=mixing,
        law=law,
        marker_leak=args.marker_leak,
        noise_sigma=args.noise_sigma,
        sample_dev_sigma=args.sample_dev_sigma,
        de_fold_change=args.fold_change,
        seed=args.seed,
    )
    dataset = generate(config)
    os.makedirs(args.out, exist_ok=True)
    mixed_path = os.path.join(args.out, "mixed.tsv")
    truth_path = os.path.join(args.out, "truth.json")
    sio.write_expression(mixed_path, dataset.mixed)
    sio.write_truth(truth_path, sio.truth_from_dataset(dataset))
    print(f"wrote {mixed_path}")
    print(f"wrote {truth_path}")
    return 0


def cmd_deconvolve(args) -> int:
    X = _read_expression_input(args.input)
    truth = _ingest(sio.read_truth, args.truth) if args.truth else None
    result = run_pipeline(
        X,
        preprocess_config=_preprocess_config(args),
        marker_config=_marker_config(args),
        clamp=args.clamp,
    )
    e1_vs_truth = None
    if truth is not None:
        e1_vs_truth = e1_error(result.mixing, truth.mixing)
    config: dict[str, Any] = {
        "command": "deconvolve",
        "norm": args.norm,
        "norm_kind": args.norm_kind,
        "delta": args.delta,
        "gamma": args.gamma,
        "mode_bins": args.mode_bins,
        "epsilon": args.epsilon,
        "epsilon_mode": args.epsilon_mode,
        "min_markers": args.min_markers,
        "clamp": args.clamp,
    }
    payload = sio.build_result_payload(result, config, e1_vs_truth)
    os.makedirs(args.out, exist_ok=True)
    sources_path = os.path.join(args.out, "sources.tsv")
    result_path = os.path.join(args.out, "result.json")
    sio.write_expression(sources_path, result.deconvolution.sources)
    sio.write_json(result_path, payload)
    print(f"wrote {sources_path}")
    print(f"wrote {result_path}")
    return 0


def cmd_evaluate(args) -> int:
    loaded = _ingest(sio.read_result, args.result)
    truth = _ingest(sio.read_truth, args.truth)
    report = sio.evaluate_against_truth(loaded, truth)
    if report.auc is None:
        print(
            "warning: truth sidecar lacks DE labels for the evaluated "
            "genes; AUC omitted",
            file=sys.stderr,
        )
    config = {"command": "evaluate", "report": args.report}
    os.makedirs(args.out, exist_ok=True)
    if args.report == "json":
        out_path = os.path.join(args.out, "evaluation.json")
        sio.write_json(out_path, sio.evaluation_payload(report, config))
    else:
        out_path = os.path.join(args.out, "evaluation.tsv")
        sio.write_evaluation_tsv(out_path, report)
    print(f"wrote {out_path}")
    return 0


def cmd_derank(args) -> int:
    X = _read_expression_input(args.input)
    ranking = de_rank(X, args.direction)
    lines = ["gene_id\tscore"]
    for row, score in zip(ranking.order, ranking.scores):
        lines.append(f"{X.gene_ids[row]}\t{float(score)!r}")
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "derank.tsv")
    sio._atomic_write_text(out_path, "\n".join(lines) + "\n")
    print(f"wrote {out_path}")
    return 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "sectormix"

    from .preprocess import preprocess as run_preprocess

    X = _read_expression_input(args.input)
    filtered, _ = run_preprocess(X, _preprocess_config(args))
    loaded = _ingest(sio.read_result, args.result) if args.result else None

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.scatter(
        filtered.values[:, 0],
        filtered.values[:, 1],
        s=8,
        c="0.55",
        linewidths=0,
        label="genes",
    )
    if loaded is not None:
        reach = 1.05 * float(filtered.values.max())
        mat = loaded.mixing.matrix
        for j, (name, color) in enumerate(
            (("tissue1 ray", "tab:red"), ("tissue2 ray", "tab:blue"))
        ):
            col = mat[:, j]
            apex = float(col.max())
            if apex > 0:
                tip = col / apex * reach
                ax.plot([0, tip[0]], [0, tip[1]], color=color, lw=1.5, label=name)
        id_to_row = {g: i for i, g in enumerate(filtered.gene_ids)}
        for ids, color in ((loaded.mg1_ids, "tab:red"), (loaded.mg2_ids, "tab:blue")):
            rows = [id_to_row[g] for g in ids if g in id_to_row]
            if rows:
                ax.scatter(
                    filtered.values[rows, 0],
                    filtered.values[rows, 1],
                    s=26,
                    c=color,
                    linewidths=0,
                )
    ax.set_xlabel("sample1")
    ax.set_ylabel("sample2")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    if loaded is not None:
        ax.legend(loc="upper right", frameon=False)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "scatter.svg")
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    print(f"wrote {out_path}")
    return 0


def _emit_error(record: dict) -> None:
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputFailure as exc:
        _emit_error(exc.cause.record())
        return 2
    except ParseError as exc:
        _emit_error(exc.record())
        return 2
    except OSError as exc:
        _emit_error({"error": type(exc).__name__, "message": str(exc)})
        return 2
    except SectormixError as exc:
        _emit_error(exc.record())
        return 1


if __name__ == "__main__":
    sys.exit(main())
