"""Command-line entry points: ``giohms`` (detection) and ``giohms-synth`` (benchmarks)."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import _kernels
from .cover import format_cover, write_cover
from .errors import ConfigError, GiohmsError
from .graph import write_edge_list
from .inference import InferenceConfig
from .pipeline import PipelineConfig, run_pipeline
from .synth import PlantedConfig, planted_overlap

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_CAPACITY = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="giohms", description="Detect overlapping communities in an edge list.")
    p.add_argument("--edges", required=True, help="SNAP-style edge list")
    p.add_argument("--truth", help="ground-truth cover, one community per line")
    p.add_argument("--epsilon", type=float, default=0.1, help="seed merge threshold (default 0.1)")
    p.add_argument("--prob-threshold", type=float, default=0.8,
                   help="relative marginal threshold for membership (default 0.8)")
    p.add_argument("--hop-radius", type=int, default=2)
    p.add_argument("--threads", type=int, default=None, help="default: all CPUs")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--chains", type=int, default=8)
    p.add_argument("--samples", type=int, default=5000, help="iterations per chain")
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=int, default=2)
    p.add_argument("--max-iterations", type=int, default=100, help="label propagation sweeps")
    p.add_argument("--fixed-weights", action="store_true",
                   help="keep all energy weights at 1 instead of sampling them")
    p.add_argument("--out", help="detected cover (default: stdout)")
    p.add_argument("--report", choices=("json", "tsv"), default="json",
                   help="metric report format, written to OUT.report.FORMAT and stdout")
    p.add_argument("--dump-seeds", metavar="PATH")
    p.add_argument("--dump-ohms", metavar="PATH")
    p.add_argument("--dump-marginals", metavar="PATH")
    p.add_argument("--timing", metavar="PATH", help="write stage timings as JSON")
    p.add_argument("--backend", choices=_kernels.available(), default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> PipelineConfig:
    icfg = InferenceConfig(
        chains=args.chains,
        samples_per_chain=args.samples,
        burn_in=args.burn_in,
        thin=args.thin,
        sample_weights=not args.fixed_weights,
    )
    report_path = f"{args.out}.report.{args.report}" if args.out else None
    return PipelineConfig(
        edges_path=args.edges,
        ground_truth_path=args.truth,
        epsilon=args.epsilon,
        prob_threshold=args.prob_threshold,
        hop_radius=args.hop_radius,
        threads=args.threads,
        seed=args.seed,
        max_iterations=args.max_iterations,
        inference=icfg,
        output_path=args.out,
        report_path=report_path,
        report_format=args.report,
        dump_seeds=args.dump_seeds,
        dump_ohms=args.dump_ohms,
        dump_marginals=args.dump_marginals,
        backend=args.backend,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        result = run_pipeline(cfg)
    except GiohmsError as exc:
        print(f"giohms: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.out is None:
        sys.stdout.write(format_cover(result.cover))
    if result.report is not None:
        sys.stdout.write(result.report.to_json() if args.report == "json" else result.report.to_tsv())
    if args.timing:
        Path(args.timing).write_text(result.timing.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def synth_main(argv=None) -> int:
    p = _Parser(prog="giohms-synth", description="Write a planted-overlap benchmark.")
    p.add_argument("--communities", type=int, default=4)
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--overlap", type=int, default=0)
    p.add_argument("--p-in", type=float, default=0.5)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edges-out", required=True)
    p.add_argument("--truth-out", required=True)
    args = p.parse_args(argv)
    try:
        cfg = PlantedConfig(args.communities, args.size, args.overlap, args.p_in, args.p_out,
                            args.seed)
    except ConfigError as exc:
        print(f"giohms-synth: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    g, truth = planted_overlap(cfg)
    with open(args.edges_out, "w", encoding="utf-8") as fh:
        write_edge_list(g, fh)
    write_cover(truth, args.truth_out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
