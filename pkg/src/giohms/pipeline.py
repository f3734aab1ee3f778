"""End-to-end detection: seeds -> merge -> observed-hidden network -> inference -> extraction."""

from __future__ import annotations

import json
import logging
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from ._rng import derive_seed
from .cover import Cover, read_cover, write_cover
from .errors import ConfigError, GiohmsError
from .graph import Graph, read_edge_list
from .inference import InferenceConfig, MarginalTable, extract_communities, run_inference
from .merge import MergeConfig, merge_all
from .metrics import MetricReport, evaluate
from .ohms import OHMSNetwork, build_ohms, write_ohms
from .seeding import SeedConfig, seed_all

log = logging.getLogger(__name__)


class StageError(GiohmsError):
    """A pipeline stage failed; carries the stage name and the original exit code."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        if isinstance(cause, GiohmsError):
            self.exit_code = cause.exit_code
        elif isinstance(cause, (OSError, UnicodeDecodeError)):
            self.exit_code = 3
        else:
            self.exit_code = 1
        super().__init__(f"{stage}: {cause}")


@dataclass
class PipelineConfig:
    edges_path: str | os.PathLike | None = None
    ground_truth_path: str | os.PathLike | None = None
    epsilon: float = 0.1
    prob_threshold: float = 0.8
    hop_radius: int = 2
    threads: int | None = None
    seed: int = 42
    max_iterations: int = 100
    cascade_merge: bool = False
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    output_path: str | os.PathLike | None = None
    report_path: str | os.PathLike | None = None
    report_format: str = "json"
    dump_seeds: str | os.PathLike | None = None
    dump_ohms: str | os.PathLike | None = None
    dump_marginals: str | os.PathLike | None = None
    backend: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not 0.0 < self.prob_threshold <= 1.0:
            raise ConfigError("prob_threshold must lie in (0, 1]")
        if self.hop_radius < 1:
            raise ConfigError("hop_radius must be a positive integer")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.report_format not in ("json", "tsv"):
            raise ConfigError("report format must be 'json' or 'tsv'")

    @property
    def worker_threads(self) -> int:
        return self.threads or os.cpu_count() or 1


@dataclass
class TimingReport:
    threads: int
    stages: dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def to_json(self) -> str:
        return json.dumps({"threads": self.threads, "stages": self.stages, "total": self.total})


@dataclass
class PipelineResult:
    cover: Cover
    report: MetricReport | None
    timing: TimingReport
    seeds: Cover
    network: OHMSNetwork | None
    marginals: MarginalTable | None

    @property
    def uncovered(self) -> tuple[int, ...]:
        return tuple(self.network.uncovered.tolist()) if self.network is not None else ()


@contextmanager
def _stage(name: str, timing: TimingReport):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (GiohmsError, OSError, UnicodeDecodeError, MemoryError) as exc:
        raise StageError(name, exc) from exc
    finally:
        timing.stages[name] = timing.stages.get(name, 0.0) + time.perf_counter() - t0


def detect(g: Graph, cfg: PipelineConfig, timing: TimingReport | None = None):
    """Run the detection stages on an in-memory graph.

    Returns ``(cover, seeds, network, marginals)``; ``network`` and
    ``marginals`` are None when the graph has no vertices.
    """
    timing = timing or TimingReport(cfg.worker_threads)
    threads = cfg.worker_threads
    with _stage("seeding", timing):
        seeds = seed_all(g, SeedConfig(cfg.max_iterations, derive_seed(cfg.seed, 1)),
                         threads=threads, backend=cfg.backend)
    with _stage("merge", timing):
        merged = merge_all(seeds, MergeConfig(cfg.epsilon, cfg.cascade_merge))
    if not merged:
        return Cover(), merged, None, None
    with _stage("ohms", timing):
        net = build_ohms(g, merged, cfg.hop_radius)
    with _stage("inference", timing):
        icfg = replace(cfg.inference, rng_seed=derive_seed(cfg.seed, 2))
        marginals = run_inference(net, icfg, threads=threads, backend=cfg.backend)
    with _stage("extract", timing):
        cover = extract_communities(marginals, cfg.prob_threshold)
    return cover, merged, net, marginals


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Parse, detect, optionally evaluate, and write every requested output."""
    timing = TimingReport(cfg.worker_threads)
    t0 = time.perf_counter()
    if cfg.edges_path is None:
        raise ConfigError("an edge-list path is required")
    with _stage("parse", timing):
        g = read_edge_list(cfg.edges_path)
    log.info("loaded %r", g)
    cover, merged, net, marginals = detect(g, cfg, timing)
    report = None
    if cfg.ground_truth_path:
        with _stage("evaluate", timing):
            truth = read_cover(cfg.ground_truth_path)
            report = evaluate(cover, truth)
    with _stage("write", timing):
        if cfg.output_path is not None:
            write_cover(cover, cfg.output_path)
        if report is not None and cfg.report_path is not None:
            text = report.to_json() if cfg.report_format == "json" else report.to_tsv()
            Path(cfg.report_path).write_text(text, encoding="utf-8")
        if cfg.dump_seeds is not None:
            write_cover(merged, cfg.dump_seeds)
        if cfg.dump_ohms is not None and net is not None:
            with open(cfg.dump_ohms, "w", encoding="utf-8") as fh:
                write_ohms(net, fh)
        if cfg.dump_marginals is not None and marginals is not None:
            with open(cfg.dump_marginals, "w", encoding="utf-8") as fh:
                marginals.write_csv(fh)
    timing.total = time.perf_counter() - t0
    log.info("timing %s", timing.to_json())
    return PipelineResult(cover, report, timing, merged, net, marginals)
