"""Overlapping community detection by graphical inference on an observed-hidden
merged seeded ego network."""

from ._kernels import active as _active_backend
from .cover import Cover, read_cover, write_cover
from .errors import CapacityError, ConfigError, DomainError, GiohmsError, ParseError
from .graph import Graph, ego_minus_ego, induced_subgraph, parse_edge_list, read_edge_list
from .inference import (
    EnergyParams,
    InferenceConfig,
    MarginalTable,
    energy,
    exact_marginals,
    extract_communities,
    gibbs_sweep,
    run_inference,
)
from .merge import MergeConfig, absent_fraction, merge_all, merge_into
from .metrics import MetricReport, avg_f1, evaluate, onmi
from .ohms import OHMSNetwork, build_ohms, label_universe
from .pipeline import PipelineConfig, detect, run_pipeline
from .seeding import SeedConfig, label_propagation, local_seed, seed_all
from .synth import PlantedConfig, planted_overlap

KERNEL_BACKEND = _active_backend.NAME

__version__ = "0.1.0"
