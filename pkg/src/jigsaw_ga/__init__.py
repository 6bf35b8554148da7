"""Genetic-algorithm solver for square-tile jigsaw puzzles."""

from .color import AB_MIDPOINT, srgb_to_normalized_lab
from .compat import (
    CompatCache,
    build_cache,
    dissimilarity,
    load_cache,
    save_cache,
)
from .crossover import (
    PHASE_AGREEMENT,
    PHASE_BEST_BUDDY,
    PHASE_GREEDY,
    PHASE_SEED,
    CrossoverConfig,
    KernelAssembly,
    PlacementRecord,
    crossover,
    crossover_grid,
    draw_budget,
    neighbor_tables,
    records_from_trace,
)
from .ga import (
    GaConfig,
    GaResult,
    GenerationStats,
    fitness,
    fitness_of_grid,
    fitness_of_population,
    roulette_pick,
    run,
    selection_weights,
)
from .metrics import (
    Score,
    adjacency_count,
    direct_accuracy,
    neighbor_accuracy,
    score,
)
from .puzzle import (
    Arrangement,
    ContractViolationError,
    ExhaustedBankError,
    InvalidArrangementError,
    Piece,
    PuzzleDims,
    PuzzleError,
    PuzzleInstance,
    PuzzleManifest,
    Relation,
    identity_arrangement,
    instance_from_manifest,
    load_image,
    load_manifest,
    make_manifest,
    render,
    save_manifest,
    save_png,
    shuffle,
    slice_image,
)
from .reporting import (
    RunRecord,
    RunReport,
    load_report,
    make_report,
    save_report,
    write_generation_stats_csv,
    write_set_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AB_MIDPOINT",
    "Arrangement",
    "CompatCache",
    "ContractViolationError",
    "CrossoverConfig",
    "ExhaustedBankError",
    "GaConfig",
    "GaResult",
    "GenerationStats",
    "InvalidArrangementError",
    "KernelAssembly",
    "PHASE_AGREEMENT",
    "PHASE_BEST_BUDDY",
    "PHASE_GREEDY",
    "PHASE_SEED",
    "Piece",
    "PlacementRecord",
    "PuzzleDims",
    "PuzzleError",
    "PuzzleInstance",
    "PuzzleManifest",
    "Relation",
    "RunRecord",
    "RunReport",
    "Score",
    "adjacency_count",
    "build_cache",
    "crossover",
    "crossover_grid",
    "direct_accuracy",
    "dissimilarity",
    "draw_budget",
    "fitness",
    "fitness_of_grid",
    "fitness_of_population",
    "identity_arrangement",
    "instance_from_manifest",
    "load_cache",
    "load_image",
    "load_manifest",
    "load_report",
    "make_manifest",
    "make_report",
    "neighbor_accuracy",
    "neighbor_tables",
    "records_from_trace",
    "render",
    "roulette_pick",
    "run",
    "save_cache",
    "save_manifest",
    "save_png",
    "save_report",
    "score",
    "selection_weights",
    "shuffle",
    "slice_image",
    "srgb_to_normalized_lab",
    "write_generation_stats_csv",
    "write_set_csv",
]
