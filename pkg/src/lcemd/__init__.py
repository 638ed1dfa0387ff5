"""Linear-complexity lower bounds on the Earth Mover's Distance.

RWMD, OMR, ICT and ACT relaxations between a query histogram and a database
of sparse histograms over an embedded vocabulary, with an exact EMD oracle,
cheap baselines and a nearest-neighbor evaluation harness.
"""
from .baselines import CentroidIndex, bow_cosine, build_centroids, query_centroid, wcd
from .emdoracle import ExactSolution, emd_exact
from .evaluation import EvalReport, RunConfig, bench_scaling, precision_at_l, run_eval
from .grounddist import CostMatrix, cost_matrix, euclidean_distance, vocab_query_distances
from .histcore import (
    DatasetStats,
    EmbeddingVocabulary,
    Histogram,
    HistogramDatabase,
    build_database,
    load_database,
    normalize_histogram,
    save_database,
)
from .lcengine import (
    lc_act_forward,
    lc_act_reverse,
    lc_act_symmetric,
    lc_distances,
    phase1_topk,
    phase2_iterate,
    phase3_residual,
    topk_neighbors,
)
from .pairwise import (
    TransportPlan,
    act_directed,
    ict_directed,
    omr_directed,
    rwmd_directed,
    symmetric,
)

__version__ = "0.1.0"
