"""DTW-based scoring, clustering and real-time assessment of multivariate motion recordings."""

__version__ = "0.1.0"

from .core import (
    Dataset,
    LabeledSeries,
    MultiSeries,
    dataset_stats,
    epidural40_split,
    normalize,
    resample,
)
from .distance import (
    ConstraintBand,
    WarpResult,
    dtw,
    dtw_distance,
    local_cost,
    lockstep_distance,
    normalized_dtw_distance,
    softdtw,
    softdtw_gradient,
)
from .envelope import (
    Envelope,
    Tunnel,
    keogh_envelope,
    lb_keogh,
    outside_distance,
    summative_envelope,
    summative_tunnel,
)
from .prototype import (
    Prototype,
    dba_prototype,
    dtwmp_multi,
    dtwmp_pair,
    make_prototype,
    mean_prototype,
    pam_prototype,
    softdtw_barycenter,
)
from .classify import ClassifierReport, centroid_classify, cross_validate, knn_classify
from .cluster import (
    Clustering,
    DistanceMatrix,
    composition_report,
    cvi_suite,
    distance_matrix,
    hierarchical_cluster,
    partitional_cluster,
)
from .dynamic import (
    AdaptResult,
    AlarmEvent,
    SessionState,
    adapt_prototype,
    assign_cluster,
    batch_score,
    dynamic_score,
    finish,
    ingest,
    match_proportion,
    phase_estimate,
    replay,
)
from .datagen import GeneratorConfig, synth_dataset

__all__ = [name for name in dir() if not name.startswith("_")]
