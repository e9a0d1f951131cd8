"""Pattern-hierarchy classifier.

Unsupervised closest-link self-organisation into nested cluster/sub-cluster
ensembles, plus a teaching phase that attaches true categories via a
knowledge tree using fewer oracle queries than one per data row.
"""

__version__ = "0.1.0"

from .dataset import DataRow, DatasetSchema, Oracle, load_dataset
from .evaluation import coherence_error, score_model, table1_harness
from .metric import Centroid, centroid, distance
from .self_organiser import ClusterModel, SelfOrgConfig, classify, run
from .teaching import Confidence, run_teaching, start_session

__all__ = [
    "__version__",
    "DataRow",
    "DatasetSchema",
    "Oracle",
    "load_dataset",
    "coherence_error",
    "score_model",
    "table1_harness",
    "Centroid",
    "centroid",
    "distance",
    "ClusterModel",
    "SelfOrgConfig",
    "classify",
    "run",
    "Confidence",
    "run_teaching",
    "start_session",
]
