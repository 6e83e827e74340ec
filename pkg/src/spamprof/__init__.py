"""Spam filtering and email categorization from byte-level profiles.

Emails are treated as raw byte streams and summarized by fixed-dimension
profiles (a 256-bin byte histogram or the lengths of the first k lines),
which feed an in-repo Random Forest. The package covers corpus ingestion,
chronological train/test splits, evaluation (ROC/AUC, fnr at a target
fpr), permutation feature importance with top-k reduction, header/body
scoping experiments, and deterministic synthetic corpora.
"""

from .email_model import RawEmail, Scope, count_header_lines, scoped_bytes, split_header_body
from .profiles import (
    BinaryProfileConfig,
    Profile,
    ProfileKind,
    binary_profile,
    character_profile,
    line_profile,
    profile_email,
    read_profile_csv,
    write_profile_csv,
)
from .forest import (
    DecisionTree,
    Forest,
    ForestParams,
    ImportanceReport,
    ModelFormatError,
    OobReport,
    deserialize,
    oob_error,
    permutation_importance,
    predict,
    predict_scores,
    predict_scores_matrix,
    select_top_k,
    serialize,
    train,
)
from .metrics import (
    BinaryRates,
    ConfusionMatrix,
    OperatingPoint,
    RocCurve,
    confusion,
    fnr_at_fpr,
    fpr_fnr,
    header_line_histogram,
    header_line_histograms,
    roc,
)
from .corpus import (
    ClassSpec,
    CorpusIndex,
    Dataset,
    IndexFormatError,
    SyntheticSpec,
    chronological_split,
    generate_synthetic,
    load,
    parse_index,
    preset_spec,
    read_index,
)

__version__ = "0.1.0"
