"""Question routing on social media via shared latent foci.

A user-word matrix and the asker's ego network are jointly factorized into
non-negative foci memberships; connections are then ranked by how much of the
asker's membership they share inside the question's domain.
"""

from .data import (
    EgoNetwork,
    QAInstance,
    Question,
    UserWordMatrix,
    Vocabulary,
    build_user_word_matrix,
    load_ego_network,
    load_instance,
    preprocess_text,
)
from .errors import (
    ContractError,
    EvaluationError,
    FociError,
    GenerationError,
    InputError,
    NumericError,
    OutOfVocabularyError,
)
from .evaluation import (
    EvalReport,
    SweepGrid,
    average_precision_at_k,
    baseline_random,
    baseline_shared_foci,
    evaluate,
    model_ranker,
    ndcg_at_k,
    random_ranker,
    reciprocal_rank,
    sweep,
)
from .linalg import SparseMatrix
from .rank import (
    RankedList,
    SimilarityMetric,
    project_membership,
    question_domain,
    rank_answerers,
    similarity,
)
from .solver import FactorSet, FitTrace, HyperParams, fit, gradients, objective, update_step
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"
