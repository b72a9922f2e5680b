"""bitrdm: ReLU activation bit vectors, Hamming RDMs, Fiedler partitioning,
and linear-SVM adversarial input detection."""

from .bitvec import (
    BitMatrix,
    BitRow,
    binarize,
    binarize_matrix,
    hamming,
    hamming_matrix,
    load_bvm1,
    save_bvm1,
    select_columns,
)
from .errors import (
    BitRdmError,
    ConvergenceError,
    DataError,
    DisconnectedGraphError,
    ParameterError,
    ShapeError,
)
from .featsel import FeatureScores, chi2_scores, select_k_best
from .net import (
    AttackConfig,
    ForwardTrace,
    MlpNetwork,
    attack,
    attack_batch,
    forward,
    init_network,
    load_mlp1,
    loss_and_input_gradient,
    save_mlp1,
    train_sgd,
)
from .rdm import (
    DissimMatrix,
    LaplacianMatrix,
    adjacency_from_dissim,
    laplacian,
    load_dmx1,
    pearson_rdm,
    rdm_cosine,
    rdm_hamming,
    save_dmx1,
)
from .spectral import (
    EigenResult,
    Partition,
    eig_symmetric,
    fiedler_partition,
    fiedler_vector,
    partition_accuracy,
    sign_pattern_partition,
)
from .svm import SvmModel, accuracy, auroc, svm_predict, svm_scores, svm_train

__version__ = "0.1.0"
