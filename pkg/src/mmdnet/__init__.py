"""Semi-supervised translation between vector spaces with MMD networks.

A network maps source vectors into the target space. It is trained on a few
known pairs plus a distribution-matching term that compares mapped source
samples with target samples through the maximum mean discrepancy.
"""

from .config import ConfigError, RunConfig
from .data import (
    EmbeddingTable,
    Lexicon,
    ParseError,
    SyntheticTask,
    build_splits,
    gen_rotation_toy,
    gen_synthetic,
    load_embeddings,
    load_lexicon,
    rotate,
    rotation_matrix,
    save_embeddings,
    train_val_split,
)
from .kernel import (
    KernelSpec,
    gaussian_kernel,
    kernel_matrix,
    mmd_u2,
    mmd_u2_and_grad,
    mmd_u2_grad,
    multiscale_kernel,
)
from .loss import (
    BlendConfig,
    LossTerms,
    alignment_loss,
    alignment_loss_and_grad,
    blended_loss,
    blended_loss_and_grad,
    blended_loss_grad,
    mmd_loss,
    mmd_loss_and_grad,
)
from .model import (
    ChannelBatch,
    Layer,
    ModelParams,
    backward,
    forward,
    init_params,
    linear_params,
    load_checkpoint,
    n_channel_forward,
    save_checkpoint,
)
from .retrieval import (
    GcPool,
    RetrievalIndex,
    cosine_similarity,
    gc_retrieve,
    gc_scores,
    nn_retrieve,
    precision_at_n,
    rank_in_targets,
    retrieve,
)
from .train import (
    EpochRecord,
    RmsState,
    TrainConfig,
    TrainHistory,
    pretrain,
    rmsprop_step,
    sample_paired_batch,
    sample_unpaired_batches,
    train,
    validation_mse,
)

__version__ = "0.1.0"
