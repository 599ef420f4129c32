"""Joint job / SOC / Carotene embedding engine (C++ core)."""

from ._core import (  # noqa: F401
    DimensionError,
    ParseError,
    TextEncoder,
    TrainingError,
    ValidationError,
    __version__,
    ce_loss,
    contrastive_loss_nomargin,
    cosine,
    evaluate,
    generate_corpus,
    load_checkpoint,
    load_taxonomy_stats,
    margin_triplet_loss,
    mine,
    pca_2d,
    softmax,
    tokenize,
    train,
)
