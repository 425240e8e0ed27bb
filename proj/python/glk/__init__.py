"""Harmonic guide functions, guided positional encodings and leaf segmentation metrics.

Label maps are 2-D integer arrays of shape (height, width) with 0 as
background. Mask stacks are float arrays of shape (n, height, width).
"""

from ._glk import (
    ConfigError,
    DegenerateDatasetError,
    EmptyInstanceError,
    GenerationError,
    GlkError,
    GuideBank,
    IoError,
    Mlp,
    ParseError,
    ShapeError,
    UndefinedMetricError,
    bce_loss,
    best_dice,
    dic,
    dice_loss,
    evaluate,
    gdpq,
    generate_plant,
    gpe,
    guided_embeddings,
    guided_mask_embeddings,
    init_guides,
    load_labelmap,
    perturb,
    save_labelmap,
    sbd,
    separation_loss,
    separation_loss_grad,
    set_thread_limit,
    spe,
    total_loss,
    train_guides,
)

__all__ = [name for name in dir() if not name.startswith("_")]
