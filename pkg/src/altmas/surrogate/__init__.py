"""Dropout MLP surrogate and the agreement-based training-set augmentation."""

from .agreement import (
    AgreementClassifier,
    AgreementFit,
    AugmentedSet,
    assemble_training_set,
    build_augmented_set,
    train_agreement_classifier,
)
from .mlp import (
    DropoutMlpSurrogate,
    Mlp,
    MlpConfig,
    PosteriorSamples,
    gradient_check,
    load_snapshot,
    mc_forward,
    save_snapshot,
    train_mlp,
)

__all__ = [
    "AgreementClassifier",
    "AgreementFit",
    "AugmentedSet",
    "DropoutMlpSurrogate",
    "Mlp",
    "MlpConfig",
    "PosteriorSamples",
    "assemble_training_set",
    "build_augmented_set",
    "gradient_check",
    "load_snapshot",
    "mc_forward",
    "save_snapshot",
    "train_agreement_classifier",
    "train_mlp",
]
