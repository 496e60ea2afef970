"""unitlora: low-rank language adaptation for a masked-prediction speech
encoder, with k-means unit tokenization and forgetting-aware evaluation."""

__version__ = "0.1.0"

from .audio import AudioBuffer, load_wav
from .features import FeatureMatrix, MfccConfig, mfcc39
from .kmeans import Codebook, KMeansConfig, assign, kmeanspp_init, minibatch_fit
from .lora import LoraAdapter, LoraConfig, LoraSet, adapt_train_step, attach, forward_with_lora, merge
from .model import (
    EncoderModel,
    HiddenStates,
    ModelConfig,
    count_parameters,
    forward,
    init_model,
    masked_prediction_loss,
)
from .pipeline import (
    AdaptationPlan,
    MixSpec,
    one_iteration_adapt,
    preservation_datamix,
    preservation_recluster,
    two_iteration_adapt,
)
from .units import UnitSequence, deduplicate, unit_edit_distance
from .evaluation import EvalReport, cluster_purity, evaluate

__all__ = [
    "AudioBuffer",
    "load_wav",
    "FeatureMatrix",
    "MfccConfig",
    "mfcc39",
    "Codebook",
    "KMeansConfig",
    "assign",
    "kmeanspp_init",
    "minibatch_fit",
    "LoraAdapter",
    "LoraConfig",
    "LoraSet",
    "adapt_train_step",
    "attach",
    "forward_with_lora",
    "merge",
    "EncoderModel",
    "HiddenStates",
    "ModelConfig",
    "count_parameters",
    "forward",
    "init_model",
    "masked_prediction_loss",
    "AdaptationPlan",
    "MixSpec",
    "one_iteration_adapt",
    "preservation_datamix",
    "preservation_recluster",
    "two_iteration_adapt",
    "UnitSequence",
    "deduplicate",
    "unit_edit_distance",
    "EvalReport",
    "cluster_purity",
    "evaluate",
]
