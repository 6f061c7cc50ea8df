"""Phase-aware complex-valued attention networks.

Subpackages and modules:

* ``ctensor`` -- complex linear-algebra primitives (inner products, phase
  extraction, softmax, layer normalization);
* ``kernels`` -- fused attention kernel backends (compiled / numpy / naive
  reference);
* ``attention`` -- phase-aware self-attention with traces, the cosine
  baseline and multi-head plumbing;
* ``autodiff`` -- reverse-mode gradients over the real-pair representation
  of complex tensors, with a finite-difference oracle;
* ``model`` -- complex encoder with dual-headed decoding and all loss terms;
* ``optim`` -- parameter store, Adam, schedules and the training loop;
* ``synthdata`` -- seeded synthetic tasks and noise channels;
* ``theory`` -- executable verification of the eight attention guarantees;
* ``evaluate`` -- classification/regression metrics and robustness sweeps;
* ``bench`` -- kernel benchmark and forward-cost scaling fit;
* ``cli`` -- the ``holoformer`` command-line harness.
"""

__version__ = "0.1.0"

from .attention import (AttentionConfig, AttentionTrace, attention_output,
                        holographic_attention, multi_head,
                        standard_cosine_attention)
from .errors import (ConfigurationError, DataError, DimensionError,
                     HoloformerError, TrainingDiverged)
from .model import HoloModel, LossBreakdown, ModelConfig, load_model, save_model
from .optim import ParamStore, TrainSettings, adam_step, train
from .synthdata import (Dataset, NoiseSpec, apply_amplitude_noise,
                        apply_phase_jitter, gen_phase_classification,
                        gen_phasor_prediction)

__all__ = [
    "AttentionConfig", "AttentionTrace", "attention_output",
    "holographic_attention", "multi_head", "standard_cosine_attention",
    "ConfigurationError", "DataError", "DimensionError", "HoloformerError",
    "TrainingDiverged", "HoloModel", "LossBreakdown", "ModelConfig",
    "load_model", "save_model", "ParamStore", "TrainSettings", "adam_step",
    "train", "Dataset", "NoiseSpec", "apply_amplitude_noise",
    "apply_phase_jitter", "gen_phase_classification", "gen_phasor_prediction",
]
