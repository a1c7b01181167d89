"""CNN denoiser for spherical signals over a fixed framelet bridge."""

from .bridge import FrameletBridge
from .formats import Bank, Signal, from_faces, read_bank, read_signal, to_faces
from .model import (
    PARAM_BUDGET,
    ModelConfig,
    SphereDenoiser,
    build_model,
    trainable_parameters,
)
from .training import (
    FacePairs,
    TrainingCurve,
    denoise_faces,
    evaluate,
    face_psnrs,
    load_checkpoint,
    load_pairs,
    save_checkpoint,
    signal_pairs,
    sphere_psnr,
    train,
    write_report,
)

__version__ = "0.1.0"
