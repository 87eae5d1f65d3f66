"""CPU video-frame-prediction engine: encoder-decoder ConvLSTM, an FC-LSTM
baseline, a synthetic moving-agent dataset generator and PSNR/SSIM evaluation.
"""

from ._core import (
    Dataset,
    FcLstm,
    PromNet,
    __version__,
    generate_dataset,
    gradcheck,
    load_model,
    num_threads,
    psnr,
    set_num_threads,
    ssim,
)

__all__ = [
    "Dataset",
    "FcLstm",
    "PromNet",
    "__version__",
    "generate_dataset",
    "gradcheck",
    "load_model",
    "num_threads",
    "psnr",
    "set_num_threads",
    "ssim",
]
