from .figures import emit_figures, plot_frame_strip, plot_ssim_curves
from .scores import (
    Z95,
    Evaluation,
    LeadTimeScore,
    aggregate,
    evaluate,
    group_by_model,
    persistence,
    read_per_sample,
    read_scores,
    write_scores,
)
from .ssim import gaussian_window, ssim, ssim_map
