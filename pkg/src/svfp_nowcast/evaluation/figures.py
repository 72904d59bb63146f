"""SSIM-versus-lead-time curves and ground-truth/forecast frame strips."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import BoundaryNorm, ListedColormap  # noqa: E402

from ..data.radar import DEFAULT_CLASS_TABLE, N_CLASSES, ClassTable, normalized_to_class  # noqa: E402
from ..errors import ConfigurationError  # noqa: E402
from .scores import LeadTimeScore, group_by_model  # noqa: E402


def class_colormap() -> tuple[ListedColormap, BoundaryNorm]:
    """14-class palette; class 0 (dry) is fully transparent."""
    colors = plt.get_cmap("turbo")(np.linspace(0.1, 0.95, N_CLASSES - 1))
    colors = np.vstack([[0.0, 0.0, 0.0, 0.0], colors])
    cmap = ListedColormap(colors, name="rain_classes")
    return cmap, BoundaryNorm(np.arange(-0.5, N_CLASSES), N_CLASSES)


def plot_ssim_curves(scores: list[LeadTimeScore], path, n_inputs: int = 5, timestep_min: float = 15.0) -> Path:
    """One curve per model with its shaded 95% band; reconstruction frames sit at 1..n_inputs."""
    if not scores:
        raise ConfigurationError("no scores to plot")
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, group in group_by_model(scores).items():
        for kind, style in (("reconstruction", "--"), ("forecast", "-")):
            rows = sorted((s for s in group if s.kind == kind), key=lambda s: s.lead)
            if not rows:
                continue
            x = np.array([s.lead for s in rows]) + (n_inputs if kind == "forecast" else 0)
            m = np.array([s.mean for s in rows])
            ci = np.array([s.ci for s in rows])
            label = name if kind == "forecast" else f"{name} (reconstruction)"
            (line,) = ax.plot(x, m, style, marker="o", ms=3, label=label)
            ax.fill_between(x, m - ci, m + ci, color=line.get_color(), alpha=0.25)
    ax.axvline(n_inputs + 0.5, color="0.5", lw=0.8)
    ax.set_xlabel(f"frame ({timestep_min:g} min apart; forecast starts at {n_inputs + 1})")
    ax.set_ylabel("mean SSIM")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_frame_strip(rows: dict[str, np.ndarray], path, table: ClassTable = DEFAULT_CLASS_TABLE,
                     n_inputs: int | None = None) -> Path:
    """Rows of normalized frames (e.g. truth / SVFP mean / baseline) on the class colour scale.

    Each value is a ``(T, H, W)`` array; rows shorter than the longest are
    right-aligned so that forecast columns line up.
    """
    if not rows:
        raise ConfigurationError("no frames to plot")
    ncol = max(len(v) for v in rows.values())
    cmap, norm = class_colormap()
    fig, axes = plt.subplots(len(rows), ncol, figsize=(1.1 * ncol + 1.2, 1.2 * len(rows)), squeeze=False)
    im = None
    for r, (label, frames) in enumerate(rows.items()):
        offset = ncol - len(frames)
        for c in range(ncol):
            ax = axes[r, c]
            ax.set_xticks([])
            ax.set_yticks([])
            ax.set_facecolor("white")
            if c >= offset and frames[c - offset] is not None:
                im = ax.imshow(normalized_to_class(frames[c - offset]), cmap=cmap, norm=norm, interpolation="nearest")
            else:
                ax.axis("off")
            if c == 0:
                ax.set_ylabel(label, fontsize=7)
            if n_inputs is not None and c == n_inputs:
                ax.spines["left"].set_color("red")
                ax.spines["left"].set_linewidth(2)
    cbar = fig.colorbar(im, ax=axes.ravel().tolist(), ticks=np.arange(N_CLASSES), fraction=0.02)
    edges = ["<%g" % table.boundaries[0]] + ["%g" % b for b in table.boundaries]
    cbar.ax.set_yticklabels(edges, fontsize=6)
    cbar.set_label("mm/h", fontsize=7)
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def emit_figures(scores: list[LeadTimeScore], examples: list[dict[str, np.ndarray]], out_dir,
                 n_inputs: int = 5, timestep_min: float = 15.0, table: ClassTable = DEFAULT_CLASS_TABLE) -> list[Path]:
    """Write ``ssim_curves.png`` and one ``strip_XX.png`` per entry of ``examples``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [plot_ssim_curves(scores, out / "ssim_curves.png", n_inputs, timestep_min)]
    for i, rows in enumerate(examples):
        paths.append(plot_frame_strip(rows, out / f"strip_{i:02d}.png", table, n_inputs))
    return paths
