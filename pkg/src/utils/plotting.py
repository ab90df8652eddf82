import logging
from pathlib import Path
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)


def plot_lines(path: Path, x: Sequence[float], series: Dict[str, Sequence[float]],
               title: str, xlabel: str, ylabel: str) -> Path:
    """Renders one SVG line chart; one line per entry of `series`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # svg.hashsalt keeps element ids stable between runs
    with plt.rc_context({"svg.hashsalt": "etcn", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for label, values in series.items():
            ax.plot(list(x), list(values), linewidth=1.5, label=label)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info(f"[PLOT] Wrote {path}")
    return path
