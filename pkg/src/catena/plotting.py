"""PNG figures written next to the tables when ``--figures`` is given."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "font.size": 10,
}


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", bbox_inches="tight")
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)


def line_figure(path, x, series: dict, xlabel: str, ylabel: str, title: str = "",
                logy: bool = False, hline: float | None = None) -> Path:
    """One line per entry of ``series`` against the shared abscissa ``x``."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, y in series.items():
            ax.plot(x, y, label=label)
        if hline is not None:
            ax.axhline(hline, color="0.4", lw=0.8, ls="--")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(fontsize=8, ncol=2 if len(series) > 6 else 1)
        _save(fig, path)
    return path


def field_figure(path, z, r, psi, title: str = "") -> Path:
    """Filled contours of the potential over the physical (z, r) gap."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.grid(False)
        cs = ax.contourf(z, r, psi, levels=21, cmap="viridis")
        ax.plot(z[:, 0], r[:, 0], color="k", lw=1.0)
        fig.colorbar(cs, ax=ax, label="psi")
        ax.set_xlabel("z")
        ax.set_ylabel("r")
        if title:
            ax.set_title(title)
        _save(fig, path)
    return path
