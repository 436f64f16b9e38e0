"""Fixed plot style so re-rendering a figure reproduces it byte for byte."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

RC = {
    "figure.figsize": (7.2, 4.45),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8,
    "axes.prop_cycle": plt.cycler(
        color=["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#7f7f7f"]
    ),
}


def new_figure(nrows=1, ncols=1, **kw):
    with plt.rc_context(RC):
        fig, axes = plt.subplots(nrows, ncols, **kw)
    return fig, axes


def save(fig, out_path):
    fig.savefig(out_path, metadata=_no_timestamp_metadata(str(out_path)))
    plt.close(fig)


def _no_timestamp_metadata(path):
    # PNG carries no timestamp by default; strip the date from formats that do
    if path.endswith(".pdf"):
        return {"CreationDate": None}
    if path.endswith(".svg"):
        return {"Date": None}
    return None
