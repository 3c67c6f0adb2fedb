"""SVG scatter charts and a static HTML report for saved campaigns.

Each chart puts the sample index on the X axis and one quantity on the Y
axis with a horizontal zero line; passing several campaign directories
draws them as side-by-side panels (e.g. the 10³ and 10⁶ scenarios).
"""

import html
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import CampaignIOError, ConfigError  # noqa: E402
from .findings import FindingStore, get_hostname, get_username  # noqa: E402
from .results import CampaignSummary, read_samples_csv  # noqa: E402

# Columns that are inputs or bookkeeping rather than plotted quantities.
_NON_QUANTITY = {
    "index", "l1", "l2", "l3", "l4", "lA", "lB", "m1", "m2", "m3", "m4", "mA", "mB",
    "dim", "violations", "converged",
}

LABELS = {
    "delta_min": "Δ_min",
    "delta_max": "Δ_max",
    "delta_mix": "Δ_mix",
    "delta": "Δ",
    "delta_bar": "Δ̄",
    "delta_s": "△S",
}


class CampaignData:
    """Summary and retained rows of one saved campaign directory."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        samples = self.directory / "samples.csv"
        if not samples.exists():
            raise CampaignIOError("no samples.csv (plots need --format csv)", str(samples))
        self.summary = CampaignSummary.load(str(self.directory / "summary.json"))
        self.header, rows = read_samples_csv(samples)
        self.rows = np.asarray(rows, dtype=float).reshape(len(rows), len(self.header))
        self.finding_counts = FindingStore(self.directory / "findings.jsonl").counts()

    @property
    def label(self) -> str:
        return f"{self.summary.experiment}, n = {self.summary.n_samples:,}"

    def quantities(self) -> List[str]:
        return [c for c in self.header if c not in _NON_QUANTITY]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.header.index(name)]


def scatter_figure(panels: Sequence[Tuple[str, np.ndarray, np.ndarray]], quantity: str):
    """One panel per (title, x, y) triple, sharing nothing but the style."""
    fig, axes = plt.subplots(1, len(panels), figsize=(5.5 * len(panels), 4.0), squeeze=False)
    label = LABELS.get(quantity, quantity)
    for ax, (title, x, y) in zip(axes[0], panels):
        negative = y < 0.0
        ax.scatter(x[~negative], y[~negative], s=2, color="tab:blue", linewidths=0)
        ax.scatter(x[negative], y[negative], s=4, color="tab:red", linewidths=0)
        ax.axhline(0.0, color="black", linewidth=0.8)
        ax.set_xlabel("sample index")
        ax.set_ylabel(label)
        ax.set_title(f"{label}: {title}", fontsize=10)
    fig.tight_layout()
    return fig


def generate_plots(
    directories: Sequence[Path],
    output_dir: Path,
    quantities: Optional[Sequence[str]] = None,
) -> List[Path]:
    """Write ``<quantity>.svg`` for every quantity shared by all campaigns.

    Raises:
        ConfigError: a requested quantity is missing from some campaign.
    """
    campaigns = [CampaignData(d) for d in directories]
    shared = [q for q in campaigns[0].quantities() if all(q in c.header for c in campaigns[1:])]
    if quantities:
        missing = [q for q in quantities if q not in shared]
        if missing:
            raise ConfigError(f"quantities not present in every campaign: {missing}")
        shared = list(quantities)

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    plt.rcParams["svg.hashsalt"] = "relent"
    paths = []
    for quantity in shared:
        panels = [(c.label, c.column("index"), c.column(quantity)) for c in campaigns]
        fig = scatter_figure(panels, quantity)
        path = output_dir / f"{quantity}.svg"
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise CampaignIOError(f"could not write chart ({e.strerror})", str(path)) from e
        finally:
            plt.close(fig)
        paths.append(path)
    return paths


def _summary_table(campaign: CampaignData) -> str:
    rows = []
    for name, tally in sorted(campaign.summary.tallies.items()):
        rows.append(
            "<tr>"
            f"<td>{html.escape(LABELS.get(name, name))}</td>"
            f"<td>{tally.negative:,}</td><td>{tally.zero:,}</td><td>{tally.positive:,}</td>"
            f"<td>{tally.negative_fraction:.6f}</td>"
            f"<td>{tally.min_value:.6g}</td><td>{tally.max_value:.6g}</td>"
            "</tr>"
        )
    counters = "".join(
        f"<li>{html.escape(k)}: {v:,}</li>" for k, v in sorted(campaign.summary.counters.items())
    )
    findings = "".join(
        f"<li>{html.escape(k)}: {v:,}</li>" for k, v in sorted(campaign.finding_counts.items())
    )
    return (
        f"<h2>{html.escape(campaign.label)} (seed {campaign.summary.master_seed})</h2>"
        "<table><tr><th>quantity</th><th>negative</th><th>zero</th><th>positive</th>"
        "<th>negative fraction</th><th>min</th><th>max</th></tr>"
        + "".join(rows)
        + "</table>"
        + (f"<ul>{counters}</ul>" if counters else "")
        + (f"<h3>findings.jsonl</h3><ul class=\"findings\">{findings}</ul>" if findings else "")
    )


def generate_report(
    directories: Sequence[Path],
    output_dir: Path,
    quantities: Optional[Sequence[str]] = None,
) -> Dict[str, Path]:
    """Charts plus ``report.html`` embedding them next to the summary tables."""
    charts = generate_plots(directories, output_dir, quantities)
    campaigns = [CampaignData(d) for d in directories]
    figures = "".join(
        f'<figure><img src="{html.escape(p.name)}" alt="{html.escape(p.stem)}">'
        f"<figcaption>{html.escape(LABELS.get(p.stem, p.stem))}</figcaption></figure>"
        for p in charts
    )
    page = f"""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Relative entropy campaigns</title>
<style>
body {{ font-family: -apple-system, BlinkMacSystemFont, sans-serif; margin: 2em; color: #222; }}
table {{ border-collapse: collapse; margin-bottom: 1em; }}
td, th {{ border: 1px solid #ccc; padding: 4px 8px; text-align: right; }}
td:first-child, th:first-child {{ text-align: left; }}
figure {{ display: inline-block; margin: 1em 0; }}
footer {{ color: #888; font-size: 0.85em; }}
</style>
</head>
<body>
<h1>Relative entropy campaigns</h1>
{''.join(_summary_table(c) for c in campaigns)}
{figures}
<footer>Generated {datetime.utcnow().isoformat(timespec="seconds")}Z on {html.escape(get_hostname())} by {html.escape(get_username())}</footer>
</body>
</html>
"""
    report = Path(output_dir) / "report.html"
    try:
        with open(report, "w") as f:
            f.write(page)
    except OSError as e:
        raise CampaignIOError(f"could not write report ({e.strerror})", str(report)) from e
    return {"report": report, **{p.stem: p for p in charts}}
