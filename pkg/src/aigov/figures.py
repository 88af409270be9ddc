"""Figure rendering for reports and evaluation curves.

The report path writes PNG charts next to the delimited tables so a
stakeholder deck and a spreadsheet come from the same command.  Keep
matplotlib on the Agg backend: everything here must run headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SEVERITY_ORDER = ("High", "Medium", "Low")
SEVERITY_COLORS = {"High": "#c0392b", "Medium": "#e67e22", "Low": "#f1c40f"}


def severity_figure(report: dict, path: Union[str, Path]) -> Path:
    """Bar chart of finding counts per severity class."""
    counts = {s: 0 for s in SEVERITY_ORDER}
    for card in report.get("risks", []):
        counts[card["severity"]] = counts.get(card["severity"], 0) + 1
    fig, ax = plt.subplots(figsize=(4.2, 3.0))
    ax.bar(
        list(counts.keys()),
        list(counts.values()),
        color=[SEVERITY_COLORS[s] for s in counts],
    )
    ax.set_ylabel("findings")
    ax.set_title("Risk findings by severity")
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def ranking_figure(report: dict, path: Union[str, Path]) -> Path:
    """Horizontal bars of total risk value per ranked model (higher is
    safer under the tri-score convention)."""
    ranked = report.get("models", {}).get("ranked", [])
    labels = [r["model"] for r in ranked][::-1]
    values = [r["total_risk_value"] for r in ranked][::-1]
    fig, ax = plt.subplots(figsize=(5.0, max(2.0, 0.6 * len(labels) + 1.2)))
    ax.barh(labels, values, color="#2980b9")
    ax.axvline(0.0, color="#7f8c8d", linewidth=0.8)
    ax.set_xlim(-1.05, 1.05)
    ax.set_xlabel("weighted tri-score (higher = safer)")
    ax.set_title("Model ranking")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def recall_curve_figure(rows: Sequence[dict], path: Union[str, Path]) -> Path:
    """Precision/recall/F1 over cumulative extraction runs."""
    runs = [r["runs"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    for key, marker in (("precision", "o"), ("recall", "s"), ("f1", "^")):
        ax.plot(runs, [r[key] for r in rows], marker=marker, label=key)
    ax.set_xlabel("accumulated runs")
    ax.set_ylabel("score")
    ax.set_ylim(0.0, 1.05)
    ax.legend(frameon=False)
    ax.set_title("Match quality over runs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def write_risks_tsv(report: dict, path: Union[str, Path]) -> Path:
    lines = ["risk_id\tname\tseverity\tavg_score\tmeasurable"]
    for card in report.get("risks", []):
        lines.append(
            f"{card['risk_id']}\t{card['risk_name']}\t{card['severity']}"
            f"\t{card['avg_score']:.4f}\t{str(card['measurable']).lower()}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def write_ranking_tsv(report: dict, path: Union[str, Path]) -> Path:
    lines = ["model\ttotal_risk_value\tscored_risks\tmissing_risks"]
    models = report.get("models", {})
    missing = models.get("missing_evals", {})
    for entry in models.get("ranked", []):
        scored = sum(1 for d in entry["per_risk"].values() if d["tri"] is not None)
        lines.append(
            f"{entry['model']}\t{entry['total_risk_value']:.4f}\t{scored}"
            f"\t{len(missing.get(entry['model'], []))}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def render_report_outputs(report: dict, out_dir: Union[str, Path]) -> list[Path]:
    """Delimited tables plus figures for one report document."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        write_risks_tsv(report, out_dir / "risks.tsv"),
        write_ranking_tsv(report, out_dir / "ranking.tsv"),
        severity_figure(report, out_dir / "severity.png"),
        ranking_figure(report, out_dir / "ranking.png"),
    ]
