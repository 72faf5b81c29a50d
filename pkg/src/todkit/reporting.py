"""Report rendering: aligned tables, delimited files and figures.

The evaluate and sweep commands write machine-readable JSON/TSV next to
PNG figures rendered with matplotlib's Agg backend.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import EvalReport  # noqa: E402

# Headline columns, in the conventional reporting order.
_HEADLINE = ("bleu", "jga", "slot_f1", "success")


def render_table(report: EvalReport) -> str:
    """Aligned metric table: headline row first, details below."""
    headline_names = ("BLEU", "JGA", "Slot-F1", "Success")
    values = [getattr(report, key) for key in _HEADLINE]
    widths = [max(len(n), 7) for n in headline_names]
    lines = [
        "  ".join(n.rjust(w) for n, w in zip(headline_names, widths)),
        "  ".join(f"{v:.4f}".rjust(w) if k != "bleu" else f"{v:.2f}".rjust(w)
                  for v, w, k in zip(values, widths, _HEADLINE)),
        "",
        f"dataset: {report.dataset}   dialogues: {report.n_dialogues}   "
        f"turns: {report.n_turns}",
        f"domain accuracy: {report.domain_accuracy:.4f}   "
        f"slot precision: {report.slot_precision:.4f}   "
        f"slot recall: {report.slot_recall:.4f}",
    ]
    if report.per_domain:
        lines.append("")
        lines.append("per-domain:")
        for domain, entry in sorted(report.per_domain.items()):
            detail = "  ".join(f"{key}={value:.4f}" if key != "turns"
                               else f"{key}={int(value)}"
                               for key, value in sorted(entry.items()))
            lines.append(f"  {domain:<12} {detail}")
    return "\n".join(lines)


def write_report_tsv(report: EvalReport, path: Union[str, Path]) -> None:
    rows = [("metric", "value")]
    data = report.to_dict()
    for key in ("dataset", "n_dialogues", "n_turns", "domain_accuracy",
                "jga", "slot_precision", "slot_recall", "slot_f1", "bleu",
                "success"):
        rows.append((key, str(data[key])))
    for domain, entry in sorted(report.per_domain.items()):
        for key, value in sorted(entry.items()):
            rows.append((f"per_domain.{domain}.{key}", str(value)))
    Path(path).write_text("\n".join("\t".join(r) for r in rows) + "\n")


def _bar_figure(labels: Sequence[str], values: Sequence[float], title: str,
                ylabel: str, path: Path, ylim: Optional[tuple] = (0.0, 1.0),
                ) -> None:
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(labels)), 3.2))
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if ylim:
        ax.set_ylim(*ylim)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_figures(report: EvalReport, out_dir: Union[str, Path]) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    path = out / "metrics_overview.png"
    _bar_figure(["domain acc", "JGA", "slot F1", "success"],
                [report.domain_accuracy, report.jga, report.slot_f1,
                 report.success],
                f"{report.dataset}: headline metrics", "ratio", path)
    written.append(path)

    domains = sorted(d for d, e in report.per_domain.items() if "jga" in e)
    if domains:
        path = out / "per_domain_jga.png"
        _bar_figure(domains,
                    [report.per_domain[d]["jga"] for d in domains],
                    "joint goal accuracy per domain", "JGA", path)
        written.append(path)

    domains = sorted(d for d, e in report.per_domain.items()
                     if "domain_accuracy" in e)
    if domains:
        path = out / "domain_detection.png"
        _bar_figure(domains,
                    [report.per_domain[d]["domain_accuracy"] for d in domains],
                    "domain detection accuracy", "accuracy", path)
        written.append(path)
    return written


def write_sweep_outputs(points: Sequence[Mapping], out_dir: Union[str, Path],
                        ) -> list[Path]:
    """Pool-size sweep results: TSV plus a success-vs-pool-size curve."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    tsv = out / "sweep.tsv"
    header = ("pool_size", "success", "jga", "slot_f1", "bleu")
    lines = ["\t".join(header)]
    for point in points:
        lines.append("\t".join(str(point.get(k, "")) for k in header))
    tsv.write_text("\n".join(lines) + "\n")
    written.append(tsv)

    (out / "sweep.json").write_text(
        json.dumps(list(points), indent=2, sort_keys=True) + "\n")
    written.append(out / "sweep.json")

    sizes = [p["pool_size"] for p in points]
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    ax.plot(sizes, [p["success"] for p in points], marker="o",
            label="success")
    if all("jga" in p for p in points):
        ax.plot(sizes, [p["jga"] for p in points], marker="s", label="JGA")
    ax.set_xlabel("examples per domain in the context store")
    ax.set_ylabel("ratio")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    path = out / "sweep.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def render_annotation_table(aggregate: Mapping) -> str:
    rows = [
        ("dialogues", str(aggregate["dialogues"])),
        ("subdialogues", str(aggregate["subdialogues"])),
        ("clarify / dial", f"{aggregate['clarify_per_dialogue']:.2f}"),
        ("successful subdialogues",
         f"{aggregate['successful_subdialogues_percent']}%"),
        ("successful dialogues",
         f"{aggregate['successful_dialogues_percent']}%"),
        ("correctly captured",
         f"{aggregate['correctly_captured_percent']}%"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)
