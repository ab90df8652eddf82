import os
import json
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv
from reportlab.lib import colors
from reportlab.lib.pagesizes import LETTER, landscape
from reportlab.lib.styles import getSampleStyleSheet
from reportlab.platypus import SimpleDocTemplate, Paragraph, Spacer, Table, TableStyle, PageBreak
from reportlab.lib.units import inch

load_dotenv()

REPO_ROOT = Path(__file__).resolve().parents[1]
OUTPUTS_DIR = REPO_ROOT / os.getenv("ETCN_OUTPUT_DIR", "outputs")
REPORT_NAME = "results_report.pdf"


def load_json(path: Path) -> Any:
    if not path.exists():
        raise FileNotFoundError(f"Missing required file: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def collect_sections(outputs_dir: Path) -> List[Dict[str, Any]]:
    """One section per result file found under outputs_dir, in a stable order."""
    sections: List[Dict[str, Any]] = []

    for path in sorted(outputs_dir.rglob("*_metrics.csv")):
        sections.append({"title": f"Metrics: {path.relative_to(outputs_dir)}", "frame": pd.read_csv(path)})

    for path in sorted(outputs_dir.rglob("*_confusion.csv")):
        frame = pd.read_csv(path)
        sections.append({"title": f"Confusion matrix (rows true, columns predicted): {path.relative_to(outputs_dir)}",
                         "frame": frame})

    for path in sorted(outputs_dir.rglob("ablation.csv")):
        sections.append({"title": f"Model variants: {path.relative_to(outputs_dir)}", "frame": pd.read_csv(path)})

    for path in sorted(outputs_dir.rglob("best_assignment.json")):
        report = load_json(path)
        rows = [(k, v) for k, v in sorted(report.get("best_assignment", {}).items())]
        rows += [(k, report.get(k)) for k in ("best_fitness", "fitness_split", "evaluations", "failures", "iterations")]
        sections.append({"title": f"Sparrow search result: {path.relative_to(outputs_dir)}",
                         "frame": pd.DataFrame(rows, columns=["field", "value"])})

    for path in sorted(outputs_dir.rglob("curves.csv")):
        frame = pd.read_csv(path)
        # Last epoch only; the full curve lives in the CSV
        sections.append({"title": f"Final epoch: {path.relative_to(outputs_dir)}", "frame": frame.tail(1)})

    return sections


def format_cell(value: Any) -> str:
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render_pdf(sections: List[Dict[str, Any]], output_path: Path) -> None:
    output_path.parent.mkdir(parents=True, exist_ok=True)

    doc = SimpleDocTemplate(
        str(output_path),
        pagesize=landscape(LETTER),
        leftMargin=0.5 * inch,
        rightMargin=0.5 * inch,
        topMargin=0.6 * inch,
        bottomMargin=0.6 * inch,
        title="ETCN Fault Diagnosis Results",
    )
    styles = getSampleStyleSheet()

    story: List[Any] = []
    story.append(Paragraph("ETCN Fault Diagnosis Results", styles["Title"]))
    story.append(Spacer(1, 0.2 * inch))

    if not sections:
        story.append(Paragraph("No result files found.", styles["BodyText"]))

    first = True
    for section in sections:
        if not first:
            story.append(PageBreak())
        first = False

        story.append(Paragraph(section["title"], styles["Heading2"]))
        story.append(Spacer(1, 0.1 * inch))

        frame: pd.DataFrame = section["frame"]
        data: List[List[Any]] = [[Paragraph(str(c), styles["BodyText"]) for c in frame.columns]]
        for row in frame.itertuples(index=False):
            data.append([Paragraph(format_cell(v), styles["BodyText"]) for v in row])

        # Equal column widths over the printable width
        n_cols = max(1, len(frame.columns))
        col_widths = [doc.width / n_cols] * n_cols

        table = Table(data, colWidths=col_widths, repeatRows=1)
        table.hAlign = "LEFT"
        table.setStyle(TableStyle([
            ("BACKGROUND", (0, 0), (-1, 0), colors.HexColor("#f0f0f0")),
            ("TEXTCOLOR", (0, 0), (-1, 0), colors.black),
            ("GRID", (0, 0), (-1, -1), 0.25, colors.grey),
            ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
            ("VALIGN", (0, 0), (-1, -1), "TOP"),
            ("FONTSIZE", (0, 0), (-1, -1), 8),
            ("ROWBACKGROUNDS", (0, 1), (-1, -1), [colors.white, colors.HexColor("#fafafa")]),
        ]))
        story.append(table)

    doc.build(story)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Render metrics, ablation and tuning CSVs into one PDF.")
    parser.add_argument("outputs_dir", nargs="?", type=Path, default=OUTPUTS_DIR,
                        help="Directory holding command outputs (default: $ETCN_OUTPUT_DIR)")
    parser.add_argument("--pdf", type=Path, default=None, help=f"Output file (default: <outputs_dir>/{REPORT_NAME})")
    args = parser.parse_args(argv)

    if not args.outputs_dir.exists():
        raise FileNotFoundError(f"Missing outputs directory: {args.outputs_dir}")
    output_pdf = args.pdf or args.outputs_dir / REPORT_NAME
    sections = collect_sections(args.outputs_dir)
    render_pdf(sections, output_pdf)
    print(f"Wrote PDF with {len(sections)} result sections to: {output_pdf}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
