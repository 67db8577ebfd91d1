import csv
import io

from graph.model import DEFAULT_PREFIXES
from graph.turtle import format_iri
from infra.storage import atomic_write_text, write_json

TSV_COLUMNS = ("property", "model", "tp", "fp", "fn", "f1")


def per_property_breakdown(reports: dict, prefixes: dict | None = None) -> list:
    """Rows ``(property, model, tp, fp, fn, f1)`` for every property a model's report scored.

    ``reports`` maps a model name to its EvalReport. Properties with neither gold nor predicted
    triples have no row.
    """
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    rows = []
    for model in sorted(reports):
        for p, sc in sorted(reports[model].per_property.items(), key=lambda kv: kv[0].value):
            if sc.tp + sc.fp + sc.fn == 0:
                continue
            rows.append((format_iri(p, prefixes), model, sc.tp, sc.fp, sc.fn, sc.f1))
    return rows


def breakdown_tsv(rows: list) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    writer.writerow(TSV_COLUMNS)
    for prop, model, tp, fp, fn, f1 in rows:
        writer.writerow([prop, model, tp, fp, fn, f"{f1:.6f}"])
    return buffer.getvalue()


def plot_data(rows: list) -> dict:
    """``{property: {model: f1}}`` for external plotting."""
    data = {}
    for prop, model, _, _, _, f1 in rows:
        data.setdefault(prop, {})[model] = f1
    return data


def write_breakdown(tsv_path: str, json_path: str, rows: list) -> None:
    atomic_write_text(tsv_path, breakdown_tsv(rows))
    write_json(json_path, plot_data(rows))
