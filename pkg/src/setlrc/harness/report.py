"""Writing protocol reports as JSON or CSV."""

import csv
import json

CSV_COLUMNS = ("repeat", "set_id", "true_label", "predicted_label", "decided_by_tie", "seconds")


def report_rows(report):
    for rep in report.repeats:
        for p in rep["predictions"]:
            yield {
                "repeat": rep["repeat"],
                "set_id": p["set_id"],
                "true_label": p["true_label"],
                "predicted_label": p["predicted_label"],
                "decided_by_tie": int(p["tie"]),
                "seconds": repr(p["seconds"]),
            }


def emit_report(report, fmt, path):
    """Write ``report`` to ``path`` as ``json`` (full record) or ``csv`` (one row per test set)."""
    if not path:
        raise ValueError("report path must be a non-empty string")
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(report_rows(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path
