"""CSV / JSON persistence of rate curves and plot-data export."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Optional

from .config import ExperimentConfig
from .stats import CurvePoint, RateCurve

__all__ = ["CSV_COLUMNS", "curves_to_csv", "write_results", "read_curves", "plot_data"]

CSV_COLUMNS = ("scheme", "rho", "snr_dB", "mean_rate", "ci95", "samples")


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def _rows(curve: RateCurve) -> list[list[str]]:
    return [[curve.scheme, _fmt(curve.rho), _fmt(p.snr_dB), _fmt(p.mean), _fmt(p.ci95), str(p.samples)]
            for p in curve.points]


def curves_to_csv(curves: Iterable[RateCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in curves:
        w.writerows(_rows(c))
    return buf.getvalue()


def _curve_digest(curve: RateCurve) -> str:
    text = "\n".join(",".join(r) for r in _rows(curve))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_results(cfg: ExperimentConfig, curves: list[RateCurve], out_dir: str | Path,
                  stem: Optional[str] = None) -> tuple[Path, Path]:
    """
    Write ``<stem>.csv`` and the ``<stem>.json`` sidecar into ``out_dir``.

    The sidecar holds the full configuration, its fingerprint, and one
    entry per curve with a digest of that curve's rows.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or cfg.experiment
    csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
    csv_path.write_text(curves_to_csv(curves), encoding="utf-8")
    side = {
        "config": cfg.to_dict(),
        "fingerprint": cfg.fingerprint(),
        "curves": [{"scheme": c.scheme, "rho": c.rho, "config_fingerprint": c.fingerprint,
                    "data_sha256": _curve_digest(c)} for c in curves],
    }
    json_path.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, json_path


def read_curves(path: str | Path) -> list[RateCurve]:
    """Load curves from a results CSV; the sidecar next to it supplies fingerprints if present."""
    path = Path(path)
    groups: dict[tuple[str, Optional[float]], list[CurvePoint]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected columns {CSV_COLUMNS}, got {reader.fieldnames}")
        for row in reader:
            rho = float(row["rho"]) if row["rho"] else None
            ci = float(row["ci95"]) if row["ci95"] else None
            groups.setdefault((row["scheme"], rho), []).append(
                CurvePoint(float(row["snr_dB"]), float(row["mean_rate"]), ci, int(row["samples"])))
    fp = ""
    side = path.with_suffix(".json")
    if side.exists():
        fp = json.loads(side.read_text(encoding="utf-8")).get("fingerprint", "")
    return [RateCurve(s, r, pts, fp) for (s, r), pts in groups.items()]


def plot_data(curves: Iterable[RateCurve], fmt: str = "gnuplot") -> str:
    """
    Plot-ready text: gnuplot data blocks (one indexed block per curve)
    or a vega-lite style list of records.
    """
    curves = list(curves)
    if fmt == "gnuplot":
        lines = []
        for c in curves:
            lines.append(f'# "{c.label}"')
            lines.append("# snr_dB mean_rate ci95")
            for p in c.points:
                lines.append(f"{p.snr_dB:g} {p.mean:.6g} {p.ci95 if p.ci95 is not None else 'NaN'}")
            lines.extend(["", ""])
        return "\n".join(lines)
    if fmt == "vega":
        records = [{"scheme": c.scheme, "rho": c.rho, "curve": c.label, "snr_dB": p.snr_dB,
                    "mean_rate": p.mean, "ci95": p.ci95, "samples": p.samples}
                   for c in curves for p in c.points]
        return json.dumps({"values": records}, indent=1)
    raise ValueError(f"unknown plot format {fmt!r}; expected 'gnuplot' or 'vega'")
