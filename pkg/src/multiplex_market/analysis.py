"""Analysis chain for run outputs: returns, PDFs, fits and ensemble aggregation."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from . import records
from . import stats as S
from .errors import DegenerateSeriesError, InputError

SERIES = ("p1", "p2", "p_avg")
FRACTION_KEYS = ("fund_buy", "fund_sell", "chart_buy", "chart_sell")


def analyze_series(prices, bin_width: float = S.DEFAULT_BIN_WIDTH) -> tuple[dict, list]:
    """Summary and PDF rows for one price series.

    A degenerate series (constant, or too short) gives a summary with an
    ``error`` entry and null statistics instead of raising.
    """
    try:
        returns = S.normalized_returns(prices)
    except (DegenerateSeriesError, InputError) as exc:
        return {"q": None, "beta_fit": None, "amp": None, "excess_kurtosis": None,
                "error": str(exc)}, []
    z = returns.normalized
    centers, density = S.empirical_pdf(z, bin_width)
    summary = {
        "n_returns": int(z.size),
        "r_av": returns.r_av,
        "r_stdev": returns.r_stdev,
        "excess_kurtosis": S.excess_kurtosis(z),
    }
    try:
        fit = S.fit_qgaussian(centers, density)
    except InputError as exc:
        summary.update(q=None, beta_fit=None, amp=None, error=str(exc))
        model = np.full(centers.size, np.nan)
    else:
        summary.update(q=fit.q, beta_fit=fit.beta_fit, amp=fit.amp, residual=fit.residual,
                       converged=fit.converged, n_bins=fit.n_bins)
        model = S.qgaussian(centers, fit.q, fit.beta_fit, fit.amp)
    gauss = sps.norm.pdf(centers)
    rows = [list(r) for r in zip(centers.tolist(), density.tolist(), gauss.tolist(),
                                 model.tolist())]
    return summary, rows


def analyze_prices(series: Mapping[str, np.ndarray]) -> tuple[dict, list]:
    summary, pdf_rows = {}, []
    for name in SERIES:
        s, rows = analyze_series(series[name])
        summary[name] = s
        pdf_rows += [[name] + r for r in rows]
    return summary, pdf_rows


def analyze_directory(run_dir: str | Path) -> dict:
    """Read ``prices.csv`` (and ``avalanches.csv`` / ``run.json`` when present),
    write ``pdf.csv`` and ``summary.json``, and return the summary."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise InputError(f"run directory not found: {run_dir}")
    prices = records.read_prices(run_dir / "prices.csv")
    summary, pdf_rows = analyze_prices(prices)
    out = {"series": summary}
    if (run_dir / "avalanches.csv").is_file():
        sizes = records.read_avalanches(run_dir / "avalanches.csv")["size"]
        if sizes.size:
            out["avalanches"] = S.avalanche_statistics(sizes).to_dict()
    if (run_dir / "run.json").is_file():
        out["run"] = json.loads((run_dir / "run.json").read_text(encoding="utf-8"))
    records.write_csv(run_dir / "pdf.csv", records.PDF_COLUMNS, pdf_rows)
    write_json(run_dir / "summary.json", out)
    return out


def _median(values: Sequence) -> float | None:
    vals = [v for v in values if v is not None and not math.isnan(v)]
    return float(np.median(vals)) if vals else None


def ensemble_summary(run_summaries: Mapping[str, dict]) -> dict:
    """Medians over seeds of q and excess kurtosis per series, and of the
    buyer/seller fractions per character group."""
    per_series = {}
    for name in SERIES:
        qs = [s["series"][name].get("q") for s in run_summaries.values()]
        ks = [s["series"][name].get("excess_kurtosis") for s in run_summaries.values()]
        per_series[name] = {"median_q": _median(qs), "median_excess_kurtosis": _median(ks),
                            "q": qs, "excess_kurtosis": ks}
    fractions = {}
    for key in FRACTION_KEYS:
        vals = [s.get("run", {}).get("fractions", {}).get(key) for s in run_summaries.values()]
        fractions[key] = _median(vals)
    spans = [s.get("avalanches", {}).get("decade_span") for s in run_summaries.values()]
    return {"runs": sorted(run_summaries), "n_runs": len(run_summaries), "series": per_series,
            "fractions": fractions, "median_avalanche_decade_span": _median(spans)}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: str | Path, obj) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")
