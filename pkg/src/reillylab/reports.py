"""Report records, summary tables and convergence analysis for suite runs."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

SUMMARY_COLUMNS = ["theorem", "case", "lhs", "rhs", "margin", "gap", "verdict"]
CONVERGENCE_COLUMNS = ["case", "check", "p", "quantity", "level", "h", "value",
                       "extrapolated", "rate"]
FLOOR = 1e-11  # relative error treated as exact


def artifact_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "0+unknown"


def _clean(obj):
    """Replace non-finite floats so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    """Canonical JSON line (sorted keys, shortest round-trip floats)."""
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def record(case: str, check: str, kind: str, theorem: str, lhs, rhs, margin, gap, verdict: str,
           p=None, data: dict | None = None) -> dict:
    def num(v):
        return None if v is None else float(v)
    return {"type": "record", "case": case, "check": check, "kind": kind, "p": p,
            "theorem": theorem, "lhs": num(lhs), "rhs": num(rhs), "margin": num(margin),
            "gap": num(gap), "verdict": verdict, "data": data or {}}


def error_record(case: str, check: str, p, exc: Exception) -> dict:
    return record(case, check, "error", check, None, None, None, None, "error", p,
                  {"error": type(exc).__name__, "message": str(exc)})


def tally(records: list) -> dict:
    counts = {"pass": 0, "fail": 0, "hypothesis-not-met": 0, "error": 0}
    for r in records:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    counts["total"] = len(records)
    return counts


def write_report(path: str, header: dict, records: list, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(header) + "\n")
        for r in records:
            fh.write(dumps(r) + "\n")
        fh.write(dumps(summary) + "\n")


def read_report(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_csv(records: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in records:
        w.writerow([_fmt(r["theorem"]), _fmt(r["case"]), _fmt(r["lhs"]), _fmt(r["rhs"]),
                    _fmt(r["margin"]), _fmt(r["gap"]), r["verdict"]])
    return buf.getvalue()


# ------------------------------------------------------------------ convergence

def aitken_limit(values) -> float | None:
    """Richardson (Aitken delta-squared) limit of the last three values."""
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        return None
    a, b, c = v[-3:]
    den = (c - b) - (b - a)
    if den == 0 or not np.isfinite(den):
        return float(c)
    return float(c - (c - b) ** 2 / den)


def observed_rates(values, limit: float, floor: float = FLOOR) -> list:
    """log2 of successive error ratios against ``limit``; 'exact' where the
    errors are at the floor, None for the first level."""
    v = np.asarray(values, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v))), abs(limit))
    err = np.abs(v - limit)
    out = [None]
    for i in range(1, len(v)):
        if err[i] <= floor * scale:
            out.append("exact")
        elif err[i - 1] <= floor * scale:
            out.append(None)
        else:
            out.append(float(np.log2(err[i - 1] / err[i])))
    return out


def convergence_rows(case: str, check: str, p, quantity: str, levels, hs, values,
                     limit: float | None = None) -> list:
    """Rows of the convergence table; ``limit`` None means extrapolate."""
    extrap = aitken_limit(values) if limit is None else float(limit)
    if extrap is None:
        extrap = float(values[-1])
    rates = observed_rates(values, extrap)
    return [{"case": case, "check": check, "p": p, "quantity": quantity, "level": int(m),
             "h": float(h), "value": float(v), "extrapolated": extrap, "rate": r}
            for m, h, v, r in zip(levels, hs, values, rates)]


def convergence_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONVERGENCE_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CONVERGENCE_COLUMNS])
    return buf.getvalue()
