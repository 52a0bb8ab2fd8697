"""Aggregate sweep and probe outputs into JSON documents and text tables."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .analysis import f_star, lambda_star, locate_u_shape, summarize
from .drift import DriftSample
from .engine import GaParams
from .sweep import ResultRow, read_rows

__all__ = ["ReportError", "MODES", "report", "render_table", "DRIFT_HEADER", "write_drift_csv", "read_drift_csv"]

MODES = ("summary", "scaling", "u-shape", "unbiasedness", "drift")

DRIFT_HEADER = [
    "n", "lambda", "k", "r", "variant", "d0", "seed", "gain", "ell", "good", "bad", "surviving_good", "surviving_bad",
]


class ReportError(ValueError):
    """Results that do not fit the requested report."""


CellKey = Tuple[int, int, float, float, str]


def _cell_key(row: ResultRow) -> CellKey:
    return (row.n, row.lam, row.k, row.r, row.variant)


def _group(rows: Sequence[ResultRow]) -> Dict[CellKey, List[ResultRow]]:
    groups: Dict[CellKey, List[ResultRow]] = defaultdict(list)
    for row in rows:
        groups[_cell_key(row)].append(row)
    return dict(sorted(groups.items()))


def _cell_summary(key: CellKey, rows: List[ResultRow]) -> dict:
    n, lam, k, r, variant = key
    stats = summarize([row.F for row in rows])
    return {
        "n": n, "lambda": lam, "k": k, "r": r, "variant": variant,
        "runs": len(rows),
        "success_rate": sum(row.success for row in rows) / len(rows),
        "mean_T": float(np.mean([row.T for row in rows])),
        "F": stats.as_dict(),
    }


def _summary(rows) -> dict:
    return {"cells": [_cell_summary(k, v) for k, v in _group(rows).items()]}


def _scaling(rows) -> dict:
    cells = [_cell_summary(k, v) for k, v in _group(rows).items()]
    if len({c["n"] for c in cells}) < 2:
        raise ReportError("scaling mode needs results for at least two sizes")
    for c in cells:
        c["ratio_to_f_star"] = c["F"]["mean"] / f_star(c["n"])
    ratios = [c["ratio_to_f_star"] for c in cells]
    return {"cells": cells, "max_ratio": max(ratios), "min_ratio": min(ratios), "spread": max(ratios) / min(ratios)}


def _u_shape(rows) -> dict:
    curves: Dict[tuple, list] = defaultdict(list)
    for key, group in _group(rows).items():
        n, lam, k, r, variant = key
        curves[(n, variant, r, k == lam)].append((lam, float(np.mean([row.F for row in group]))))
    out, short = [], []
    for (n, variant, r, k_is_lambda), curve in sorted(curves.items()):
        if len(curve) < 3:
            short.append({"n": n, "variant": variant, "r": r, "k_equals_lambda": k_is_lambda, "points": len(curve)})
            continue
        u = locate_u_shape(curve)
        out.append({
            "n": n, "variant": variant, "r": r, "k_equals_lambda": k_is_lambda,
            "lambda_star": lambda_star(n),
            "curve": [{"lambda": lam, "mean_F": f} for lam, f in sorted(curve)],
            "argmin": u.argmin, "minimum": u.minimum, "left_ratio": u.left_ratio, "right_ratio": u.right_ratio,
        })
    if not out:
        raise ReportError("u-shape mode needs a curve with at least three lambda values")
    return {"curves": out, "skipped_curves": short}


def _unbiasedness(row_sets: List[List[ResultRow]]) -> dict:
    if len(row_sets) < 2:
        raise ReportError("unbiasedness mode compares at least two result files")
    grouped = [_group(rows) for rows in row_sets]
    common = set(grouped[0])
    for g in grouped[1:]:
        common &= set(g)
    if not common:
        raise ReportError("the result files share no cells")
    out = []
    for key in sorted(common):
        stats = [summarize([row.F for row in g[key]]) for g in grouped]
        overlap = max(s.ci_low for s in stats) <= min(s.ci_high for s in stats)
        n, lam, k, r, variant = key
        out.append({
            "n": n, "lambda": lam, "k": k, "r": r, "variant": variant,
            "F": [s.as_dict() for s in stats], "cis_overlap": overlap,
        })
    return {"cells": out, "all_overlap": all(c["cis_overlap"] for c in out)}


def _drift(records: List[dict]) -> dict:
    groups: Dict[tuple, list] = defaultdict(list)
    for rec in records:
        groups[(rec["n"], rec["lambda"], rec["k"], rec["r"], rec["variant"], rec["d0"])].append(rec)
    out = []
    for (n, lam, k, r, variant, d0), group in sorted(groups.items()):
        gains = np.array([g["gain"] for g in group], dtype=float)
        ells = np.array([g["ell"] for g in group], dtype=float)
        se = float(gains.std(ddof=1) / np.sqrt(gains.size)) if gains.size > 1 else 0.0
        out.append({
            "n": n, "lambda": lam, "k": k, "r": r, "variant": variant, "d0": d0,
            "probes": int(gains.size),
            "mean_gain": float(gains.mean()), "stderr": se, "mean_ell": float(ells.mean()),
            "cap_violations": int((gains > ells).sum()),
            "halving_frequency": float((gains >= d0 / 2).mean()) if d0 > 0 else 0.0,
            "mean_gain_within_k": bool(gains.mean() <= k + 4 * se),
        })
    return {"cells": out}


def report(paths: Union[str, Path, Sequence[Union[str, Path]]], mode: str) -> dict:
    """Aggregate one or more result files into a report document."""
    if mode not in MODES:
        raise ReportError(f"unknown mode {mode!r}; expected one of {MODES}")
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if not paths:
        raise ReportError("no result files given")
    try:
        if mode == "drift":
            records = [rec for p in paths for rec in read_drift_csv(p)]
            if not records:
                raise ReportError("no drift samples")
            body = _drift(records)
        else:
            row_sets = [read_rows(p) for p in paths]
            if not any(row_sets):
                raise ReportError("no result rows")
            if mode == "unbiasedness":
                body = _unbiasedness(row_sets)
            else:
                rows = [row for rs in row_sets for row in rs]
                body = {"summary": _summary, "scaling": _scaling, "u-shape": _u_shape}[mode](rows)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ReportError):
            raise
        raise ReportError(f"cannot read results: {exc}") from exc
    return {"mode": mode, "sources": [str(p) for p in paths], **body}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def render_table(doc: dict) -> str:
    """Plain-text rendering of a report document."""
    mode = doc["mode"]
    lines = [f"# {mode} report"]
    if mode in ("summary", "scaling"):
        cols = ["n", "lambda", "k", "r", "variant", "runs", "success_rate", "mean_F", "median_F", "ci95"]
        if mode == "scaling":
            cols.append("F/F*")
        rows = []
        for c in doc["cells"]:
            f = c["F"]
            row = [c["n"], c["lambda"], c["k"], c["r"], c["variant"], c["runs"], c["success_rate"],
                   f["mean"], f["median"], f"[{f['ci_low']:.4g}, {f['ci_high']:.4g}]"]
            if mode == "scaling":
                row.append(c["ratio_to_f_star"])
            rows.append(row)
        lines += _table(cols, rows)
        if mode == "scaling":
            lines.append(f"max/min ratio: {doc['spread']:.4g}")
    elif mode == "u-shape":
        for c in doc["curves"]:
            rule = "k=lambda" if c["k_equals_lambda"] else "k fixed"
            lines.append(f"n={c['n']} variant={c['variant']} r={c['r']} {rule} lambda*={c['lambda_star']:.4g}")
            lines += _table(["lambda", "mean_F"], [[p["lambda"], p["mean_F"]] for p in c["curve"]])
            lines.append(
                f"argmin={_fmt(c['argmin'])} min={c['minimum']:.4g} "
                f"left/min={c['left_ratio']:.4g} right/min={c['right_ratio']:.4g}"
            )
    elif mode == "unbiasedness":
        rows = []
        for c in doc["cells"]:
            cis = " vs ".join(f"[{f['ci_low']:.4g}, {f['ci_high']:.4g}]" for f in c["F"])
            rows.append([c["n"], c["lambda"], c["k"], c["r"], c["variant"], cis, c["cis_overlap"]])
        lines += _table(["n", "lambda", "k", "r", "variant", "ci95 of mean F", "overlap"], rows)
    elif mode == "drift":
        cols = ["n", "lambda", "k", "r", "variant", "d0", "probes", "mean_gain", "stderr", "mean_ell",
                "cap_violations", "halving_freq"]
        rows = [[c[k] for k in ("n", "lambda", "k", "r", "variant", "d0", "probes", "mean_gain", "stderr",
                                "mean_ell", "cap_violations", "halving_frequency")] for c in doc["cells"]]
        lines += _table(cols, rows)
    return "\n".join(lines) + "\n"


def _table(cols, rows) -> List[str]:
    cells = [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c) for i, c in enumerate(cols)]
    out = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    out += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return out


# ---------------------------------------------------------------------------
# drift sample files
# ---------------------------------------------------------------------------


def write_drift_csv(params: GaParams, seed: int, samples: Sequence[DriftSample], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(DRIFT_HEADER)
    for s in samples:
        a = s.accounting
        w.writerow([
            params.n, params.lam, format(params.k, ".17g"), format(params.r, ".17g"), params.variant, s.d0, seed,
            s.gain, s.ell, a.good, a.bad,
            "" if a.surviving_good is None else a.surviving_good,
            "" if a.surviving_bad is None else a.surviving_bad,
        ])


def read_drift_csv(path: Union[str, Path]) -> List[dict]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != DRIFT_HEADER:
        raise ReportError(f"unexpected drift header {header}")
    out = []
    for rec in reader:
        out.append({
            "n": int(rec[0]), "lambda": int(rec[1]), "k": float(rec[2]), "r": float(rec[3]), "variant": rec[4],
            "d0": int(rec[5]), "seed": int(rec[6]), "gain": int(rec[7]), "ell": int(rec[8]),
        })
    return out
