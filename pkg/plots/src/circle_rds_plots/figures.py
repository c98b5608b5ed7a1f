"""Figure builders for circle-rds output files.

Every figure draws what the input file already contains.  The rates,
density, holder, and stationary CSVs are read against their exact
column contracts; fitted overlays come from the slope/intercept cells
rather than being refitted here, and the arc diagram draws the
serialized certificate endpoints verbatim.  Rendering is deterministic:
the Agg backend is forced, figure sizes are fixed, and no timestamp
reaches the output file.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("decay", "density", "loglog", "histogram", "arcs")

# One fixed palette and geometry per kind keeps repeated renders
# byte-identical and visually stable across files.
ARC_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
RECT_SIZE = (6.4, 4.4)
SQUARE_SIZE = (6.0, 6.0)
HIST_BINS = 64

RATES_COLUMNS = ("eps", "n", "trials", "successes", "undetermined", "rate",
                 "wilson_lo", "wilson_hi", "slope", "intercept", "r_squared")
DENSITY_COLUMNS = ("n", "certified")
HOLDER_COLUMNS = ("radius", "mass", "alpha_hat", "c_hat")
SAMPLE_COLUMNS = ("estimator", "n", "value", "stderr", "trials", "seed")
CERT_ARC_KEYS = ("u_f", "v_f", "u_g", "v_g")
CERT_KEYS = CERT_ARC_KEYS + ("verified", "disjoint_slack", "include_f_slack",
                             "include_g_slack", "worst_slack")
ARC_LABELS = {"u_f": "U_f", "v_f": "V_f", "u_g": "U_g", "v_g": "V_g"}


class InputError(Exception):
    """An input file is missing, malformed, or violates its contract."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: what to read, what to draw, where to write.

    kind is one of decay | density | loglog | histogram | arcs.  The
    axis labels default per kind when left as None.  index selects a
    record when the arcs input is a .jsonl file.
    """

    kind: str
    input_path: str
    output_path: str
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    title: Optional[str] = None
    dpi: int = 120
    index: int = 0


def _read_rows(path, required):
    """Read a CSV against its column contract.

    Returns a nonempty list of dict rows (string cells).  Any deviation
    raises InputError with the file, row, and column named.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")
    with fh:
        reader = csv.DictReader(fh, restval=None)
        fields = reader.fieldnames
        if fields is None:
            raise InputError(f"{path}: empty file, no header row")
        missing = [c for c in required if c not in fields]
        if missing:
            raise InputError(f"{path}: missing column '{missing[0]}'")
        rows = []
        for i, row in enumerate(reader, start=1):
            if None in row:
                raise InputError(f"{path}: row {i}: more cells than header")
            if any(row[c] is None for c in required):
                raise InputError(f"{path}: row {i}: fewer cells than header")
            rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def _cell_float(row, col, path, idx, allow_empty=False):
    text = row[col].strip()
    if text == "":
        if allow_empty:
            return None
        raise InputError(f"{path}: row {idx}, column '{col}': empty cell")
    try:
        value = float(text)
    except ValueError:
        raise InputError(
            f"{path}: row {idx}, column '{col}': could not parse {text!r}")
    if not math.isfinite(value):
        raise InputError(
            f"{path}: row {idx}, column '{col}': non-finite value")
    return value


def _cell_int(row, col, path, idx):
    text = row[col].strip()
    try:
        return int(text)
    except ValueError:
        raise InputError(
            f"{path}: row {idx}, column '{col}': could not parse {text!r}")


def _labels(ax, spec, xlabel, ylabel):
    ax.set_xlabel(spec.xlabel if spec.xlabel is not None else xlabel)
    ax.set_ylabel(spec.ylabel if spec.ylabel is not None else ylabel)
    if spec.title is not None:
        ax.set_title(spec.title)


def _build_decay(spec):
    """Failure probability 1 - rate vs n on a log axis, per eps series.

    The fitted overlay exp(intercept + slope * n) is taken from the
    CSV's own fit cells; nothing is refitted.  Points with zero failure
    cannot sit on a log axis and are left out; the Wilson band is drawn
    as error bars where both band edges stay positive.
    """
    path = spec.input_path
    rows = _read_rows(path, RATES_COLUMNS)
    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 data rows for decay")
    series = {}
    for i, row in enumerate(rows, start=1):
        eps = _cell_float(row, "eps", path, i)
        key = row["eps"].strip()
        rec = series.setdefault(key, {"eps": eps, "n": [], "fail": [],
                                      "lo": [], "hi": [],
                                      "slope": None, "intercept": None})
        rec["n"].append(_cell_int(row, "n", path, i))
        rate = _cell_float(row, "rate", path, i)
        rec["fail"].append(1.0 - rate)
        rec["lo"].append(1.0 - _cell_float(row, "wilson_hi", path, i))
        rec["hi"].append(1.0 - _cell_float(row, "wilson_lo", path, i))
        slope = _cell_float(row, "slope", path, i, allow_empty=True)
        if slope is not None:
            rec["slope"] = slope
            rec["intercept"] = _cell_float(row, "intercept", path, i)

    fig, ax = plt.subplots(figsize=RECT_SIZE)
    info_series = []
    points_drawn = 0
    for rec in series.values():
        n = np.array(rec["n"], dtype=float)
        fail = np.array(rec["fail"])
        lo = np.array(rec["lo"])
        hi = np.array(rec["hi"])
        keep = fail > 0.0
        n_k, fail_k = n[keep], fail[keep]
        lo_k, hi_k = lo[keep], hi[keep]
        # No downward bar where the band crosses zero: the bar would
        # leave the log axis.
        down = np.where(lo_k > 0.0, fail_k - lo_k, 0.0)
        up = hi_k - fail_k
        ax.errorbar(n_k, fail_k, yerr=(down, up), marker="o", capsize=2,
                    label=f"eps={rec['eps']:.6g}")
        if rec["slope"] is not None and len(n) >= 2:
            xs = np.linspace(n.min(), n.max(), 100)
            ax.plot(xs, np.exp(rec["intercept"] + rec["slope"] * xs),
                    linestyle="--", linewidth=1,
                    label=f"fit slope {rec['slope']:.3g}")
        points_drawn += int(keep.sum())
        info_series.append({"eps": rec["eps"], "points": int(keep.sum()),
                            "slope": rec["slope"]})
    if points_drawn == 0:
        plt.close(fig)
        raise InputError(
            f"{path}: no positive failure rates to draw on a log axis")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend()
    _labels(ax, spec, "n", "1 - success rate")
    return fig, {"kind": "decay", "series": info_series,
                 "points_drawn": points_drawn, "yscale": "log"}


def _build_density(spec):
    """Running density of certified times n, with a rug of the times."""
    path = spec.input_path
    rows = _read_rows(path, DENSITY_COLUMNS)
    n_vals, flags = [], []
    for i, row in enumerate(rows, start=1):
        n = _cell_int(row, "n", path, i)
        if n != i:
            raise InputError(f"{path}: row {i}, column 'n': expected "
                             f"consecutive values from 1, got {n}")
        flag = _cell_int(row, "certified", path, i)
        if flag not in (0, 1):
            raise InputError(f"{path}: row {i}, column 'certified': "
                             f"expected 0 or 1, got {flag}")
        n_vals.append(n)
        flags.append(flag)
    n_arr = np.array(n_vals, dtype=float)
    flag_arr = np.array(flags, dtype=float)
    running = np.cumsum(flag_arr) / n_arr

    fig, ax = plt.subplots(figsize=RECT_SIZE)
    ax.plot(n_arr, running, linewidth=1.5)
    hits = n_arr[flag_arr > 0]
    if hits.size:
        ax.vlines(hits, 0.0, 0.04, color="#d62728", alpha=0.5, linewidth=0.8)
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    final = float(running[-1])
    ax.annotate(f"density {final:.4g}", xy=(n_arr[-1], final),
                xytext=(-8, 8), textcoords="offset points", ha="right")
    _labels(ax, spec, "n", "fraction of times certified")
    return fig, {"kind": "density", "horizon": int(n_arr[-1]),
                 "certified_count": int(flag_arr.sum()),
                 "final_density": final}


def _build_loglog(spec):
    """Ball mass vs radius on log-log axes with the CSV's power-law fit."""
    path = spec.input_path
    rows = _read_rows(path, HOLDER_COLUMNS)
    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 data rows for loglog")
    radii, masses = [], []
    alpha = c = None
    for i, row in enumerate(rows, start=1):
        radii.append(_cell_float(row, "radius", path, i))
        masses.append(_cell_float(row, "mass", path, i))
        a = _cell_float(row, "alpha_hat", path, i, allow_empty=True)
        if a is not None:
            alpha = a
            c = _cell_float(row, "c_hat", path, i)
    r_arr = np.array(radii)
    m_arr = np.array(masses)
    keep = (r_arr > 0.0) & (m_arr > 0.0)
    if not keep.any():
        raise InputError(
            f"{path}: no rows with positive radius and mass for log-log axes")

    fig, ax = plt.subplots(figsize=RECT_SIZE)
    ax.plot(r_arr[keep], m_arr[keep], "o", label="ball mass")
    overlay = alpha is not None
    if overlay:
        xs = np.geomspace(r_arr[keep].min(), r_arr[keep].max(), 100)
        ax.plot(xs, c * xs ** alpha, linestyle="--", linewidth=1,
                label=f"slope {alpha:.3g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _labels(ax, spec, "radius", "measure of ball")
    return fig, {"kind": "loglog", "points_drawn": int(keep.sum()),
                 "alpha_hat": alpha, "overlay": overlay}


def _build_histogram(spec):
    """Histogram of circle-valued samples on a fixed 64-bin grid."""
    path = spec.input_path
    rows = _read_rows(path, SAMPLE_COLUMNS)
    values = []
    for i, row in enumerate(rows, start=1):
        v = _cell_float(row, "value", path, i)
        if not 0.0 <= v < 1.0:
            raise InputError(f"{path}: row {i}, column 'value': "
                             f"{v!r} is not a circle position in [0, 1)")
        values.append(v)
    fig, ax = plt.subplots(figsize=RECT_SIZE)
    ax.hist(values, bins=HIST_BINS, range=(0.0, 1.0), density=True,
            histtype="stepfilled", alpha=0.75, edgecolor="#1f4e79")
    ax.set_xlim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    _labels(ax, spec, "position", "density")
    return fig, {"kind": "histogram", "samples": len(values),
                 "bins": HIST_BINS}


def load_certificate(path, index=0):
    """Read a serialized certificate from .json or .jsonl.

    Accepts the bare certificate object, the checker's wrapper with a
    "certificate" key, or a certificate-per-line .jsonl file where
    index picks the record.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")
    if path.endswith(".jsonl"):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise InputError(f"{path}: no records")
        if not 0 <= index < len(lines):
            raise InputError(f"{path}: record index {index} out of range "
                             f"(file has {len(lines)} records)")
        try:
            obj = json.loads(lines[index])
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: record {index}: {exc}")
    else:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}")
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected a JSON object")
    if "certificate" in obj:
        cert = obj["certificate"]
        if cert is None:
            status = obj.get("status", "unknown")
            raise InputError(
                f"{path}: certificate is null (status: {status})")
    else:
        cert = obj
    if not isinstance(cert, dict):
        raise InputError(f"{path}: certificate is not a JSON object")
    for key in CERT_KEYS:
        if key not in cert:
            raise InputError(f"{path}: certificate field '{key}' missing")
    return cert


def certificate_arc_spans(cert):
    """Serialized arcs as (label, start, length) with length in turns.

    Arcs are open and run counterclockwise from start to end, so the
    drawn length is (end - start) mod 1, with the same snap at the wrap
    the producer uses.
    """
    spans = []
    for key in CERT_ARC_KEYS:
        arc = cert[key]
        if not isinstance(arc, dict) or "start" not in arc or "end" not in arc:
            raise InputError(f"certificate field '{key}' is not an arc "
                             "with start and end")
        start = float(arc["start"]) % 1.0
        if start >= 1.0 - 1e-12:
            start = 0.0
        length = (float(arc["end"]) - float(arc["start"])) % 1.0
        if length >= 1.0 - 1e-12:
            length = 0.0
        spans.append((ARC_LABELS[key], start, length))
    return spans


def _spans_overlap(a, b):
    """Whether two open arcs given as (start, length) share a point."""
    (s1, l1), (s2, l2) = a, b
    if l1 <= 0.0 or l2 <= 0.0:
        return False
    return (s2 - s1) % 1.0 < l1 or (s1 - s2) % 1.0 < l2


def overlapping_span_pair(spans):
    """First overlapping pair of labeled spans, or None."""
    for i in range(len(spans)):
        for j in range(i + 1, len(spans)):
            li, si, wi = spans[i]
            lj, sj, wj = spans[j]
            if _spans_overlap((si, wi), (sj, wj)):
                return (li, lj)
    return None


def _build_arcs(spec):
    """Arc diagram of one serialized certificate.

    The four arcs are drawn exactly at their serialized endpoints.  A
    file claiming verified status with overlapping arcs is refused, so
    a verified diagram can never show an overlap.
    """
    cert = load_certificate(spec.input_path, index=spec.index)
    spans = certificate_arc_spans(cert)
    verified = bool(cert["verified"])
    if verified:
        clash = overlapping_span_pair(spans)
        if clash is not None:
            raise InputError(
                f"{spec.input_path}: certificate marked verified but arcs "
                f"overlap (pair {clash[0]}, {clash[1]})")

    fig, ax = plt.subplots(figsize=SQUARE_SIZE)
    base = np.linspace(0.0, 2.0 * np.pi, 512)
    ax.plot(np.cos(base), np.sin(base), color="#b0b0b0", linewidth=1.0)
    for (label, start, length), color in zip(spans, ARC_COLORS):
        theta = 2.0 * np.pi * np.linspace(start, start + length,
                                          max(2, int(length * 512) + 2))
        ax.plot(np.cos(theta), np.sin(theta), color=color, linewidth=7,
                solid_capstyle="butt")
        mid = 2.0 * np.pi * (start + 0.5 * length)
        ax.text(1.22 * np.cos(mid), 1.22 * np.sin(mid), label,
                ha="center", va="center", fontsize=11, color=color)
    worst = float(cert["worst_slack"])
    ax.text(-1.4, -1.38,
            ("verified" if verified else "not verified")
            + f", worst slack {worst:.3g}",
            ha="left", va="bottom", fontsize=9)
    ax.set_xlim(-1.45, 1.45)
    ax.set_ylim(-1.45, 1.45)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if spec.title is not None:
        ax.set_title(spec.title)
    return fig, {"kind": "arcs", "verified": verified, "spans": spans,
                 "worst_slack": worst}


_BUILDERS = {
    "decay": _build_decay,
    "density": _build_density,
    "loglog": _build_loglog,
    "histogram": _build_histogram,
    "arcs": _build_arcs,
}


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure for a spec; returns (figure, info).

    The caller owns the figure and should close it.  All input
    validation happens here, before anything is written.
    """
    if spec.kind not in _BUILDERS:
        raise InputError(f"unknown figure kind {spec.kind!r} "
                         f"(choose from {', '.join(KINDS)})")
    return _BUILDERS[spec.kind](spec)


def render(spec: FigureSpec):
    """Build and write one figure; returns the builder's info dict.

    Nothing is written when validation fails.  Timestamp metadata is
    suppressed for the vector formats so identical inputs give
    identical bytes.
    """
    fig, info = build_figure(spec)
    try:
        ext = os.path.splitext(spec.output_path)[1].lower()
        metadata = None
        if ext == ".svg":
            metadata = {"Date": None}
        elif ext == ".pdf":
            metadata = {"CreationDate": None}
        fig.savefig(spec.output_path, dpi=spec.dpi, metadata=metadata)
    finally:
        plt.close(fig)
    return info
