"""CSV and SVG output for sweep results."""
import csv
import json
from pathlib import Path
from xml.sax.saxutils import escape

GRID_COLUMNS = [
    "scale_factor", "faulty_count", "faulty_fraction", "baseline_applies",
    "mean_overhead_pct", "frac_norm_bound_detected", "frac_residual_detected",
    "mean_overhead_pct_with_abort", "diverged_count",
]
RUN_COLUMNS = [
    "scale_factor", "faulty_count", "faulty_fraction", "j",
    "applies", "overhead_pct", "converged", "diverged", "fault_fired",
    "norm_bound_events", "residual_events",
    "applies_abort", "overhead_pct_abort", "aborted_inner_solves_abort",
]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def grid_rows(result):
    rows = []
    for c in result.cells:
        rows.append({
            "scale_factor": c.scale_factor,
            "faulty_count": c.faulty_count,
            "faulty_fraction": c.faulty_fraction,
            "baseline_applies": c.baseline_applies,
            "mean_overhead_pct": c.mean_overhead_pct,
            "frac_norm_bound_detected": c.frac_norm_bound_detected,
            "frac_residual_detected": c.frac_residual_detected,
            "mean_overhead_pct_with_abort": c.mean_overhead_pct_with_abort,
            "diverged_count": c.diverged_count,
        })
    return rows


def run_rows(result):
    rows = []
    for c in result.cells:
        aborts = {r.j: r for r in c.abort_records}
        for r in c.records:
            a = aborts.get(r.j)
            rows.append({
                "scale_factor": c.scale_factor,
                "faulty_count": c.faulty_count,
                "faulty_fraction": c.faulty_fraction,
                "j": r.j,
                "applies": r.applies,
                "overhead_pct": r.overhead_pct,
                "converged": r.converged,
                "diverged": r.diverged,
                "fault_fired": r.fired,
                "norm_bound_events": r.norm_bound_events,
                "residual_events": r.residual_events,
                "applies_abort": a.applies if a else None,
                "overhead_pct_abort": a.overhead_pct if a else None,
                "aborted_inner_solves_abort": a.aborted_inner_solves if a else None,
            })
    return rows


def write_csv(rows, columns, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def emit_results(result, out_dir, heatmap=False, title=None):
    """Write runs.csv, grid.csv, baseline.json and optionally heatmap.svg."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"runs": out / "runs.csv", "grid": out / "grid.csv", "baseline": out / "baseline.json"}
    write_csv(run_rows(result) if result is not None else [], RUN_COLUMNS, paths["runs"])
    write_csv(grid_rows(result) if result is not None else [], GRID_COLUMNS, paths["grid"])
    if result is not None:
        cfg = result.config
        info = {
            "problem": cfg.problem.label(),
            "stack": cfg.stack.label(),
            "subdomains": cfg.stack.n_subdomains,
            "baseline_applies": result.baseline.K,
            "baseline_outer_iterations": result.baseline.stats.iterations,
            "seed": cfg.seed,
            "index_mode": cfg.index_mode,
        }
    else:
        info = {}
    paths["baseline"].write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    if heatmap and result is not None:
        paths["heatmap"] = out / "heatmap.svg"
        render_heatmap(read_csv(paths["grid"]), paths["heatmap"],
                       title=title or f"{info['stack']} on {info['problem']}")
    return paths


# ---------------------------------------------------------------------------
# SVG heatmap
# ---------------------------------------------------------------------------

# Viridis anchor colours; linear interpolation in between.
_CMAP = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)]


def _colour(t):
    t = min(1.0, max(0.0, t))
    pos = t * (len(_CMAP) - 1)
    i = min(int(pos), len(_CMAP) - 2)
    f = pos - i
    r, g, b = (round(a + (c - a) * f) for a, c in zip(_CMAP[i], _CMAP[i + 1]))
    return f"#{r:02x}{g:02x}{b:02x}"


def _num(text):
    return float(text) if text not in ("", None) else None


def render_heatmap(rows, path, title="", value="mean_overhead_pct", hatch_above=0.0):
    """Heatmap of ``value`` over (scale factor, faulty count).

    Cells where the projection bound caught more than ``hatch_above`` of the
    faults are hatched ``/``; explicit-residual detection is hatched ``\\``.
    """
    scales = sorted({float(r["scale_factor"]) for r in rows})
    counts = sorted({int(r["faulty_count"]) for r in rows})
    cell = {(float(r["scale_factor"]), int(r["faulty_count"])): r for r in rows}
    vals = [_num(r[value]) for r in rows if _num(r[value]) is not None]
    vmax = max(vals) if vals and max(vals) > 0 else 1.0

    cw, ch, left, top = 80, 50, 90, 50
    width = left + cw * max(1, len(scales)) + 110
    height = top + ch * max(1, len(counts)) + 70
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        "<defs>",
        '<pattern id="hatch-right" width="8" height="8" patternUnits="userSpaceOnUse">'
        '<path d="M0,8 L8,0" stroke="black" stroke-width="1"/></pattern>',
        '<pattern id="hatch-left" width="8" height="8" patternUnits="userSpaceOnUse">'
        '<path d="M0,0 L8,8" stroke="white" stroke-width="1"/></pattern>',
        "</defs>",
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for yi, f in enumerate(reversed(counts)):
        y = top + yi * ch
        out.append(f'<text x="{left - 8}" y="{y + ch / 2 + 4}" text-anchor="end">{f}</text>')
        for xi, s in enumerate(scales):
            x = left + xi * cw
            r = cell.get((s, f))
            if r is None:
                continue
            v = _num(r[value])
            fill = _colour(v / vmax) if v is not None else "#cccccc"
            out.append(f'<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{fill}" stroke="white"/>')
            if (_num(r.get("frac_norm_bound_detected")) or 0.0) > hatch_above:
                out.append(f'<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="url(#hatch-right)"/>')
            if (_num(r.get("frac_residual_detected")) or 0.0) > hatch_above:
                out.append(f'<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="url(#hatch-left)"/>')
            label = "n/a" if v is None else f"{v:.1f}%"
            out.append(f'<text x="{x + cw / 2}" y="{y + ch / 2 + 4}" text-anchor="middle" '
                       f'fill="{"black" if v is not None and v / vmax > 0.6 else "white"}">{label}</text>')
    base = top + ch * len(counts)
    for xi, s in enumerate(scales):
        out.append(f'<text x="{left + xi * cw + cw / 2}" y="{base + 18}" text-anchor="middle">{s:g}</text>')
    out.append(f'<text x="{left + cw * len(scales) / 2}" y="{base + 40}" text-anchor="middle">'
               "scale factor</text>")
    out.append(f'<text x="20" y="{top + ch * len(counts) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {top + ch * len(counts) / 2})">faulty subdomains</text>')
    bx = left + cw * len(scales) + 30
    for i in range(20):
        t = 1.0 - i / 19
        out.append(f'<rect x="{bx}" y="{top + i * 8}" width="16" height="8" fill="{_colour(t)}"/>')
    out.append(f'<text x="{bx + 22}" y="{top + 8}">{vmax:.3g}%</text>')
    out.append(f'<text x="{bx + 22}" y="{top + 160}">0%</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
