"""JSON-lines result reports and the plain-text rank table."""
from __future__ import annotations

import json
from pathlib import Path

from .errors import InvalidInputError
from .experiment import METHODS, average_ranks, lower_is_better, summarize

__all__ = ["emit_report", "rank_table"]


def _method_order(methods):
    known = [m for m in METHODS if m in methods]
    return known + sorted(set(methods) - set(known))


def rank_table(results) -> str:
    """Datasets as rows, methods as columns, ``mean(std)`` cells and an average-rank row."""
    summary = summarize(results)
    metric = results[0].metric
    per_ds, avg = average_ranks(summary, lower_is_better(metric))
    methods = _method_order({m for by in summary.values() for m in by})
    name_w = max([len("Av.Rank")] + [len(ds) for ds in summary])
    col_w = max(13, max(len(m) for m in methods))
    lines = [f"{metric} (mean(std)); rank 1 = best",
             " " * name_w + "".join(f"  {m:>{col_w}}" for m in methods)]
    for ds in sorted(summary):
        cells = []
        for m in methods:
            s = summary[ds].get(m)
            cells.append(f"{s['mean']:.2f}({s['std']:.2f})" if s else "-")
        lines.append(f"{ds:<{name_w}}" + "".join(f"  {c:>{col_w}}" for c in cells))
    lines.append(f"{'Av.Rank':<{name_w}}"
                 + "".join(f"  {avg[m]:>{col_w}.1f}" if m in avg else f"  {'-':>{col_w}}"
                           for m in methods))
    return "\n".join(lines) + "\n"


def emit_report(results, path) -> Path:
    """
    Write one JSON record per trial result plus a final summary record to
    ``path``, and the rank table next to it (``<path>.ranks.txt``).

    Output depends only on the results, so a fixed seed gives identical bytes.
    """
    results = list(results)
    if not results:
        raise InvalidInputError("no results to report")
    path = Path(path)
    order = {m: i for i, m in enumerate(METHODS)}
    rows = sorted(results, key=lambda r: (r.dataset, order.get(r.method, len(order)),
                                          r.method, r.trial))
    summary = summarize(rows)
    per_ds, avg = average_ranks(summary, lower_is_better(rows[0].metric))
    lines = [json.dumps(r.record(), sort_keys=True) for r in rows]
    lines.append(json.dumps({"summary": summary, "ranks": per_ds, "average_rank": avg},
                            sort_keys=True))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    path.with_name(path.name + ".ranks.txt").write_text(rank_table(rows), encoding="utf-8")
    return path
