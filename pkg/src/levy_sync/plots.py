"""Render experiment reports as SVG figures.

Output must be byte-deterministic for fixed input so figures can be
regression-tested: the SVG hash salt is pinned and the creation date is
stripped from the metadata.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_AXIS_LABELS = {
    "epsilon_list": "epsilon",
    "nu_list": "coupling strength nu",
    "time": "t",
}

KINDS = ("loglog", "semilogx", "semilogy", "linear")


def emit_plot(report, kind: str = "loglog", estimator: str | None = None) -> str:
    """One convergence curve (markers, line, confidence band) as SVG text.

    estimator selects which rows to draw; None draws every estimator in the
    report on shared axes. Identical inputs produce identical SVG bytes.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose one of {KINDS}")
    names = [estimator] if estimator else sorted({r.estimator for r in report.rows})
    rows_by_name = {n: report.rows_for(n) for n in names}
    if not report.rows or not any(rows_by_name.values()):
        raise ValueError("nothing to plot: report has no matching rows")

    with plt.rc_context({"svg.hashsalt": "levy-sync"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        logx = kind in ("loglog", "semilogx")
        logy = kind in ("loglog", "semilogy")
        for name in names:
            rows = rows_by_name[name]
            xs = [r.sweep_value for r in rows]
            ys = [r.value for r in rows]
            los = [r.lo for r in rows]
            his = [r.hi for r in rows]
            if logy:
                floor = min((y for y in ys if y > 0), default=1.0) * 1e-3
                ys = [max(y, floor) for y in ys]
                los = [max(lo, floor) for lo in los]
                his = [max(hi, floor) for hi in his]
            style = "o-" if len(xs) > 1 else "o"
            (line,) = ax.plot(xs, ys, style, label=name, markersize=4)
            if len(xs) > 1:
                ax.fill_between(xs, los, his, alpha=0.25, color=line.get_color())
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(_AXIS_LABELS.get(report.manifest.get("sweep", ""), "sweep value"))
        ax.set_ylabel("estimate")
        ax.set_title(report.experiment)
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()
