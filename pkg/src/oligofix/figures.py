"""Figure rendering for the report path.

Renders the large-market comparison series and the triopoly welfare picture
to PNG files next to the delimited output.  matplotlib is imported lazily so
the numeric library works without a plotting stack.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

from .large_market import FamilyParams, LargeMarketRow

_STYLE = {
    "CL": {"color": "tab:green", "label": "Cournot, linear costs"},
    "CQ": {"color": "tab:blue", "label": "Cournot, quadratic costs"},
    "SL": {"color": "tab:orange", "label": "Stackelberg, linear costs"},
    "SQ": {"color": "tab:red", "label": "Stackelberg, quadratic costs"},
}


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_large_market_figures(rows_by_family: Mapping[str, Sequence[LargeMarketRow]],
                                outdir: str | Path) -> list[Path]:
    """Write the comparison figures for whichever families are present."""
    plt = _plt()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def save(fig, name: str) -> None:
        path = outdir / name
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    def series(code: str, attr: str):
        rows = rows_by_family[code]
        return [r.n for r in rows], [getattr(r, attr) for r in rows]

    present = [code for code in ("CL", "CQ", "SL", "SQ") if code in rows_by_family]

    fig, ax = plt.subplots()
    for code in present:
        ns, qs = series(code, "Q_total")
        ax.plot(ns, qs, marker="o", **_STYLE[code])
    ax.set_xlabel("number of firms")
    ax.set_ylabel("aggregate output")
    ax.set_title("Aggregate quantities across models")
    ax.legend()
    save(fig, "quantities_all.png")

    for cost, cournot_code, stackelberg_code in (("linear", "CL", "SL"),
                                                 ("quadratic", "CQ", "SQ")):
        if cournot_code not in rows_by_family or stackelberg_code not in rows_by_family:
            continue
        fig, ax = plt.subplots()
        ns, xc = series(cournot_code, "x_first")
        color = _STYLE[cournot_code]["color"]
        ax.plot(ns, xc, marker="o", color=color, label=f"Cournot firm ({cost} costs)")
        srows = rows_by_family[stackelberg_code]
        scolor = _STYLE[stackelberg_code]["color"]
        ax.plot([r.n for r in srows], [r.x_first for r in srows], marker="o",
                color=scolor, label="Stackelberg first mover")
        ax.plot([r.n for r in srows], [r.x_last for r in srows], marker="o",
                linestyle="--", color=scolor, label="Stackelberg last mover")
        ax.set_xlabel("number of firms")
        ax.set_ylabel("individual output")
        ax.set_title(f"First vs last mover, {cost} costs")
        ax.legend()
        save(fig, f"first_last_{cost}.png")

    fig, ax = plt.subplots()
    for code in present:
        ns, gaps = series(code, "gap_Q")
        ax.semilogy(ns, gaps, marker="o", **_STYLE[code])
    ax.set_xlabel("number of firms")
    ax.set_ylabel("distance of output to its limit")
    ax.set_title("Quantity gaps")
    ax.legend()
    save(fig, "quantity_gaps.png")

    fig, ax = plt.subplots()
    for code in present:
        ns, ps = series(code, "price")
        ax.plot(ns, ps, marker="o", **_STYLE[code])
    ax.set_xlabel("number of firms")
    ax.set_ylabel("price")
    ax.set_title("Equilibrium prices across models")
    ax.legend()
    save(fig, "prices_all.png")

    fig, ax = plt.subplots()
    for code in present:
        ns, gaps = series(code, "gap_P")
        ax.semilogy(ns, gaps, marker="o", **_STYLE[code])
    ax.set_xlabel("number of firms")
    ax.set_ylabel("distance of price to its limit")
    ax.set_title("Price gaps")
    ax.legend()
    save(fig, "price_gaps.png")

    return written


def render_welfare_figure(params: FamilyParams, per_model: Mapping[str, Mapping],
                          outdir: str | Path) -> Path:
    """Consumer-surplus regions under the two triopoly outcomes."""
    plt = _plt()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots()
    cournot = per_model.get("cournot")
    stackelberg = per_model.get("stackelberg")
    q_max = params.zero_price_output
    steps = 400
    qs = [q_max * i / steps for i in range(steps + 1)]
    prices = [params.A - params.B * q for q in qs]
    ax.plot(qs, prices, color="black", label="inverse demand")

    def shade(row, color, label):
        q_star, p_star = sum(row["outputs"]), row["price"]
        xs = [q for q in qs if q <= q_star] + [q_star]
        ax.fill_between(xs, [params.A - params.B * q for q in xs],
                        [p_star] * len(xs), color=color, alpha=0.35, label=label)
        ax.axhline(p_star, color=color, linewidth=0.8, linestyle=":")

    if stackelberg:
        shade(stackelberg, "tab:orange", "consumer surplus, Stackelberg")
    if cournot:
        shade(cournot, "tab:blue", "consumer surplus, Cournot")
    ax.set_xlabel("total output")
    ax.set_ylabel("price")
    ax.set_title("Consumer surplus under the two triopoly outcomes")
    ax.legend()
    path = outdir / "welfare_surplus.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
