"""Minimal log-log SVG plots of sweep curves (axes, points, fitted lines)."""
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np

from sfg_sim.models.schemas import SweepCurve

WIDTH, HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 30, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
SVG_NS = "http://www.w3.org/2000/svg"


def _log_range(values: Iterable[float]) -> Tuple[float, float]:
    logs = [math.log10(v) for v in values]
    low, high = math.floor(min(logs)), math.ceil(max(logs))
    if low == high:
        high += 1
    return low, high


def _positive(curve: SweepCurve) -> List[Tuple[float, float]]:
    return [(p.drive, p.mean) for p in curve.points if p.drive > 0 and p.mean > 0]


def render_sweep_svg(curves: List[SweepCurve], title: str = "SFG counts vs drive") -> str:
    points = [pt for curve in curves for pt in _positive(curve)]
    if not points:
        raise ValueError("nothing to plot: no positive points")
    x_low, x_high = _log_range(p[0] for p in points)
    y_low, y_high = _log_range(p[1] for p in points)
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + (math.log10(x) - x_low) / (x_high - x_low) * plot_w

    def sy(y):
        return MARGIN_TOP + (y_high - math.log10(y)) / (y_high - y_low) * plot_h

    svg = ET.Element("svg", xmlns=SVG_NS, width=str(WIDTH), height=str(HEIGHT),
                     viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    ET.SubElement(svg, "text", x=str(WIDTH / 2), y="24", attrib={"text-anchor": "middle"}).text = title

    # Axes and decade ticks
    axis = {"stroke": "black", "stroke-width": "1"}
    ET.SubElement(svg, "line", x1=str(MARGIN_LEFT), y1=str(MARGIN_TOP + plot_h),
                  x2=str(MARGIN_LEFT + plot_w), y2=str(MARGIN_TOP + plot_h), attrib=axis)
    ET.SubElement(svg, "line", x1=str(MARGIN_LEFT), y1=str(MARGIN_TOP),
                  x2=str(MARGIN_LEFT), y2=str(MARGIN_TOP + plot_h), attrib=axis)
    for decade in range(x_low, x_high + 1):
        x = sx(10.0**decade)
        ET.SubElement(svg, "line", x1=f"{x:.2f}", y1=str(MARGIN_TOP + plot_h),
                      x2=f"{x:.2f}", y2=str(MARGIN_TOP + plot_h + 5), attrib=axis)
        ET.SubElement(svg, "text", x=f"{x:.2f}", y=str(MARGIN_TOP + plot_h + 20),
                      attrib={"text-anchor": "middle", "font-size": "12"}).text = f"1e{decade}"
    for decade in range(y_low, y_high + 1):
        y = sy(10.0**decade)
        ET.SubElement(svg, "line", x1=str(MARGIN_LEFT - 5), y1=f"{y:.2f}",
                      x2=str(MARGIN_LEFT), y2=f"{y:.2f}", attrib=axis)
        ET.SubElement(svg, "text", x=str(MARGIN_LEFT - 8), y=f"{y + 4:.2f}",
                      attrib={"text-anchor": "end", "font-size": "12"}).text = f"1e{decade}"
    ET.SubElement(svg, "text", x=str(MARGIN_LEFT + plot_w / 2), y=str(HEIGHT - 15),
                  attrib={"text-anchor": "middle"}).text = "drive (n or t)"
    ET.SubElement(svg, "text", x="18", y=str(MARGIN_TOP + plot_h / 2),
                  attrib={"text-anchor": "middle",
                          "transform": f"rotate(-90 18 {MARGIN_TOP + plot_h / 2})"}).text = "counts / s"

    for index, curve in enumerate(curves):
        color = COLORS[index % len(COLORS)]
        data = _positive(curve)
        group = ET.SubElement(svg, "g", attrib={"fill": color, "stroke": color})
        for x, y in data:
            ET.SubElement(group, "circle", cx=f"{sx(x):.2f}", cy=f"{sy(y):.2f}", r="3")
        if len(data) >= 2:
            log_x = np.log10([p[0] for p in data])
            log_y = np.log10([p[1] for p in data])
            slope, intercept = np.polyfit(log_x, log_y, 1)
            x0, x1 = 10.0 ** log_x.min(), 10.0 ** log_x.max()
            y0, y1 = 10.0 ** (intercept + slope * log_x.min()), 10.0 ** (intercept + slope * log_x.max())
            ET.SubElement(group, "line", x1=f"{sx(x0):.2f}", y1=f"{sy(y0):.2f}",
                          x2=f"{sx(x1):.2f}", y2=f"{sy(y1):.2f}", attrib={"stroke-width": "1.5"})
            label = f"{curve.mode.value} ({curve.engine.value}): slope {slope:.3f}"
        else:
            label = f"{curve.mode.value} ({curve.engine.value})"
        ET.SubElement(svg, "text", x=str(MARGIN_LEFT + 10), y=str(MARGIN_TOP + 16 + 16 * index),
                      attrib={"fill": color, "stroke": "none", "font-size": "12"}).text = label

    return ET.tostring(svg, encoding="unicode")


def check_svg(text: str) -> None:
    """Raise ValueError unless ``text`` is well-formed XML with an <svg> root"""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise ValueError(f"malformed SVG: {e}") from e
    if root.tag not in ("svg", f"{{{SVG_NS}}}svg"):
        raise ValueError(f"root element is {root.tag}, not svg")


def write_svg(curves: List[SweepCurve], path: Union[str, Path], title: str = "SFG counts vs drive") -> Path:
    text = render_sweep_svg(curves, title)
    check_svg(text)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
