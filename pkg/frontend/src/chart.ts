/** SVG rendering of a step curve (the live median belief). */

import type { CurveData } from "./types.js";

export interface ChartSize {
  width: number;
  height: number;
}

/** Piece corners of a right-continuous step curve in pixel space:
 * horizontal run at each value, vertical riser at each breakpoint. */
export function stepPoints(curve: CurveData, size: ChartSize): Array<[number, number]> {
  const span = curve.end - curve.start;
  const x = (t: number) => ((t - curve.start) / span) * size.width;
  const y = (p: number) => (1 - p) * size.height;
  const edges = [curve.start, ...curve.breakpoints, curve.end];
  const points: Array<[number, number]> = [];
  curve.values.forEach((value, i) => {
    points.push([x(edges[i]!), y(value)]);
    points.push([x(edges[i + 1]!), y(value)]);
  });
  return points;
}

export function stepPath(curve: CurveData, size: ChartSize): string {
  const points = stepPoints(curve, size);
  if (points.length === 0) {
    return "";
  }
  const [first, ...rest] = points;
  const head = `M ${first![0].toFixed(2)} ${first![1].toFixed(2)}`;
  return head + rest.map(([px, py]) => ` L ${px.toFixed(2)} ${py.toFixed(2)}`).join("");
}

const SVG_NS = "http://www.w3.org/2000/svg";

export class CurveChart {
  private readonly path: SVGPathElement;
  private readonly size: ChartSize;

  constructor(private readonly svg: SVGSVGElement, size?: Partial<ChartSize>) {
    this.size = { width: size?.width ?? 600, height: size?.height ?? 200 };
    svg.setAttribute("viewBox", `0 0 ${this.size.width} ${this.size.height}`);
    const midline = document.createElementNS(SVG_NS, "line");
    midline.setAttribute("x1", "0");
    midline.setAttribute("x2", String(this.size.width));
    midline.setAttribute("y1", String(this.size.height / 2));
    midline.setAttribute("y2", String(this.size.height / 2));
    midline.setAttribute("class", "half-line");
    svg.appendChild(midline);
    this.path = document.createElementNS(SVG_NS, "path");
    this.path.setAttribute("class", "median-curve");
    this.path.setAttribute("fill", "none");
    svg.appendChild(this.path);
  }

  render(curve: CurveData): void {
    this.path.setAttribute("d", stepPath(curve, this.size));
  }
}
