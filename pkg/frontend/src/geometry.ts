// Pixel <-> meter conversion against a plan raster, and heading from a drag
// vector. Headings: theta = 0 faces +y (up on screen) and grows clockwise.

import type { RenderInfo, StartPose } from "./types.js";

export interface PixelPoint {
  px: number;
  py: number;
}

export const pixelToMeters = (p: PixelPoint, render: RenderInfo): { x: number; y: number } => {
  const [minx, , , maxy] = render.bounds;
  return {
    x: minx + (p.px - render.margin) / render.pixels_per_meter,
    y: maxy - (p.py - render.margin) / render.pixels_per_meter,
  };
};

export const metersToPixel = (x: number, y: number, render: RenderInfo): PixelPoint => {
  const [minx, , , maxy] = render.bounds;
  return {
    px: render.margin + (x - minx) * render.pixels_per_meter,
    py: render.margin + (maxy - y) * render.pixels_per_meter,
  };
};

// Screen pixel y grows downward, so dragging up means dy < 0 and theta = 0;
// dragging right means theta = pi/2 (clockwise-positive convention).
export const headingFromDrag = (dxPx: number, dyPx: number): number => {
  const theta = Math.atan2(dxPx, -dyPx);
  return theta < 0 ? theta + 2 * Math.PI : theta;
};

export const placeStartPose = (
  click: PixelPoint,
  release: PixelPoint,
  render: RenderInfo,
): StartPose => {
  const { x, y } = pixelToMeters(click, render);
  const dx = release.px - click.px;
  const dy = release.py - click.py;
  // a plain click (no drag) faces +y
  const theta = Math.hypot(dx, dy) < 3 ? 0 : headingFromDrag(dx, dy);
  return { x, y, theta };
};
