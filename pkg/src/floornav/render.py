"""Rasterization: floor-plan images with visual prompts, pose/trajectory
overlays, dual-view frame composition, and a 2D raycast egocentric view.

All operations are pure functions of their inputs and produce byte-identical
buffers for identical inputs (fonts are Pillow's built-in bitmap font and PNG
encoding carries no timestamps).
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .geometry import FloorPlan, Point2, extract_walls, locate_region, pole_of_inaccessibility
from .simulator import AgentPose

PALETTE_SIZE = 30

TRAJECTORY_COLOR = (40, 90, 220)
POSE_COLOR = (25, 60, 200)
WALL_COLOR = (45, 45, 45)
BACKGROUND = (255, 255, 255)
MASK_GREY = (128, 128, 128)
CEILING_COLOR = (226, 226, 230)


class RenderError(ValueError):
    pass


def _build_palette() -> tuple[tuple[int, int, int], ...]:
    """30 visually distinct fills: golden-angle hues with varied sat/value."""
    colors = []
    for i in range(PALETTE_SIZE):
        h = (i * 137.508) % 360.0 / 360.0
        s = (0.45, 0.72, 0.95)[i % 3]
        v = (0.95, 0.78)[i % 2]
        r, g, b = colorsys.hsv_to_rgb(h, s, v)
        colors.append((int(round(r * 255)), int(round(g * 255)), int(round(b * 255))))
    return tuple(colors)


_PALETTES: dict[str, tuple[tuple[int, int, int], ...]] = {"default": _build_palette()}


def palette_color(catalog: tuple[str, ...], region_type: str,
                  palette_id: str = "default") -> tuple[int, int, int]:
    """Stable color for a region type: indexed by its position in the sorted
    catalog, so adding regions of existing types never shifts any color."""
    if palette_id not in _PALETTES:
        raise RenderError(f"unknown palette '{palette_id}'")
    palette = _PALETTES[palette_id]
    if len(catalog) > len(palette):
        raise RenderError(f"type catalog has {len(catalog)} entries; "
                          f"palette supports at most {len(palette)}")
    return palette[catalog.index(region_type)]


@dataclass(frozen=True)
class RasterConfig:
    pixels_per_meter: float = 40.0
    margin: int = 16
    marker_size: int = 6
    palette_id: str = "default"


@dataclass(frozen=True)
class PlanTransform:
    """World meters -> pixel coordinates for one floor plan + config."""

    minx: float
    miny: float
    maxy: float
    ppm: float
    margin: int
    width: int
    height: int

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        return (self.margin + (x - self.minx) * self.ppm,
                self.margin + (self.maxy - y) * self.ppm)


def plan_transform(fp: FloorPlan, cfg: RasterConfig) -> PlanTransform:
    minx, miny, maxx, maxy = fp.bounds
    w = int(math.ceil((maxx - minx) * cfg.pixels_per_meter)) + 2 * cfg.margin
    h = int(math.ceil((maxy - miny) * cfg.pixels_per_meter)) + 2 * cfg.margin
    return PlanTransform(minx, miny, maxy, cfg.pixels_per_meter, cfg.margin, w, h)


def render_floorplan(fp: FloorPlan, cfg: RasterConfig = RasterConfig()) -> np.ndarray:
    """Fill regions with type colors, stroke walls, and label region ids.

    Labels sit at each polygon's pole of inaccessibility. Regions are painted
    in descending id order so overlapping areas show the smallest id on top,
    matching the containment tie-break.
    """
    if len(fp.type_catalog) > PALETTE_SIZE:
        raise RenderError(f"type catalog has {len(fp.type_catalog)} entries; "
                          f"palette supports at most {PALETTE_SIZE}")
    tf = plan_transform(fp, cfg)
    img = Image.new("RGB", (tf.width, tf.height), BACKGROUND)
    draw = ImageDraw.Draw(img)

    for r in sorted(fp.regions, key=lambda r: -r.region_id):
        color = palette_color(fp.type_catalog, r.region_type, cfg.palette_id)
        pts = [tf.to_px(v.x, v.y) for v in r.polygon.vertices]
        draw.polygon(pts, fill=color)

    wall_px = max(1, int(round(0.05 * cfg.pixels_per_meter)))
    for (a, b) in extract_walls(fp).segments:
        draw.line([tf.to_px(a.x, a.y), tf.to_px(b.x, b.y)], fill=WALL_COLOR, width=wall_px)

    font = ImageFont.load_default()
    for r in fp.regions:
        pole = pole_of_inaccessibility(r.polygon)
        px, py = tf.to_px(pole.x, pole.y)
        label = str(r.region_id)
        bbox = draw.textbbox((0, 0), label, font=font)
        draw.text((px - (bbox[2] - bbox[0]) / 2, py - (bbox[3] - bbox[1]) / 2),
                  label, fill=(0, 0, 0), font=font)
    return np.asarray(img).copy()


def overlay_pose_trajectory(raster: np.ndarray, fp: FloorPlan, cfg: RasterConfig,
                            trajectory: list[AgentPose], pose: AgentPose,
                            alpha: float = 1.0) -> np.ndarray:
    """Draw the projected trajectory polyline and the current pose marker
    (blue square plus heading tick) on a copy of the base raster."""
    tf = plan_transform(fp, cfg)
    img = Image.fromarray(raster)
    draw = ImageDraw.Draw(img)

    pts = [tf.to_px(alpha * p.x, alpha * p.y) for p in trajectory]
    if len(pts) >= 2:
        draw.line(pts, fill=TRAJECTORY_COLOR, width=2)

    mx, my = tf.to_px(alpha * pose.x, alpha * pose.y)
    s = cfg.marker_size
    draw.rectangle([mx - s, my - s, mx + s, my + s], fill=POSE_COLOR)
    # heading tick: theta=0 faces +y (up in image), clockwise positive
    hx = mx + 2.2 * s * math.sin(pose.theta)
    hy = my - 2.2 * s * math.cos(pose.theta)
    draw.line([(mx, my), (hx, hy)], fill=POSE_COLOR, width=2)
    return np.asarray(img).copy()


@dataclass(frozen=True)
class DualViewFrame:
    image: np.ndarray
    observation_width: int
    floorplan_width: int
    timestamp_step: int

    def __post_init__(self):
        if self.image.shape[1] != self.observation_width + self.floorplan_width:
            raise RenderError("frame width must equal observation + plan widths")


def compose_dual_view(obs: np.ndarray, plan_view: np.ndarray,
                      timestamp_step: int = 0) -> DualViewFrame:
    """Horizontal concatenation [observation | plan], heights matched by
    aspect-preserving resize of the observation."""
    if obs.size == 0 or plan_view.size == 0:
        raise RenderError("zero-size input raster")
    ph, pw = plan_view.shape[:2]
    oh, ow = obs.shape[:2]
    if oh != ph:
        new_w = max(1, int(round(ow * ph / oh)))
        obs = np.asarray(Image.fromarray(obs).resize((new_w, ph), Image.NEAREST))
    frame = np.concatenate([obs, plan_view], axis=1)
    return DualViewFrame(frame, obs.shape[1], pw, timestamp_step)


@dataclass(frozen=True)
class RaycastConfig:
    fov_rad: float = math.radians(90.0)
    columns: int = 160
    height: int = 120
    max_range: float = 10.0


def raycast_distances(fp: FloorPlan, pose: AgentPose,
                      cfg: RaycastConfig = RaycastConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Per-column nearest wall hit: (distances, wall segment indices).

    Distance is along the ray, capped at max_range; index is -1 where no wall
    is hit within range. Column 0 looks fov/2 to the left of the heading.
    """
    segs = extract_walls(fp).segment_array
    offsets = np.linspace(-cfg.fov_rad / 2, cfg.fov_rad / 2, cfg.columns)
    angles = pose.theta + offsets
    ux, uy = np.sin(angles), np.cos(angles)

    if segs.shape[0] == 0:
        return np.full(cfg.columns, cfg.max_range), np.full(cfg.columns, -1, dtype=int)

    ax, ay = segs[:, 0][None, :], segs[:, 1][None, :]
    sx = (segs[:, 2] - segs[:, 0])[None, :]
    sy = (segs[:, 3] - segs[:, 1])[None, :]
    rx, ry = ux[:, None], uy[:, None]

    denom = rx * sy - ry * sx
    relx, rely = ax - pose.x, ay - pose.y
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (relx * sy - rely * sx) / denom          # distance along ray
        w = (relx * ry - rely * rx) / denom          # position along segment
    valid = (np.abs(denom) > 1e-12) & (t > 1e-9) & (w >= -1e-9) & (w <= 1 + 1e-9)
    t = np.where(valid, t, np.inf)
    idx = np.argmin(t, axis=1)
    best = t[np.arange(cfg.columns), idx]
    hit = best <= cfg.max_range
    return (np.where(hit, best, cfg.max_range),
            np.where(hit, idx, -1).astype(int))


def raycast_observation(fp: FloorPlan, pose: AgentPose,
                        cfg: RaycastConfig = RaycastConfig(),
                        palette_id: str = "default") -> np.ndarray:
    """Egocentric column renderer over the wall set.

    Wall column height is inversely proportional to perpendicular-corrected
    distance; wall color is the color of the region owning the hit segment;
    the floor takes the current region's color at reduced brightness.
    """
    region = locate_region(fp, pose.position)
    if region is None:
        raise RenderError(f"pose ({pose.x}, {pose.y}) is outside free space")
    walls = extract_walls(fp)
    dists, idxs = raycast_distances(fp, pose, cfg)
    offsets = np.linspace(-cfg.fov_rad / 2, cfg.fov_rad / 2, cfg.columns)

    floor_color = tuple(int(c * 0.5) for c in
                        palette_color(fp.type_catalog, region.region_type, palette_id))
    img = np.empty((cfg.height, cfg.columns, 3), dtype=np.uint8)
    img[: cfg.height // 2] = CEILING_COLOR
    img[cfg.height // 2:] = floor_color

    half = cfg.height / 2.0
    for col in range(cfg.columns):
        seg_idx = idxs[col]
        if seg_idx < 0:
            continue
        d_perp = max(dists[col] * math.cos(offsets[col]), 1e-6)
        wall_half = min(half, half / d_perp)
        top = int(round(half - wall_half))
        bottom = int(round(half + wall_half))
        owner = fp.regions_by_id[walls.region_ids[seg_idx]]
        base = palette_color(fp.type_catalog, owner.region_type, palette_id)
        shade = 0.35 + 0.65 * max(0.0, 1.0 - dists[col] / cfg.max_range)
        img[top:bottom, col] = tuple(int(c * shade) for c in base)
    return img


def mask_plan_raster(raster: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Grey out a random contiguous rectangle covering `fraction` of pixels."""
    if not 0.0 <= fraction <= 1.0:
        raise RenderError(f"mask fraction {fraction} outside [0, 1]")
    if fraction == 0.0:
        return raster.copy()
    h, w = raster.shape[:2]
    rng = np.random.default_rng(seed)
    side = math.sqrt(fraction)
    rh = min(h, max(1, int(round(h * side))))
    rw = min(w, max(1, int(round(w * side))))
    y0 = int(rng.integers(0, h - rh + 1))
    x0 = int(rng.integers(0, w - rw + 1))
    out = raster.copy()
    out[y0:y0 + rh, x0:x0 + rw] = MASK_GREY
    return out


def save_png(arr: np.ndarray, path) -> None:
    Image.fromarray(arr).save(path, format="PNG")


def load_png(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"))
