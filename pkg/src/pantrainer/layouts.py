"""Handpan model and guidance-interface geometry.

The instrument sits in the z = 0 plane, +z up, with the player at -y.
Dimple 0 is the central ding; dimples 1-7 sit on the rim circle.  Each
guidance interface turns a chart into per-note approach paths: a note's
sprite travels its path over ``travel_time_ms`` and reaches the path
endpoint exactly at the note onset, whatever the scroll speed.

Plane positions, tunnel size, curve shapes and column spacing are
configuration defaults, not contract; only the arrival behaviour and the
dimple/lane correspondence are fixed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .chart import DIMPLE_COUNT, Chart, Note

Vec3 = tuple[float, float, float]

SCALE_PITCHES = ("D3", "A3", "Bb3", "C4", "D4", "E4", "F4", "A4")

# One clearly distinct hue per dimple, overridable (participants found some
# hues hard to track, so this is configuration).
DEFAULT_PALETTE = ("#ff0000", "#ff8000", "#ffff00", "#00cc00",
                   "#00ffff", "#0000ff", "#8000ff", "#ff00ff")

DEFAULT_SCROLL_SPEED_MPS = 0.6
DEFAULT_HIGHWAY_LENGTH_M = 1.2


class LayoutError(Exception):
    pass


class InvalidParamsError(LayoutError):
    pass


class UnknownPitchError(LayoutError):
    pass


class VideoHasNoPathsError(LayoutError):
    pass


class LayoutKind(Enum):
    STANDARD_PATH = "StandardPath"
    HIGHLIGHTED_DIMPLE = "HighlightedDimple"
    FOUR_SPLIT_PATH = "FourSplitPath"
    DIRECT_CURVED_PATH = "DirectCurvedPath"
    SEMICIRCULAR_TWO_SPLIT_PATH = "SemicircularTwoSplitPath"
    VIDEO = "Video"


GUIDED_KINDS = tuple(k for k in LayoutKind if k is not LayoutKind.VIDEO)


@dataclass(frozen=True)
class Dimple:
    index: int
    center: Vec3
    radius_m: float
    pitch_name: str
    color_rgb: str


@dataclass(frozen=True)
class HandpanModel:
    dimples: tuple[Dimple, ...]
    body_radius_m: float

    def dimple(self, index: int) -> Dimple:
        return self.dimples[index]


def handpan_model(body_radius_m: float = 0.28, dimple_radius_m: float = 0.05,
                  rim_factor: float = 0.8,
                  palette: Optional[Sequence[str]] = None,
                  rim_permutation: Optional[Sequence[int]] = None) -> HandpanModel:
    """Build the eight-dimple instrument model.

    The ding sits at the origin; the seven rim dimples are equally spaced on
    the circle of radius ``rim_factor * body_radius_m`` starting at -90
    degrees (nearest the player) and ascending counterclockwise.
    ``rim_permutation`` reorders which dimple occupies which rim position
    (real handpans zigzag pitches across the rim).
    """
    if body_radius_m <= 0 or dimple_radius_m <= 0:
        raise InvalidParamsError("radii must be positive")
    if dimple_radius_m >= body_radius_m:
        raise InvalidParamsError("dimple radius must be smaller than the body")
    colors = tuple(palette) if palette is not None else DEFAULT_PALETTE
    if len(colors) != DIMPLE_COUNT or len(set(colors)) != DIMPLE_COUNT:
        raise InvalidParamsError("palette needs 8 pairwise distinct colors")
    perm = tuple(rim_permutation) if rim_permutation is not None else tuple(range(1, 8))
    if sorted(perm) != list(range(1, 8)):
        raise InvalidParamsError("rim_permutation must permute dimples 1-7")

    centers: dict[int, Vec3] = {0: (0.0, 0.0, 0.0)}
    rim_r = rim_factor * body_radius_m
    for pos, idx in enumerate(perm):
        ang = math.radians(-90.0 + pos * 360.0 / 7.0)
        centers[idx] = (rim_r * math.cos(ang), rim_r * math.sin(ang), 0.0)
    dimples = tuple(
        Dimple(i, centers[i], dimple_radius_m, SCALE_PITCHES[i], colors[i])
        for i in range(DIMPLE_COUNT))
    return HandpanModel(dimples, body_radius_m)


_PITCH_RE = re.compile(r"^([A-Ga-g])([#b]?)(-?\d+)$")
_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


def pitch_frequency(pitch_name: str) -> float:
    """Equal-temperament frequency (A4 = 440 Hz) of a pitch like 'Bb3'."""
    m = _PITCH_RE.match(pitch_name)
    if not m:
        raise UnknownPitchError(f"cannot parse pitch {pitch_name!r}")
    letter, accidental, octave = m.groups()
    midi = 12 * (int(octave) + 1) + _SEMITONE[letter.upper()]
    midi += {"#": 1, "b": -1, "": 0}[accidental]
    return 440.0 * 2.0 ** ((midi - 69) / 12.0)


@dataclass(frozen=True)
class NotePath:
    note_id: int
    points: tuple[Vec3, ...]

    # cumulative arc length per vertex, derived
    cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        acc, cum = 0.0, [0.0]
        for a, b in zip(self.points, self.points[1:]):
            acc += math.dist(a, b)
            cum.append(acc)
        object.__setattr__(self, "cum", tuple(cum))

    @property
    def endpoint(self) -> Vec3:
        return self.points[-1]

    @property
    def length(self) -> float:
        return self.cum[-1]

    def point_at(self, u: float) -> Vec3:
        """Arc-length parameterized point, u in [0, 1]."""
        if u <= 0.0:
            return self.points[0]
        if u >= 1.0:
            return self.points[-1]
        target = u * self.length
        for i in range(1, len(self.points)):
            if target <= self.cum[i]:
                seg = self.cum[i] - self.cum[i - 1]
                w = 0.0 if seg == 0.0 else (target - self.cum[i - 1]) / seg
                a, b = self.points[i - 1], self.points[i]
                return (a[0] + w * (b[0] - a[0]),
                        a[1] + w * (b[1] - a[1]),
                        a[2] + w * (b[2] - a[2]))
        return self.points[-1]


@dataclass(frozen=True)
class RingSchedule:
    note_id: int
    t0_ms: float
    t1_ms: float
    outer_radius_m: float


@dataclass(frozen=True)
class RingState:
    note_id: int
    outer_radius_m: float
    inner_radius_m: float
    active: bool


@dataclass(frozen=True)
class LayoutGeometry:
    kind: LayoutKind
    note_paths: tuple[NotePath, ...]          # empty for Video
    travel_time_ms: float
    scroll_speed_mps: float
    media_ref: Optional[str]
    rings: tuple[RingSchedule, ...]           # HighlightedDimple only
    notes: tuple[tuple[int, int, int], ...]   # (note_id, dimple, onset_ms)
    dimples: tuple[Dimple, ...]

    def path_for(self, note_id: int) -> NotePath:
        return self._path_index[note_id]

    _path_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_path_index",
                           {p.note_id: p for p in self.note_paths})


def _lane_x(dimple: int, lane_gap_m: float) -> float:
    return (dimple - (DIMPLE_COUNT - 1) / 2.0) * lane_gap_m


def _bezier(p0: Vec3, p1: Vec3, p2: Vec3, p3: Vec3, samples: int) -> list[Vec3]:
    pts = []
    for k in range(samples):
        u = k / (samples - 1)
        v = 1.0 - u
        c0, c1, c2, c3 = v * v * v, 3 * v * v * u, 3 * v * u * u, u * u * u
        pts.append(tuple(c0 * p0[i] + c1 * p1[i] + c2 * p2[i] + c3 * p3[i]
                         for i in range(3)))
    pts[-1] = p3
    return pts


def _semicircle(start: Vec3, end: Vec3, samples: int) -> list[Vec3]:
    cx = tuple((start[i] + end[i]) / 2.0 for i in range(3))
    w = tuple(start[i] - cx[i] for i in range(3))
    radius = math.sqrt(sum(c * c for c in w))
    if radius == 0.0:
        return [start] * (samples - 1) + [end]
    chord = tuple(end[i] - start[i] for i in range(3))
    # bulge perpendicular to the chord, toward the player (-y)
    ux = chord[1] * 1.0 - chord[2] * 0.0
    uy = chord[2] * 0.0 - chord[0] * 1.0
    uz = chord[0] * 0.0 - chord[1] * 0.0
    norm = math.sqrt(ux * ux + uy * uy + uz * uz)
    if norm == 0.0:
        ux, uy, uz, norm = 0.0, -1.0, 0.0, 1.0
    u = (ux / norm * radius, uy / norm * radius, uz / norm * radius)
    if u[1] > 0:
        u = (-u[0], -u[1], -u[2])
    pts = []
    for k in range(samples):
        th = math.pi * k / (samples - 1)
        c, s = math.cos(th), math.sin(th)
        pts.append(tuple(cx[i] + c * w[i] + s * u[i] for i in range(3)))
    pts[-1] = end
    return pts


def build_layout(kind: LayoutKind, model: HandpanModel, chart: Chart,
                 scroll_speed_mps: float = DEFAULT_SCROLL_SPEED_MPS,
                 highway_length_m: float = DEFAULT_HIGHWAY_LENGTH_M,
                 lane_gap_m: float = 0.1,
                 tunnel_size_m: float = 0.6,
                 plane_y_m: float = 0.45,
                 column_x_m: float = 0.3,
                 column_z0_m: float = 0.12,
                 column_dz_m: float = 0.12,
                 curve_samples: int = 33,
                 media_ref: Optional[str] = None) -> LayoutGeometry:
    """Generate the geometry and animation schedule for one interface."""
    if scroll_speed_mps <= 0 or highway_length_m <= 0:
        raise InvalidParamsError("speed and highway length must be positive")
    if lane_gap_m <= 0 or tunnel_size_m <= 0 or curve_samples < 2:
        raise InvalidParamsError("bad layout shape parameters")

    notes = chart.notes
    note_meta = tuple((n.id, n.dimple, n.onset_ms) for n in notes)

    if kind is LayoutKind.VIDEO:
        ref = media_ref or "media/" + re.sub(r"[^a-z0-9]+", "_", chart.title.lower()).strip("_") + ".mp4"
        return LayoutGeometry(kind, (), 0.0, scroll_speed_mps, ref, (),
                              note_meta, model.dimples)

    travel_ms = 1000.0 * highway_length_m / scroll_speed_mps
    H = highway_length_m

    def dimple_path_points(d: int) -> tuple[Vec3, ...]:
        if kind in (LayoutKind.STANDARD_PATH, LayoutKind.HIGHLIGHTED_DIMPLE):
            x = _lane_x(d, lane_gap_m)
            return ((x, plane_y_m, H), (x, plane_y_m, 0.0))
        if kind is LayoutKind.FOUR_SPLIT_PATH:
            plane, slot = divmod(d, 2)
            s = tunnel_size_m
            off = (slot - 0.5) * (s / 2.0)  # two lanes per plane
            if plane == 0:    # floor
                x, z = off, 0.0
            elif plane == 1:  # right wall
                x, z = s / 2.0, s / 2.0 + off
            elif plane == 2:  # ceiling
                x, z = off, s
            else:             # left wall
                x, z = -s / 2.0, s / 2.0 + off
            return ((x, plane_y_m + H, z), (x, plane_y_m, z))
        if kind is LayoutKind.DIRECT_CURVED_PATH:
            center = model.dimple(d).center
            p0 = (_lane_x(d, lane_gap_m), plane_y_m, H)
            p1 = (p0[0], p0[1], H * 0.55)
            p2 = (center[0], center[1], H * 0.3)
            return tuple(_bezier(p0, p1, p2, center, curve_samples))
        # SemicircularTwoSplitPath: horizontal origins, two vertical columns
        start = (_lane_x(d, lane_gap_m), plane_y_m, H)
        side = -1.0 if d < 4 else 1.0
        slot = d % 4
        end = (side * column_x_m, plane_y_m, column_z0_m + slot * column_dz_m)
        return tuple(_semicircle(start, end, curve_samples))

    per_dimple = {d: dimple_path_points(d) for d in range(DIMPLE_COUNT)}
    paths = tuple(NotePath(n.id, per_dimple[n.dimple]) for n in notes)

    rings: tuple[RingSchedule, ...] = ()
    if kind is LayoutKind.HIGHLIGHTED_DIMPLE:
        rings = tuple(RingSchedule(n.id, n.onset_ms - travel_ms, float(n.onset_ms),
                                   model.dimple(n.dimple).radius_m)
                      for n in notes)

    return LayoutGeometry(kind, paths, travel_ms, scroll_speed_mps, None,
                          rings, note_meta, model.dimples)


def note_position(layout: LayoutGeometry, note: Note, t_ms: float) -> Optional[Vec3]:
    """Sprite position at time t, or None outside the approach interval.

    Within [onset - travel_time, onset] the position advances by arc length;
    at t = onset it is the path endpoint exactly.
    """
    if layout.kind is LayoutKind.VIDEO:
        raise VideoHasNoPathsError("video layout has no note paths")
    path = layout.path_for(note.id)
    travel = layout.travel_time_ms
    start = note.onset_ms - travel
    if t_ms < start or t_ms > note.onset_ms:
        return None
    if t_ms >= note.onset_ms:
        return path.endpoint
    return path.point_at((t_ms - start) / travel)


def highlight_state(model: HandpanModel, note: Note, t_ms: float,
                    travel_time_ms: float) -> RingState:
    """Dual-ring animation state: the inner ring grows from a point at the
    dimple center until it coincides with the outer ring at the onset."""
    outer = model.dimple(note.dimple).radius_m
    start = note.onset_ms - travel_time_ms
    active = start <= t_ms <= note.onset_ms
    u = (t_ms - start) / travel_time_ms if travel_time_ms > 0 else 1.0
    u = min(1.0, max(0.0, u))
    return RingState(note.id, outer, outer * u, active)


def serialize_layout(layout: LayoutGeometry) -> str:
    """Line-oriented layout blob consumed by the session protocol and UI.

    Lines: ``TRAVEL ms speed`` / ``DIMPLE i x y z r color`` /
    ``NOTE id dimple onset`` / ``PATH id n x y z ...`` /
    ``RING id t0 t1 R`` / ``MEDIA ref``.
    """
    out = [f"TRAVEL {layout.travel_time_ms!r} {layout.scroll_speed_mps!r}"]
    for d in layout.dimples:
        out.append(f"DIMPLE {d.index} {d.center[0]!r} {d.center[1]!r} "
                   f"{d.center[2]!r} {d.radius_m!r} {d.color_rgb}")
    for nid, dim, onset in layout.notes:
        out.append(f"NOTE {nid} {dim} {onset}")
    for p in layout.note_paths:
        coords = " ".join(repr(c) for pt in p.points for c in pt)
        out.append(f"PATH {p.note_id} {len(p.points)} {coords}")
    for r in layout.rings:
        out.append(f"RING {r.note_id} {r.t0_ms!r} {r.t1_ms!r} {r.outer_radius_m!r}")
    if layout.media_ref is not None:
        out.append(f"MEDIA {layout.media_ref}")
    return "\n".join(out) + "\n"


def parse_layout(kind: LayoutKind, blob: str) -> LayoutGeometry:
    travel, speed = 0.0, 0.0
    dimples: list[Dimple] = []
    notes: list[tuple[int, int, int]] = []
    paths: list[NotePath] = []
    rings: list[RingSchedule] = []
    media: Optional[str] = None
    note_pitch = {i: SCALE_PITCHES[i] for i in range(DIMPLE_COUNT)}
    for raw in blob.splitlines():
        if not raw.strip():
            continue
        tag, *rest = raw.split(" ")
        if tag == "TRAVEL":
            travel, speed = float(rest[0]), float(rest[1])
        elif tag == "DIMPLE":
            idx = int(rest[0])
            center = (float(rest[1]), float(rest[2]), float(rest[3]))
            dimples.append(Dimple(idx, center, float(rest[4]),
                                  note_pitch[idx], rest[5]))
        elif tag == "NOTE":
            notes.append((int(rest[0]), int(rest[1]), int(rest[2])))
        elif tag == "PATH":
            nid, n = int(rest[0]), int(rest[1])
            vals = [float(v) for v in rest[2:]]
            if len(vals) != 3 * n:
                raise LayoutError(f"PATH {nid}: expected {3 * n} coords")
            pts = tuple((vals[3 * i], vals[3 * i + 1], vals[3 * i + 2])
                        for i in range(n))
            paths.append(NotePath(nid, pts))
        elif tag == "RING":
            rings.append(RingSchedule(int(rest[0]), float(rest[1]),
                                      float(rest[2]), float(rest[3])))
        elif tag == "MEDIA":
            media = " ".join(rest)
        else:
            raise LayoutError(f"unknown layout line {tag!r}")
    return LayoutGeometry(kind, tuple(paths), travel, speed, media,
                          tuple(rings), tuple(notes), tuple(dimples))
