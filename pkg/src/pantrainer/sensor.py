"""Orientation-tracker wire protocol, device simulator and pose application.

The tracker streams NMEA-style ASCII sentences, one frame per line::

    $OTR,<seq>,<qw>,<qx>,<qy>,<qz>,<ax>,<ay>,<az>,<cs>,<cg>,<ca>,<cm>*HH\\n

Floats are fixed at 4 decimals; HH is the XOR of all bytes strictly
between ``$`` and ``*`` as two uppercase hex digits.  Commands travel the
other way as ``$CMD,RESET*HH``.  The frame grammar is an artifact of this
package; the hardware protocol only fixed the serial rate.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterable, Optional

if TYPE_CHECKING:
    from .layouts import HandpanModel

GRAVITY_MPS2 = 9.81

# 8N1 framing: one start + eight data + one stop bit per byte
SERIAL_BITS_PER_BYTE = 10
DEFAULT_BAUD = 9600
DEFAULT_RATE_HZ = 50.0

CAL_RAMP_MS = 2000.0


class FrameError(Exception):
    pass


class BadChecksumError(FrameError):
    pass


class BadFieldCountError(FrameError):
    pass


class BadNumberError(FrameError):
    pass


class UnknownSentenceError(FrameError):
    pass


class UncalibratedError(Exception):
    """Pose requested while the system calibration level is too low."""


class CommandKind(enum.Enum):
    RESET = "RESET"


@dataclass(frozen=True)
class DeviceCommand:
    kind: CommandKind = CommandKind.RESET


@dataclass(frozen=True)
class OrientationFrame:
    seq: int
    q: tuple[float, float, float, float]      # (w, x, y, z), unit within 1e-3
    accel: tuple[float, float, float]         # m/s^2
    cal: tuple[int, int, int, int]            # system, gyro, accel, mag: 0-3
    t_rx_ms: int = 0


def checksum(payload: bytes) -> int:
    acc = 0
    for b in payload:
        acc ^= b
    return acc


def encode_frame(frame: OrientationFrame) -> bytes:
    fields = [f"{frame.seq % 2 ** 32}"]
    fields += [f"{v:.4f}" for v in frame.q]
    fields += [f"{v:.4f}" for v in frame.accel]
    fields += [str(c) for c in frame.cal]
    payload = ("OTR," + ",".join(fields)).encode("ascii")
    return b"$" + payload + b"*" + b"%02X" % checksum(payload) + b"\n"


def encode_command(cmd: DeviceCommand) -> bytes:
    payload = f"CMD,{cmd.kind.value}".encode("ascii")
    return b"$" + payload + b"*" + b"%02X" % checksum(payload) + b"\n"


def _split_sentence(line: bytes) -> list[bytes]:
    body = line.rstrip(b"\r\n")
    if not body.startswith(b"$"):
        raise BadFieldCountError("sentence must start with '$'")
    star = body.find(b"*")
    if star < 0:
        raise BadFieldCountError("missing '*' checksum delimiter")
    payload, tail = body[1:star], body[star + 1:]
    if len(tail) != 2:
        raise BadChecksumError(f"checksum must be two hex digits, got {tail!r}")
    try:
        declared = int(tail, 16)
    except ValueError:
        raise BadChecksumError(f"bad checksum digits {tail!r}") from None
    if tail != tail.upper():
        raise BadChecksumError("checksum digits must be uppercase")
    if declared != checksum(payload):
        raise BadChecksumError(
            f"checksum mismatch: declared {tail.decode()}, "
            f"computed {checksum(payload):02X}")
    return payload.split(b",")


def decode_frame(line: bytes, t_rx_ms: int = 0) -> OrientationFrame:
    """Decode one frame line; the receive timestamp is the caller's clock."""
    fields = _split_sentence(line)
    if fields[0] != b"OTR":
        raise UnknownSentenceError(f"unknown sentence tag {fields[0]!r}")
    if len(fields) != 13:
        raise BadFieldCountError(f"expected 13 fields, got {len(fields)}")
    try:
        seq = int(fields[1])
        vals = [float(v) for v in fields[2:9]]
        cal = tuple(int(v) for v in fields[9:13])
    except ValueError as exc:
        raise BadNumberError(str(exc)) from None
    if not 0 <= seq < 2 ** 32:
        raise BadNumberError(f"sequence {seq} outside unsigned 32-bit range")
    if any(not 0 <= c <= 3 for c in cal):
        raise BadNumberError(f"calibration values out of range: {cal}")
    q = tuple(vals[0:4])
    norm = math.sqrt(sum(c * c for c in q))
    if norm == 0.0:
        raise BadNumberError("zero quaternion")
    if abs(norm - 1.0) > 1e-3:  # renormalize off-unit input
        q = tuple(c / norm for c in q)
    return OrientationFrame(seq, q, tuple(vals[4:7]), cal, t_rx_ms)


def bytes_per_second(rate_hz: float, line_bytes: int) -> float:
    return rate_hz * line_bytes


def max_rate_hz(baud: int, line_bytes: int) -> float:
    """Highest frame rate a serial link can sustain for a given line size."""
    return baud / SERIAL_BITS_PER_BYTE / line_bytes


# --- device simulator ------------------------------------------------------

class MotionProfile(enum.Enum):
    STILL = "STILL"
    SLOW_TILT = "SLOW_TILT"
    DRIFTY = "DRIFTY"


TILT_AMPLITUDE_DEG = 15.0
TILT_FREQ_HZ = 0.2
DRIFT_STEP_DEG = 0.5


def _qmul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw)


def _qconj(q):
    return (q[0], -q[1], -q[2], -q[3])


def _qnormalize(q):
    n = math.sqrt(sum(c * c for c in q))
    return tuple(c / n for c in q)


def rotate_vector(q, v) -> tuple[float, float, float]:
    """Rotate v by unit quaternion q (active rotation)."""
    p = (0.0, v[0], v[1], v[2])
    w = _qmul(_qmul(q, p), _qconj(q))
    return (w[1], w[2], w[3])


def _axis_angle(axis, angle_rad):
    h = angle_rad / 2.0
    s = math.sin(h)
    return (math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s)


def _quantize(values, places=4):
    return tuple(round(v, places) for v in values)


@dataclass
class SimState:
    """Mutable simulator state; step_simulator advances it in place."""
    profile: MotionProfile
    rate_hz: float
    rng: random.Random
    seq: int = 0
    tick: int = 0
    yaw_deg: float = 0.0
    ref_conj: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    pending_reset: bool = False


def new_simulator(profile: MotionProfile, rate_hz: float = DEFAULT_RATE_HZ,
                  seed: int = 0) -> SimState:
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    return SimState(profile, rate_hz, random.Random(f"otr-sim:{seed}"))


def _raw_orientation(state: SimState, t_ms: float):
    if state.profile is MotionProfile.STILL:
        return (1.0, 0.0, 0.0, 0.0)
    if state.profile is MotionProfile.SLOW_TILT:
        ang = math.radians(TILT_AMPLITUDE_DEG) * math.sin(
            2.0 * math.pi * TILT_FREQ_HZ * t_ms / 1000.0)
        return _axis_angle((1.0, 0.0, 0.0), ang)
    # DRIFTY: random-walk yaw, one step per frame
    state.yaw_deg += state.rng.gauss(0.0, DRIFT_STEP_DEG)
    return _axis_angle((0.0, 0.0, 1.0), math.radians(state.yaw_deg))


def step_simulator(state: SimState) -> OrientationFrame:
    """Produce the next frame (50 Hz default); mutates the state."""
    t_ms = state.tick * 1000.0 / state.rate_hz
    raw = _raw_orientation(state, t_ms)
    if state.pending_reset:
        # zero the reference so this frame reads as identity
        state.ref_conj = _qconj(raw)
        state.pending_reset = False
    q = _qnormalize(_qmul(state.ref_conj, raw))
    if q[0] < 0:  # canonical hemisphere
        q = tuple(-c for c in q)
    accel = rotate_vector(_qconj(q), (0.0, 0.0, GRAVITY_MPS2))
    level = min(3, int(3.0 * t_ms / CAL_RAMP_MS))
    frame = OrientationFrame(
        seq=state.seq,
        q=_quantize(q),
        accel=_quantize(accel),
        cal=(level, level, level, level),
        t_rx_ms=int(t_ms),
    )
    state.seq += 1
    state.tick += 1
    return frame


def handle_command(cmd: DeviceCommand, state: SimState) -> SimState:
    """Apply a device command; RESET re-zeroes orientation, seq continues."""
    if cmd.kind is CommandKind.RESET:
        state.pending_reset = True
    return state


def simulate_device(profile: MotionProfile, duration_ms: int,
                    rate_hz: float = DEFAULT_RATE_HZ,
                    seed: int = 0) -> list[OrientationFrame]:
    """Deterministic frame stream; count = floor(duration * rate / 1000)."""
    state = new_simulator(profile, rate_hz, seed)
    count = int(duration_ms * rate_hz / 1000.0)
    return [step_simulator(state) for _ in range(count)]


# --- pose application ------------------------------------------------------

def session_ready(frame: OrientationFrame, min_level: int = 3) -> bool:
    """Whether fusion confidence is high enough to start a tracked session.

    Pose application tolerates partial calibration (level 1 by default);
    session start demands full calibration on every sensor.
    """
    return all(c >= min_level for c in frame.cal)


@dataclass(frozen=True)
class PosedModel:
    base: "HandpanModel"
    rotation: tuple[float, float, float, float]
    dimple_centers: tuple[tuple[float, float, float], ...]


def apply_pose(model: "HandpanModel", frame: OrientationFrame,
               min_system_cal: int = 1, override: bool = False) -> PosedModel:
    """Rotate all dimple centers by the frame orientation.

    Requires system calibration >= min_system_cal unless overridden.
    """
    if frame.cal[0] < min_system_cal and not override:
        raise UncalibratedError(
            f"system calibration {frame.cal[0]} below threshold {min_system_cal}")
    q = _qnormalize(frame.q)
    centers = tuple(rotate_vector(q, d.center) for d in model.dimples)
    return PosedModel(model, q, centers)


# --- file replay transport ---------------------------------------------------

def write_frame_log(path: str | Path, frames: Iterable[OrientationFrame]) -> None:
    with open(path, "wb") as fh:
        for frame in frames:
            fh.write(encode_frame(frame))


def read_frame_log(path: str | Path,
                   clock: Optional[Callable[[int], int]] = None,
                   errors: str = "raise") -> list[OrientationFrame]:
    """Replay a frame log written in the wire format.

    ``clock`` maps line index to a receive timestamp (defaults to 0);
    ``errors`` is 'raise' or 'skip' for malformed lines.
    """
    frames = []
    with open(path, "rb") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                frames.append(decode_frame(line, clock(i) if clock else 0))
            except FrameError:
                if errors != "skip":
                    raise
    return frames
