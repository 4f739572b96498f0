"""Keyframe movements: validation, timing semantics, and playback poses.

A movement is an ordered list of keyframe steps (joint posture + the
time it must be reached) plus a speed rate.  Playback rescales time as
playback_time = keyframe_time / speed_rate, so rates above 1 play the
movement faster.  Poses between keyframes come from per-joint natural
cubic splines, built lazily and cached on the movement.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, OutOfRangeError, ValidationError
from .spline import build_spline
from .textio import fmt, kv_value, parse_float, parse_int


@dataclass
class KeyframeStep:
    """One target posture and the movement time at which to reach it."""

    time: float
    joints: np.ndarray

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=float)


@dataclass
class ValidationReport:
    ok: bool
    violations: list  # (rule id, message) pairs


@dataclass
class KeyframeMovement:
    steps: list
    speed_rate: float = 1.0
    name: str = ""
    _splines: list = field(default=None, init=False, repr=False, compare=False)

    @property
    def n_joints(self) -> int:
        return len(self.steps[0].joints) if self.steps else 0

    @property
    def step_times(self) -> np.ndarray:
        return np.array([s.time for s in self.steps], dtype=float)


def validate_movement(m: KeyframeMovement, n_joints=None) -> ValidationReport:
    """Check every movement invariant; never raises.

    Returns a report listing all violations, with ok=True iff there are
    none.  Pass n_joints to additionally pin the expected joint count.
    """
    bad = []
    if len(m.steps) < 2:
        bad.append(("step-count", "movement needs at least 2 keyframe steps"))
    dims = {len(s.joints) for s in m.steps}
    if len(dims) > 1:
        bad.append(("joint-dimensions", "all keyframes must have the same number of joints"))
    elif n_joints is not None and dims and dims != {n_joints}:
        bad.append(("joint-count", f"expected {n_joints} joints per keyframe, found {dims.pop()}"))
    if not all(np.all(np.isfinite(s.joints)) for s in m.steps):
        bad.append(("finite-angles", "joint angles must be finite"))
    times = [s.time for s in m.steps]
    if not all(np.isfinite(t) for t in times):
        bad.append(("finite-times", "step times must be finite"))
    else:
        if m.steps and times[0] != 0.0:
            bad.append(("first-step-time", "first step time must be 0"))
        if any(b <= a for a, b in zip(times, times[1:])):
            bad.append(("times-increasing", "times strictly increasing"))
    if not (np.isfinite(m.speed_rate) and m.speed_rate > 0):
        bad.append(("speed-rate", "speed rate must be positive"))
    return ValidationReport(ok=not bad, violations=bad)


def _require_valid(m: KeyframeMovement):
    report = validate_movement(m)
    if not report.ok:
        detail = "; ".join(f"{rule}: {msg}" for rule, msg in report.violations)
        raise ValidationError(f"invalid movement: {detail}")


def playback_duration(m: KeyframeMovement) -> float:
    """Wall-clock duration of the movement: last keyframe time / speed rate."""
    _require_valid(m)
    return m.steps[-1].time / m.speed_rate


def movement_splines(m: KeyframeMovement) -> list:
    """Per-joint natural cubic splines over keyframe time, cached on m."""
    if m._splines is None:
        _require_valid(m)
        times = m.step_times
        values = np.stack([s.joints for s in m.steps])
        m._splines = [build_spline(times, values[:, j]) for j in range(values.shape[1])]
    return m._splines


def reference_pose(m: KeyframeMovement, t: float) -> np.ndarray:
    """Interpolated joint posture at playback time t.

    t must lie in [0, playback_duration(m)]; open-loop movements have a
    definite end, so out-of-range queries raise rather than clamp.
    """
    splines = movement_splines(m)
    duration = m.steps[-1].time / m.speed_rate
    if t < 0.0 or t > duration:
        raise OutOfRangeError(f"playback time {t} outside [0, {duration}]")
    # guard the end knot against rounding in t * speed_rate
    u = min(t * m.speed_rate, m.steps[-1].time)
    return np.array([s.eval(u) for s in splines])


# --- movement file format -------------------------------------------------
# header: movement n=<int> gamma=<int> rate=<float>
# then gamma lines: t=<float> <j1> ... <jn>


def format_movement(m: KeyframeMovement) -> str:
    n = m.n_joints
    lines = [f"movement n={n} gamma={len(m.steps)} rate={fmt(m.speed_rate)}"]
    for s in m.steps:
        lines.append(f"t={fmt(s.time)} " + " ".join(fmt(v) for v in s.joints))
    return "\n".join(lines) + "\n"


def parse_movement(text: str, name: str = "") -> KeyframeMovement:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise FormatError("line 1: missing movement header")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "movement":
        raise FormatError("line 1: expected 'movement n=<int> gamma=<int> rate=<float>'")
    n = parse_int(kv_value(head[1], "n", 1), 1, "n")
    gamma = parse_int(kv_value(head[2], "gamma", 1), 1, "gamma")
    rate = parse_float(kv_value(head[3], "rate", 1), 1, "rate")

    steps = []
    line_no = 1
    for raw in lines[1:]:
        line_no += 1
        if not raw.strip():
            continue
        parts = raw.split()
        t = parse_float(kv_value(parts[0], "t", line_no), line_no, "t")
        if len(parts) - 1 != n:
            raise FormatError(f"line {line_no}: expected {n} joint values, found {len(parts) - 1}")
        joints = [parse_float(p, line_no, "joint value") for p in parts[1:]]
        steps.append(KeyframeStep(t, np.array(joints)))
    if len(steps) != gamma:
        raise FormatError(f"line {line_no}: header declares gamma={gamma} but found {len(steps)} steps")
    return KeyframeMovement(steps, speed_rate=rate, name=name)


def save_movement(m: KeyframeMovement, path):
    with open(path, "w") as f:
        f.write(format_movement(m))


def load_movement(path) -> KeyframeMovement:
    with open(path) as f:
        text = f.read()
    return parse_movement(text, name=Path(path).stem)
