"""Hardware-free handpan rhythm trainer.

Core pieces: note charts (chart), the strike judge (judge), guidance
interface geometry (layouts), the orientation-tracker protocol and
simulator (sensor), study planning and headless runs (session), the
analysis pipeline (stats), and the live session server (service).
"""

__version__ = "0.1.0"

from .chart import Chart, Note, Pattern, builtin_charts, parse_chart, serialize_chart
from .judge import JudgmentReport, Strike, judge_session, match_dimple, score_summary
from .layouts import (HandpanModel, LayoutGeometry, LayoutKind, build_layout,
                      handpan_model, highlight_state, note_position,
                      pitch_frequency)
from .sensor import (MotionProfile, OrientationFrame, apply_pose, decode_frame,
                     encode_frame, simulate_device)
from .session import (PlayerProfile, SessionPlan, TrialResult,
                      balanced_latin_square, plan_session, run_headless)
from .stats import ScoreTable, bonferroni, paired_t, posthoc_all, rm_anova

__all__ = [
    "Chart", "Note", "Pattern", "builtin_charts", "parse_chart",
    "serialize_chart", "JudgmentReport", "Strike", "judge_session",
    "match_dimple", "score_summary", "HandpanModel", "LayoutGeometry",
    "LayoutKind", "build_layout", "handpan_model", "highlight_state",
    "note_position", "pitch_frequency", "MotionProfile", "OrientationFrame",
    "apply_pose", "decode_frame", "encode_frame", "simulate_device",
    "PlayerProfile", "SessionPlan", "TrialResult", "balanced_latin_square",
    "plan_session", "run_headless", "ScoreTable", "bonferroni", "paired_t",
    "posthoc_all", "rm_anova",
]
