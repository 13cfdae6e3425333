"""Closed-loop four-week study at virtual time.

Week 1 none, week 2 hourly (labels accumulate), models fitted at the week-2
boundary, weeks 3-4 per each participant's counterbalanced schedule. The
whole run is a pure function of (profiles, seed): every stochastic draw
comes from a named substream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..calibration import evaluate_population
from ..server.clock import VirtualClock
from ..server.core import ServerConfig, StudyServer
from ..timeutil import (
    DAY_WINDOW_END_MIN,
    DAY_WINDOW_START_MIN,
    MINUTE_MS,
    day_minute_to_utc_ms,
    local_minute_of_day,
)
from .clients import ParentClient, WatchClient, make_connectivity
from .profiles import FamilyProfile
from .trace import GroundTruthState, gen_trace

ANCHOR_DAY = 20_000  # arbitrary epoch day the virtual study is pinned to
ACTIVE_START_MIN = 6 * 60  # nothing happens locally outside [06:00, 23:00]
ACTIVE_END_MIN = 23 * 60


class InvariantViolation(Exception):
    pass


@dataclass
class StudyRunReport:
    seed: int
    n_participants: int
    weeks: int
    metrics: dict
    evaluation: dict
    conservation: dict
    invariant_violations: list[str]
    response_logs: dict
    transport_logs: dict
    # ground-truth trace, kept out of the serialized report
    ground_truth: list = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "n_participants": self.n_participants,
                "weeks": self.weeks,
                "metrics": self.metrics,
                "evaluation": self.evaluation,
                "conservation": self.conservation,
                "invariant_violations": self.invariant_violations,
                "response_logs": self.response_logs,
                "transport_logs": self.transport_logs,
            },
            indent=2,
            sort_keys=True,
        )

    def render_text(self) -> str:
        conds = ["none", "hourly", "random", "calm_only"]
        headers = ["None", "Hourly", "Random", "Calm-Only"]

        def fmt_rate(cond: str, kind: str) -> str:
            r = self.metrics[cond][kind]["rate_pct"]
            return "N/A" if r is None else f"{r:5.1f}"

        lines = []
        lines.append("Response rate (%) by condition")
        lines.append(f"{'':>12}" + "".join(f"{h:>11}" for h in headers))
        for kind, label in (
            ("intraday", "Intraday"),
            ("end_of_day", "End-of-Day"),
            ("end_of_week", "End-of-Week"),
        ):
            lines.append(
                f"{label:>12}" + "".join(f"{fmt_rate(c, kind):>11}" for c in conds)
            )
        lines.append("")
        lines.append("Perceived-calm ratio (% of answered intraday prompts rated < 3)")
        for c, h in zip(conds, headers):
            r = self.metrics[c]["calm_ratio_pct"]
            lines.append(f"  {h:<10} {'N/A' if r is None else f'{r:.1f}'}")
        lines.append("")
        ev = self.evaluation
        g = ev.get("global_r_squared")
        p = ev.get("mean_personalized_r_squared")
        lines.append(f"Calibration (8:2 split, seed {self.seed}):")
        lines.append(f"  global R^2            {'undefined' if g is None else f'{g:.3f}'}")
        lines.append(f"  mean personalized R^2 {'undefined' if p is None else f'{p:.3f}'}")
        lines.append(f"  labels                {ev.get('n_labels', 0)}")
        if self.invariant_violations:
            lines.append("")
            lines.append(f"INVARIANT VIOLATIONS ({len(self.invariant_violations)}):")
            lines.extend(f"  {v}" for v in self.invariant_violations)
        return "\n".join(lines) + "\n"


def check_policy_invariants(server: StudyServer) -> list[str]:
    """Delivery-window, spacing, per-condition count, and threshold checks
    over every prompt the server ever sent."""
    violations: list[str] = []
    by_pid: dict[str, list] = {}
    for ev in server.prompts.values():
        if ev.kind != "intraday":
            continue
        by_pid.setdefault(ev.participant_id, []).append(ev)
    planned: dict[tuple[str, int], str] = {}
    for r in server.records:
        if r["kind"] == "day_planned":
            planned[(r["participant_id"], r["study_day"])] = r["condition"]
    for pid, evs in by_pid.items():
        p = server.participants[pid]
        evs.sort(key=lambda e: e.sent_at_ms)
        for a, b in zip(evs, evs[1:]):
            if b.sent_at_ms - a.sent_at_ms < 60 * MINUTE_MS:
                violations.append(
                    f"{pid}: intraday gap {b.sent_at_ms - a.sent_at_ms}ms < 60min at {b.sent_at_ms}"
                )
        counts: dict[int, int] = {}
        for ev in evs:
            m = local_minute_of_day(ev.sent_at_ms, p.utc_offset_minutes)
            if not DAY_WINDOW_START_MIN <= m < DAY_WINDOW_END_MIN:
                violations.append(f"{pid}: intraday at local minute {m} outside [08:00,20:00)")
            if ev.trigger == "calm_trigger" and not (
                ev.predicted is not None and ev.predicted < server.config.calm_threshold
            ):
                violations.append(f"{pid}: calm trigger with predicted={ev.predicted}")
            sd = server.study_day(p, ev.sent_at_ms)
            counts[sd] = counts.get(sd, 0) + 1
        for (ppid, sd), cond in planned.items():
            if ppid != pid:
                continue
            n = counts.get(sd, 0)
            if cond == "hourly" and n != 12:
                violations.append(f"{pid} day {sd}: hourly sent {n} != 12")
            elif cond == "random" and n != 5:
                violations.append(f"{pid} day {sd}: random sent {n} != 5")
            elif cond == "calm_only" and n > 5:
                violations.append(f"{pid} day {sd}: calm_only sent {n} > 5")
            elif cond == "none" and n != 0:
                violations.append(f"{pid} day {sd}: none sent {n} != 0")
    return violations


def calm_trigger_precision(
    server: StudyServer, truth: Sequence[GroundTruthState]
) -> Optional[float]:
    """Fraction of calm-triggered prompts whose most recent ground-truth
    window was calm. None when no calm triggers fired."""
    by_pid: dict[str, list[GroundTruthState]] = {}
    for g in truth:
        by_pid.setdefault(g.participant_id, []).append(g)
    for lst in by_pid.values():
        lst.sort(key=lambda g: g.window_start_ms)
    hits = total = 0
    for ev in server.prompts.values():
        if ev.trigger != "calm_trigger":
            continue
        lst = by_pid.get(ev.participant_id, [])
        last = None
        for g in lst:
            if g.window_start_ms + 5 * MINUTE_MS <= ev.sent_at_ms:
                last = g
            else:
                break
        if last is not None:
            total += 1
            if last.state == "calm":
                hits += 1
    return hits / total if total else None


def run_study(
    profiles: Sequence[FamilyProfile],
    seed: int,
    weeks: int = 4,
    log_path: Optional[str] = None,
    config: Optional[ServerConfig] = None,
    split_ratio: float = 0.8,
    stop_at_study_day: Optional[int] = None,
    server: Optional[StudyServer] = None,
) -> tuple[StudyRunReport, StudyServer]:
    """Execute the full protocol; returns the report and the (closed-loop)
    server for further inspection. stop_at_study_day truncates the run
    mid-study (used by the crash-durability test)."""
    clock = VirtualClock(day_minute_to_utc_ms(ANCHOR_DAY, 10 * 60, 0))
    if server is None:
        cfg = config or ServerConfig(study_seed=seed, study_weeks=weeks)
        server = StudyServer(clock=clock, log_path=log_path, config=cfg)
    else:
        server.clock = clock
    study_days = weeks * 7

    watches: list[WatchClient] = []
    parents: list[ParentClient] = []
    traces: dict[str, list] = {}
    truths: list[GroundTruthState] = []
    for i, prof in enumerate(profiles):
        clock.set(day_minute_to_utc_ms(ANCHOR_DAY, 10 * 60 + i, 0))
        p = server.register_participant(prof.participant_id, prof.utc_offset_minutes)
        sub = seed * 1000 + i
        windows, truth = gen_trace(prof, ANCHOR_DAY + 1, study_days, sub)
        windows = [w.__class__(p.id, w.window_start_ms, w.energy, w.sample_count) for w in windows]
        truth = [GroundTruthState(p.id, g.window_start_ms, g.state) for g in truth]
        traces[p.id] = windows
        truths.extend(truth)
        conn = make_connectivity(sub)
        watches.append(
            WatchClient(p.id, prof.utc_offset_minutes, windows, server, conn, sub)
        )
        parents.append(ParentClient(prof, p.id, server, windows, sub))

    offsets = [prof.utc_offset_minutes for prof in profiles]
    start_min = max(0, ACTIVE_START_MIN - max(offsets))
    end_min = min(24 * 60, ACTIVE_END_MIN - min(offsets))
    first_day = ANCHOR_DAY + 1
    run_days = study_days if stop_at_study_day is None else min(stop_at_study_day, study_days)
    fitted = False

    for d in range(first_day, first_day + run_days + 3):  # +3 drain days
        for minute in range(start_min, end_min):
            t = day_minute_to_utc_ms(d, minute, 0)
            clock.set(t)
            if not fitted and weeks >= 2 and d - first_day >= 14:
                server.fit_models()
                fitted = True
            server.tick(t)
            for w in watches:
                w.step(t)
            for pc in parents:
                pc.step(t)
        if stop_at_study_day is not None and d - first_day + 1 >= run_days:
            break
    # final sweep well past every expiry horizon
    clock.advance(3 * 24 * 60 * MINUTE_MS)
    server.tick(clock.now_ms())

    evaluation: dict = {"n_labels": len(server.labels)}
    try:
        pop = evaluate_population(server.labels, split_ratio, seed)
        evaluation["global_r_squared"] = pop.global_report.r_squared
        evaluation["mean_personalized_r_squared"] = pop.mean_participant_r_squared
        evaluation["per_participant"] = {
            r.scope: r.r_squared for r in pop.participant_reports
        }
    except Exception:
        evaluation["global_r_squared"] = None
        evaluation["mean_personalized_r_squared"] = None
        evaluation["per_participant"] = {}

    conservation = {}
    for w in watches:
        undeliv = w.undelivered()
        stored = len(server._windows[w.pid])
        conservation[w.pid] = {
            "generated": len(traces[w.pid]),
            "stored": stored,
            "undelivered": len(undeliv),
        }

    report = StudyRunReport(
        seed=seed,
        n_participants=len(profiles),
        weeks=weeks,
        metrics=server.metrics(),
        evaluation=evaluation,
        conservation=conservation,
        invariant_violations=check_policy_invariants(server),
        response_logs={pc.pid: pc.log for pc in parents},
        transport_logs={w.pid: w.log for w in watches},
        ground_truth=truths,
    )
    return report, server
