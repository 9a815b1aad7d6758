"""Seeded synthetic database generator.

Each user runs a two-state Markov engagement chain over sessions: while ON
they attend the session and complete each of the four activities independently
with a fixed probability, while OFF they emit nothing. A per-user engagement
level drawn from a Beta prior sets the chain's stationary ON fraction, and the
slow transition rates make engagement come in streaks, so recent sessions
reveal the current state and the state drives near-future adherence. On top of
the chain, a per-session dropout hazard may fire; dropping out is gradual,
with attendance decaying over a short waning phase before the user goes silent
for good. Low-engagement users dominate the prior, keeping the windowed labels
majority-low-adherence. Questionnaire missingness is whole-response: a user
either answers a questionnaire instance fully or skips it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta

from .ingestion import (
    Activity,
    AcquisitionEvent,
    DEMOGRAPHIC_RANGES,
    QUESTIONNAIRE_INSTANCES,
    QUESTIONNAIRE_ITEMS,
    RawDatabase,
    UserProfile,
)
from .rng import substream

# Default non-response rates per (questionnaire, instance), mirroring the
# diagnostics the real data shows.
DEFAULT_NULL_RATES = {
    ("spq", 1): 0.0,
    ("spq", 3): 0.2117,
    ("ucla", 1): 0.5335,
    ("ucla", 3): 0.8121,
    ("eq5d3l", 1): 0.4082,
    ("eq5d3l", 3): 0.5572,
    ("utaut", 3): 0.2527,
}

# Likert scale per questionnaire (synthetic choice; only the shape matters).
QUESTIONNAIRE_SCALES = {"spq": (1, 5), "ucla": (1, 4), "eq5d3l": (1, 3), "utaut": (1, 7)}

DEFAULT_DEMOGRAPHIC_RANGES: dict[str, tuple[int, int]] = {"birth_year": (1924, 1974), **DEMOGRAPHIC_RANGES}


def _default_null_rates() -> dict[tuple[str, int], float]:
    return dict(DEFAULT_NULL_RATES)


def _default_demo_ranges() -> dict[str, tuple[int, int]]:
    return dict(DEFAULT_DEMOGRAPHIC_RANGES)


@dataclass
class SynthConfig:
    seed: int = 0
    n_users: int = 200
    start_date: date = date(2018, 8, 1)
    end_date: date = date(2021, 3, 31)
    # Per-user engagement level ~ Beta(alpha, beta): the stationary ON fraction
    # of the user's ON/OFF session chain.
    engagement_alpha: float = 0.5
    engagement_beta: float = 2.2
    # ON->OFF rate is switch_base + switch_scale*(1 - level); OFF->ON swaps the
    # level term. Small rates mean long streaks, i.e. a readable state.
    switch_base: float = 0.03
    switch_scale: float = 0.15
    # Per-activity completion probability within an attended (ON) session.
    activity_prob: float = 0.75
    # Probability of dropping out after each session.
    dropout_hazard: float = 0.02
    # Dropout is gradual: attendance decays for this many sessions, then stops.
    waning_sessions: int = 4
    waning_decay: float = 0.5
    # Planned program length; users stop cleanly when they complete it.
    program_weeks_min: int = 20
    program_weeks_max: int = 44
    null_rates: dict[tuple[str, int], float] = field(default_factory=_default_null_rates)
    demographic_ranges: dict[str, tuple[int, int]] = field(default_factory=_default_demo_ranges)

    def validate(self) -> None:
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.start_date >= self.end_date:
            raise ValueError("start_date must precede end_date")
        if not (self.engagement_alpha > 0 and self.engagement_beta > 0):
            raise ValueError("engagement Beta parameters must be positive")
        for name in ("switch_base", "switch_scale", "activity_prob", "dropout_hazard", "waning_decay"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.switch_base + self.switch_scale > 1.0:
            raise ValueError("switch_base + switch_scale must not exceed 1")
        if self.waning_sessions < 0:
            raise ValueError("waning_sessions must be >= 0")
        if not 1 <= self.program_weeks_min <= self.program_weeks_max:
            raise ValueError("program weeks must satisfy 1 <= min <= max")
        for key, rate in self.null_rates.items():
            if key not in DEFAULT_NULL_RATES:
                raise ValueError(f"unknown questionnaire instance {key}")
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"null rate for {key} must lie in [0, 1]")
        for name, (lo, hi) in self.demographic_ranges.items():
            if name not in DEFAULT_DEMOGRAPHIC_RANGES:
                raise ValueError(f"unknown demographic field {name!r}")
            if lo > hi:
                raise ValueError(f"degenerate range for {name}: ({lo}, {hi})")


def _monday_of(d: date) -> date:
    return d - timedelta(days=d.weekday())


_SESSION_OFFSETS = ((0, 1, 2, 3), (4, 5, 6))  # MonThu days, FriSun days


def generate(cfg: SynthConfig) -> RawDatabase:
    """Deterministically generate a database for the given config."""
    cfg.validate()
    rng = substream(cfg.seed, "synthgen")
    total_days = (cfg.end_date - cfg.start_date).days
    events: list[AcquisitionEvent] = []
    profiles: dict[str, UserProfile] = {}
    activities = list(Activity)
    ranges = {**DEFAULT_DEMOGRAPHIC_RANGES, **cfg.demographic_ranges}

    for i in range(cfg.n_users):
        user_id = f"u{i:05d}"
        demo = {name: int(rng.integers(lo, hi + 1)) for name, (lo, hi) in ranges.items()}
        level = float(rng.beta(cfg.engagement_alpha, cfg.engagement_beta))
        to_off = cfg.switch_base + cfg.switch_scale * (1.0 - level)
        to_on = cfg.switch_base + cfg.switch_scale * level
        program_weeks = int(rng.integers(cfg.program_weeks_min, cfg.program_weeks_max + 1))
        offset = int(rng.integers(0, max(1, total_days - 56)))
        week = _monday_of(cfg.start_date + timedelta(days=offset))

        status = "StillUsing"
        weeks_done = 0
        dropped = False
        stopped = False
        on = rng.random() < level
        wane_attend = 1.0
        wane_left = -1  # -1: engaged; >=0: sessions of waning remaining
        while weeks_done < program_weeks and not stopped:
            if week > cfg.end_date:
                break
            for offsets in _SESSION_OFFSETS:
                if wane_left == 0:
                    stopped = True
                    break
                if wane_left > 0:
                    wane_attend *= cfg.waning_decay
                    wane_left -= 1
                    attends = rng.random() < wane_attend
                else:
                    attends = on
                    on = (rng.random() >= to_off) if on else (rng.random() < to_on)
                if attends:
                    for activity in activities:
                        if rng.random() < cfg.activity_prob:
                            day = week + timedelta(days=int(rng.choice(offsets)))
                            if cfg.start_date <= day <= cfg.end_date:
                                events.append(AcquisitionEvent(user_id, activity, day))
                if wane_left < 0 and rng.random() < cfg.dropout_hazard:
                    dropped = True
                    wane_left = cfg.waning_sessions
            week += timedelta(days=7)
            weeks_done += 1
        if dropped:
            status = "Dropout"
        elif weeks_done >= program_weeks:
            status = "Finished"

        answers: dict[tuple[str, int], tuple[int | None, ...]] = {}
        for qid in sorted(QUESTIONNAIRE_ITEMS):
            lo, hi = QUESTIONNAIRE_SCALES[qid]
            mid = (lo + hi) / 2.0
            for instance in QUESTIONNAIRE_INSTANCES[qid]:
                null_rate = cfg.null_rates.get((qid, instance), 0.0)
                responds = rng.random() >= null_rate
                latent = float(rng.normal())
                items = []
                for _ in range(QUESTIONNAIRE_ITEMS[qid]):
                    raw = mid + 0.9 * latent + float(rng.normal()) * 0.6
                    items.append(int(min(hi, max(lo, round(raw)))))
                if responds:
                    answers[(qid, instance)] = tuple(items)
        profiles[user_id] = UserProfile(user_id=user_id, status=status, answers=answers, **demo)

    order = {a: i for i, a in enumerate(Activity)}
    events.sort(key=lambda e: (e.user_id, e.timestamp, order[e.activity]))
    return RawDatabase(events=events, profiles=profiles)
