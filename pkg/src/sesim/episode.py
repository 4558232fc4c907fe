"""Adversarial socialbot episodes against a hazard-based detector.

Each step the bot samples an activity kind. Non-Tweet activities trigger the
selection pipeline: project the current event graph onto that relation,
optimize an encoding tree, prune low-influence user blocks (bot and followers
protected), score the surviving candidates by conditional entropy against the
bot, and pick one follower; the new directed edge joins the event graph. The
detector then draws a Bernoulli with hazard base_rate * (1 + sensitivity *
follows-in-window), and the episode ends on detection or after t_max steps.

Reward is the marginal gain of the cascade spread estimate of {bot} union
followers, computed under common random numbers, so per-step rewards are
nonnegative and telescope exactly to final minus initial spread.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .entropy import optimize
from .errors import ConfigError
from .graphs import MultiRelGraph, RelationKind, project, structural_features
from .influence import DiffusionConfig, influence_ratio, prune
from .selection import celf_select, degree_select, select_follower, selection_distribution

_RELATIONS = tuple(RelationKind)

SELECTOR_KINDS = ("entropy", "celf", "degree")
# Compare-harness selector labels; "entropy" alone means argmax mode.
COMPARE_SELECTORS = ("entropy", "entropy_sample", "celf", "degree")


# ---- activity policies -------------------------------------------------------


class UniformActivity:
    """Every activity kind equally likely."""

    def choose(self, t: int, rng: np.random.Generator) -> RelationKind:
        return _RELATIONS[int(rng.integers(len(_RELATIONS)))]


ACTIVITY_NAMES = {"tweet": RelationKind.TWEET, "retweet": RelationKind.RETWEET,
                  "mention": RelationKind.MENTION, "reply": RelationKind.REPLY}


class ProfileActivity:
    """Activity kinds drawn proportionally to a frequency table.

    Keys may be RelationKind members or lowercase names (tweet, retweet,
    mention, reply), the latter for config-file use.
    """

    def __init__(self, table: dict):
        if not table:
            raise ConfigError("activity profile table is empty")
        norm: dict[RelationKind, float] = {}
        for key, value in table.items():
            if isinstance(key, RelationKind):
                kind = key
            elif isinstance(key, str) and key.lower() in ACTIVITY_NAMES:
                kind = ACTIVITY_NAMES[key.lower()]
            else:
                raise ConfigError(f"unknown activity profile key {key!r}")
            norm[kind] = norm.get(kind, 0.0) + float(value)
        weights = np.array([norm.get(k, 0.0) for k in _RELATIONS])
        if np.any(weights < 0) or weights.sum() <= 0:
            raise ConfigError("activity profile weights must be >= 0 and sum > 0")
        self.probs = weights / weights.sum()

    def choose(self, t: int, rng: np.random.Generator) -> RelationKind:
        return _RELATIONS[int(rng.choice(len(_RELATIONS), p=self.probs))]


class ScriptedActivity:
    """Cyclic deterministic activity sequence; step t plays script[t mod len]."""

    def __init__(self, script: Sequence[RelationKind]):
        if not script:
            raise ConfigError("activity script is empty")
        self.script = tuple(script)

    def choose(self, t: int, rng: np.random.Generator) -> RelationKind:
        return self.script[t % len(self.script)]


def make_activity_policy(kind: str, profile: dict | None = None, script: Sequence | None = None):
    if kind == "uniform":
        return UniformActivity()
    if kind == "profile":
        return ProfileActivity(profile or {})
    if kind == "scripted":
        return ScriptedActivity(script or ())
    raise ConfigError(f"unknown activity policy {kind!r}")


def activity_policy(history: Sequence[RelationKind], kind: str,
                    rng: np.random.Generator | int, *,
                    profile: dict | None = None,
                    script: Sequence | None = None) -> RelationKind:
    """One-shot functional form: the activity for step len(history)."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    return make_activity_policy(kind, profile, script).choose(len(history), rng)


# ---- detector ----------------------------------------------------------------


@dataclass(frozen=True)
class DetectorModel:
    """Two-parameter hazard detector.

    Per-step detection probability is
    clamp(base_rate * (1 + follow_sensitivity * follows_in_window), 0, 1)
    where the window covers the current step and the window-1 before it.
    base_rate None means: calibrate so a follow-every-step trace is detected
    within the episode horizon with probability target_accuracy.
    """

    base_rate: float | None = None
    follow_sensitivity: float = 2.0
    window: int = 10
    target_accuracy: float = 0.9

    def __post_init__(self):
        if self.base_rate is not None and not 0.0 <= self.base_rate <= 1.0:
            raise ConfigError("detector base_rate must lie in [0, 1]")
        if self.follow_sensitivity < 0:
            raise ConfigError("detector follow_sensitivity must be >= 0")
        if self.window < 1:
            raise ConfigError("detector window must be >= 1")
        if not 0.0 < self.target_accuracy < 1.0:
            raise ConfigError("detector target_accuracy must lie in (0, 1)")


def hazard(det: DetectorModel, recent_follows: int, base_rate: float | None = None) -> float:
    b = det.base_rate if base_rate is None else base_rate
    if b is None:
        raise ValueError("detector base_rate is unresolved; calibrate first")
    return min(1.0, max(0.0, b * (1.0 + det.follow_sensitivity * recent_follows)))


def detector_check(det: DetectorModel, recent_follows: int, rng: np.random.Generator,
                   base_rate: float | None = None) -> bool:
    """One Bernoulli detection draw for the current step."""
    return bool(rng.random() < hazard(det, recent_follows, base_rate))


def follow_trace_detection_prob(base_rate: float, det: DetectorModel, t_max: int) -> float:
    """Closed-form detection probability of a follow-every-step trace."""
    survival = 1.0
    for t in range(1, t_max + 1):
        survival *= 1.0 - hazard(det, min(t, det.window), base_rate)
    return 1.0 - survival


def calibrate_base_rate(det: DetectorModel, t_max: int) -> float:
    """Bisect base_rate so the follow-every-step trace hits target_accuracy."""
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if follow_trace_detection_prob(mid, det, t_max) < det.target_accuracy:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def empirical_detection_rate(det: DetectorModel, t_max: int, episodes: int, seed: int) -> float:
    """Fraction of seeded follow-every-step detector traces caught within t_max."""
    caught = 0
    for i in range(episodes):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        for t in range(1, t_max + 1):
            if detector_check(det, min(t, det.window), rng):
                caught += 1
                break
    return caught / episodes


# ---- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class EpisodeConfig:
    """Full episode parameterization; defaults follow the reference setting."""

    seed: int = 0
    p: float = 0.8
    t_max: int = 120
    bot: int = 0
    tree_k: int = 3
    embed_dim: int = 8
    prune_ratio: float = 0.05
    trials: int = 200
    selector: str = "entropy"
    selection_mode: str = "sample"
    follower_budget: int | None = None
    gamma: float = 1.0  # recorded for the trace; unused by the heuristic policy
    activity: object = field(default_factory=UniformActivity)
    detector: DetectorModel = field(default_factory=DetectorModel)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("activation probability p must lie in [0, 1]")
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if self.tree_k < 2:
            raise ConfigError("tree height bound must be >= 2")
        if self.embed_dim < 2:
            raise ConfigError("embed_dim must be >= 2")
        if not 0.0 <= self.prune_ratio < 1.0:
            raise ConfigError("prune_ratio must lie in [0, 1)")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.selector not in SELECTOR_KINDS:
            raise ConfigError(f"unknown selector {self.selector!r}")
        if self.selection_mode not in ("sample", "argmax"):
            raise ConfigError(f"unknown selection mode {self.selection_mode!r}")
        if self.follower_budget is not None and self.follower_budget < 0:
            raise ConfigError("follower_budget must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class StepOutcome:
    t: int
    action: RelationKind
    new_follower: int | None
    reward: float
    detected: bool
    spread_estimate: float

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "action": self.action.value,
            "new_follower": self.new_follower,
            "reward": self.reward,
            "detected": self.detected,
            "spread_estimate": self.spread_estimate,
        }


@dataclass(frozen=True)
class EpisodeSummary:
    seed: int
    episode_reward: float  # final spread estimate
    episode_length: int
    survival_steps: int
    final_influence_ratio: float
    spread_stderr: float
    detected: bool
    followers: tuple[int, ...]


# ---- spread tracking ---------------------------------------------------------


class _ReachTracker:
    """Per-trial live-edge reach of a growing seed set under shared draws.

    Edges added during an episode always point at the vertex being seeded at
    that same step, so they can never extend any trial's reach; tracking the
    initial edge set is exact.
    """

    def __init__(self, n: int, src: np.ndarray, dst: np.ndarray, p: float,
                 trials: int, rng: np.random.Generator):
        self.n = n
        self.trials = trials
        self.dst = np.asarray(dst, dtype=np.int64)
        src = np.asarray(src, dtype=np.int64)
        m = src.shape[0]
        order = np.argsort(src, kind="stable")
        counts = np.bincount(src, minlength=n) if m else np.zeros(n, dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        self._out_edges = [order[indptr[v]:indptr[v + 1]] for v in range(n)]
        self._live = rng.random((trials, m)) < p if m else np.zeros((trials, 0), dtype=bool)
        self._reached = np.zeros((trials, n), dtype=bool)

    def add_seed(self, v: int) -> float:
        """Seed v in every trial; returns the mean newly reached count."""
        new_total = 0
        for t in range(self.trials):
            reached = self._reached[t]
            if reached[v]:
                continue
            live = self._live[t]
            stack = [v]
            reached[v] = True
            new_total += 1
            while stack:
                x = stack.pop()
                for ei in self._out_edges[x]:
                    if live[ei]:
                        head = self.dst[ei]
                        if not reached[head]:
                            reached[head] = True
                            stack.append(head)
                            new_total += 1
        return new_total / self.trials

    def mean(self) -> float:
        return float(self._reached.sum(axis=1).mean())

    def stderr(self) -> float:
        if self.trials < 2:
            return 0.0
        counts = self._reached.sum(axis=1)
        return float(counts.std(ddof=1) / np.sqrt(self.trials))


# ---- episode -----------------------------------------------------------------


class Episode:
    """Stateful episode runner; use ``run_episode`` for the one-shot wrapper."""

    def __init__(self, cfg: EpisodeConfig, graph: MultiRelGraph, features: np.ndarray | None = None):
        if not 0 <= cfg.bot < graph.n:
            raise ValueError(f"bot vertex {cfg.bot} out of range for n={graph.n}")
        self.cfg = cfg
        self.graph = graph
        self.features = features
        det = cfg.detector
        self.base_rate = det.base_rate if det.base_rate is not None else calibrate_base_rate(det, cfg.t_max)

        act_ss, det_ss, sel_ss, diff_ss = np.random.SeedSequence(cfg.seed).spawn(4)
        self._act_rng = np.random.default_rng(act_ss)
        self._det_rng = np.random.default_rng(det_ss)
        self._sel_rng = np.random.default_rng(sel_ss)

        dsrc, ddst = graph.diffusion_edges()
        self._tracker = _ReachTracker(graph.n, dsrc, ddst, cfg.p, cfg.trials,
                                      np.random.default_rng(diff_ss))
        self.initial_spread = self._tracker.add_seed(cfg.bot)

        self._ranking: list[int] = []
        if cfg.selector in ("celf", "degree"):
            view = graph.diffusion_view()
            cap = cfg.follower_budget if cfg.follower_budget is not None else cfg.t_max
            cap = min(graph.n, max(1, cap + 1))  # +1 absorbs the bot if ranked
            if cfg.selector == "celf":
                dcfg = DiffusionConfig(cfg.p, cfg.trials, seed=int(diff_ss.generate_state(1)[0]))
                self._ranking = celf_select(view, cap, dcfg)
            else:
                self._ranking = degree_select(view, cap)

        self.followers: list[int] = []
        self._follow_steps: list[int] = []
        self.outcomes: list[StepOutcome] = []
        self.t = 0
        self.detected = False
        self.last_tree = None

    @property
    def done(self) -> bool:
        return self.detected or self.t >= self.cfg.t_max

    def _entropy_pick(self, relation: RelationKind, candidates: list[int]) -> int | None:
        cfg = self.cfg
        feats = self.features
        if feats is None:
            feats = structural_features(self.graph, cfg.embed_dim)
        wg = project(self.graph, relation, feats)
        tree = optimize(wg, cfg.tree_k)
        result = prune(tree, wg, cfg.prune_ratio, protected={cfg.bot, *self.followers})
        self.last_tree = result.tree
        survivors = [v for v in candidates if v not in result.removed]
        if not survivors:
            return None
        dist = selection_distribution(result.tree, cfg.bot, survivors)
        return select_follower(dist, cfg.selection_mode, self._sel_rng)

    def _ranked_pick(self, candidates: list[int]) -> int | None:
        taken = set(self.followers)
        taken.add(self.cfg.bot)
        for v in self._ranking:
            if v not in taken:
                return v
        return None

    def step(self) -> StepOutcome:
        if self.done:
            raise ValueError("episode already finished")
        cfg = self.cfg
        t = self.t
        action = cfg.activity.choose(t, self._act_rng)
        new_follower = None
        reward = 0.0
        budget_open = cfg.follower_budget is None or len(self.followers) < cfg.follower_budget
        if action is not RelationKind.TWEET and budget_open:
            taken = {cfg.bot, *self.followers}
            candidates = [v for v in range(self.graph.n) if v not in taken]
            if candidates:
                if cfg.selector == "entropy":
                    pick = self._entropy_pick(action, candidates)
                else:
                    pick = self._ranked_pick(candidates)
                if pick is not None:
                    self.graph = self.graph.with_event(cfg.bot, pick, action, ts=t)
                    self.followers.append(pick)
                    self._follow_steps.append(t)
                    reward = self._tracker.add_seed(pick)
                    new_follower = pick
        recent = sum(1 for fs in self._follow_steps if fs > t - cfg.detector.window)
        detected = detector_check(cfg.detector, recent, self._det_rng, self.base_rate)
        self.t += 1
        if detected:
            self.detected = True
        outcome = StepOutcome(
            t=t, action=action, new_follower=new_follower, reward=reward,
            detected=detected, spread_estimate=self._tracker.mean(),
        )
        self.outcomes.append(outcome)
        return outcome

    def run(self) -> EpisodeSummary:
        while not self.done:
            self.step()
        return self.summary()

    def summary(self) -> EpisodeSummary:
        spread = self._tracker.mean()
        length = self.t
        return EpisodeSummary(
            seed=self.cfg.seed,
            episode_reward=spread,
            episode_length=length,
            survival_steps=length - 1 if self.detected else length,
            final_influence_ratio=influence_ratio(spread, self.graph.n),
            spread_stderr=self._tracker.stderr(),
            detected=self.detected,
            followers=tuple(self.followers),
        )


def run_episode(cfg: EpisodeConfig, graph: MultiRelGraph,
                features: np.ndarray | None = None) -> EpisodeSummary:
    """Run one full episode and return its summary."""
    return Episode(cfg, graph, features).run()


# ---- selector comparison harness ----------------------------------------------


@dataclass(frozen=True)
class CompareRow:
    selector: str
    budget: int
    seed_set: tuple[int, ...]
    mean_spread: float
    stderr: float
    wall_ms: float
    error: str | None = None


def _compare_cell(graph: MultiRelGraph, base: EpisodeConfig, selector: str,
                  budget: int, episodes: int,
                  features: np.ndarray | None = None) -> CompareRow:
    if budget > graph.n:
        return CompareRow(selector, budget, (), float("nan"), float("nan"), 0.0,
                          error=f"budget {budget} exceeds n={graph.n}")
    kind, mode = {
        "entropy": ("entropy", "argmax"),
        "entropy_sample": ("entropy", "sample"),
        "celf": ("celf", "argmax"),
        "degree": ("degree", "argmax"),
    }[selector]
    start = time.perf_counter()
    spreads = []
    stderrs = []
    seed_set: tuple[int, ...] = ()
    for i in range(episodes):
        cfg = replace(base, seed=base.seed + i, selector=kind, selection_mode=mode,
                      follower_budget=budget)
        summary = run_episode(cfg, graph, features)
        spreads.append(summary.episode_reward)
        stderrs.append(summary.spread_stderr)
        if i == 0:
            seed_set = summary.followers
    wall_ms = (time.perf_counter() - start) * 1e3
    mean = float(np.mean(spreads))
    if episodes > 1:
        stderr = float(np.std(spreads, ddof=1) / np.sqrt(episodes))
    else:
        stderr = stderrs[0]
    return CompareRow(selector, budget, seed_set, mean, stderr, wall_ms)


def run_compare(graph: MultiRelGraph, base: EpisodeConfig, selectors: Sequence[str],
                budgets: Sequence[int], episodes: int = 1, threads: int = 1,
                features: np.ndarray | None = None) -> list[CompareRow]:
    """Evaluate every (selector, budget) cell; row order is input order."""
    for s in selectors:
        if s not in COMPARE_SELECTORS:
            raise ConfigError(f"unknown selector {s!r}")
    if episodes < 1:
        raise ConfigError("episodes must be >= 1")
    cells = [(s, b) for s in selectors for b in budgets]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(
                lambda sb: _compare_cell(graph, base, sb[0], sb[1], episodes, features), cells
            ))
    else:
        rows = [_compare_cell(graph, base, s, b, episodes, features) for s, b in cells]
    return rows
