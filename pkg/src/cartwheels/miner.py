"""The alternating tree-growing loop.

One alternation fixes the partition read off the previous tree as class
labels and grows a tree over the other family to match it; each matched
(tree region, class label) pair is a candidate redescription.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

from .descriptors import DescriptorFamily, ObjectUniverse
from .expressions import (
    Literal,
    Redescription,
    SetExpression,
    Threshold,
    evaluate,
    make_redescription,
    render,
)
from .induction import (
    InductionPolicy,
    LabeledDataset,
    Leaf,
    assign_leaf_labels,
    induce_tree,
    make_counter,
    read_off,
)
from .tightening import TightenResult, acceptable, tighten

log = logging.getLogger(__name__)

Path = tuple[Literal, ...]

EXPLORATION_MODES = ("keep-terminal", "whole-path")


class ConfigError(ValueError):
    pass


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


def other_side(side: str) -> str:
    return "Y" if side == "X" else "X"


@dataclass(frozen=True)
class SyntacticBias:
    negation_lhs: bool = True
    negation_rhs: bool = True
    disjunction_lhs: bool = True
    disjunction_rhs: bool = True

    FLAGS = ("no-negation-lhs", "no-negation-rhs", "no-disjunction-lhs", "no-disjunction-rhs")

    @classmethod
    def from_flags(cls, flags: Iterable[str]) -> SyntacticBias:
        kw = {}
        for flag in flags:
            if flag not in cls.FLAGS:
                raise ConfigError(f"unknown bias flag {flag!r}; expected one of {', '.join(cls.FLAGS)}")
            _, kind, side = flag.split("-")
            kw[f"{kind}_{side}"] = False
        return cls(**kw)

    def flags(self) -> list[str]:
        return [f for f in self.FLAGS if not getattr(self, "_".join(f.split("-")[1:]))]

    def negation(self, side: str) -> bool:
        return self.negation_lhs if side == "X" else self.negation_rhs

    def disjunction(self, side: str) -> bool:
        return self.disjunction_lhs if side == "X" else self.disjunction_rhs

    def allows(self, expr: SetExpression) -> bool:
        side = expr.family_id
        if not self.negation(side) and expr.has_negation():
            return False
        if not self.disjunction(side) and expr.has_disjunction():
            return False
        return True


@dataclass(frozen=True)
class MinerConfig:
    theta: Threshold = field(default_factory=lambda: Threshold.parse("0.5"))
    depth_top: int = 2
    depth_bottom: int = 2
    max_idle_alternations: int = 10
    max_total_alternations: int = 1000
    min_support: int = 1
    seed: int = 0
    root_random_prob: float = 0.1
    bias: SyntacticBias = SyntacticBias()
    tighten_tolerance: Fraction = Fraction(0)
    tighten: bool = True
    min_leaf_size: int = 1
    exploration: str = "keep-terminal"
    bitset_cutoff: int = 64
    cover_with: str = "X"

    def __post_init__(self) -> None:
        if not isinstance(self.theta, Threshold):
            try:
                object.__setattr__(self, "theta", Threshold.parse(self.theta))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if not 0 < self.theta.value <= 1:
            raise ConfigError("theta must lie in (0,1]")
        if self.depth_top < 1 or self.depth_bottom < 1:
            raise ConfigError("tree depths must be >= 1")
        if self.max_idle_alternations < 1:
            raise ConfigError("max_idle_alternations must be >= 1")
        if self.max_total_alternations < 1:
            raise ConfigError("max_total_alternations must be >= 1")
        if self.min_support < 1:
            raise ConfigError("min_support must be >= 1")
        if not 0 <= self.root_random_prob <= 1:
            raise ConfigError("root_random_prob must lie in [0,1]")
        if self.min_leaf_size < 1:
            raise ConfigError("min_leaf_size must be >= 1")
        tol = Fraction(self.tighten_tolerance)
        if tol < 0:
            raise ConfigError("tighten_tolerance must be >= 0")
        object.__setattr__(self, "tighten_tolerance", tol)
        if self.exploration not in EXPLORATION_MODES:
            raise ConfigError(f"exploration must be one of {EXPLORATION_MODES}")
        if self.cover_with not in ("X", "Y"):
            raise ConfigError("cover_with must be X or Y")

    def depth_for(self, side: str) -> int:
        return self.depth_top if side == "X" else self.depth_bottom

    def echo(self) -> dict:
        d = asdict(self)
        d["theta"] = str(self.theta)
        d["tighten_tolerance"] = str(self.tighten_tolerance)
        d["bias"] = self.bias.flags()
        return d


@dataclass(frozen=True)
class MiningContext:
    """Global inputs shared by every state of a run."""

    universe: ObjectUniverse
    x: DescriptorFamily
    y: DescriptorFamily
    config: MinerConfig

    def family(self, side: str) -> DescriptorFamily:
        return self.x if side == "X" else self.y


@dataclass(frozen=True)
class Candidate:
    redescription: Redescription
    lhs_paths: tuple[Path, ...]
    rhs_paths: tuple[Path, ...]


@dataclass(frozen=True)
class AlternationInfo:
    side: str
    n_features: int
    n_leaves: int
    n_candidates: int
    degenerate: bool

    @property
    def no_features(self) -> bool:
        return self.n_features == 0


@dataclass(frozen=True)
class MinerState:
    context: MiningContext
    side: str
    labels: tuple[SetExpression, ...]
    label_paths: tuple[tuple[Path, ...], ...]
    assignment: tuple[int, ...]
    active: Mapping[str, frozenset[int]]
    rng: random.Random = field(compare=False)
    iteration: int = 0
    idle: int = 0
    emitted: frozenset = frozenset()
    last: AlternationInfo | None = None

    def class_masks(self) -> list[int]:
        masks = [0] * len(self.labels)
        for pos, c in enumerate(self.assignment):
            masks[c] |= 1 << pos
        return masks


def _copy_rng(rng: random.Random) -> random.Random:
    out = random.Random()
    out.setstate(rng.getstate())
    return out


def initialize(x: DescriptorFamily, y: DescriptorFamily, config: MinerConfig) -> MinerState:
    """Label every object by a greedy set cover of the covering family."""
    if x.universe is not y.universe and x.universe != y.universe:
        raise ConfigError("X and Y must share one universe")
    ctx = MiningContext(x.universe, x, y, config)
    cover_side = config.cover_with
    fam = ctx.family(cover_side)
    full = ctx.universe.full
    active = {"X": frozenset(x.active_mask), "Y": frozenset(y.active_mask)}
    uncovered = full
    chosen: list[int] = []
    assignment = [-1] * len(ctx.universe)
    while uncovered:
        best = max(active[cover_side], key=lambda i: ((fam.members(i) & uncovered).bit_count(), -i), default=None)
        if best is None or not fam.members(best) & uncovered:
            missing = ctx.universe.ids_of(uncovered)
            raise ConfigError(f"active {cover_side} descriptors do not cover: {', '.join(missing)}")
        newly = fam.members(best) & uncovered
        for pos in range(len(assignment)):
            if newly >> pos & 1:
                assignment[pos] = len(chosen)
        chosen.append(best)
        uncovered &= ~newly
    labels = tuple(SetExpression.literal(cover_side, i) for i in chosen)
    return MinerState(
        context=ctx,
        side=other_side(cover_side),
        labels=labels,
        label_paths=tuple(() for _ in labels),
        assignment=tuple(assignment),
        active=active,
        rng=random.Random(config.seed),
    )


def alternate_once(state: MinerState) -> tuple[MinerState, list[Candidate]]:
    """Grow one tree against the current labeling and read off candidates."""
    ctx = state.context
    cfg = ctx.config
    rng = _copy_rng(state.rng)
    side, label_side = state.side, other_side(state.side)
    fam, label_fam = ctx.family(side), ctx.family(label_side)

    # descriptors already used by the opposing tree are off limits
    taken = {label_fam[i].name for lab in state.labels for i in lab.descriptors()}
    features = [i for i in sorted(state.active[side]) if fam[i].name not in taken]

    names = tuple(render(lab, label_fam) for lab in state.labels)
    data = LabeledDataset(fam, tuple(features), state.assignment, names)
    depth = cfg.depth_for(side)
    policy = InductionPolicy(depth, cfg.root_random_prob, cfg.min_leaf_size)
    counter = make_counter(data, features, depth + 1, cfg.bitset_cutoff) if features else None
    tree = induce_tree(data, policy, rng, counter)
    merge = cfg.bias.disjunction(side)
    assign_leaf_labels(tree, data, rng, distinct=not merge)
    regions = read_off(tree, side, merge=merge)

    candidates: list[Candidate] = []
    degenerate = isinstance(tree, Leaf)
    if not degenerate:
        for region in regions:
            if region.label is None:
                continue
            label = state.labels[region.label]
            if not (cfg.bias.allows(region.expression) and cfg.bias.allows(label)):
                continue
            lpaths = state.label_paths[region.label]
            if side == "X":
                lhs, rhs, lp, rp = region.expression, label, region.paths, lpaths
            else:
                lhs, rhs, lp, rp = label, region.expression, lpaths, region.paths
            r = make_redescription(lhs, rhs, ctx.x, ctx.y, state.iteration + 1, cfg.seed)
            candidates.append(Candidate(r, lp, rp))

    new_labels, new_paths, masks = [], [], []
    for region in regions:
        m = region.objects
        if not m:
            continue
        if evaluate(region.expression, fam) != m:
            raise InvariantError(f"read-off expression disagrees with its leaves at iteration {state.iteration + 1}")
        new_labels.append(region.expression)
        new_paths.append(region.paths)
        masks.append(m)
    assignment = [-1] * len(ctx.universe)
    for c, m in enumerate(masks):
        for pos in range(len(assignment)):
            if m >> pos & 1:
                if assignment[pos] != -1:
                    raise InvariantError("read-off regions overlap")
                assignment[pos] = c
    if -1 in assignment:
        raise InvariantError("read-off regions do not cover the universe")

    info = AlternationInfo(side, len(features), len(regions) if not degenerate else 1, len(candidates), degenerate)
    new_state = replace(
        state,
        side=label_side,
        labels=tuple(new_labels),
        label_paths=tuple(new_paths),
        assignment=tuple(assignment),
        rng=rng,
        iteration=state.iteration + 1,
        last=info,
    )
    return new_state, candidates


def accept_candidates(
    candidates: Iterable[Candidate], config: MinerConfig, n_objects: int, emitted: frozenset = frozenset()
) -> tuple[list[Candidate], frozenset]:
    """Filter by threshold, complement threshold, support bounds and novelty."""
    accepted = []
    seen = set(emitted)
    for c in candidates:
        r = c.redescription
        if not acceptable(r, config.theta, config.min_support, n_objects):
            continue
        key = r.key()
        if key in seen:
            continue
        seen.add(key)
        accepted.append(c)
    return accepted, frozenset(seen)


def apply_exploration_policy(state: MinerState, accepted: Iterable[Candidate]) -> MinerState:
    """Retire descriptors on the matched paths of accepted redescriptions."""
    accepted = list(accepted)
    if not accepted:
        return replace(state, idle=state.idle + 1)
    whole = state.context.config.exploration == "whole-path"
    drop: dict[str, set[int]] = {"X": set(), "Y": set()}
    for c in accepted:
        for side, paths in (("X", c.lhs_paths), ("Y", c.rhs_paths)):
            for path in paths:
                on_path = [lit.index for lit in path]
                drop[side].update(on_path if whole else on_path[:-1])
    active = {s: state.active[s] - drop[s] for s in ("X", "Y")}
    return replace(state, active=active, idle=0)


@dataclass
class RunReport:
    config: dict
    iterations: list[dict] = field(default_factory=list)
    stop_reason: str = ""
    tightening: list[TightenResult] = field(default_factory=list)
    elapsed: float = 0.0

    def as_dict(self, timing: bool = False) -> dict:
        d = {"config": self.config, "iterations": self.iterations, "stop_reason": self.stop_reason}
        if timing:
            d["elapsed_seconds"] = self.elapsed
        return d


def run(x: DescriptorFamily, y: DescriptorFamily, config: MinerConfig) -> tuple[list[Redescription], RunReport]:
    """Mine redescriptions until the idle or alternation limit is hit."""
    t0 = time.perf_counter()
    report = RunReport(config.echo())
    state = initialize(x, y, config)
    n = len(state.context.universe)
    out: list[Redescription] = []
    while True:
        if state.iteration >= config.max_total_alternations:
            report.stop_reason = "max-alternations"
            break
        state, candidates = alternate_once(state)
        accepted, emitted = accept_candidates(candidates, config, n, state.emitted)
        emitted_now = 0
        for c in accepted:
            r = c.redescription
            if config.tighten:
                res = tighten(r, x, y, config.theta, config.min_support, config.tighten_tolerance)
            else:
                res = TightenResult(r, r, ())
            key = res.tightened.key()
            if key != r.key() and key in emitted:
                continue
            emitted = emitted | {key}
            out.append(res.tightened)
            report.tightening.append(res)
            emitted_now += 1
        state = replace(state, emitted=emitted)
        state = apply_exploration_policy(state, accepted)
        info = state.last
        assert info is not None
        report.iterations.append(
            {
                "iteration": state.iteration,
                "side": info.side,
                "features": info.n_features,
                "leaves": info.n_leaves,
                "candidates": info.n_candidates,
                "accepted": len(accepted),
                "emitted": emitted_now,
                "idle": state.idle,
                "active_x": len(state.active["X"]),
                "active_y": len(state.active["Y"]),
            }
        )
        log.debug("iteration %d: %s", state.iteration, report.iterations[-1])
        if not accepted and info.no_features:
            report.stop_reason = "no-features"
            break
        if state.idle >= config.max_idle_alternations:
            report.stop_reason = "idle-limit"
            break
    _verify(out, x, y, config)
    report.elapsed = time.perf_counter() - t0
    return out, report


def _verify(out: list[Redescription], x: DescriptorFamily, y: DescriptorFamily, config: MinerConfig) -> None:
    n = len(x.universe)
    keys = set()
    for r in out:
        fresh = make_redescription(r.lhs, r.rhs, x, y)
        if fresh.lhs_support != r.lhs_support or fresh.rhs_support != r.rhs_support:
            raise InvariantError("stored supports disagree with re-evaluation")
        if not acceptable(fresh, config.theta, config.min_support, n):
            raise InvariantError("emitted redescription fails the acceptance predicate")
        if r.key() in keys:
            raise InvariantError("duplicate redescription emitted")
        keys.add(r.key())
