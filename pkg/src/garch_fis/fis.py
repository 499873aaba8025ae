"""Zero-order TSK fuzzy system with per-timestep triangular partitions.

Each window position carries its own five triangular fuzzy sets
("far below", "below", "near", "above", "far above" the moving average).
Rules map a vector of labels (1..5, one per position) to a constant price
consequent learned with the Wang-Mendel procedure, where duplicate
antecedents are merged by activation-weighted averaging of their targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import EmptyRuleBase, LengthMismatch, NonPositiveWidth, SeriesTooShort
from .timeseries import PriceSeries, window_stats

__all__ = [
    "N_LABELS",
    "FALLBACK_WIDTH",
    "MembershipParams",
    "ParamSet",
    "FuzzyRule",
    "RuleBase",
    "CandidateRule",
    "triangular_membership",
    "build_membership_params",
    "membership_degrees",
    "fuzzify_label",
    "wm_candidates",
    "merge_candidates",
    "wm_train",
    "theta_for_window",
    "firing_strengths",
    "fis_infer",
]

N_LABELS = 5
FALLBACK_WIDTH = 1.0
_OFFSETS = np.arange(N_LABELS, dtype=np.float64) - 2.0  # j - 3 for j = 1..5


@dataclass(frozen=True)
class MembershipParams:
    """Five triangle centers and their common half-width."""

    centers: tuple[float, ...]
    half_width: float

    def __post_init__(self) -> None:
        centers = tuple(float(c) for c in self.centers)
        if len(centers) != N_LABELS:
            raise ValueError(f"expected {N_LABELS} centers, got {len(centers)}")
        if not self.half_width > 0:
            raise NonPositiveWidth(f"half_width must be > 0, got {self.half_width}")
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise ValueError(f"centers must be strictly increasing: {centers}")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "half_width", float(self.half_width))

    def to_dict(self) -> dict:
        return {"centers": list(self.centers), "half_width": self.half_width}

    @classmethod
    def from_dict(cls, data: Mapping) -> MembershipParams:
        return cls(tuple(data["centers"]), float(data["half_width"]))


class ParamSet(Mapping[int, MembershipParams]):
    """Membership parameters keyed by consecutive time indices.

    Iteration is chronological, which is also the positional alignment used
    during inference: the ``j``-th oldest key governs window position ``j``.
    """

    def __init__(self, entries: Mapping[int, MembershipParams] | Iterable[tuple[int, MembershipParams]]):
        items = sorted(dict(entries).items())
        if not items:
            raise ValueError("ParamSet must not be empty")
        keys = [k for k, _ in items]
        if keys != list(range(keys[0], keys[0] + len(keys))):
            raise ValueError(f"ParamSet keys must be consecutive integers, got {keys}")
        self._entries = {int(k): v for k, v in items}
        self._centers = np.array([v.centers for _, v in items])
        self._widths = np.array([v.half_width for _, v in items])

    def __getitem__(self, key: int) -> MembershipParams:
        return self._entries[key]

    def __iter__(self) -> Iterator[int]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"ParamSet({self.first}..{self.last})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ParamSet):
            return self._entries == other._entries
        return NotImplemented

    @property
    def first(self) -> int:
        return next(iter(self._entries))

    @property
    def last(self) -> int:
        return self.first + len(self) - 1

    @property
    def centers(self) -> np.ndarray:
        return self._centers

    @property
    def widths(self) -> np.ndarray:
        return self._widths

    def shifted(self, new_entry: MembershipParams) -> ParamSet:
        """Drop the oldest entry and append ``new_entry`` at ``last + 1``."""
        entries = dict(self._entries)
        del entries[self.first]
        entries[self.last + 1] = new_entry
        return ParamSet(entries)

    def to_dict(self) -> dict[str, dict]:
        return {str(k): v.to_dict() for k, v in self._entries.items()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping]) -> ParamSet:
        return cls({int(k): MembershipParams.from_dict(v) for k, v in data.items()})


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[int, ...]
    consequent: float
    weight_sum: float

    def to_dict(self) -> dict:
        return {
            "antecedent": list(self.antecedent),
            "consequent": self.consequent,
            "weight_sum": self.weight_sum,
        }


@dataclass(frozen=True)
class CandidateRule:
    """One training sample before merging: labels, activation and target."""

    antecedent: tuple[int, ...]
    activation: float
    target: float


class RuleBase:
    """Rules keyed by antecedent label vector, held in sorted antecedent order.

    The fixed order makes inference sums independent of how the rules were
    produced, so a reloaded rule base reproduces forecasts bit for bit.
    """

    def __init__(self, rules: Iterable[FuzzyRule], window_length: int):
        self.window_length = int(window_length)
        self.n_labels = N_LABELS
        self.rules: dict[tuple[int, ...], FuzzyRule] = {}
        for rule in rules:
            if len(rule.antecedent) != self.window_length:
                raise LengthMismatch(
                    f"antecedent length {len(rule.antecedent)} != window length {self.window_length}"
                )
            if any(not 1 <= lab <= N_LABELS for lab in rule.antecedent):
                raise ValueError(f"labels must lie in 1..{N_LABELS}: {rule.antecedent}")
            if rule.antecedent in self.rules:
                raise ValueError(f"duplicate antecedent {rule.antecedent}")
            self.rules[rule.antecedent] = rule
        self.rules = dict(sorted(self.rules.items()))
        keys = list(self.rules)
        self._labels = np.array(keys, dtype=np.intp).reshape(len(keys), self.window_length) - 1
        self._consequents = np.array([self.rules[k].consequent for k in keys], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self) -> Iterator[FuzzyRule]:
        return iter(self.rules.values())

    def __contains__(self, antecedent: object) -> bool:
        return antecedent in self.rules

    def __getitem__(self, antecedent: Sequence[int]) -> FuzzyRule:
        return self.rules[tuple(antecedent)]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, RuleBase):
            return self.window_length == other.window_length and self.rules == other.rules
        return NotImplemented

    @property
    def label_matrix(self) -> np.ndarray:
        """Zero-based label indices, shape ``(n_rules, W)``."""
        return self._labels

    @property
    def consequents(self) -> np.ndarray:
        return self._consequents

    def to_dict(self) -> dict:
        return {
            "window_length": self.window_length,
            "n_labels": self.n_labels,
            "rules": [r.to_dict() for r in self.rules.values()],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> RuleBase:
        rules = [
            FuzzyRule(tuple(int(x) for x in r["antecedent"]), float(r["consequent"]), float(r["weight_sum"]))
            for r in data["rules"]
        ]
        return cls(rules, int(data["window_length"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def triangular_membership(y: float, center: float, half_width: float) -> float:
    if not half_width > 0:
        raise NonPositiveWidth(f"half_width must be > 0, got {half_width}")
    d = abs(y - center)
    if d >= half_width:
        return 0.0
    return (half_width - d) / half_width


def build_membership_params(mean: float, sigma_hat: float) -> MembershipParams:
    """Centers ``mean + (j - 3) * sigma_hat`` with half-width ``sigma_hat``.

    A non-positive (or non-finite) ``sigma_hat`` is replaced by 1.0.
    """
    if not (np.isfinite(sigma_hat) and sigma_hat > 0):
        sigma_hat = FALLBACK_WIDTH
    centers = tuple(float(mean + k * sigma_hat) for k in _OFFSETS)
    return MembershipParams(centers, float(sigma_hat))


def membership_degrees(x: float, params: MembershipParams) -> np.ndarray:
    c = np.asarray(params.centers)
    return np.clip((params.half_width - np.abs(x - c)) / params.half_width, 0.0, None)


def _labels_and_degrees(x: np.ndarray, centers: np.ndarray, widths: np.ndarray):
    # x: (W,), centers: (W, 5), widths: (W,)
    dist = np.abs(x[:, None] - centers)
    deg = np.clip((widths[:, None] - dist) / widths[:, None], 0.0, None)
    labels = np.argmax(deg, axis=1)  # first maximum wins ties
    dead = ~np.any(deg > 0, axis=1)
    if np.any(dead):
        labels[dead] = np.argmin(dist[dead], axis=1)
    return labels, deg[np.arange(x.size), labels]


def fuzzify_label(x: float, params: MembershipParams) -> int:
    """Label (1..5) of the fuzzy set with the largest membership degree.

    Ties go to the lowest label. Outside every support, the nearest center
    wins.
    """
    labels, _ = _labels_and_degrees(
        np.array([float(x)]), np.array([params.centers]), np.array([params.half_width])
    )
    return int(labels[0]) + 1


def _window_params(prices: np.ndarray, end: int, W: int) -> MembershipParams:
    mean, std = window_stats(prices[end - W + 1 : end + 1])
    return build_membership_params(mean, std)


def _theta_entries(prices: np.ndarray, W: int, first_end: int, upto: int) -> dict[int, MembershipParams]:
    """Training-style parameter dictionary for windows ending ``first_end..upto``.

    The window ending at ``s`` defines ``theta[s]``. Positions before the
    first window end borrow that window's centers with width 1.0.
    """
    theta: dict[int, MembershipParams] = {}
    for t in range(first_end, upto + 1):
        params = _window_params(prices, t, W)
        if t not in theta:
            theta[t] = params
        for s in range(t - W + 1, t):
            if s not in theta:
                theta[s] = MembershipParams(params.centers, FALLBACK_WIDTH)
    return theta


def theta_for_window(prices: PriceSeries | np.ndarray, end: int, W: int) -> ParamSet:
    """Parameter set for the window ending at position ``end``.

    Uses only ``prices[: end + 1]``. Each entry is what training would have
    stored for that index, so a forecast origin inside or after the training
    range sees the same partition the rules were learned against.
    """
    p = prices.values if isinstance(prices, PriceSeries) else np.asarray(prices, dtype=np.float64)
    if end < W - 1 or end >= p.size:
        raise SeriesTooShort(f"no complete window of length {W} ends at {end}")
    entries: dict[int, MembershipParams] = {}
    for s in range(end - W + 1, end + 1):
        if s >= W - 1:
            entries[s] = _window_params(p, s, W)
    if end - W + 1 < W - 1:
        first = _window_params(p, W - 1, W)
        for s in range(end - W + 1, min(W - 1, end + 1)):
            entries[s] = MembershipParams(first.centers, FALLBACK_WIDTH)
    return ParamSet(entries)


def wm_candidates(
    prices: PriceSeries | np.ndarray, W: int, h: int = 1
) -> tuple[list[CandidateRule], dict[int, MembershipParams]]:
    """Candidate rules (one per training window) and the full parameter dictionary."""
    p = prices.values if isinstance(prices, PriceSeries) else np.asarray(prices, dtype=np.float64)
    T = p.size
    if h < 1:
        raise ValueError("horizon h must be >= 1")
    if W < 2:
        raise ValueError("window length must be >= 2")
    if T < W + h:
        raise SeriesTooShort(f"need at least W + h = {W + h} prices, got {T}")
    theta = _theta_entries(p, W, W - 1, T - 1 - h)
    candidates = []
    for t in range(W - 1, T - h):
        keys = range(t - W + 1, t + 1)
        centers = np.array([theta[s].centers for s in keys])
        widths = np.array([theta[s].half_width for s in keys])
        labels, degrees = _labels_and_degrees(p[t - W + 1 : t + 1], centers, widths)
        candidates.append(
            CandidateRule(tuple(int(k) + 1 for k in labels), float(np.prod(degrees)), float(p[t + h]))
        )
    return candidates, theta


def merge_candidates(candidates: Iterable[CandidateRule], W: int) -> RuleBase:
    """Merge duplicate antecedents into activation-weighted average consequents.

    A group whose activations are all zero (every sample fell outside some
    support) gets the plain mean of its targets.
    """
    acc: dict[tuple[int, ...], list[float]] = {}
    for cand in candidates:
        slot = acc.setdefault(cand.antecedent, [0.0, 0.0, 0.0, 0])
        slot[0] += cand.activation * cand.target
        slot[1] += cand.activation
        slot[2] += cand.target
        slot[3] += 1
    rules = []
    for ant, (wy, w, y, count) in acc.items():
        consequent = wy / w if w > 0 else y / count
        rules.append(FuzzyRule(ant, float(consequent), float(w)))
    return RuleBase(rules, W)


def wm_train(prices: PriceSeries | np.ndarray, W: int, h: int = 1) -> tuple[RuleBase, ParamSet]:
    """Learn a rule base from a price series.

    Returns the merged rules together with the parameter set of the last
    training window (indices ``T-h-W .. T-h-1``, zero-based).

    Raises
    ------
    SeriesTooShort
        If ``len(prices) < W + h``.
    """
    candidates, theta = wm_candidates(prices, W, h)
    T = len(prices)
    last_end = T - 1 - h
    theta_last = ParamSet({s: theta[s] for s in range(last_end - W + 1, last_end + 1)})
    return merge_candidates(candidates, W), theta_last


def firing_strengths(x: np.ndarray, theta: ParamSet, rules: RuleBase) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size != rules.window_length or len(theta) != x.size:
        raise LengthMismatch(
            f"window length {x.size}, rule length {rules.window_length}, theta size {len(theta)}"
        )
    widths = theta.widths[:, None]
    deg = np.clip((widths - np.abs(x[:, None] - theta.centers)) / widths, 0.0, None)
    # deg[j, label] gathered per rule, product across positions
    picked = deg[np.arange(x.size)[None, :], rules.label_matrix]
    return np.prod(picked, axis=1)


def fis_infer(
    x: Sequence[float] | np.ndarray,
    theta: ParamSet,
    rules: RuleBase,
    return_fired: bool = False,
) -> float | tuple[float, bool]:
    """Weighted average of firing rules' consequents.

    When no rule fires the newest element of ``x`` is returned unchanged.
    With ``return_fired=True`` the result is ``(prediction, fired)``.

    Raises
    ------
    EmptyRuleBase
        If ``rules`` has no rules.
    """
    if len(rules) == 0:
        raise EmptyRuleBase("rule base is empty")
    x = np.asarray(x, dtype=np.float64)
    lam = firing_strengths(x, theta, rules)
    total = float(lam.sum())
    if not total > 0:
        y, fired = float(x[-1]), False
    else:
        active = lam > 0
        y, fired = float(np.dot(lam[active], rules.consequents[active]) / lam[active].sum()), True
    return (y, fired) if return_fired else y
