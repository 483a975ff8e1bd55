"""Subsample a command pool to match a target head-utility distribution.

Water-filling rule: find the largest output size T such that every
constrained utility can supply round(T * target) commands and the
unconstrained remainder can cover the rest, then sample exactly those
counts with a seeded shuffle.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence, TypeVar

from . import bash_ast
from .generator import GeneratedCommand

__all__ = [
    "InfeasibleProfile",
    "DistributionProfile",
    "load_profile",
    "save_profile",
    "default_profile_path",
    "scale",
    "profile_of",
]

DEFAULT_TOLERANCE = 0.02

T_ = TypeVar("T_")


class InfeasibleProfile(ValueError):
    """No nonzero-size subset satisfies the profile within tolerance."""


@dataclass(frozen=True)
class DistributionProfile:
    proportions: Mapping[str, float] = field(default_factory=dict)
    pipe_fraction: float | None = None

    def __post_init__(self) -> None:
        for utility, fraction in self.proportions.items():
            if not 0.0 <= fraction <= 1.0:
                raise ValueError(f"{utility}: fraction {fraction} outside [0, 1]")
        if sum(self.proportions.values()) > 1.0 + 1e-9:
            raise ValueError("constrained proportions sum to more than 1")
        if self.pipe_fraction is not None and not 0.0 <= self.pipe_fraction <= 1.0:
            raise ValueError("pipe_fraction outside [0, 1]")


def load_profile(path: str | Path) -> DistributionProfile:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return DistributionProfile(
        proportions={str(k): float(v) for k, v in data.get("proportions", {}).items()},
        pipe_fraction=(
            float(data["pipe_fraction"]) if data.get("pipe_fraction") is not None else None
        ),
    )


def save_profile(profile: DistributionProfile, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "proportions": dict(profile.proportions),
                "pipe_fraction": profile.pipe_fraction,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )


def default_profile_path() -> Path:
    return Path(resources.files("bashsynth").joinpath("data/profiles/original.json"))


def _command_text(item: object) -> str:
    if isinstance(item, GeneratedCommand):
        return item.render()
    if isinstance(item, str):
        return item
    cmd = getattr(item, "cmd", None)
    if cmd is not None:
        return str(cmd)
    raise TypeError(f"cannot extract a command from {type(item).__name__}")


def _head_and_pipes(text: str) -> tuple[str, int] | None:
    try:
        ast = bash_ast.parse(text)
    except bash_ast.ParseError:
        return None
    return ast.stages[0].name, len(ast.stages) - 1


def scale(
    pool: Sequence[T_],
    profile: DistributionProfile,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    command_of: Callable[[T_], str] | None = None,
) -> list[T_]:
    """Largest subset of the pool matching the profile within tolerance.

    Unparseable commands are discarded first. Raises
    :class:`InfeasibleProfile` when no nonzero-size subset fits.
    """
    if not pool:
        raise ValueError("empty pool")
    extract = command_of or _command_text

    by_utility: dict[str, list[int]] = {}
    for idx, item in enumerate(pool):
        parsed = _head_and_pipes(extract(item))
        if parsed is None:
            continue
        by_utility.setdefault(parsed[0], []).append(idx)

    if not by_utility:
        raise InfeasibleProfile("no parseable commands in pool")

    constrained = {u: p for u, p in profile.proportions.items()}
    unconstrained_pool: list[int] = []
    for utility, indices in by_utility.items():
        if utility not in constrained:
            unconstrained_pool.extend(indices)

    total_parseable = sum(len(v) for v in by_utility.values())
    chosen_size = None
    takes: dict[str, int] = {}
    for total in range(total_parseable, 0, -1):
        candidate = {
            u: round(total * p) for u, p in constrained.items()
        }
        if any(candidate[u] > len(by_utility.get(u, ())) for u in candidate):
            continue
        rest = total - sum(candidate.values())
        if rest < 0 or rest > len(unconstrained_pool):
            continue
        chosen_size = total
        takes = candidate
        break

    if chosen_size is None:
        raise InfeasibleProfile("no output size satisfies the profile")

    for utility, target in constrained.items():
        realized = takes.get(utility, 0) / chosen_size
        if abs(realized - target) > tolerance:
            raise InfeasibleProfile(
                f"{utility}: realized {realized:.4f} vs target {target:.4f} "
                f"exceeds tolerance {tolerance}"
            )

    rng = random.Random(seed)
    selected: list[int] = []
    for utility in sorted(takes):
        indices = list(by_utility.get(utility, ()))
        rng.shuffle(indices)
        selected.extend(indices[: takes[utility]])
    rest = chosen_size - sum(takes.values())
    remainder = list(unconstrained_pool)
    rng.shuffle(remainder)
    selected.extend(remainder[:rest])

    selected.sort()
    return [pool[i] for i in selected]


def profile_of(
    dataset: Sequence, command_of: Callable[[object], str] | None = None
) -> DistributionProfile:
    """Realized head-utility proportions and pipe fraction of a dataset."""
    if not dataset:
        raise ValueError("empty dataset")
    extract = command_of or _command_text

    heads: dict[str, int] = {}
    piped = 0
    for item in dataset:
        parsed = _head_and_pipes(extract(item))
        if parsed is None:
            raise bash_ast.ParseError(f"unparseable command: {extract(item)!r}")
        head, pipes = parsed
        heads[head] = heads.get(head, 0) + 1
        if pipes > 0:
            piped += 1

    n = len(dataset)
    return DistributionProfile(
        proportions={u: c / n for u, c in sorted(heads.items())},
        pipe_fraction=piped / n,
    )
