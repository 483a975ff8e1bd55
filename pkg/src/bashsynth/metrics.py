"""Structural accuracy scoring over utilities and flags.

The flag score rewards overlap between predicted and reference flag sets:
raw = (2 * |intersection| - |union|) / max(|pred|, |ref|). The printed
formula can reach -2 for disjoint sets of unequal size even though the
stated range is [-1, 1], so the score is clamped and the raw value stays
available for diagnostics.

The utility score aligns utility nodes positionally across pipe stages:
a matching utility at position i contributes (1/T) * (1 + S_F) / 2, a
mismatch contributes -(1/T), with T the longer utility count. Scoring is
structural: parameter literals never influence the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .bash_ast import BashAst, ParseError, UtilityHints, parse

__all__ = [
    "flag_score",
    "raw_flag_score",
    "utility_score",
    "ScoredPair",
    "score_pair",
    "dataset_accuracy",
]


def raw_flag_score(pred: Iterable[str], ref: Iterable[str]) -> float:
    """Flag score exactly as printed; may fall below -1."""
    fp, fr = set(pred), set(ref)
    n = max(len(fp), len(fr))
    if n == 0:
        return 1.0  # vacuous perfect match
    inter = len(fp & fr)
    union = len(fp | fr)
    return (2.0 * inter - union) / n


def flag_score(pred: Iterable[str], ref: Iterable[str]) -> float:
    """Flag score clamped to [-1, 1]."""
    raw = raw_flag_score(pred, ref)
    return max(-1.0, min(1.0, raw))


def _utility_sequence(command: BashAst | str, hints=None) -> list:
    ast = command if isinstance(command, BashAst) else parse(command, hints)
    return list(ast.walk_utilities())


def utility_score(
    pred: BashAst | str,
    ref: BashAst | str,
    hints: Mapping[str, UtilityHints] | None = None,
) -> float:
    """Positional utility alignment score in [-1, 1]."""
    pred_seq = _utility_sequence(pred, hints)
    ref_seq = _utility_sequence(ref, hints)
    t = max(len(pred_seq), len(ref_seq))

    total = 0.0
    for i in range(t):
        p = pred_seq[i] if i < len(pred_seq) else None
        r = ref_seq[i] if i < len(ref_seq) else None
        if p is not None and r is not None and p.name == r.name:
            total += 0.5 * (1.0 + flag_score(p.flag_tokens(), r.flag_tokens()))
        else:
            total -= 1.0
    return total / t


@dataclass(frozen=True)
class ScoredPair:
    reference: BashAst
    candidates: tuple[tuple[BashAst | None, float], ...]
    per_candidate: tuple[float, ...]
    final: float


def score_pair(
    reference: BashAst | str,
    candidates: Sequence[tuple[BashAst | str, float]],
    hints: Mapping[str, UtilityHints] | None = None,
) -> ScoredPair:
    """Score candidates against one reference, weighted by confidence.

    Policy: take the best confidence-weighted utility score when it is
    positive, otherwise the confidence-weighted mean. A single candidate
    with confidence 1 reduces to its utility score. Candidates that fail
    to parse score -1.
    """
    if not candidates:
        raise ValueError("at least one candidate is required")
    ref_ast = reference if isinstance(reference, BashAst) else parse(reference, hints)

    parsed: list[tuple[BashAst | None, float]] = []
    scores: list[float] = []
    for cand, confidence in candidates:
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence {confidence} outside [0, 1]")
        try:
            cand_ast = cand if isinstance(cand, BashAst) else parse(cand, hints)
        except ParseError:
            cand_ast = None
        parsed.append((cand_ast, confidence))
        scores.append(
            utility_score(cand_ast, ref_ast) if cand_ast is not None else -1.0
        )

    weighted = [c * s for (_, c), s in zip(parsed, scores)]
    best = max(weighted)
    if best > 0:
        final = best
    else:
        conf_sum = sum(c for _, c in parsed)
        if conf_sum > 0:
            final = sum(weighted) / conf_sum
        else:
            final = sum(scores) / len(scores)

    return ScoredPair(
        reference=ref_ast,
        candidates=tuple(parsed),
        per_candidate=tuple(scores),
        final=final,
    )


def dataset_accuracy(pairs: Sequence[ScoredPair]) -> float:
    """Arithmetic mean of final scores, as a percentage."""
    if not pairs:
        raise ValueError("no scored pairs")
    return sum(p.final for p in pairs) / len(pairs) * 100.0
