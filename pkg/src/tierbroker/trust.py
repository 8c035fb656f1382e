"""Trust assessment.

Four independent ways to arrive at a trust level for a provider, plus a
combiner. Levels order Untrusted < Low < Medium < High; each result
carries the basis it was derived from so downstream security checks can
discount weakly-founded levels.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ChainTooShort, EmptyOpinions
from .model import BASIS_RANK, TRUST_RANK, TrustAssessment, TrustBasis, TrustLevel

# Reputation rule constants: years in business and complaint ratios.
REPUTATION_HIGH_YEARS = 5
REPUTATION_HIGH_COMPLAINTS = 0.05
REPUTATION_MEDIUM_COMPLAINTS = 0.2

# Probe sessions needed before first-hand trust counts as High.
ESTABLISH_HIGH_PROBES = 3

_LEVEL_BY_RANK = {v: k for k, v in TRUST_RANK.items()}


@dataclass
class ReputationRecord:
    node_id: str
    legal_registered: bool
    years_active: float
    complaint_rate: float


def establish_trust(probe_passed: bool, probe_count: int) -> TrustAssessment:
    """First-hand trust from direct probe sessions.

    probe_passed says whether every probe succeeded. Any failure is
    disqualifying; all-pass runs earn High once at least
    ESTABLISH_HIGH_PROBES sessions back it, Medium below that.
    """
    if probe_count < 1:
        raise ValueError("establish_trust needs at least one probe")
    if not probe_passed:
        level = TrustLevel.UNTRUSTED
    elif probe_count >= ESTABLISH_HIGH_PROBES:
        level = TrustLevel.HIGH
    else:
        level = TrustLevel.MEDIUM
    return TrustAssessment(level=level, basis=TrustBasis.ESTABLISHED)


def aggregate_trust(opinions: list[TrustAssessment]) -> TrustAssessment:
    """Median of peer opinions; even counts take the lower middle."""
    if not opinions:
        raise EmptyOpinions("aggregate_trust needs at least one opinion")
    ranks = sorted(TRUST_RANK[o.level] for o in opinions)
    median = ranks[(len(ranks) - 1) // 2]
    return TrustAssessment(level=_LEVEL_BY_RANK[median], basis=TrustBasis.AGGREGATED)


def indirect_trust(chain: list[TrustAssessment]) -> TrustAssessment:
    """Trust relayed through a chain of intermediaries.

    The chain is only as strong as its weakest link, and hearsay never
    earns more than Low.
    """
    if len(chain) < 2:
        raise ChainTooShort("indirect trust needs at least two hops")
    weakest = min(TRUST_RANK[a.level] for a in chain)
    capped = min(weakest, TRUST_RANK[TrustLevel.LOW])
    return TrustAssessment(level=_LEVEL_BY_RANK[capped], basis=TrustBasis.INDIRECT)


def reputation_trust(record: ReputationRecord) -> TrustAssessment:
    """Public-track-record trust from registration age and complaints."""
    if not record.legal_registered:
        level = TrustLevel.UNTRUSTED
    elif (
        record.years_active >= REPUTATION_HIGH_YEARS
        and record.complaint_rate < REPUTATION_HIGH_COMPLAINTS
    ):
        level = TrustLevel.HIGH
    elif record.complaint_rate < REPUTATION_MEDIUM_COMPLAINTS:
        level = TrustLevel.MEDIUM
    else:
        level = TrustLevel.LOW
    return TrustAssessment(level=level, basis=TrustBasis.REPUTATION)


def effective_trust(assessments: list[TrustAssessment]) -> TrustAssessment:
    """Combine evidence: highest level wins, stronger basis breaks ties.

    The returned assessment keeps the basis of the winning evidence, so
    a level reached only through reputation stays recognizable as such
    and the sensitive-data admissibility check can cap it at Medium
    unless a stronger basis corroborates the level.
    """
    if not assessments:
        raise EmptyOpinions("effective_trust needs at least one assessment")
    best = max(
        assessments,
        key=lambda a: (TRUST_RANK[a.level], -BASIS_RANK[a.basis]),
    )
    return TrustAssessment(level=best.level, basis=best.basis)
