"""Placement arbitration and runtime analysis.

schedule_service picks a node through a fixed restricted-set flow
(security pin, latency preference, data routing, open pool) and then
minimizes a weighted, min-max normalized blend of projected response
time and estimated charge. The analysis functions watch completed
invocations and produce rescheduling advice; reschedule applies it only
when the move strictly improves the projection.
"""

from __future__ import annotations

import hashlib
import math
from base64 import b64decode
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from statistics import fmean

from .errors import NoAdmissibleNode, NonCloudNode, NotFoundError, OutOfOrderEvent
from .model import (
    TIER_RANK,
    InvocationRecord,
    Outcome,
    PlacementDecision,
    PlacementReason,
    ResourceNode,
    SecurityClass,
    ServiceDescriptor,
    Tier,
    Topology,
    UserProfile,
    CloudClass,
    is_admissible,
    parse_semver,
    projected_response_ms,
    transmit_ms,
)

MAX_TAGS = 16
MAX_DESCRIPTION = 2048


@dataclass
class SchedulerWeights:
    """Relative importance of response time vs charge; must sum to 1."""

    w_latency: float = 0.7
    w_cost: float = 0.3


@dataclass
class Thresholds:
    """Tunables for the runtime analysis loop."""

    delay_pressure_ms_per_s: float = 5000.0  # arrival rate x mean latency trigger
    min_gain_ms: float = 50.0  # smallest projected improvement worth a move
    compute_factor: float = 1.5  # exec overrun multiplier
    compute_run: int = 3  # consecutive overruns required
    window: int = 100  # sliding window size per service
    sla_tolerance: float = 0.2  # p95 headroom allowed over the SLA
    min_samples: int = 20  # observations required before analysis speaks


class AdviceKind(str, Enum):
    DELAY_PRESSURE = "DelayPressure"
    COMPUTE_SHORTFALL = "ComputeShortfall"


@dataclass
class RescheduleAdvice:
    service_id: str
    trigger: AdviceKind
    target_tier_hint: Tier | None
    projected_gain_ms: float


@dataclass
class Violation:
    field: str
    message: str


@dataclass
class ValidationResult:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class ProfileVerdict:
    service_id: str
    functional_ok: bool
    latency_ok: bool

    @property
    def recommendation(self) -> str:
        return "Keep" if self.functional_ok and self.latency_ok else "Replace"


def percentile(values: list[float], p: float) -> float:
    """Nearest-rank percentile of an unsorted sample."""
    if not values:
        raise ValueError("percentile of empty sample")
    ordered = sorted(values)
    rank = math.ceil(p / 100.0 * len(ordered))
    return ordered[max(rank, 1) - 1]


class ContextSnapshot:
    """Monitoring state: per-service sliding window, per-node load.

    Keeps at most `window` completed observations per service; feed
    order must be nondecreasing in completion time for each service.
    Node load is mirrored by note_start / completion folding so that
    utilization = in-flight / cpu_slots at any instant.
    """

    def __init__(self, window: int = 100):
        self.window = window
        self._samples: dict[str, deque] = {}
        self._last_t: dict[str, float] = {}
        self._node_inflight: dict[str, int] = {}
        self._node_slots: dict[str, int] = {}

    def note_start(self, node_id: str, cpu_slots: int):
        """Record that a node began executing one more invocation."""
        self._node_slots[node_id] = cpu_slots
        self._node_inflight[node_id] = self._node_inflight.get(node_id, 0) + 1

    def inflight(self, node_id: str) -> int:
        return self._node_inflight.get(node_id, 0)

    def utilization(self, node_id: str) -> float:
        slots = self._node_slots.get(node_id, 0)
        if slots <= 0:
            return 0.0
        return self._node_inflight.get(node_id, 0) / slots

    def observe(self, service_id: str, t_done: float, latency_ms: float, exec_ms: float):
        last = self._last_t.get(service_id)
        if last is not None and t_done < last:
            raise OutOfOrderEvent(
                f"service {service_id}: completion at {t_done} after seeing {last}"
            )
        self._last_t[service_id] = t_done
        win = self._samples.get(service_id)
        if win is None:
            win = deque(maxlen=self.window)
            self._samples[service_id] = win
        win.append((t_done, latency_ms, exec_ms))

    def count(self, service_id: str) -> int:
        return len(self._samples.get(service_id, ()))

    def latencies(self, service_id: str) -> list[float]:
        return [s[1] for s in self._samples.get(service_id, ())]

    def mean_latency(self, service_id: str) -> float:
        return fmean(self.latencies(service_id))

    def p95_latency(self, service_id: str) -> float:
        return percentile(self.latencies(service_id), 95.0)

    def rate_per_s(self, service_id: str) -> float:
        """Observed completion rate over the window span."""
        win = self._samples.get(service_id, ())
        if len(win) < 2:
            return 0.0
        span_ms = win[-1][0] - win[0][0]
        if span_ms <= 0:
            return math.inf
        return (len(win) - 1) * 1000.0 / span_ms

    def recent_exec(self, service_id: str, m: int) -> list[float]:
        win = self._samples.get(service_id, ())
        return [s[2] for s in list(win)[-m:]]


def collect_context(record: InvocationRecord, ctx: ContextSnapshot) -> ContextSnapshot:
    """Fold one completed invocation into the analysis window.

    Completion also frees the slot note_start claimed on its node.
    """
    if record.outcome is not Outcome.COMPLETED:
        return ctx
    if record.node_id is not None and ctx._node_inflight.get(record.node_id, 0) > 0:
        ctx._node_inflight[record.node_id] -= 1
    ctx.observe(record.service_id, record.t_done, record.latency_ms, record.exec_ms)
    return ctx


def update_user_profile(profile: UserProfile, record: InvocationRecord) -> UserProfile:
    """Bump the consumer's per-service invocation counter."""
    history = profile.invocation_history
    history[record.service_id] = history.get(record.service_id, 0) + 1
    return profile


def estimate_charge(service: ServiceDescriptor, node: ResourceNode) -> float:
    """Projected per-invocation charge under the node's tariff."""
    cpu_seconds = service.cpu_demand / node.cpu_speed
    return (
        node.tariff.base_fee
        + node.tariff.cpu_rate * cpu_seconds
        + node.tariff.data_rate * service.payload_total
    )


def _normalize(value: float, lo: float, hi: float) -> float:
    # A metric with no spread differentiates nothing.
    if hi <= lo:
        return 0.0
    return (value - lo) / (hi - lo)


def decide_among(
    pool: list[ResourceNode],
    service: ServiceDescriptor,
    weights: SchedulerWeights,
    reason: PlacementReason,
    t_ms: float,
) -> PlacementDecision:
    responses = {n.id: projected_response_ms(service, n) for n in pool}
    charges = {n.id: estimate_charge(service, n) for n in pool}
    r_lo, r_hi = min(responses.values()), max(responses.values())
    c_lo, c_hi = min(charges.values()), max(charges.values())

    def key(node: ResourceNode):
        score = weights.w_latency * _normalize(
            responses[node.id], r_lo, r_hi
        ) + weights.w_cost * _normalize(charges[node.id], c_lo, c_hi)
        return (score, responses[node.id], charges[node.id], node.id)

    best = min(pool, key=key)
    return PlacementDecision(
        service_id=service.id,
        node_id=best.id,
        tier=best.tier,
        reason=reason,
        objective_ms=responses[best.id],
        decided_at=t_ms,
    )


def admissible_nodes(
    service: ServiceDescriptor, topology: Topology, t_ms: float
) -> list[ResourceNode]:
    return [n for n in topology if is_admissible(service, n, t_ms)]


def schedule_service(
    service: ServiceDescriptor,
    topology: Topology,
    weights: SchedulerWeights,
    t_ms: float,
) -> PlacementDecision:
    """Restricted-set placement flow.

    1. Critical services are pinned to the operator tier.
    2. Latency-sensitive services take a dealer whenever one can have them.
    3. Data-heavy services (flagged, or with storage no operator node can
       hold) route to the clouds.
    4. Everything else competes over the full admissible pool.

    When a step's preferred tier has no admissible node the choice falls
    back across tiers nearest-first. Raises NoAdmissibleNode when the
    whole topology refuses the service.
    """
    adm = admissible_nodes(service, topology, t_ms)
    if not adm:
        raise NoAdmissibleNode(service.id)

    if service.security_class is SecurityClass.CRITICAL:
        # Admissibility already confines critical services to MNO nodes.
        return decide_among(adm, service, weights, PlacementReason.SECURITY_PIN, t_ms)

    if service.latency_sensitive:
        dealers = [n for n in adm if n.tier is Tier.DEALER]
        if dealers:
            return decide_among(
                dealers, service, weights, PlacementReason.LATENCY_PREFERENCE, t_ms
            )

    mnos = topology.by_tier(Tier.MNO)
    storage_beyond_operators = bool(mnos) and all(
        service.storage_demand > m.storage_capacity for m in mnos
    )
    if service.data_intensive or storage_beyond_operators:
        clouds = [n for n in adm if n.tier is Tier.CLOUD]
        if clouds:
            return decide_among(clouds, service, weights, PlacementReason.DATA_INTENSIVE, t_ms)
        return _tier_fallback(adm, service, weights, t_ms)

    return decide_among(adm, service, weights, PlacementReason.CAPACITY_FALLBACK, t_ms)


def _tier_fallback(
    adm: list[ResourceNode],
    service: ServiceDescriptor,
    weights: SchedulerWeights,
    t_ms: float,
) -> PlacementDecision:
    for tier in (Tier.DEALER, Tier.MNO, Tier.CLOUD):
        pool = [n for n in adm if n.tier is tier]
        if pool:
            return decide_among(pool, service, weights, PlacementReason.CAPACITY_FALLBACK, t_ms)
    raise NoAdmissibleNode(service.id)  # unreachable with a non-empty pool


def _unit_cost(node: ResourceNode) -> float:
    # Price of the unit bundle: flat fee + one CPU-second + one MB moved.
    return node.tariff.base_fee + node.tariff.cpu_rate + node.tariff.data_rate


def _norm_or_neutral(value: float, lo: float, hi: float, invert: bool) -> float:
    # Peers indistinguishable on a metric give neutral evidence.
    if hi <= lo:
        return 0.5
    x = (value - lo) / (hi - lo)
    return 1.0 - x if invert else x


def score_cloud(node: ResourceNode, peers: list[ResourceNode]) -> float:
    """Mean of four normalized metrics against the peer cloud set.

    Lower round trip and unit cost score higher; more bandwidth and a
    stronger security provision score higher. Result lies in [0, 1].
    """
    if node.tier is not Tier.CLOUD:
        raise NonCloudNode(node.id)
    clouds = [p for p in peers if p.tier is Tier.CLOUD]
    if node.id not in {c.id for c in clouds}:
        clouds = clouds + [node]
    rtts = [c.rtt_ms for c in clouds]
    bws = [c.bandwidth_mbps for c in clouds]
    costs = [_unit_cost(c) for c in clouds]
    secs = [c.security_norm for c in clouds]
    terms = (
        _norm_or_neutral(node.rtt_ms, min(rtts), max(rtts), invert=True),
        _norm_or_neutral(node.bandwidth_mbps, min(bws), max(bws), invert=False),
        _norm_or_neutral(_unit_cost(node), min(costs), max(costs), invert=True),
        _norm_or_neutral(node.security_norm, min(secs), max(secs), invert=False),
    )
    return sum(terms) / 4.0


def cloud_class(score: float) -> CloudClass:
    if score >= 2.0 / 3.0:
        return CloudClass.HIGH
    if score >= 1.0 / 3.0:
        return CloudClass.MID
    return CloudClass.LOW


def analyze_performance(
    ctx: ContextSnapshot,
    service: ServiceDescriptor,
    current_node: ResourceNode,
    topology: Topology,
    thresholds: Thresholds,
    t_ms: float,
) -> RescheduleAdvice | None:
    """Delay-pressure detector for latency-sensitive services.

    Fires when observed load (arrival rate x mean latency) exceeds the
    pressure threshold and some admissible node in a nearer tier projects
    a response at least min_gain_ms better than the current node.
    """
    if not service.latency_sensitive:
        return None
    if ctx.count(service.id) < thresholds.min_samples:
        return None
    load = ctx.rate_per_s(service.id) * ctx.mean_latency(service.id)
    if load <= thresholds.delay_pressure_ms_per_s:
        return None
    cur_rank = TIER_RANK[current_node.tier]
    cur_resp = projected_response_ms(service, current_node)
    for tier in (Tier.DEALER, Tier.MNO):
        if TIER_RANK[tier] >= cur_rank:
            break
        gains = [
            cur_resp - projected_response_ms(service, n)
            for n in topology.by_tier(tier)
            if is_admissible(service, n, t_ms)
        ]
        qualifying = [g for g in gains if g >= thresholds.min_gain_ms]
        if qualifying:
            return RescheduleAdvice(
                service_id=service.id,
                trigger=AdviceKind.DELAY_PRESSURE,
                target_tier_hint=tier,
                projected_gain_ms=max(qualifying),
            )
    return None


def analyze_computation(
    observed_exec_ms: list[float],
    expected_exec_ms: float,
    k: float = 1.5,
    m: int = 3,
    service_id: str = "",
) -> RescheduleAdvice | None:
    """Compute-shortfall detector.

    Fires when the last m observed executions each overran the expected
    execution time by more than factor k.
    """
    if expected_exec_ms <= 0:
        raise ValueError("expected_exec_ms must be > 0")
    recent = list(observed_exec_ms)[-m:]
    if len(recent) < m:
        return None
    if all(x > k * expected_exec_ms for x in recent):
        return RescheduleAdvice(
            service_id=service_id,
            trigger=AdviceKind.COMPUTE_SHORTFALL,
            target_tier_hint=None,
            projected_gain_ms=fmean(recent) - expected_exec_ms,
        )
    return None


def reference_digest(vector) -> str:
    """SHA-256 hex digest of a test vector's decoded input."""
    return hashlib.sha256(b64decode(vector.input_b64)).hexdigest()


def profile_service(
    record, observed_digest: str, observed_p95_ms: float, tol: float = 0.2
) -> ProfileVerdict:
    """Conformance check on a registered service.

    Functional conformance compares the observed digest against the
    record's declared test vector (vacuously true without one); latency
    conformance allows the observed p95 a tol fraction over the SLA.
    Only active records can be profiled.
    """
    from .registry import ServiceState

    if record.state is not ServiceState.ACTIVE:
        raise NotFoundError(f"service {record.descriptor.id!r} is not active")
    desc = record.descriptor
    functional_ok = True
    if desc.test_vector is not None:
        functional_ok = observed_digest == desc.test_vector.expected_digest
    latency_ok = observed_p95_ms <= desc.sla_latency_ms * (1.0 + tol)
    return ProfileVerdict(
        service_id=desc.id, functional_ok=functional_ok, latency_ok=latency_ok
    )


def migration_delay_ms(service: ServiceDescriptor, new_node: ResourceNode) -> float:
    """Time to stand up the service copy: image transfer at the new link."""
    return transmit_ms(service.storage_demand, new_node.bandwidth_mbps)


def reschedule(
    record,
    advice: RescheduleAdvice,
    topology: Topology,
    weights: SchedulerWeights,
    t_ms: float,
) -> PlacementDecision:
    """Act on analysis advice; move only for a strict improvement.

    Takes the service's registry record (descriptor plus current
    placement), tries the hinted tier first, then the full flow. Returns
    the current decision unchanged when nothing projects strictly
    better.
    """
    current: PlacementDecision = record.placement
    service: ServiceDescriptor = record.descriptor
    candidate = None
    if advice.target_tier_hint is not None:
        pool = [
            n
            for n in topology.by_tier(advice.target_tier_hint)
            if is_admissible(service, n, t_ms)
        ]
        if pool:
            candidate = decide_among(pool, service, weights, PlacementReason.RESCHEDULE, t_ms)
    if candidate is None:
        try:
            candidate = replace(
                schedule_service(service, topology, weights, t_ms),
                reason=PlacementReason.RESCHEDULE,
                decided_at=t_ms,
            )
        except NoAdmissibleNode:
            # Nothing can take the service right now; stay put.
            return current
    cur_objective = projected_response_ms(service, topology.get(current.node_id))
    if candidate.node_id != current.node_id and candidate.objective_ms < cur_objective:
        return candidate
    return current


def enforce_standard(
    service: ServiceDescriptor, vocabulary: set[str] | None = None
) -> ValidationResult:
    """Registration-time conformance gate for service descriptions.

    Checks identity fields, semantic version form, tag discipline
    (lowercase, bounded count, optional controlled vocabulary), bounded
    description and sane resource figures. All problems are reported,
    not just the first.
    """
    v: list[Violation] = []
    if not service.id:
        v.append(Violation("id", "must be non-empty"))
    if not service.name:
        v.append(Violation("name", "must be non-empty"))
    try:
        parse_semver(service.version)
    except ValueError:
        v.append(Violation("version", f"not a semantic version: {service.version!r}"))
    if not service.capability_tags:
        v.append(Violation("capability_tags", "at least one tag required"))
    for tag in sorted(service.capability_tags):
        if not tag or tag != tag.lower():
            v.append(Violation("capability_tags", f"tag {tag!r} must be lowercase"))
    if len(service.capability_tags) > MAX_TAGS:
        v.append(Violation("capability_tags", f"at most {MAX_TAGS} tags allowed"))
    if vocabulary is not None:
        unknown = sorted(t for t in service.capability_tags if t not in vocabulary)
        for tag in unknown:
            v.append(Violation("capability_tags", f"tag {tag!r} not in vocabulary"))
    if len(service.description) > MAX_DESCRIPTION:
        v.append(
            Violation("description", f"longer than {MAX_DESCRIPTION} characters")
        )
    for field_name in (
        "cpu_demand",
        "mem_demand",
        "storage_demand",
        "payload_in",
        "payload_out",
    ):
        if getattr(service, field_name) < 0:
            v.append(Violation(field_name, "must be >= 0"))
    if service.sla_latency_ms <= 0:
        v.append(Violation("sla_latency_ms", "must be > 0"))
    return ValidationResult(violations=v)
