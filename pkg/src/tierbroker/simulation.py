"""Deterministic discrete-event simulation of the offload fabric.

Events are ordered by (time, push sequence); every tie is therefore
resolved the same way on every run. Each node serves its queue in FIFO
order across cpu_slots parallel slots; a request occupies a slot from
start until execution completes. Dealers reject whatever is still
queued when they close; the next arrival of an affected service gets
re-placed. Analysis ticks run the delay-pressure and compute-shortfall
detectors every second under the arbitrated policy.
"""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .arbitrator import (
    ContextSnapshot,
    SchedulerWeights,
    analyze_computation,
    analyze_performance,
    cloud_class,
    collect_context,
    decide_among,
    migration_delay_ms,
    reschedule,
    schedule_service,
    score_cloud,
    update_user_profile,
)
from .billing import apply_slo_rebate, compute_charge
from .errors import ConfigError, NoAdmissibleNode
from .model import (
    EnergyModel,
    InvocationRecord,
    Outcome,
    PlacementReason,
    ResourceNode,
    ServiceDescriptor,
    Tier,
    Topology,
    UserProfile,
    check_node,
    is_admissible,
    is_dealer_open,
    minute_of_day,
    security_ok,
    transmit_ms,
)
from .registry import Registry, ServiceRecord
from .report import MetricsReport, RunRow, ServiceRow, latency_stats
from .workload import Arrival, Scenario, generate_workload

log = logging.getLogger(__name__)

ANALYSIS_INTERVAL_MS = 1000.0

POLICY_TIERS = {
    "cloud-only": Tier.CLOUD,
    "mno-only": Tier.MNO,
    "dealer-only": Tier.DEALER,
}
POLICIES = ("sami",) + tuple(sorted(POLICY_TIERS))


class EventKind(str, Enum):
    ARRIVAL = "Arrival"
    TRANSFER_DONE = "TransferDone"
    EXEC_DONE = "ExecDone"
    DEALER_OPEN = "DealerOpen"
    DEALER_CLOSE = "DealerClose"
    ANALYSIS_TICK = "AnalysisTick"
    MIGRATION_DONE = "MigrationDone"


@dataclass
class SimEvent:
    t_ms: float
    seq: int
    kind: EventKind
    request: InvocationRecord | None = None
    node_id: str | None = None
    arrival: Arrival | None = None


def energy_j(
    size_mb: float, bandwidth_mbps: float, wait_ms: float, model: EnergyModel
) -> float:
    """Mobile-side energy: radio active while transmitting, idle while waiting."""
    transmit_s = transmit_ms(size_mb, bandwidth_mbps) / 1000.0
    return model.p_tx_w * transmit_s + model.p_idle_w * (wait_ms / 1000.0)


def build_topology(nodes: list[ResourceNode]) -> Topology:
    """Validate nodes, assemble the inventory and classify the clouds."""
    problems = []
    for node in sorted(nodes, key=lambda n: n.id):
        problems.extend(check_node(node))
    if problems:
        raise ConfigError("; ".join(problems))
    topology = Topology(nodes)
    clouds = topology.by_tier(Tier.CLOUD)
    for cloud in clouds:
        score = score_cloud(cloud, clouds)
        topology.cloud_scores[cloud.id] = score
        topology.cloud_classes[cloud.id] = cloud_class(score)
    return topology


@dataclass
class _ServiceState:
    desc: ServiceDescriptor
    record: ServiceRecord | None
    migration_until: float = 0.0
    reschedules: int = 0


@dataclass
class _NodeState:
    node: ResourceNode
    running: int = 0
    queue: deque = field(default_factory=deque)


@dataclass
class SimResult:
    report: MetricsReport
    records: list[InvocationRecord]
    arbitration_log: list[tuple[float, str, str]]
    profiles: dict[str, UserProfile]
    context: ContextSnapshot
    registry: Registry


class Simulation:
    """One policy run over one scenario."""

    def __init__(
        self,
        topology: Topology,
        registry: Registry,
        scenario: Scenario,
        policy: str = "sami",
        seed: int | None = None,
    ):
        if policy not in POLICIES:
            raise ConfigError(f"unknown policy {policy!r}; choose from {', '.join(POLICIES)}")
        self.topology = topology
        self.registry = registry
        self.scenario = scenario
        self.policy = policy
        self.seed = scenario.seed if seed is None else seed
        self.horizon = scenario.horizon_ms
        self.weights: SchedulerWeights = scenario.weights
        self.thresholds = scenario.thresholds
        self.energy_model = scenario.energy

        self._heap: list[tuple[float, int, SimEvent]] = []
        self._seq = 0
        self._next_request_id = 1
        self.records: list[InvocationRecord] = []
        self.arbitration_log: list[tuple[float, str, str]] = []
        self.arbitration_events = 0
        self.security_violations = 0
        self.context = ContextSnapshot(window=self.thresholds.window)
        self.profiles = {
            c.id: UserProfile(
                consumer_id=c.id, weight_latency=c.weight_latency, weight_cost=c.weight_cost
            )
            for c in scenario.consumers
        }
        self.services: dict[str, _ServiceState] = {}
        self.node_states = {n.id: _NodeState(node=n) for n in topology}

    # ------------------------------------------------------------------
    # setup

    def _push(self, t_ms: float, event: SimEvent):
        self._seq += 1
        event.seq = self._seq
        heapq.heappush(self._heap, (t_ms, self._seq, event))

    def _log_arbitration(self, t_ms: float, kind: str, service_id: str):
        self.arbitration_log.append((t_ms, kind, service_id))
        self.arbitration_events += 1

    def _place_all(self):
        for desc in sorted(self.scenario.services, key=lambda s: s.id):
            if self.policy == "sami":
                record = self.registry.register_service(desc, self.topology, 0.0)
            else:
                record = self._register_pinned(desc)
            self.services[desc.id] = _ServiceState(desc=desc, record=record)
            if record is not None:
                self._log_arbitration(0.0, "register", desc.id)

    def _register_pinned(self, desc: ServiceDescriptor) -> ServiceRecord | None:
        """Baseline policies: best node of one tier, or nothing at all.

        Admissibility narrows the pool when it can; when the whole tier
        refuses the service it is pinned anyway and every request will
        bounce off the admissibility check at arrival time.
        """
        tier = POLICY_TIERS[self.policy]
        pool = self.topology.by_tier(tier)
        if not pool:
            log.warning("policy %s: no %s nodes; service %s stays unplaced",
                        self.policy, tier.value, desc.id)
            return None
        admissible = [n for n in pool if is_admissible(desc, n, 0.0)]
        decision = decide_among(
            admissible or pool, desc, self.weights, PlacementReason.CAPACITY_FALLBACK, 0.0
        )
        return self.registry.register_service(desc, self.topology, 0.0, placement=decision)

    def _schedule_calendar(self):
        for arrival in generate_workload(self.scenario.consumers, self.seed, self.horizon):
            self._push(arrival.t_ms, SimEvent(arrival.t_ms, 0, EventKind.ARRIVAL, arrival=arrival))
        day_ms = 1440 * 60000.0
        for node in self.topology.by_tier(Tier.DEALER):
            open_minute, close_minute = node.open_hours
            day = 0
            while day * day_ms <= self.horizon:
                t_open = day * day_ms + open_minute * 60000.0
                t_close = day * day_ms + close_minute * 60000.0
                if 0.0 < t_open <= self.horizon:
                    self._push(t_open, SimEvent(t_open, 0, EventKind.DEALER_OPEN, node_id=node.id))
                if 0.0 < t_close <= self.horizon:
                    self._push(t_close, SimEvent(t_close, 0, EventKind.DEALER_CLOSE, node_id=node.id))
                day += 1
        if self.policy == "sami" and ANALYSIS_INTERVAL_MS <= self.horizon:
            self._push(
                ANALYSIS_INTERVAL_MS,
                SimEvent(ANALYSIS_INTERVAL_MS, 0, EventKind.ANALYSIS_TICK),
            )

    # ------------------------------------------------------------------
    # event handlers

    def run(self) -> SimResult:
        self._place_all()
        self._schedule_calendar()
        while self._heap:
            t_ms, _, event = heapq.heappop(self._heap)
            if t_ms > self.horizon:
                break
            if event.kind is EventKind.ARRIVAL:
                self._on_arrival(t_ms, event.arrival)
            elif event.kind is EventKind.TRANSFER_DONE:
                self._on_transfer_done(t_ms, event.request)
            elif event.kind is EventKind.EXEC_DONE:
                self._on_exec_done(t_ms, event.request)
            elif event.kind is EventKind.DEALER_OPEN:
                self._try_start(t_ms, self.node_states[event.node_id])
            elif event.kind is EventKind.DEALER_CLOSE:
                self._on_dealer_close(t_ms, self.node_states[event.node_id])
            elif event.kind is EventKind.ANALYSIS_TICK:
                self._on_analysis_tick(t_ms)
            elif event.kind is EventKind.MIGRATION_DONE:
                self._try_start(t_ms, self.node_states[event.node_id])
        return self._finish()

    def _on_arrival(self, t_ms: float, arrival: Arrival):
        state = self.services[arrival.service_id]
        request = InvocationRecord(
            request_id=self._next_request_id,
            service_id=arrival.service_id,
            consumer_id=arrival.consumer_id,
            node_id=None,
            t_arrive=t_ms,
        )
        self._next_request_id += 1
        self.records.append(request)
        update_user_profile(self.profiles[arrival.consumer_id], request)

        if state.record is None:
            request.outcome = Outcome.REJECTED
            return
        node = self.topology.get(state.record.placement.node_id)
        if not is_admissible(state.desc, node, t_ms):
            if self.policy == "sami":
                node = self._re_resolve(t_ms, state, request)
                if node is None:
                    return
            else:
                request.node_id = node.id
                request.outcome = Outcome.REJECTED
                if not security_ok(state.desc, node):
                    self.security_violations += 1
                return
        request.node_id = node.id
        node_state = self.node_states[node.id]
        node_state.queue.append(request)
        self._try_start(t_ms, node_state)

    def _re_resolve(self, t_ms, state: _ServiceState, request: InvocationRecord):
        """Current node refuses the service (dealer closed, say): place anew."""
        try:
            decision = schedule_service(state.desc, self.topology, self.weights, t_ms)
        except NoAdmissibleNode:
            request.outcome = Outcome.DROPPED
            return None
        if decision.node_id != state.record.placement.node_id:
            self._apply_move(t_ms, state, decision)
        return self.topology.get(decision.node_id)

    def _apply_move(self, t_ms, state: _ServiceState, decision):
        state.record.placement = decision
        state.reschedules += 1
        self._log_arbitration(t_ms, "reschedule", state.desc.id)
        new_node = self.topology.get(decision.node_id)
        delay = migration_delay_ms(state.desc, new_node)
        state.migration_until = t_ms + delay
        done = t_ms + delay
        if done <= self.horizon:
            self._push(done, SimEvent(done, 0, EventKind.MIGRATION_DONE, node_id=new_node.id))

    def _try_start(self, t_ms: float, node_state: _NodeState):
        node = node_state.node
        while node_state.queue and node_state.running < node.cpu_slots:
            head: InvocationRecord = node_state.queue[0]
            state = self.services[head.service_id]
            if node.tier is Tier.DEALER and not is_dealer_open(node, t_ms):
                break
            migrating_here = (
                state.record is not None
                and state.record.placement.node_id == node.id
                and t_ms < state.migration_until
            )
            if migrating_here:
                # Copy still transferring; the queue holds (FIFO preserved).
                break
            node_state.queue.popleft()
            node_state.running += 1
            self.context.note_start(node.id, node.cpu_slots)
            head.t_start = t_ms
            head.queue_ms = t_ms - head.t_arrive
            head.transfer_ms = transmit_ms(state.desc.payload_total, node.bandwidth_mbps)
            head.exec_ms = state.desc.cpu_demand / node.cpu_speed * 1000.0
            t_transfer = t_ms + node.rtt_ms + head.transfer_ms
            self._push(t_transfer, SimEvent(t_transfer, 0, EventKind.TRANSFER_DONE, request=head))

    def _on_transfer_done(self, t_ms: float, request: InvocationRecord):
        t_exec = t_ms + request.exec_ms
        self._push(t_exec, SimEvent(t_exec, 0, EventKind.EXEC_DONE, request=request))

    def _on_exec_done(self, t_ms: float, request: InvocationRecord):
        node_state = self.node_states[request.node_id]
        node = node_state.node
        node_state.running -= 1
        state = self.services[request.service_id]
        request.t_done = t_ms
        request.outcome = Outcome.COMPLETED
        request.energy_j = energy_j(
            state.desc.payload_total, node.bandwidth_mbps, request.queue_ms, self.energy_model
        )
        charge = compute_charge(request, node.tariff, state.desc.payload_total)
        request.charge = apply_slo_rebate(
            charge,
            node.qos,
            request.latency_ms,
            state.desc.sla_latency_ms,
            self.scenario.rebate_frac,
        )
        collect_context(request, self.context)
        self._try_start(t_ms, node_state)

    def _on_dealer_close(self, t_ms: float, node_state: _NodeState):
        while node_state.queue:
            request = node_state.queue.popleft()
            request.outcome = Outcome.REJECTED

    def _on_analysis_tick(self, t_ms: float):
        for service_id in sorted(self.services):
            state = self.services[service_id]
            if state.record is None:
                continue
            self._log_arbitration(t_ms, "analysis", service_id)
            current = self.topology.get(state.record.placement.node_id)
            advice = analyze_performance(
                self.context, state.desc, current, self.topology, self.thresholds, t_ms
            )
            if advice is None:
                expected = state.desc.cpu_demand / current.cpu_speed * 1000.0
                if expected > 0:
                    advice = analyze_computation(
                        self.context.recent_exec(service_id, self.thresholds.compute_run),
                        expected,
                        k=self.thresholds.compute_factor,
                        m=self.thresholds.compute_run,
                        service_id=service_id,
                    )
            if advice is None:
                continue
            decision = reschedule(
                state.record, advice, self.topology, self.weights, t_ms
            )
            if decision.node_id != state.record.placement.node_id:
                self._apply_move(t_ms, state, decision)
        t_next = t_ms + ANALYSIS_INTERVAL_MS
        if t_next <= self.horizon:
            self._push(t_next, SimEvent(t_next, 0, EventKind.ANALYSIS_TICK))

    # ------------------------------------------------------------------
    # reporting

    def _finish(self) -> SimResult:
        rows = []
        for service_id in sorted(self.services):
            state = self.services[service_id]
            recs = [r for r in self.records if r.service_id == service_id]
            completed = [r for r in recs if r.outcome is Outcome.COMPLETED]
            mean_ms, p95_ms = latency_stats([r.latency_ms for r in completed])
            tier = state.record.placement.tier.value if state.record else "-"
            rows.append(
                ServiceRow(
                    service_id=service_id,
                    tier=tier,
                    invocations=len(recs),
                    completed=len(completed),
                    rejected=sum(1 for r in recs if r.outcome is Outcome.REJECTED),
                    dropped=sum(1 for r in recs if r.outcome is Outcome.DROPPED),
                    in_flight=sum(1 for r in recs if r.outcome is None),
                    mean_latency_ms=mean_ms,
                    p95_latency_ms=p95_ms,
                    energy_j_total=sum(r.energy_j for r in completed),
                    charge_total=sum(r.charge for r in completed),
                    reschedules=state.reschedules,
                )
            )
        all_completed = [r for r in self.records if r.outcome is Outcome.COMPLETED]
        mean_ms, p95_ms = latency_stats([r.latency_ms for r in all_completed])
        run_row = RunRow(
            arrivals=len(self.records),
            completed=len(all_completed),
            rejected=sum(1 for r in self.records if r.outcome is Outcome.REJECTED),
            dropped=sum(1 for r in self.records if r.outcome is Outcome.DROPPED),
            in_flight=sum(1 for r in self.records if r.outcome is None),
            mean_latency_ms=mean_ms,
            p95_latency_ms=p95_ms,
            energy_j_total=sum(r.energy_j for r in all_completed),
            charge_total=sum(r.charge for r in all_completed),
            reschedules=sum(s.reschedules for s in self.services.values()),
            arbitration_events=self.arbitration_events,
            security_violations=self.security_violations,
            wall_ms=self.horizon,
        )
        report = MetricsReport(
            policy=self.policy, seed=self.seed, services=rows, run=run_row
        )
        return SimResult(
            report=report,
            records=self.records,
            arbitration_log=self.arbitration_log,
            profiles=self.profiles,
            context=self.context,
            registry=self.registry,
        )


def run(
    topology: Topology,
    registry: Registry,
    scenario: Scenario,
    seed: int | None = None,
    policy: str = "sami",
) -> MetricsReport:
    """Run one policy over the scenario and return its metrics."""
    return Simulation(topology, registry, scenario, policy=policy, seed=seed).run().report


def simulate_scenario(
    scenario: Scenario, policy: str = "sami", seed: int | None = None
) -> SimResult:
    """Build topology and registry from the scenario, then run."""
    topology = build_topology(scenario.nodes)
    registry = Registry(topology, scenario.vocabulary, scenario.weights)
    return Simulation(topology, registry, scenario, policy=policy, seed=seed).run()


__all__ = [
    "ANALYSIS_INTERVAL_MS",
    "POLICIES",
    "POLICY_TIERS",
    "EventKind",
    "SimEvent",
    "SimResult",
    "Simulation",
    "build_topology",
    "energy_j",
    "is_dealer_open",
    "minute_of_day",
    "run",
    "simulate_scenario",
    "transmit_ms",
]
