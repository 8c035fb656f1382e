"""Charging and service-level rebates.

A completed invocation is charged a flat base fee plus metered CPU time
and metered data movement. When the provider misses the agreed latency
bound (after adding its own jitter and session re-establishment cost),
the consumer gets a fractional rebate.
"""

from __future__ import annotations

from .errors import NotBillable
from .model import InvocationRecord, Outcome, QoSParameters, Tariff, Tier

DEFAULT_REBATE_FRAC = 0.1

# Fallback price books per tier; scenarios normally price nodes explicitly.
DEFAULT_TARIFFS = {
    Tier.DEALER: Tariff(base_fee=0.2, cpu_rate=0.1, data_rate=0.01),
    Tier.MNO: Tariff(base_fee=0.5, cpu_rate=0.2, data_rate=0.02),
    Tier.CLOUD: Tariff(base_fee=1.0, cpu_rate=0.4, data_rate=0.05),
}


def default_tariff(tier: Tier) -> Tariff:
    t = DEFAULT_TARIFFS[tier]
    return Tariff(base_fee=t.base_fee, cpu_rate=t.cpu_rate, data_rate=t.data_rate)


def compute_charge(inv: InvocationRecord, tariff: Tariff, payload_mb: float = 0.0) -> float:
    """Base fee + CPU-seconds metering + per-MB data metering."""
    if inv.outcome is not Outcome.COMPLETED:
        raise NotBillable(f"request {inv.request_id} outcome {inv.outcome}")
    cpu_seconds = inv.exec_ms / 1000.0
    return tariff.base_fee + tariff.cpu_rate * cpu_seconds + tariff.data_rate * payload_mb


def apply_slo_rebate(
    charge: float,
    qos: QoSParameters,
    observed_latency_ms: float,
    sla_latency_ms: float,
    rebate_frac: float = DEFAULT_REBATE_FRAC,
) -> float:
    """Discount the charge when the latency objective is missed.

    The provider answers for its whole delivery path, so jitter and
    session re-establishment overhead count against the bound. Exactly
    meeting the bound is not a breach.
    """
    effective = observed_latency_ms + qos.jitter_ms + qos.session_reestablish_ms
    if effective > sla_latency_ms:
        return charge * (1.0 - rebate_frac)
    return charge
