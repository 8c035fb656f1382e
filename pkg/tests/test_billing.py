"""Charging, rebates and the mobile-side energy account."""

import math

import pytest

from tierbroker.billing import (
    DEFAULT_TARIFFS,
    apply_slo_rebate,
    compute_charge,
    default_tariff,
)
from tierbroker.errors import NotBillable
from tierbroker.model import (
    EnergyModel,
    InvocationRecord,
    Outcome,
    QoSParameters,
    Tariff,
    Tier,
)
from tierbroker.simulation import energy_j


def completed(exec_ms=1000.0, request_id=1):
    return InvocationRecord(
        request_id=request_id,
        service_id="svc",
        consumer_id="u1",
        node_id="M1",
        t_arrive=0.0,
        t_start=0.0,
        t_done=exec_ms,
        exec_ms=exec_ms,
        outcome=Outcome.COMPLETED,
    )


def test_charge_example():
    tariff = Tariff(base_fee=1.0, cpu_rate=0.5, data_rate=0.0)
    assert compute_charge(completed(exec_ms=2000.0), tariff) == 2.0


def test_charge_base_fee_only():
    tariff = Tariff(base_fee=0.7, cpu_rate=0.5, data_rate=0.3)
    assert compute_charge(completed(exec_ms=0.0), tariff, payload_mb=0.0) == 0.7


def test_charge_meters_data():
    tariff = Tariff(base_fee=0.0, cpu_rate=0.0, data_rate=0.05)
    assert compute_charge(completed(), tariff, payload_mb=4.0) == pytest.approx(0.2)


def test_charge_refuses_unfinished_work():
    for outcome in (Outcome.REJECTED, Outcome.DROPPED, None):
        inv = completed()
        inv.outcome = outcome
        with pytest.raises(NotBillable):
            compute_charge(inv, default_tariff(Tier.MNO))


def test_default_tariffs_order_by_distance():
    dealer, mno, cloud = (DEFAULT_TARIFFS[t] for t in (Tier.DEALER, Tier.MNO, Tier.CLOUD))
    assert dealer.base_fee < mno.base_fee < cloud.base_fee
    assert dealer.cpu_rate < mno.cpu_rate < cloud.cpu_rate
    assert dealer.data_rate < mno.data_rate < cloud.data_rate


def test_default_tariff_returns_a_copy():
    t = default_tariff(Tier.DEALER)
    t.base_fee = 99.0
    assert DEFAULT_TARIFFS[Tier.DEALER].base_fee == 0.2


def test_rebate_applies_only_past_the_bound():
    qos = QoSParameters()
    assert apply_slo_rebate(10.0, qos, 1001.0, 1000.0) == pytest.approx(9.0)
    # Exactly on the bound is not a breach.
    assert apply_slo_rebate(10.0, qos, 1000.0, 1000.0) == 10.0
    assert apply_slo_rebate(10.0, qos, 1.0, 1000.0) == 10.0


def test_rebate_counts_provider_overheads():
    qos = QoSParameters(jitter_ms=30.0, session_reestablish_ms=30.0)
    # 950 observed + 60 overhead crosses the 1000 ms bound.
    assert apply_slo_rebate(10.0, qos, 950.0, 1000.0) == pytest.approx(9.0)
    assert apply_slo_rebate(10.0, qos, 940.0, 1000.0) == 10.0


def test_rebate_frac_zero_is_identity():
    qos = QoSParameters()
    assert apply_slo_rebate(10.0, qos, 5000.0, 1000.0, rebate_frac=0.0) == 10.0


def test_energy_example():
    # 1 MB over 8 Mbps is one second of transmit at 1 W.
    assert energy_j(1.0, 8.0, 0.0, EnergyModel()) == pytest.approx(1.0)
    assert energy_j(1.0, 8.0, 1000.0, EnergyModel()) == pytest.approx(1.1)
    assert energy_j(0.0, 8.0, 2000.0, EnergyModel()) == pytest.approx(0.2)


def test_energy_monotone_in_bandwidth():
    values = [energy_j(5.0, bw, 100.0, EnergyModel()) for bw in (1.0, 2.0, 10.0, 100.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_charge_additivity():
    tariff = Tariff(base_fee=0.4, cpu_rate=0.25, data_rate=0.02)
    a = compute_charge(completed(exec_ms=1200.0), tariff, payload_mb=1.5)
    b = compute_charge(completed(exec_ms=800.0, request_id=2), tariff, payload_mb=2.5)
    both = compute_charge(completed(exec_ms=2000.0, request_id=3), tariff, payload_mb=4.0)
    assert math.isclose(a + b - tariff.base_fee, both, rel_tol=0, abs_tol=1e-9)
