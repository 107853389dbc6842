import math
import random
import statistics

import pytest

from mdcvanet.channel import (
    BackgroundSource,
    BernoulliLoss,
    ChannelModel,
    GilbertElliottLoss,
    Occupancy,
    generate_background,
    next_busy_interval,
    sample_loss,
)


def test_bernoulli_extremes():
    rng = random.Random(0)
    never = ChannelModel(BernoulliLoss(0.0))
    always = ChannelModel(BernoulliLoss(1.0))
    assert not any(sample_loss(never, rng) for _ in range(1000))
    assert all(sample_loss(always, rng) for _ in range(1000))


def test_extremes_consume_no_draws():
    rng = random.Random(0)
    before = rng.getstate()
    sample_loss(ChannelModel(BernoulliLoss(0.0)), rng)
    sample_loss(ChannelModel(BernoulliLoss(1.0)), rng)
    assert rng.getstate() == before


def test_gilbert_elliott_stationary():
    ge = GilbertElliottLoss(0.01, 0.1, loss_good=0.0, loss_bad=1.0)
    assert ge.stationary_bad == pytest.approx(1 / 11)
    model = ChannelModel(ge)
    rng = random.Random(11)
    n = 400_000
    lost = sum(sample_loss(model, rng) for _ in range(n))
    assert lost / n == pytest.approx(1 / 11, abs=0.005)


def test_loss_probability_range():
    with pytest.raises(ValueError):
        BernoulliLoss(1.2)
    with pytest.raises(ValueError):
        GilbertElliottLoss(-0.1, 0.5)


def test_occupancy_disabled():
    assert next_busy_interval(ChannelModel(), random.Random(0), 0.0) is None


def test_busy_fraction_half():
    model = ChannelModel(external_busy=Occupancy(mean_busy_ms=1.0, mean_idle_ms=1.0))
    rng = random.Random(3)
    now, busy = 0.0, 0.0
    last_end = -1.0
    while now < 200_000:
        start, end = next_busy_interval(model, rng, now)
        assert last_end <= start < end
        busy += end - start
        last_end = now = end
    assert busy / now == pytest.approx(0.5, abs=0.01)


def test_cbr_exact():
    src = BackgroundSource("v", 3, 200, 100.0, "cbr")
    pkts = generate_background(src, 1000.0)
    assert len(pkts) == 100
    assert [p.arrival_time for p in pkts[:3]] == pytest.approx([0.0, 10.0, 20.0])
    assert all(p.target_ac == 3 and not p.is_video and math.isinf(p.deadline) for p in pkts)


def test_rate_zero():
    assert generate_background(BackgroundSource("x", 0, 100, 0.0), 1000.0) == []


def test_poisson_counts():
    src = BackgroundSource("p", 0, 512, 100.0, "poisson")
    counts = [len(generate_background(src, 10_000.0, random.Random(s))) for s in range(50)]
    # the mean of 50 Poisson(1000) counts has sd sqrt(1000/50)
    assert abs(statistics.fmean(counts) - 1000) < 3 * math.sqrt(1000 / 50)


def test_background_validation():
    with pytest.raises(ValueError):
        BackgroundSource("x", 4, 100, 1.0)
    with pytest.raises(ValueError):
        BackgroundSource("x", 0, 100, 1.0, "bursty")
    with pytest.raises(ValueError):
        generate_background(BackgroundSource("x", 0, 100, 1.0), 0.0)
