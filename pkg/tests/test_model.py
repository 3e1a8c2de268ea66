"""Parameter containers, combinatorial event rates, closed-form means."""

import math

import numpy as np
import pytest

from trapstats import (
    LossChannel,
    ModelParams,
    NoClosedFormError,
    ValidationError,
    event_rate,
    mean_field_mean,
    mean_field_outflow,
    predict_steady_mean,
    total_loss_rate,
)


def pair_loss(R=6000.0, gamma=0.2, beta=500.0, removed=2):
    return ModelParams(loading_rate=R, one_body_rate=gamma,
                       channels=(LossChannel(2, removed, beta),))


def test_channel_validation():
    LossChannel(order=3, removed=1, rate_const=0.0)  # zero rate is fine
    with pytest.raises(ValidationError):
        LossChannel(order=2, removed=3, rate_const=1.0)
    with pytest.raises(ValidationError):
        LossChannel(order=2, removed=0, rate_const=1.0)
    with pytest.raises(ValidationError):
        LossChannel(order=0, removed=0, rate_const=1.0)
    with pytest.raises(ValidationError):
        LossChannel(order=2, removed=2, rate_const=-1.0)


def test_params_reject_all_zero_rates():
    with pytest.raises(ValidationError):
        ModelParams(loading_rate=0.0, one_body_rate=0.0)
    with pytest.raises(ValidationError):
        ModelParams(loading_rate=0.0, one_body_rate=0.0,
                    channels=(LossChannel(2, 2, 0.0),))
    # any single nonzero rate is enough
    ModelParams(loading_rate=0.0, one_body_rate=0.0, channels=(LossChannel(2, 2, 5.0),))
    ModelParams(loading_rate=1.0)


def test_params_frozen():
    p = pair_loss()
    with pytest.raises(AttributeError):
        p.loading_rate = 1.0


def test_event_rate_exact_binomials():
    ch2 = LossChannel(2, 2, 500.0)
    ch3 = LossChannel(3, 3, 10.0)
    assert event_rate(ch2, 0) == 0.0
    assert event_rate(ch2, 1) == 0.0
    assert event_rate(ch2, 2) == 500.0
    assert event_rate(ch2, 5) == 500.0 * 10        # C(5,2)=10
    assert event_rate(ch3, 5) == 10.0 * 10         # C(5,3)=10
    assert event_rate(ch3, 30) == 10.0 * 4060      # C(30,3)=4060
    with pytest.raises(ValidationError):
        event_rate(ch2, -1)
    with pytest.raises(ValidationError):
        event_rate(ch2, 2.5)


def test_event_rate_combinatorics_are_exact():
    # the binomial factor is integer arithmetic, not a factorial-ratio float
    for rho in (2, 3, 4):
        ch = LossChannel(rho, rho, 1.0)
        for n in range(rho, 200, 7):
            assert event_rate(ch, n) == math.comb(n, rho)


def test_total_loss_rate():
    p = pair_loss()
    assert total_loss_rate(p, 0) == 0.0
    assert total_loss_rate(p, 1) == 0.2
    assert total_loss_rate(p, 4) == pytest.approx(0.8 + 500.0 * 6)


def test_predict_steady_mean_regimes():
    # pure one-body: exact R/gamma
    p = ModelParams(loading_rate=5.0, one_body_rate=1.0)
    assert predict_steady_mean(p) == pytest.approx(5.0)

    # pair-loss dominated: sqrt(R/beta')
    assert predict_steady_mean(pair_loss()) == pytest.approx(math.sqrt(12.0))

    # loading far below one-body losses: R/gamma again
    weak = ModelParams(loading_rate=0.01, one_body_rate=1.0,
                       channels=(LossChannel(2, 2, 500.0),))
    assert predict_steady_mean(weak) == pytest.approx(0.01)

    with pytest.raises(NoClosedFormError):
        predict_steady_mean(pair_loss(R=100.0))  # between the regimes
    with pytest.raises(NoClosedFormError):
        predict_steady_mean(pair_loss(removed=1))
    with pytest.raises(NoClosedFormError):
        predict_steady_mean(ModelParams(loading_rate=1.0, one_body_rate=0.0,
                                        channels=()))


def test_mean_field_outflow_matches_hand_values():
    p = pair_loss()
    # gamma*n + 2 * beta * n(n-1)/2
    assert mean_field_outflow(p, 4.0) == pytest.approx(0.8 + 500.0 * 12.0)
    assert mean_field_outflow(p, 0.5) == pytest.approx(0.1)  # ff clamps below n=1
    p3 = ModelParams(loading_rate=0.0, one_body_rate=0.0,
                     channels=(LossChannel(3, 3, 6.0),))
    assert mean_field_outflow(p3, 5.0) == pytest.approx(3 * 6.0 * 5 * 4 * 3 / 6)


def test_mean_field_mean_is_the_balance_root():
    rng = np.random.default_rng(11)
    for _ in range(40):
        R = float(10.0 ** rng.uniform(-2, 6))
        gamma = float(10.0 ** rng.uniform(-3, 1))
        beta = float(10.0 ** rng.uniform(-1, 3))
        rho = int(rng.integers(1, 4))
        m = int(rng.integers(1, rho + 1))
        p = ModelParams(loading_rate=R, one_body_rate=gamma,
                        channels=(LossChannel(rho, m, beta),))
        n = mean_field_mean(p)
        assert n >= 0
        assert mean_field_outflow(p, n) == pytest.approx(R, rel=1e-9, abs=1e-12)


def test_mean_field_mean_limits():
    assert mean_field_mean(pair_loss(R=0.0)) == 0.0
    p = ModelParams(loading_rate=7.0, one_body_rate=2.0)
    assert mean_field_mean(p) == pytest.approx(3.5)
    with pytest.raises(NoClosedFormError):
        # no loss at all: the balance has no root
        mean_field_mean(ModelParams(loading_rate=1.0, one_body_rate=0.0,
                                    channels=(LossChannel(2, 2, 0.0),)))
