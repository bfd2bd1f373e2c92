import numpy as np
import pytest
from softcounter import autodiff as ad
from softcounter.autodiff import Tape
from softcounter.autodiff import Value
from softcounter.exception import InvalidConfigError
from softcounter.exception import TrainingError
from softcounter.optimizer import RAdam
from softcounter.optimizer import RAdamHyper
from softcounter.optimizer import RAdamState
from softcounter.optimizer import radam_step
from softcounter.optimizer import rectification
from softcounter.optimizer import sma_length


@pytest.mark.parametrize(
    "kwargs", [{"lr": 0.0}, {"beta1": 1.0}, {"beta2": -0.1}, {"eps": 0.0}]
)
def test_invalid_hyper(kwargs):
    with pytest.raises(InvalidConfigError):
        RAdamHyper(**kwargs)


def test_rectification_schedule():
    assert sma_length(1, 0.999) == pytest.approx(1.0, abs=1e-6)
    assert rectification(1, 0.999) is None
    assert rectification(4, 0.999) is None
    early = rectification(50, 0.999)
    late = rectification(5000, 0.999)
    assert 0.0 < early < late < 1.0
    assert rectification(10**6, 0.999) == pytest.approx(1.0, abs=1e-3)


def test_first_step_is_plain_momentum():
    weights = Value([1.0, -2.0])
    grads = {"w": np.array([0.5, -4.0])}
    state = radam_step({"w": weights}, grads, RAdamState(), RAdamHyper(lr=0.1))
    assert state.step == 1
    assert not state.last_rectified
    assert np.allclose(weights.data, [1.0 - 0.05, -2.0 + 0.4])


def test_learning_rate_override():
    weights = Value([0.0])
    grads = {"w": np.array([1.0])}
    radam_step({"w": weights}, grads, RAdamState(), RAdamHyper(), lr=0.5)
    assert weights.data[0] == pytest.approx(-0.5)


def test_non_finite_gradient_names_the_parameter():
    params = {"a": Value([0.0]), "b": Value([0.0])}
    grads = {"a": np.array([1.0]), "b": np.array([np.nan])}
    with pytest.raises(TrainingError) as error:
        radam_step(params, grads, RAdamState(), RAdamHyper())
    assert error.value.parameter == "b"
    assert params["a"].data[0] == 0.0


def test_minimises_a_quadratic():
    x = Value([0.0, 10.0])
    optimizer = RAdam({"x": x}, RAdamHyper(lr=0.05))
    for _ in range(3000):
        optimizer.zero_grad()
        with Tape() as tape:
            residual = ad.sub(x, Value([3.0, -1.0]))
            loss = ad.sum_all(ad.mul(residual, residual))
            tape.backward(loss)
        optimizer.step()
    assert optimizer.state.step == 3000
    assert optimizer.state.last_rectified
    assert np.allclose(x.data, [3.0, -1.0], atol=0.1)
