import numpy as np
import pytest
from softcounter import autodiff as ad
from softcounter.autodiff import Value
from softcounter.exception import ContractError
from softcounter.gradcheck import grad_check


def test_correct_gradient_passes():
    x = Value([0.5, -1.5, 2.0])

    def loss():
        return ad.sum_all(ad.mul(x, x))

    assert grad_check(loss, [x]) < 1e-8


def test_wrong_gradient_is_detected():
    x = Value([1.0, 2.0])

    def loss():
        square = ad.record(x.data**2, (x,), lambda grad: (grad * x.data,))
        return ad.sum_all(square)

    assert grad_check(loss, [x]) == pytest.approx(0.5, rel=1e-6)


def test_sample_mode_checks_a_subset():
    rng = np.random.default_rng(0)
    w = Value(rng.normal(size=(20, 10)))

    def loss():
        return ad.mean(ad.tanh(w))

    assert grad_check(loss, [w], mode="sample", samples=8, seed=3) < 1e-6


def test_parameters_are_restored():
    x = Value([0.25, 0.75])
    grad_check(lambda: ad.sum_all(ad.sigmoid(x)), [x])
    assert x.data.tolist() == [0.25, 0.75]


@pytest.mark.parametrize("kwargs", [{"step": 0.0}, {"mode": "random"}])
def test_invalid_arguments(kwargs):
    x = Value([1.0])
    with pytest.raises(ContractError):
        grad_check(lambda: ad.sum_all(x), [x], **kwargs)
