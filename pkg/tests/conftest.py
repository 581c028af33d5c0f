import warnings

import pytest

import hmmposterior as hp
from hmmposterior import io
from hmmposterior.data import fixture_path


@pytest.fixture(scope="session")
def earthquake_model():
    return hp.validate_model(io.read_model(fixture_path("earthquakes", "model")))


@pytest.fixture(scope="session")
def earthquake_counts():
    return io.read_counts(fixture_path("earthquakes", "obs"))


@pytest.fixture(scope="session")
def lamb_model():
    raw = io.read_model(fixture_path("fetal-lamb", "model"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", hp.RenormalizationWarning)
        return hp.validate_model(raw, tolerance=1e-2, renormalize=True)


@pytest.fixture(scope="session")
def lamb_counts():
    return io.read_counts(fixture_path("fetal-lamb", "obs"))


@pytest.fixture(scope="session")
def lamb_tables(lamb_model, lamb_counts):
    return hp.forward_backward(lamb_model, lamb_counts)


@pytest.fixture(scope="session")
def lamb_chain(lamb_model, lamb_tables):
    return hp.build_posterior_chain(lamb_model, lamb_tables)
