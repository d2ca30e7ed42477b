import numpy as np
import pytest

from advsyn.classifier import ClassifierConfig
from advsyn.core.rng import Rng
from advsyn.data.phantom import PhantomSpec, make_phantom_dataset
from advsyn.dcgan import GanConfig


@pytest.fixture
def rng():
    """Fresh root-stream generator with a fixed seed"""
    return Rng(1234)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def phantom_spec():
    return PhantomSpec(image_size=16, seed=3)


@pytest.fixture
def phantoms(phantom_spec):
    """Small balanced phantom dataset, positives first"""
    return make_phantom_dataset(phantom_spec, 6, 6)


@pytest.fixture
def tiny_gan_config():
    """Smallest supported GAN, a handful of steps"""
    return GanConfig(
        z_dim=8,
        image_size=32,
        epochs=2,
        steps_per_epoch=3,
        batch_size=2,
        sample_every=2,
        base_channels=8,
        disc_channels=2,
        probe_count=4,
        seed=11,
    )


@pytest.fixture
def tiny_clf_config():
    """One narrow block over 16x16 inputs"""
    return ClassifierConfig(
        image_size=16,
        blocks=[[1, 4]],
        dense_units=8,
        max_epochs=3,
        batch_size=4,
        seed=5,
    )
