import csv
import hashlib
import json
import os

import pytest

from advsyn.cli import EXIT_OK, main
from advsyn.core.rng import Rng
from advsyn.data.phantom import PhantomSpec, make_phantom_dataset
from advsyn.dcgan import GanConfig, train_gan


def pytest_addoption(parser):
    parser.addoption("--seed", action="store", default=None, help="Run seed, by default: 0")
    parser.addini("seed", help="Run seed, by default: 0")


def run_seed(pytestconfig):
    ini_option = pytestconfig.getini('seed')
    if len(ini_option) > 0:
        return int(ini_option)
    return int(pytestconfig.getoption("--seed") or 0)


class Helpers:
    """Runs pipeline commands below one scratch directory and reads their outputs back"""

    def __init__(self, pytestconfig, root):
        self.seed = run_seed(pytestconfig)
        self.root = str(root)

    def path(self, *parts):
        return os.path.join(self.root, *parts)

    def write_config(self, name, data):
        path = self.path(name)
        with open(path, 'w') as f:
            json.dump(dict(data, seed=self.seed), f)
        return path

    def run(self, *argv):
        argv = [str(arg) for arg in argv]
        code = main(argv)
        assert code == EXIT_OK, 'advsyn {} exited with {}'.format(' '.join(argv), code)

    def accuracy(self, out_dir):
        with open(os.path.join(out_dir, 'report.csv'), newline='') as f:
            for row in csv.reader(f):
                if row[0] == 'accuracy':
                    return float(row[3])
        raise AssertionError('{} has no accuracy row'.format(out_dir))

    def digests(self, directory):
        """SHA-256 of every file below directory, keyed by relative path"""
        result = {}
        for base, _, files in os.walk(directory):
            for name in files:
                path = os.path.join(base, name)
                with open(path, 'rb') as f:
                    result[os.path.relpath(path, directory)] = hashlib.sha256(f.read()).hexdigest()
        return result


@pytest.fixture(scope='session')
def helpers(pytestconfig, tmp_path_factory):
    return Helpers(pytestconfig, tmp_path_factory.mktemp('acceptance'))


@pytest.fixture(scope='session')
def desk_gan_config(helpers):
    return GanConfig(
        z_dim=64,
        image_size=32,
        epochs=4,
        steps_per_epoch=500,
        batch_size=16,
        sample_every=500,
        base_channels=64,
        disc_channels=16,
        seed=helpers.seed,
    )


@pytest.fixture(scope='session')
def phantom_positives(helpers):
    return make_phantom_dataset(PhantomSpec(image_size=32, seed=helpers.seed), 500, 0, name='positives')


@pytest.fixture(scope='session')
def trained_gan(phantom_positives, desk_gan_config):
    return train_gan(phantom_positives, desk_gan_config)


@pytest.fixture(scope='session')
def uniform_noise_images(helpers):
    return Rng(helpers.seed, 'augmentation').uniform(-1.0, 1.0, (256, 1, 32, 32))
