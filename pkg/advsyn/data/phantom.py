"""Procedural brain-scan stand-ins for desk-scale runs

Each phantom is a dark, slightly noisy background holding a centered ellipse ("brain") whose
intensity falls off from the centre to the rim with a faint sinusoidal texture. Positive phantoms
add one bright disc ("tumor") centered inside the ellipse.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from advsyn.core.rng import Rng
from advsyn.data.dataset import ImageDataset
from advsyn.exceptions import ConfigValidationError
from advsyn.utils.validators import (
    validate_fraction,
    validate_non_negative_float,
    validate_non_negative_int,
    validate_positive_int,
)

logger = logging.getLogger(__name__)


@dataclass
class PhantomSpec(object):
    """Geometry and intensity ranges of generated phantoms, in [0, 1] before normalization

    Attributes:
        image_size (int): Square image side
        brain_intensity (tuple(float, float)): Rim and centre intensity of the ellipse
        tumor_radius (tuple(float, float)): Disc radius range as fractions of image_size
        tumor_intensity (tuple(float, float)): Disc intensity range
        noise_std (float): Standard deviation of additive Gaussian noise
        brain_axes (float): Ellipse semi-axis as a fraction of image_size
        axis_jitter (float): Relative jitter applied to each semi-axis
        texture_amplitude (float): Amplitude of the sinusoidal texture inside the ellipse
        seed (int): Seed of the ``phantom`` stream
    """

    image_size: int = 32
    brain_intensity: tuple = (0.2, 0.6)
    tumor_radius: tuple = (0.06, 0.15)
    tumor_intensity: tuple = (0.85, 1.0)
    noise_std: float = 0.02
    brain_axes: float = 0.35
    axis_jitter: float = 0.02
    texture_amplitude: float = 0.03
    seed: int = field(default=0)

    def validate(self):
        validate_positive_int(self.image_size, 'phantom.image_size')
        if self.image_size < 8:
            raise ConfigValidationError('phantom.image_size', self.image_size, 'must be >= 8')

        for key in ('brain_intensity', 'tumor_radius', 'tumor_intensity'):
            value = tuple(getattr(self, key))
            if len(value) != 2:
                raise ConfigValidationError('phantom.' + key, value, 'must be a (low, high) pair')
            validate_fraction(value[0], 'phantom.{}[0]'.format(key))
            validate_fraction(value[1], 'phantom.{}[1]'.format(key))
            if value[0] > value[1]:
                raise ConfigValidationError('phantom.' + key, value, 'low must not exceed high')
            setattr(self, key, value)

        validate_non_negative_float(self.noise_std, 'phantom.noise_std')
        validate_fraction(self.brain_axes, 'phantom.brain_axes', low_open=True, high_open=True)
        if self.brain_axes > 0.5:
            raise ConfigValidationError('phantom.brain_axes', self.brain_axes, 'must be <= 0.5')
        validate_fraction(self.axis_jitter, 'phantom.axis_jitter', high_open=True)
        validate_non_negative_float(self.texture_amplitude, 'phantom.texture_amplitude')
        validate_non_negative_int(self.seed, 'phantom.seed')
        return self


def _brain(spec, rng, rows, cols):
    """Return (intensity map, semi-axes, centre) of one ellipse"""
    size = spec.image_size
    center = (size - 1) / 2.0
    semi = spec.brain_axes * size * (1.0 + rng.uniform(-spec.axis_jitter, spec.axis_jitter, 2))

    radius = np.sqrt(((rows - center) / semi[0]) ** 2 + ((cols - center) / semi[1]) ** 2)
    rim, core = spec.brain_intensity
    intensity = core - (core - rim) * radius

    if spec.texture_amplitude > 0:
        frequency = rng.integers(2, 5, 2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        angle = 2.0 * np.pi * (frequency[0] * rows + frequency[1] * cols) / size + phase
        intensity = intensity + spec.texture_amplitude * np.sin(angle)

    brain = np.where(radius <= 1.0, np.clip(intensity, rim, core), 0.0)
    return brain, semi, center


def _tumor_center(spec, rng, semi, center):
    while True:
        offset = rng.uniform(-1.0, 1.0, 2)
        if offset[0] ** 2 + offset[1] ** 2 <= 1.0:
            return center + offset * semi


def make_phantom(spec, rng, positive):
    """Draw one (size, size) phantom in [0, 1]"""
    size = spec.image_size
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)

    image, semi, center = _brain(spec, rng, rows, cols)

    if positive:
        radius = rng.uniform(*spec.tumor_radius) * size
        intensity = rng.uniform(*spec.tumor_intensity)
        tumor_row, tumor_col = _tumor_center(spec, rng, semi, center)
        disc = (rows - tumor_row) ** 2 + (cols - tumor_col) ** 2 <= radius ** 2
        image[disc] = intensity

    image = image + rng.normal(image.shape, 0.0, spec.noise_std)
    return np.clip(image, 0.0, 1.0)


def make_phantom_dataset(spec, n_pos, n_neg, rng=None, name='phantom'):
    """Generate n_pos tumor and n_neg tumor-free phantoms normalized to [-1, 1]

    Positives come first. Identical specs and seeds give identical datasets.

    Args:
        spec (PhantomSpec): Geometry and intensity ranges
        n_pos (int): Number of positive images
        n_neg (int): Number of negative images
        rng (advsyn.core.rng.Rng): Source of draws, defaults to the ``phantom`` stream of spec.seed
        name (str): Dataset name

    Returns:
        ImageDataset: Provenance ``real``
    """
    spec.validate()
    validate_non_negative_int(n_pos, 'n_pos')
    validate_non_negative_int(n_neg, 'n_neg')

    rng = rng or Rng(spec.seed, 'phantom')
    size = spec.image_size

    images = np.empty((n_pos + n_neg, 1, size, size))
    for index in range(n_pos + n_neg):
        images[index, 0] = make_phantom(spec, rng, positive=index < n_pos) * 2.0 - 1.0

    dataset = ImageDataset(images, [1] * n_pos + [0] * n_neg, 'real', name)
    logger.info('Generated {!r}'.format(dataset))

    return dataset
