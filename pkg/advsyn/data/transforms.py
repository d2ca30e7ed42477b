"""Resizing, normalization and random augmentation of grayscale images"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from advsyn.data.dataset import ImageDataset, from_pixels
from advsyn.exceptions import DataError
from advsyn.utils.validators import validate_fraction, validate_non_negative_float

logger = logging.getLogger(__name__)

#: Pixel value used to fill borders exposed by rotation or zoom
FILL_VALUE = -1.0


def _as_size(target_size):
    if isinstance(target_size, (int, np.integer)):
        return int(target_size), int(target_size)
    height, width = target_size
    return int(height), int(width)


def resize(matrix, target_size):
    """Bilinear resize with corner-aligned sampling

    Output pixel ``(i, j)`` samples the input at ``(i * (H - 1) / (h - 1), j * (W - 1) / (w - 1))``
    so both corners map onto the input corners; constant images stay constant.

    Args:
        matrix (numpy.ndarray): (H, W) values
        target_size (int|tuple(int, int)): Output size (h, w), or one int for a square

    Returns:
        numpy.ndarray: (h, w) float64 matrix
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    height, width = _as_size(target_size)
    if matrix.ndim != 2 or 0 in matrix.shape:
        raise DataError('cannot resize zero-dimension image of shape {}'.format(matrix.shape))
    if height < 1 or width < 1:
        raise ValueError('target size must be positive, got {}x{}'.format(height, width))

    if matrix.shape == (height, width):
        return matrix.copy()

    factors = (height / matrix.shape[0], width / matrix.shape[1])
    return ndimage.zoom(matrix, factors, order=1, mode='nearest', grid_mode=False)


def stretch_contrast(matrix):
    """Linearly map an image's [min, max] onto [0, 255]; flat images are returned unchanged"""
    matrix = np.asarray(matrix, dtype=np.float64)
    low, high = matrix.min(), matrix.max()
    if high <= low:
        return matrix.copy()
    return (matrix - low) * (255.0 / (high - low))


def preprocess(raws, target_size, labels=None, provenance='real', contrast_stretch=False, name='preprocessed'):
    """Resize raw 8-bit matrices and normalize them to [-1, 1]

    Args:
        raws (list(numpy.ndarray)): (H, W) matrices with values in [0, 255]; sizes may differ
        target_size (int|tuple(int, int)): Output image size
        labels (list(int)): Label per matrix; all negative when omitted
        provenance (str|list(str)): Provenance flag(s) of the result
        contrast_stretch (bool): Stretch each image to the full [0, 255] range before resizing
        name (str): Result dataset name

    Returns:
        ImageDataset: Images normalized with ``p / 127.5 - 1``

    Raises:
        ValueError: If raws is empty
        DataError: If any image has a zero dimension
    """
    if not len(raws):
        raise ValueError('preprocess requires at least one image')

    labels = [0] * len(raws) if labels is None else labels
    images = []
    for raw in raws:
        matrix = np.asarray(raw, dtype=np.float64)
        if matrix.ndim != 2 or 0 in matrix.shape:
            raise DataError('zero-dimension image of shape {}'.format(matrix.shape))
        if contrast_stretch:
            matrix = stretch_contrast(matrix)
        images.append(np.clip(from_pixels(resize(matrix, target_size)), -1.0, 1.0))

    dataset = ImageDataset(np.stack(images), labels, provenance, name)
    logger.debug('Preprocessed {!r}'.format(dataset))
    return dataset


@dataclass
class AugmentPolicy(object):
    """Ranges of the random transforms applied by :func:`augment`

    The defaults flip half of the images horizontally, rotate by up to 15 degrees either way and
    shift brightness by up to 0.1. Stretch and contrast jitter are disabled unless set.

    Attributes:
        flip_probability (float): Chance of a horizontal flip
        max_rotation (float): Rotation drawn uniformly from [-max_rotation, max_rotation] degrees
        max_brightness (float): Additive shift drawn uniformly from [-max_brightness, max_brightness]
        max_stretch (float): Zoom about the centre by a factor in [1 - s, 1 + s]; 0 disables
        max_contrast (float): Scale deviations from the image mean by [1 - c, 1 + c]; 0 disables
    """

    flip_probability: float = 0.5
    max_rotation: float = 15.0
    max_brightness: float = 0.1
    max_stretch: float = 0.0
    max_contrast: float = 0.0

    def validate(self):
        validate_fraction(self.flip_probability, 'augment.flip_probability')
        validate_non_negative_float(self.max_rotation, 'augment.max_rotation')
        validate_non_negative_float(self.max_brightness, 'augment.max_brightness')
        validate_fraction(self.max_stretch, 'augment.max_stretch', high_open=True)
        validate_fraction(self.max_contrast, 'augment.max_contrast', high_open=True)
        return self


def _stretch(image, factor):
    """Zoom a (H, W) image about its centre, keeping the size"""
    center = (np.array(image.shape, dtype=np.float64) - 1.0) / 2.0
    inverse = 1.0 / factor
    offset = center - inverse * center
    return ndimage.affine_transform(
        image,
        np.array([inverse, inverse]),
        offset=offset,
        order=1,
        mode='constant',
        cval=FILL_VALUE
    )


def augment_image(image, rng, policy):
    """Apply one random draw of policy to a (H, W) image in [-1, 1]

    Draws, in order: flip, rotation angle, brightness shift, then stretch and contrast factors when
    enabled.
    """
    out = np.array(image, dtype=np.float64)

    if rng.random() < policy.flip_probability:
        out = out[:, ::-1]

    angle = rng.uniform(-policy.max_rotation, policy.max_rotation)
    if angle != 0.0:
        out = ndimage.rotate(out, angle, reshape=False, order=1, mode='constant', cval=FILL_VALUE)

    shift = rng.uniform(-policy.max_brightness, policy.max_brightness)

    if policy.max_stretch > 0:
        out = _stretch(out, rng.uniform(1.0 - policy.max_stretch, 1.0 + policy.max_stretch))

    if policy.max_contrast > 0:
        factor = rng.uniform(1.0 - policy.max_contrast, 1.0 + policy.max_contrast)
        mean = out.mean()
        out = (out - mean) * factor + mean

    return np.clip(out + shift, -1.0, 1.0)


def augment(dataset, n_new, rng, policy=None, name=None):
    """Create n_new randomly transformed copies of images drawn uniformly from dataset

    Args:
        dataset (ImageDataset): Non-empty source images
        n_new (int): Number of copies to produce
        rng (advsyn.core.rng.Rng): Normally the ``augmentation`` stream
        policy (AugmentPolicy): Transform ranges, defaults to :class:`AugmentPolicy()`
        name (str): Result dataset name

    Returns:
        ImageDataset: Copies labeled like their sources, provenance ``augmented``

    Raises:
        ValueError: If n_new is negative, or the source is empty while copies are requested
    """
    if n_new < 0:
        raise ValueError('n_new must be non-negative, got {}'.format(n_new))

    policy = (policy or AugmentPolicy()).validate()
    height, width = dataset.images.shape[2:]
    name = name or '{}-augmented'.format(dataset.name)

    if n_new == 0:
        return ImageDataset.empty((height, width), name)
    if not len(dataset):
        raise ValueError('cannot augment an empty dataset')

    images = np.empty((n_new, 1, height, width))
    labels = np.empty(n_new, dtype=np.int64)

    for index in range(n_new):
        source = int(rng.integers(0, len(dataset)))
        images[index, 0] = augment_image(dataset.images[source, 0], rng, policy)
        labels[index] = dataset.labels[source]

    logger.debug('Augmented {} images from {!r}'.format(n_new, dataset))

    return ImageDataset(images, labels, 'augmented', name)
