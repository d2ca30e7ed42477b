"""Class balancing and stratified splitting"""

import logging
import math

import numpy as np

from advsyn.data.dataset import LABELS, NEGATIVE, POSITIVE, ImageDataset
from advsyn.data.transforms import augment

logger = logging.getLogger(__name__)


def balance(dataset, rng, policy=None, name=None):
    """Top up the minority class with augmented copies until both classes are equally large

    Draws the augmentation first, then one permutation of the result.

    Args:
        dataset (ImageDataset): Source images
        rng (advsyn.core.rng.Rng): Normally the ``augmentation`` stream
        policy (advsyn.data.transforms.AugmentPolicy): Augmentation ranges

    Returns:
        ImageDataset: Shuffled dataset with equal class counts

    Raises:
        ValueError: If the minority class is empty while the majority is not
    """
    name = name or dataset.name
    positives = dataset.with_label(POSITIVE)
    negatives = dataset.with_label(NEGATIVE)

    deficit = len(positives) - len(negatives)
    if deficit > 0:
        extra = augment(negatives, deficit, rng, policy)
    else:
        extra = augment(positives, -deficit, rng, policy)

    merged = ImageDataset.concat([dataset, extra], name)
    logger.info('Balanced {} with {} augmented {} images'.format(
        name,
        len(extra),
        'negative' if deficit > 0 else 'positive'
    ))

    return merged.shuffled(rng, name)


def merge_and_balance(real, synthetic_pos, rng, policy=None, name='merged'):
    """Merge real images with synthetic positives, then balance the classes by augmentation

    Args:
        real (ImageDataset): Real images of both classes
        synthetic_pos (ImageDataset): Generated tumor images, may be empty or None
        rng (advsyn.core.rng.Rng): Normally the ``augmentation`` stream
        policy (advsyn.data.transforms.AugmentPolicy): Augmentation ranges

    Returns:
        ImageDataset: Shuffled merge with exactly equal class counts

    Raises:
        advsyn.exceptions.DataError: If the image sizes differ
        ValueError: If synthetic_pos holds negatives
    """
    if synthetic_pos is not None and synthetic_pos.count(NEGATIVE):
        raise ValueError('synthetic images must all be positive')

    merged = ImageDataset.concat([real, synthetic_pos], name)
    return balance(merged, rng, policy, name)


def _train_count(n, train_fraction):
    # Round to 9 places first so 1900 * 0.8 is 1520, not ceil(1520.0000000000002)
    return min(n, int(math.ceil(round(n * train_fraction, 9))))


def split(dataset, train_fraction=0.8, rng=None, stratified=True, names=('train', 'test')):
    """Partition a dataset into train and test subsets

    Each class (or the whole dataset when not stratified) is permuted with rng and its first
    ``ceil(n * train_fraction)`` images go to train. Both halves keep the input order.

    Args:
        dataset (ImageDataset): Images to split
        train_fraction (float): Share of each class assigned to train, in [0, 1]
        rng (advsyn.core.rng.Rng): Normally the ``split`` stream
        stratified (bool): Split every class separately

    Returns:
        tuple(ImageDataset, ImageDataset): (train, test)

    Raises:
        ValueError: If train_fraction is outside [0, 1], or a stratified split misses a class
    """
    if not 0.0 <= train_fraction <= 1.0:
        raise ValueError('train_fraction must be in [0, 1], got {}'.format(train_fraction))
    if rng is None:
        raise ValueError('split requires an rng')

    if stratified:
        missing = [label for label in LABELS if not dataset.count(label)]
        if missing:
            raise ValueError('{}: stratified split needs both classes, missing {}'.format(dataset.name, missing))
        groups = [np.flatnonzero(dataset.labels == label) for label in LABELS]
    else:
        groups = [np.arange(len(dataset))]

    train_indices = []
    test_indices = []
    for group in groups:
        shuffled = group[rng.permutation(len(group))]
        count = _train_count(len(group), train_fraction)
        train_indices.append(shuffled[:count])
        test_indices.append(shuffled[count:])

    train = dataset.subset(np.sort(np.concatenate(train_indices)), names[0])
    test = dataset.subset(np.sort(np.concatenate(test_indices)), names[1])

    logger.info('Split {} into {!r} and {!r}'.format(dataset.name, train, test))

    return train, test
