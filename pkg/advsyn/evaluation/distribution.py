"""Pixel-intensity distributions of real and generated images"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

logger = logging.getLogger(__name__)

DEFAULT_BINS = 50
VALUE_RANGE = (-1.0, 1.0)
MASS_TOLERANCE = 1e-9
LN2 = math.log(2.0)


def _pixels(data):
    images = getattr(data, 'images', data)
    return np.asarray(images, dtype=np.float64).reshape(-1)


def intensity_histogram(data, bins=DEFAULT_BINS, value_range=VALUE_RANGE):
    """Normalized histogram of every pixel in an ImageDataset or image array

    Bins are equal-width over value_range; the last bin includes its right edge.

    Returns:
        numpy.ndarray: bins masses summing to 1

    Raises:
        ValueError: If bins < 2 or no pixel falls inside value_range
    """
    if bins < 2:
        raise ValueError('bins must be at least 2, got {}'.format(bins))

    counts, _ = np.histogram(_pixels(data), bins=bins, range=value_range)
    total = counts.sum()
    if total == 0:
        raise ValueError('no pixels inside {} to histogram'.format(value_range))
    return counts / total


def bin_centers(bins=DEFAULT_BINS, value_range=VALUE_RANGE):
    edges = np.linspace(value_range[0], value_range[1], bins + 1)
    return (edges[:-1] + edges[1:]) / 2.0


def _check_histogram(h, name):
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1:
        raise ValueError('{} must be one-dimensional'.format(name))
    if np.any(h < 0):
        raise ValueError('{} has negative mass'.format(name))
    if abs(h.sum() - 1.0) > MASS_TOLERANCE:
        raise ValueError('{} sums to {!r}, expected 1'.format(name, h.sum()))
    return h


def histogram_divergence(h1, h2):
    """Jensen-Shannon divergence in nats, between 0 and ln 2

    Raises:
        ValueError: Different bin counts, negative mass, or masses not summing to 1 within 1e-9
    """
    p = _check_histogram(h1, 'h1')
    q = _check_histogram(h2, 'h2')
    if p.shape != q.shape:
        raise ValueError('histograms have {} and {} bins'.format(len(p), len(q)))

    m = 0.5 * (p + q)
    value = 0.5 * rel_entr(p, m).sum() + 0.5 * rel_entr(q, m).sum()
    return float(min(max(value, 0.0), LN2))


@dataclass
class DistributionComparison(object):
    """Paired histograms and their divergence

    Attributes:
        divergence (float): Jensen-Shannon divergence
        centers (numpy.ndarray): Bin centers
        real (numpy.ndarray): Real image histogram
        synthetic (numpy.ndarray): Synthetic image histogram
    """

    divergence: float
    centers: np.ndarray
    real: np.ndarray
    synthetic: np.ndarray

    header = ('bin_center', 'real', 'synthetic')

    def rows(self):
        return [
            ('{:.6f}'.format(c), '{:.10f}'.format(r), '{:.10f}'.format(s))
            for c, r, s in zip(self.centers, self.real, self.synthetic)
        ]


def compare_real_synthetic(real, synthetic, bins=DEFAULT_BINS):
    """Compare pixel-intensity distributions of two non-empty image sets

    Raises:
        ValueError: If either set is empty
    """
    if not len(real) or not len(synthetic):
        raise ValueError('both image sets must be non-empty')

    h_real = intensity_histogram(real, bins)
    h_synthetic = intensity_histogram(synthetic, bins)
    divergence = histogram_divergence(h_real, h_synthetic)

    logger.info('Jensen-Shannon divergence over {} bins: {:.6f}'.format(bins, divergence))

    return DistributionComparison(divergence, bin_centers(bins), h_real, h_synthetic)


def sample_diversity(images):
    """Mean over pixels of the per-pixel standard deviation across a batch; near 0 signals mode collapse"""
    images = np.asarray(getattr(images, 'images', images), dtype=np.float64)
    if len(images) < 2:
        return 0.0
    return float(images.std(axis=0).mean())
