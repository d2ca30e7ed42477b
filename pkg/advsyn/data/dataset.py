"""Labeled grayscale image collections and their on-disk layout

On disk a dataset is a directory with ``yes/`` (tumor) and ``no/`` (no tumor) subdirectories of
8-bit PGM files plus an optional ``manifest.csv`` with columns ``filename, label, provenance``
(filenames relative to the root). Without a manifest every image is labeled by its
subdirectory and marked ``real``.
"""

import csv
import logging
import os

import numpy as np

from advsyn.data.pgm import load_image, save_image
from advsyn.exceptions import DataError

logger = logging.getLogger(__name__)

NEGATIVE = 0
POSITIVE = 1
LABELS = (NEGATIVE, POSITIVE)
LABEL_DIRS = {NEGATIVE: 'no', POSITIVE: 'yes'}
PROVENANCES = ('real', 'synthetic', 'augmented')
MANIFEST = 'manifest.csv'
MANIFEST_COLUMNS = ('filename', 'label', 'provenance')


class ImageDataset(object):
    """Grayscale images in [-1, 1] with binary labels and per-image provenance

    Args:
        images (numpy.ndarray): Array of shape (N, 1, H, W); (N, H, W) is promoted
        labels (array-like): N labels in {0, 1}
        provenance (str|list(str)): One of :data:`PROVENANCES` for all images, or one per image
        name (str): Human-readable dataset name

    Raises:
        ValueError: If any invariant (shared size, pixel range, label values, aligned lengths) fails
    """

    def __init__(self, images, labels, provenance='real', name='dataset'):
        images = np.asarray(images, dtype=np.float64)
        if images.ndim == 3:
            images = images[:, None, :, :]
        if images.ndim != 4 or images.shape[1] != 1:
            raise ValueError('images must have shape (N, 1, H, W), got {}'.format(images.shape))

        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if isinstance(provenance, str):
            provenance = [provenance] * len(labels)
        provenance = np.asarray(provenance, dtype=object).reshape(-1)

        if not (len(images) == len(labels) == len(provenance)):
            raise ValueError('{} images, {} labels and {} provenance flags do not align'.format(
                len(images),
                len(labels),
                len(provenance)
            ))
        if len(images) and (images.min() < -1.0 or images.max() > 1.0 or not np.all(np.isfinite(images))):
            raise ValueError('pixels must lie in [-1, 1]')
        if not np.all(np.isin(labels, LABELS)):
            raise ValueError('labels must be 0 or 1')
        unknown = set(provenance) - set(PROVENANCES)
        if unknown:
            raise ValueError('unknown provenance {}'.format(sorted(unknown)))

        self.images = images
        self.labels = labels
        self.provenance = provenance
        self.name = name

    def __repr__(self):
        return '<{}: {} n={} pos={} neg={} size={}>'.format(
            self.__class__.__name__,
            self.name,
            len(self),
            self.count(POSITIVE),
            self.count(NEGATIVE),
            self.image_size
        )

    def __len__(self):
        return len(self.labels)

    @property
    def image_size(self):
        """(H, W), or None for an empty dataset without stored geometry"""
        return tuple(self.images.shape[2:]) if self.images.size or self.images.shape[2:] else None

    def count(self, label):
        return int(np.sum(self.labels == label))

    def classes(self):
        return sorted(set(int(v) for v in self.labels))

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=np.int64)
        return ImageDataset(
            self.images[indices],
            self.labels[indices],
            self.provenance[indices],
            name or self.name
        )

    def with_label(self, label, name=None):
        return self.subset(np.flatnonzero(self.labels == label), name)

    def shuffled(self, rng, name=None):
        return self.subset(rng.permutation(len(self)), name)

    @classmethod
    def empty(cls, image_size, name='empty'):
        height, width = image_size
        return cls(np.zeros((0, 1, height, width)), [], [], name)

    @classmethod
    def concat(cls, datasets, name='merged'):
        """Concatenate datasets that share an image size

        Raises:
            DataError: If the image sizes differ
        """
        datasets = [d for d in datasets if d is not None]
        sizes = set(d.images.shape[2:] for d in datasets)
        if len(sizes) > 1:
            raise DataError('cannot merge datasets of image sizes {}'.format(sorted(sizes)))

        return cls(
            np.concatenate([d.images for d in datasets]),
            np.concatenate([d.labels for d in datasets]),
            np.concatenate([d.provenance for d in datasets]),
            name
        )


def to_pixels(images):
    """Map [-1, 1] values to the nearest 8-bit level of p / 127.5 - 1"""
    return np.clip(np.rint((np.asarray(images) + 1.0) * 127.5), 0, 255).astype(np.uint8)


def from_pixels(pixels):
    """p / 127.5 - 1"""
    return np.asarray(pixels, dtype=np.float64) / 127.5 - 1.0


def _read_manifest(root):
    path = os.path.join(root, MANIFEST)
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise DataError('{}: missing columns {}'.format(path, ', '.join(sorted(missing))))
        entries = []
        for line, row in enumerate(reader, 2):
            if row['label'] not in ('0', '1'):
                raise DataError('{}:{}: label must be 0 or 1, got {!r}'.format(path, line, row['label']))
            if row['provenance'] not in PROVENANCES:
                raise DataError('{}:{}: unknown provenance {!r}'.format(path, line, row['provenance']))
            entries.append((row['filename'], int(row['label']), row['provenance']))
    return sorted(entries, key=lambda entry: entry[0])


def _scan_label_dirs(root):
    entries = []
    for label, subdir in sorted(LABEL_DIRS.items()):
        directory = os.path.join(root, subdir)
        if not os.path.isdir(directory):
            continue
        for filename in os.listdir(directory):
            if filename.lower().endswith('.pgm'):
                entries.append(('{}/{}'.format(subdir, filename), label, 'real'))
    return sorted(entries, key=lambda entry: entry[0])


def list_dataset_dir(root):
    """Return sorted (relative filename, label, provenance) entries of a dataset directory

    Raises:
        DataError: If root is not a directory
    """
    if not os.path.isdir(root):
        raise DataError('{}: dataset directory does not exist'.format(root))

    if os.path.exists(os.path.join(root, MANIFEST)):
        return _read_manifest(root)
    return _scan_label_dirs(root)


def load_raw_dir(root):
    """Load a dataset directory without normalization

    Returns:
        tuple: (list of uint8 matrices, labels, provenance), ordered by filename
    """
    entries = list_dataset_dir(root)
    matrices = [load_image(os.path.join(root, filename)) for filename, _, _ in entries]
    return matrices, [e[1] for e in entries], [e[2] for e in entries]


def load_dataset_dir(root, name=None):
    """Load a dataset directory whose images already share one size

    Raises:
        DataError: Missing directory, unreadable image, or mixed image sizes
    """
    matrices, labels, provenance = load_raw_dir(root)
    name = name or os.path.basename(os.path.normpath(root))

    sizes = set(m.shape for m in matrices)
    if len(sizes) > 1:
        raise DataError('{}: images have mixed sizes {}, run preprocess first'.format(root, sorted(sizes)))
    if not matrices:
        raise DataError('{}: no images found'.format(root))

    dataset = ImageDataset(from_pixels(np.stack(matrices)), labels, provenance, name)
    logger.info('Loaded {!r} from {}'.format(dataset, root))
    return dataset


def save_dataset_dir(dataset, root, prefix='img'):
    """Write dataset as yes/no PGM trees plus manifest.csv, quantizing to 8 bits

    Returns:
        list(str): Written image paths
    """
    rows = []
    paths = []
    for index in range(len(dataset)):
        label = int(dataset.labels[index])
        filename = '{}/{}_{:05d}.pgm'.format(LABEL_DIRS[label], prefix, index)
        path = os.path.join(root, filename)
        save_image(path, to_pixels(dataset.images[index, 0]))
        rows.append((filename, label, dataset.provenance[index]))
        paths.append(path)

    try:
        os.makedirs(root, exist_ok=True)
        with open(os.path.join(root, MANIFEST), 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(MANIFEST_COLUMNS)
            writer.writerows(rows)
    except OSError as error:
        raise DataError('{}: {}'.format(root, error))

    logger.info('Wrote {} images and {} to {}'.format(len(rows), MANIFEST, root))
    return paths
