import os

import numpy as np
import pytest

from advsyn.data.dataset import (
    MANIFEST,
    ImageDataset,
    from_pixels,
    list_dataset_dir,
    load_dataset_dir,
    load_raw_dir,
    save_dataset_dir,
    to_pixels,
)
from advsyn.data.pgm import save_image
from advsyn.exceptions import DataError


def _pixels_dataset(n_neg, n_pos, size=4, seed=0):
    pixels = np.random.default_rng(seed).integers(0, 256, size=(n_neg + n_pos, size, size))
    return ImageDataset(from_pixels(pixels), [0] * n_neg + [1] * n_pos)


def test_pixel_mapping():
    assert from_pixels(0) == -1.0
    assert from_pixels(255) == 1.0
    assert from_pixels(128) == pytest.approx(0.00392, abs=1e-5)
    np.testing.assert_array_equal(to_pixels(from_pixels(np.arange(256))), np.arange(256))
    np.testing.assert_array_equal(to_pixels([-2.0, 2.0]), [0, 255])


def test_dataset_promotes_and_counts():
    dataset = ImageDataset(np.zeros((3, 4, 5)), [1, 0, 1], name='toy')

    assert dataset.images.shape == (3, 1, 4, 5)
    assert dataset.image_size == (4, 5)
    assert dataset.count(1) == 2
    assert dataset.classes() == [0, 1]
    assert list(dataset.provenance) == ['real'] * 3


@pytest.mark.parametrize('kwargs', [
    {'images': np.full((1, 2, 2), 1.5), 'labels': [0]},
    {'images': np.zeros((1, 2, 2)), 'labels': [2]},
    {'images': np.zeros((2, 2, 2)), 'labels': [0]},
    {'images': np.zeros((1, 2, 2)), 'labels': [0], 'provenance': 'scraped'},
    {'images': np.zeros((1, 3, 2, 2)), 'labels': [0]},
])
def test_dataset_invariants(kwargs):
    with pytest.raises(ValueError):
        ImageDataset(**kwargs)


def test_subset_and_concat():
    first = _pixels_dataset(2, 1)
    second = ImageDataset(np.zeros((2, 4, 4)), [1, 1], 'synthetic')

    merged = ImageDataset.concat([first, None, second])
    assert len(merged) == 5
    assert list(merged.provenance) == ['real'] * 3 + ['synthetic'] * 2
    assert merged.with_label(1).count(1) == 3

    with pytest.raises(DataError):
        ImageDataset.concat([first, ImageDataset(np.zeros((1, 3, 3)), [0])])


def test_empty_dataset_keeps_geometry():
    empty = ImageDataset.empty((4, 4))

    assert len(empty) == 0
    assert empty.image_size == (4, 4)
    assert len(ImageDataset.concat([empty, _pixels_dataset(1, 1)])) == 2


def test_save_and_load_round_trip(tmp_path):
    dataset = ImageDataset.concat([
        _pixels_dataset(3, 0, seed=1),
        ImageDataset(from_pixels(np.full((2, 4, 4), 200)), [1, 1], 'synthetic'),
    ])
    root = str(tmp_path / 'set')

    paths = save_dataset_dir(dataset, root)
    loaded = load_dataset_dir(root)

    assert len(paths) == 5
    assert os.path.exists(os.path.join(root, MANIFEST))
    assert loaded.name == 'set'
    np.testing.assert_array_equal(loaded.images, dataset.images)
    np.testing.assert_array_equal(loaded.labels, dataset.labels)
    assert list(loaded.provenance) == ['real'] * 3 + ['synthetic'] * 2


def test_directory_without_manifest(tmp_path):
    save_image(str(tmp_path / 'yes' / 'b.pgm'), np.full((3, 3), 10))
    save_image(str(tmp_path / 'yes' / 'a.pgm'), np.full((3, 3), 20))
    save_image(str(tmp_path / 'no' / 'c.pgm'), np.full((3, 3), 30))
    (tmp_path / 'yes' / 'notes.txt').write_text('ignored')

    assert list_dataset_dir(str(tmp_path)) == [
        ('no/c.pgm', 0, 'real'),
        ('yes/a.pgm', 1, 'real'),
        ('yes/b.pgm', 1, 'real'),
    ]


def test_mixed_sizes_need_preprocessing(tmp_path):
    save_image(str(tmp_path / 'yes' / 'a.pgm'), np.zeros((3, 3)))
    save_image(str(tmp_path / 'no' / 'b.pgm'), np.zeros((4, 5)))

    matrices, labels, _ = load_raw_dir(str(tmp_path))
    assert [m.shape for m in matrices] == [(4, 5), (3, 3)]
    assert labels == [0, 1]

    with pytest.raises(DataError):
        load_dataset_dir(str(tmp_path))


def test_missing_directory(tmp_path):
    with pytest.raises(DataError):
        load_dataset_dir(str(tmp_path / 'absent'))


def test_manifest_requires_columns(tmp_path):
    (tmp_path / MANIFEST).write_text('filename,label\nyes/a.pgm,1\n')

    with pytest.raises(DataError):
        list_dataset_dir(str(tmp_path))


@pytest.mark.parametrize('row, message', [
    ('yes/a.pgm,2,real', "label must be 0 or 1, got '2'"),
    ('yes/a.pgm,yes,real', "label must be 0 or 1, got 'yes'"),
    ('yes/a.pgm,1,scanned', "unknown provenance 'scanned'"),
])
def test_manifest_rejects_bad_rows(tmp_path, row, message):
    (tmp_path / MANIFEST).write_text('filename,label,provenance\nno/b.pgm,0,real\n{}\n'.format(row))

    with pytest.raises(DataError) as excinfo:
        list_dataset_dir(str(tmp_path))

    assert '{}:3: {}'.format(MANIFEST, message) in str(excinfo.value)
