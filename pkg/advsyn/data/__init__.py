"""Image I/O, preprocessing, augmentation, phantom generation and dataset arithmetic"""

from advsyn.data.balance import balance, merge_and_balance, split
from advsyn.data.dataset import (
    LABEL_DIRS,
    NEGATIVE,
    POSITIVE,
    PROVENANCES,
    ImageDataset,
    from_pixels,
    list_dataset_dir,
    load_dataset_dir,
    load_raw_dir,
    save_dataset_dir,
    to_pixels,
)
from advsyn.data.pgm import decode_pgm, encode_pgm, load_image, save_image
from advsyn.data.phantom import PhantomSpec, make_phantom_dataset
from advsyn.data.transforms import AugmentPolicy, augment, preprocess, resize
