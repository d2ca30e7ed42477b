"""Run configuration

A run is described by one JSON document whose keys mirror :class:`RunConfig`; nested ``gan``,
``classifier``, ``augment`` and ``phantom`` objects mirror their dataclasses. Every key is
optional and falls back to the documented default. Unknown keys are rejected.

Example::

    {
        "seed": 7,
        "data_root": "data/phantom",
        "out_dir": "runs/desk",
        "synth_count": 400,
        "gan": {"image_size": 32, "z_dim": 64, "epochs": 4, "steps_per_epoch": 500, "batch_size": 16},
        "classifier": {"image_size": 32, "max_epochs": 30}
    }
"""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field

from advsyn.classifier import ClassifierConfig
from advsyn.data.phantom import PhantomSpec
from advsyn.data.transforms import AugmentPolicy
from advsyn.dcgan import GanConfig
from advsyn.exceptions import ConfigValidationError, DataError
from advsyn.utils import dataclass_from_dict
from advsyn.utils.validators import validate_choice, validate_fraction, validate_non_negative_int

logger = logging.getLogger(__name__)

BALANCE_TARGETS = ('majority',)
_SEED_LIMIT = (1 << 64) - 1

_NESTED = {
    'gan': GanConfig,
    'classifier': ClassifierConfig,
    'augment': AugmentPolicy,
    'phantom': PhantomSpec,
}


@dataclass
class RunConfig(object):
    """Every setting of one pipeline run

    Attributes:
        seed (int): Unsigned 64-bit seed copied into every nested config
        data_root (str): Real dataset directory
        out_dir (str): Directory receiving every artifact
        synth_dir (str): Synthetic dataset directory for train-clf, or None
        gan (GanConfig): Adversarial training settings
        classifier (ClassifierConfig): Classifier settings
        augment (AugmentPolicy): Augmentation ranges used for balancing
        phantom (PhantomSpec): Phantom generator settings
        augment_before_split (bool): Balance the merged set before splitting (leaks augmented
            near-duplicates into the test set); the default balances the training split only
        synth_count (int): Synthetic positives merged into the classifier data
        train_fraction (float): Per-class share of the train split
        balance_target (str): Class count the minority is augmented up to
    """

    seed: int = 0
    data_root: str = 'data'
    out_dir: str = 'out'
    synth_dir: str = None
    gan: GanConfig = field(default_factory=GanConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    augment: AugmentPolicy = field(default_factory=AugmentPolicy)
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    augment_before_split: bool = False
    synth_count: int = 400
    train_fraction: float = 0.8
    balance_target: str = 'majority'

    def __post_init__(self):
        self.apply_seed(self.seed)

    def apply_seed(self, seed):
        """Set the run seed and propagate it to every nested config"""
        self.seed = seed
        for name in ('gan', 'classifier', 'phantom'):
            getattr(self, name).seed = seed
        return self

    def validate(self, require_data=False):
        """Check every field, raising ConfigValidationError on the first out-of-range value

        Args:
            require_data (bool): Also require data_root to be an existing directory
        """
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= _SEED_LIMIT:
            raise ConfigValidationError('seed', self.seed, 'must be an unsigned 64-bit integer')
        for name in ('data_root', 'out_dir'):
            if not isinstance(getattr(self, name), str) or not getattr(self, name):
                raise ConfigValidationError(name, getattr(self, name), 'must be a non-empty path')
        if require_data and not os.path.isdir(self.data_root):
            raise ConfigValidationError('data_root', self.data_root, 'is not a directory')
        if self.synth_dir is not None and not isinstance(self.synth_dir, str):
            raise ConfigValidationError('synth_dir', self.synth_dir, 'must be a path or null')

        for name in _NESTED:
            getattr(self, name).validate()

        validate_choice(self.augment_before_split, 'augment_before_split', (True, False))
        validate_non_negative_int(self.synth_count, 'synth_count')
        validate_fraction(self.train_fraction, 'train_fraction', low_open=True)
        validate_choice(self.balance_target, 'balance_target', BALANCE_TARGETS)

        if self.augment_before_split:
            logger.warning('augment_before_split puts augmented copies of test images into training')
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n'

    @classmethod
    def from_dict(cls, raw):
        """Build from a mapping, nested sections given as mappings

        Raises:
            UnknownParameter: For keys that are not settings, suggesting similar names
            ConfigValidationError: If a section is not a mapping
        """
        raw = dict(raw)
        for name, section in _NESTED.items():
            if name in raw:
                if not isinstance(raw[name], dict):
                    raise ConfigValidationError(name, raw[name], 'must be an object')
                raw[name] = dataclass_from_dict(section, raw[name], name)

        seed = raw.pop('seed', 0)
        config = dataclass_from_dict(cls, raw, 'run')
        return config.apply_seed(seed)

    @classmethod
    def from_file(cls, path):
        """Read a JSON config file

        Raises:
            DataError: If the file cannot be read
            ConfigValidationError: If it is not a JSON object
        """
        try:
            with open(path) as f:
                raw = json.load(f)
        except OSError as error:
            raise DataError('{}: {}'.format(path, error))
        except ValueError as error:
            raise ConfigValidationError('config', path, 'is not valid JSON ({})'.format(error))

        if not isinstance(raw, dict):
            raise ConfigValidationError('config', path, 'must hold a JSON object')

        logger.debug('Loaded config from {}'.format(path))
        return cls.from_dict(raw)
