"""CNN tumor classifier with plateau learning-rate reduction, early stopping and best-epoch checkpointing"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pendulum

from advsyn.core import ops
from advsyn.core.rng import Rng
from advsyn.core.tensor import Tape, backward, no_grad
from advsyn.data.dataset import LABELS
from advsyn.exceptions import ConfigValidationError, DataError, DivergenceError, ShapeError
from advsyn.nn.losses import binary_cross_entropy, l2_penalty
from advsyn.nn.network import Network, NetworkSpec
from advsyn.nn.optim import AdamState, adam_step
from advsyn.nn.params import init_weights
from advsyn.persistence import Checkpoint
from advsyn.utils import dataclass_from_dict
from advsyn.utils.validators import (
    validate_fraction,
    validate_non_negative_float,
    validate_non_negative_int,
    validate_positive_float,
    validate_positive_int,
)

logger = logging.getLogger(__name__)

CLASSIFIER = 'classifier'
THRESHOLD = 0.5
REPORT_HEADER = ('epoch', 'train_loss', 'train_acc', 'val_loss', 'val_acc', 'lr')


def _default_blocks():
    return [[2, 32], [2, 64], [2, 128]]


@dataclass
class ClassifierConfig(object):
    """Architecture, optimizer and callback settings of the classifier

    Attributes:
        image_size (int): Square input size
        blocks (list(list(int))): (convolution count, channels) per block
        dense_units (int): Width of the hidden dense layer
        conv_dropout (float): Dropout after every block
        dense_dropout (float): Dropout after the hidden dense layer
        lr (float): Initial Adam step size
        beta1 (float): Adam first-moment decay
        beta2 (float): Adam second-moment decay
        l2_lambda (float): L2 strength over convolution and dense kernels
        max_epochs (int): Epoch limit
        batch_size (int): Training batch size
        early_stop_patience (int): Epochs without improvement before stopping
        lr_reduce_factor (float): Multiplier applied on a plateau, in (0, 1)
        lr_reduce_patience (int): Epochs without improvement before reducing lr
        min_lr (float): Floor of the reduced lr
        min_delta (float): Minimum validation loss decrease counted as improvement
        validation_fraction (float): Share of each training class held out for validation
        seed (int): Run seed
    """

    image_size: int = 128
    blocks: list = field(default_factory=_default_blocks)
    dense_units: int = 1024
    conv_dropout: float = 0.25
    dense_dropout: float = 0.5
    lr: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    l2_lambda: float = 1e-4
    max_epochs: int = 200
    batch_size: int = 32
    early_stop_patience: int = 25
    lr_reduce_factor: float = 0.5
    lr_reduce_patience: int = 10
    min_lr: float = 1e-6
    min_delta: float = 1e-4
    validation_fraction: float = 0.1
    seed: int = 0

    def validate(self):
        validate_positive_int(self.image_size, 'classifier.image_size')
        if not self.blocks:
            raise ConfigValidationError('classifier.blocks', self.blocks, 'must name at least one block')
        for index, block in enumerate(self.blocks):
            if len(block) != 2:
                raise ConfigValidationError('classifier.blocks[{}]'.format(index), block, 'must be (count, channels)')
            validate_positive_int(block[0], 'classifier.blocks[{}].count'.format(index))
            validate_positive_int(block[1], 'classifier.blocks[{}].channels'.format(index))
        if self.image_size >> len(self.blocks) < 1:
            raise ConfigValidationError(
                'classifier.image_size',
                self.image_size,
                'is too small for {} pooling blocks'.format(len(self.blocks))
            )
        validate_positive_int(self.dense_units, 'classifier.dense_units')
        validate_fraction(self.conv_dropout, 'classifier.conv_dropout', high_open=True)
        validate_fraction(self.dense_dropout, 'classifier.dense_dropout', high_open=True)
        validate_positive_float(self.lr, 'classifier.lr')
        validate_fraction(self.beta1, 'classifier.beta1', low_open=True, high_open=True)
        validate_fraction(self.beta2, 'classifier.beta2', low_open=True, high_open=True)
        validate_non_negative_float(self.l2_lambda, 'classifier.l2_lambda')
        validate_non_negative_int(self.max_epochs, 'classifier.max_epochs')
        validate_positive_int(self.batch_size, 'classifier.batch_size')
        validate_positive_int(self.early_stop_patience, 'classifier.early_stop_patience')
        validate_fraction(self.lr_reduce_factor, 'classifier.lr_reduce_factor', low_open=True, high_open=True)
        validate_positive_int(self.lr_reduce_patience, 'classifier.lr_reduce_patience')
        validate_positive_float(self.min_lr, 'classifier.min_lr')
        validate_non_negative_float(self.min_delta, 'classifier.min_delta')
        validate_fraction(self.validation_fraction, 'classifier.validation_fraction', low_open=True, high_open=True)
        validate_non_negative_int(self.seed, 'classifier.seed')
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw):
        return dataclass_from_dict(cls, raw, 'classifier')


def build_cnn(config):
    """Classifier spec mapping (N, 1, S, S) images to (N, 1) tumor probabilities

    Each block is ``count`` 3x3 ReLU convolutions, batch normalization, 2x2 max pooling and
    dropout. Global average pooling feeds a ReLU dense layer, dropout and a sigmoid unit.

    Raises:
        ConfigValidationError: If config is invalid, including an image_size that cannot be halved once per block
    """
    config.validate()

    layers = []
    channels = 1
    for number, (count, width) in enumerate(config.blocks, 1):
        for index in range(1, count + 1):
            layers.append({
                'type': 'conv2d',
                'name': 'b{}_conv{}'.format(number, index),
                'in_channels': channels,
                'out_channels': width,
                'kernel': 3,
                'stride': 1,
                'padding': 1,
            })
            layers.append({'type': 'activation', 'name': 'b{}_relu{}'.format(number, index), 'kind': 'relu'})
            channels = width
        layers += [
            {'type': 'batchnorm', 'name': 'b{}_bn'.format(number), 'channels': channels},
            {'type': 'maxpool2d', 'name': 'b{}_pool'.format(number), 'window': 2, 'stride': 2},
            {'type': 'dropout', 'name': 'b{}_drop'.format(number), 'rate': config.conv_dropout},
        ]

    layers += [
        {'type': 'global_avg_pool', 'name': 'gap'},
        {'type': 'dense', 'name': 'hidden', 'in_features': channels, 'out_features': config.dense_units},
        {'type': 'activation', 'name': 'hidden_relu', 'kind': 'relu'},
        {'type': 'dropout', 'name': 'hidden_drop', 'rate': config.dense_dropout},
        {'type': 'dense', 'name': 'score', 'in_features': config.dense_units, 'out_features': 1},
        {'type': 'activation', 'name': 'out', 'kind': 'sigmoid'},
    ]

    return NetworkSpec(CLASSIFIER, (1, config.image_size, config.image_size), layers)


class Classifier(object):
    """Network and parameters of a binary classifier

    Args:
        config (ClassifierConfig): Settings; also used to build the spec when none is given
        spec (NetworkSpec): Any network ending in one sigmoid unit, defaults to :func:`build_cnn`
        params (advsyn.nn.params.ParamStore): Parameters, initialized from the ``weights`` stream when omitted
    """

    def __init__(self, config, spec=None, params=None):
        self.config = config.validate()
        self.network = Network(spec or build_cnn(config))
        if self.network.output_shape != (1,):
            raise ShapeError(CLASSIFIER, 'network must emit one probability, emits {}'.format(self.network.output_shape))
        self.params = params or init_weights(self.network.spec, Rng(config.seed, 'weights'))

    def __repr__(self):
        return '<{}: {} {} params>'.format(self.__class__.__name__, self.network.spec.name, self.params.count())

    def probabilities(self, images, batch_size=None):
        """Infer-mode tumor probability per image, shape (N,)

        Raises:
            ShapeError: If images do not match the network input
        """
        images = np.asarray(images, dtype=np.float64)
        if tuple(images.shape[1:]) != self.network.input_shape:
            raise ShapeError('predict', 'expects images of shape (N,) + {}, got {}'.format(
                self.network.input_shape,
                images.shape
            ))

        batch_size = batch_size or self.config.batch_size
        chunks = [np.zeros(0)]
        with no_grad():
            for start in range(0, len(images), batch_size):
                out = self.network(self.params, images[start:start + batch_size], 'infer')
                chunks.append(out.data.reshape(-1))
        return np.concatenate(chunks)

    def to_checkpoint(self, checkpoint=None):
        checkpoint = checkpoint or Checkpoint()
        checkpoint.put_json('meta/config', self.config.to_dict())
        checkpoint.put_spec(self.network.spec)
        checkpoint.put_params(self.params)
        return checkpoint

    @classmethod
    def from_checkpoint(cls, checkpoint, name=CLASSIFIER):
        config = ClassifierConfig.from_dict(checkpoint.get_json('meta/config'))
        return cls(config, checkpoint.get_spec(name), checkpoint.get_params(name))


def predict(model, images, threshold=THRESHOLD):
    """Probabilities and labels (positive when probability >= threshold) in infer mode

    Args:
        model (Classifier): Trained classifier
        images (ImageDataset|numpy.ndarray): Images at the training resolution and range

    Returns:
        tuple(numpy.ndarray, numpy.ndarray): (probabilities, int64 labels)
    """
    probabilities = model.probabilities(getattr(images, 'images', images))
    return probabilities, (probabilities >= threshold).astype(np.int64)


def _penalty(model, lam):
    return l2_penalty(model.params.kernels(), lam)


def evaluate_loss_accuracy(model, dataset, batch_size=None):
    """Infer-mode loss (cross-entropy plus L2 penalty) and accuracy over a dataset

    Batch losses are combined by size-weighted summation in index order.
    """
    if not len(dataset):
        raise DataError('{}: cannot evaluate on an empty dataset'.format(dataset.name))

    batch_size = batch_size or model.config.batch_size
    total = 0.0
    correct = 0
    with no_grad():
        for start in range(0, len(dataset), batch_size):
            images = dataset.images[start:start + batch_size]
            labels = dataset.labels[start:start + batch_size]
            probs = model.network(model.params, images, 'infer')
            total += binary_cross_entropy(probs, labels).item() * len(labels)
            correct += int(np.sum((probs.data.reshape(-1) >= THRESHOLD) == labels))
        penalty = _penalty(model, model.config.l2_lambda).item()

    return total / len(dataset) + penalty, correct / len(dataset)


def _improved(current, best, min_delta):
    return current < best - min_delta


class ReduceLROnPlateau(object):
    """Multiply the learning rate by factor after patience epochs without improvement, floored at min_lr"""

    def __init__(self, factor=0.5, patience=10, min_lr=1e-6, min_delta=1e-4):
        self.factor = factor
        self.patience = patience
        self.min_lr = min_lr
        self.min_delta = min_delta
        self.best = math.inf
        self.wait = 0

    def on_epoch_end(self, epoch, val_loss, state):
        """Update state.lr in place, returning True when it was reduced"""
        if _improved(val_loss, self.best, self.min_delta):
            self.best = val_loss
            self.wait = 0
            return False

        self.wait += 1
        if self.wait < self.patience:
            return False

        self.wait = 0
        new_lr = max(state.lr * self.factor, self.min_lr)
        if new_lr >= state.lr:
            return False

        logger.info('epoch {}: reducing learning rate from {:.3g} to {:.3g}'.format(epoch, state.lr, new_lr))
        state.lr = new_lr
        return True


class EarlyStopping(object):
    """Signal a stop after patience epochs without improvement"""

    def __init__(self, patience=25, min_delta=1e-4):
        self.patience = patience
        self.min_delta = min_delta
        self.best = math.inf
        self.wait = 0

    def on_epoch_end(self, epoch, val_loss):
        if _improved(val_loss, self.best, self.min_delta):
            self.best = val_loss
            self.wait = 0
            return False

        self.wait += 1
        if self.wait >= self.patience:
            logger.info('epoch {}: early stopping, no improvement for {} epochs'.format(epoch, self.wait))
            return True
        return False


class ModelCheckpoint(object):
    """Keep the parameters of the epoch with the lowest validation loss

    Args:
        sink (callable): Called as ``sink(epoch, model)`` whenever a new best is kept
    """

    def __init__(self, sink=None):
        self.sink = sink
        self.best = math.inf
        self.best_epoch = None
        self.best_params = None

    def on_epoch_end(self, epoch, val_loss, model):
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = epoch
            self.best_params = model.params.copy()
            logger.info('epoch {}: new best val_loss {:.6f}'.format(epoch, val_loss))
            if self.sink is not None:
                self.sink(epoch, model)
            return True
        return False


@dataclass
class EpochRecord(object):
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    lr: float

    def row(self):
        return (
            self.epoch,
            repr(self.train_loss),
            repr(self.train_acc),
            repr(self.val_loss),
            repr(self.val_acc),
            repr(self.lr),
        )


@dataclass
class TrainReport(object):
    """Per-epoch history of a classifier run

    Attributes:
        epochs (list(EpochRecord)): One record per completed epoch; lr is the rate used in that epoch
        best_epoch (int): Epoch whose parameters were returned, or None when no epoch ran
        stop_reason (str): ``max_epochs`` or ``early_stopping``
    """

    epochs: list = field(default_factory=list)
    best_epoch: int = None
    stop_reason: str = 'max_epochs'

    header = REPORT_HEADER

    def __len__(self):
        return len(self.epochs)

    @property
    def learning_rates(self):
        return [record.lr for record in self.epochs]

    @property
    def val_losses(self):
        return [record.val_loss for record in self.epochs]

    @property
    def best(self):
        return self.epochs[self.best_epoch - 1] if self.best_epoch else None

    def rows(self):
        return [record.row() for record in self.epochs]


def _check_training_data(train, val, network):
    if not len(train) or not len(val):
        raise DataError('train and validation sets must be non-empty')
    missing = [label for label in LABELS if not train.count(label)]
    if missing:
        raise DataError('{}: training data lacks class {}'.format(train.name, missing))
    if tuple(train.images.shape[1:]) != network.input_shape:
        raise DataError('training images are {}, network expects {}'.format(train.images.shape[1:], network.input_shape))


def train_classifier(train, val, config, model=None, checkpoint_sink=None):
    """Fit a classifier with Adam, cross-entropy plus L2 and the three epoch callbacks

    Each epoch visits train in a fresh permutation from the ``shuffle`` stream, then evaluates
    val in infer mode. The returned model always holds the parameters of the best validation
    epoch.

    Args:
        train (ImageDataset): Training images with both classes present
        val (ImageDataset): Validation images
        config (ClassifierConfig): Settings
        model (Classifier): Model to train, a fresh :func:`build_cnn` model when omitted
        checkpoint_sink (callable): Passed to :class:`ModelCheckpoint`

    Returns:
        tuple(Classifier, TrainReport)

    Raises:
        DataError: Empty sets or a missing training class
        DivergenceError: Non-finite loss or gradient, with the epoch index
    """
    config.validate()
    model = model or Classifier(config)
    _check_training_data(train, val, model.network)

    state = AdamState(config.lr, config.beta1, config.beta2)
    shuffle = Rng(config.seed, 'shuffle')
    dropout = Rng(config.seed, 'dropout')

    plateau = ReduceLROnPlateau(config.lr_reduce_factor, config.lr_reduce_patience, config.min_lr, config.min_delta)
    stopper = EarlyStopping(config.early_stop_patience, config.min_delta)
    keeper = ModelCheckpoint(checkpoint_sink)
    report = TrainReport()

    start = pendulum.now()
    logger.info('Training {!r} on {!r}, validating on {!r}'.format(model, train, val))

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle.permutation(len(train))
        lr = state.lr
        loss_sum = 0.0
        correct = 0

        for begin in range(0, len(train), config.batch_size):
            indices = order[begin:begin + config.batch_size]
            labels = train.labels[indices]

            with Tape() as tape:
                tape.watch(*model.params.values())
                probs = model.network(model.params, train.images[indices], 'train', dropout)
                loss = ops.add(binary_cross_entropy(probs, labels), _penalty(model, config.l2_lambda))

            value = loss.item()
            if not np.isfinite(value):
                raise DivergenceError(CLASSIFIER, epoch=epoch, value=value)

            grads = backward(tape, loss)
            try:
                adam_step(model.params, {name: grads[t] for name, t in model.params.items()}, state)
            except DivergenceError as error:
                raise DivergenceError('{} {}'.format(CLASSIFIER, error.where), epoch=epoch)

            loss_sum += value * len(indices)
            correct += int(np.sum((probs.data.reshape(-1) >= THRESHOLD) == labels))

        val_loss, val_acc = evaluate_loss_accuracy(model, val)
        record = EpochRecord(epoch, loss_sum / len(train), correct / len(train), val_loss, val_acc, lr)
        report.epochs.append(record)
        logger.info('epoch {}: loss={:.6f} acc={:.4f} val_loss={:.6f} val_acc={:.4f} lr={:.3g}'.format(
            epoch,
            record.train_loss,
            record.train_acc,
            val_loss,
            val_acc,
            lr
        ))

        keeper.on_epoch_end(epoch, val_loss, model)
        plateau.on_epoch_end(epoch, val_loss, state)
        if stopper.on_epoch_end(epoch, val_loss):
            report.stop_reason = 'early_stopping'
            break

    if keeper.best_params is not None:
        model.params.load(keeper.best_params)
        report.best_epoch = keeper.best_epoch
        logger.info('Restored parameters of epoch {} (val_loss {:.6f})'.format(keeper.best_epoch, keeper.best))

    logger.info('Classifier training stopped ({}) after {} epochs in {}'.format(
        report.stop_reason,
        len(report),
        (pendulum.now() - start).in_words()
    ))

    return model, report
