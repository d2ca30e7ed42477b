"""Deep convolutional GAN: architectures, the alternating training step and a resumable trainer

The generator projects a latent vector to a ``base_channels x S/4 x S/4`` feature map and doubles
its resolution twice with transposed convolutions before a final 3x3 convolution and ``tanh``.
The discriminator halves the resolution three times with strided convolutions, adds a stride-1
convolution, and ends in a dense layer with a sigmoid. Both use LeakyReLU(0.2); the discriminator
adds dropout after every convolution.

Examples:

    ::

        config = GanConfig(z_dim=64, image_size=32, epochs=1, steps_per_epoch=500, batch_size=16)
        result = train_gan(positives, config, sinks=[MemorySink()])
        synthetic = generate_images(result.model, 400, Rng(config.seed, 'noise'))
"""

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
import pendulum

from advsyn.core.ops.base import as_tensor
from advsyn.core.rng import Rng
from advsyn.core.tensor import Tape, backward, no_grad
from advsyn.data.dataset import POSITIVE, ImageDataset, to_pixels
from advsyn.evaluation.distribution import sample_diversity
from advsyn.exceptions import CheckpointError, ConfigValidationError, DataError, DivergenceError, ShapeError
from advsyn.nn.losses import discriminator_loss, generator_loss
from advsyn.nn.network import Network, NetworkSpec
from advsyn.nn.optim import AdamState, adam_step
from advsyn.nn.params import init_weights
from advsyn.persistence import Checkpoint
from advsyn.utils import dataclass_from_dict
from advsyn.utils.validators import (
    validate_choice,
    validate_fraction,
    validate_non_negative_int,
    validate_positive_float,
    validate_positive_int,
)

logger = logging.getLogger(__name__)

SUPPORTED_SIZES = (32, 64, 128)
GENERATOR = 'generator'
DISCRIMINATOR = 'discriminator'


@dataclass
class GanConfig(object):
    """Architecture and training schedule of the adversarial pair

    Attributes:
        z_dim (int): Latent vector length
        image_size (int): Square output size, one of :data:`SUPPORTED_SIZES`
        epochs (int): Number of epochs
        steps_per_epoch (int): Alternating updates per epoch
        batch_size (int): Real images per step
        lr (float): Adam step size of both networks
        beta1 (float): Adam first-moment decay
        beta2 (float): Adam second-moment decay
        sample_every (int): Emit a probe sample grid every this many steps
        seed (int): Run seed
        base_channels (int): Channels of the generator's first feature map, divisible by 4
        disc_channels (int): Channels of the discriminator's first convolution
        use_batchnorm (bool): Insert batch normalization after hidden (transposed) convolutions
        leaky_alpha (float): LeakyReLU negative slope
        dropout (float): Discriminator dropout rate
        probe_count (int): Images in each sample grid
    """

    z_dim: int = 400
    image_size: int = 128
    epochs: int = 10
    steps_per_epoch: int = 3750
    batch_size: int = 4
    lr: float = 0.0002
    beta1: float = 0.5
    beta2: float = 0.999
    sample_every: int = 500
    seed: int = 0
    base_channels: int = 256
    disc_channels: int = 64
    use_batchnorm: bool = False
    leaky_alpha: float = 0.2
    dropout: float = 0.3
    probe_count: int = 16

    def validate(self):
        validate_positive_int(self.z_dim, 'gan.z_dim')
        validate_choice(self.image_size, 'gan.image_size', SUPPORTED_SIZES)
        validate_non_negative_int(self.epochs, 'gan.epochs')
        validate_positive_int(self.steps_per_epoch, 'gan.steps_per_epoch')
        validate_positive_int(self.batch_size, 'gan.batch_size')
        validate_positive_float(self.lr, 'gan.lr')
        validate_fraction(self.beta1, 'gan.beta1', low_open=True, high_open=True)
        validate_fraction(self.beta2, 'gan.beta2', low_open=True, high_open=True)
        validate_positive_int(self.sample_every, 'gan.sample_every')
        validate_non_negative_int(self.seed, 'gan.seed')
        validate_positive_int(self.base_channels, 'gan.base_channels')
        if self.base_channels % 4:
            raise ConfigValidationError('gan.base_channels', self.base_channels, 'must be divisible by 4')
        validate_positive_int(self.disc_channels, 'gan.disc_channels')
        validate_choice(self.use_batchnorm, 'gan.use_batchnorm', (True, False))
        validate_fraction(self.leaky_alpha, 'gan.leaky_alpha', low_open=True, high_open=True)
        validate_fraction(self.dropout, 'gan.dropout', high_open=True)
        validate_positive_int(self.probe_count, 'gan.probe_count')
        return self

    @property
    def total_steps(self):
        return self.epochs * self.steps_per_epoch

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw):
        return dataclass_from_dict(cls, raw, 'gan')


def _leaky(name, config):
    return {'type': 'activation', 'name': name, 'kind': 'leaky_relu', 'alpha': config.leaky_alpha}


def build_generator(config):
    """Generator spec mapping (N, z_dim) noise to (N, 1, S, S) images in [-1, 1]

    Raises:
        ConfigValidationError: If config is invalid, including an unsupported image_size
    """
    config.validate()
    base = config.image_size // 4
    channels = [config.base_channels, config.base_channels // 2, config.base_channels // 4]

    layers = [
        {'type': 'dense', 'name': 'project', 'in_features': config.z_dim, 'out_features': channels[0] * base * base},
        {'type': 'reshape', 'name': 'to_map', 'shape': [channels[0], base, base]},
    ]
    if config.use_batchnorm:
        layers.append({'type': 'batchnorm', 'name': 'bn0', 'channels': channels[0]})
    layers.append(_leaky('act0', config))

    for index in (1, 2):
        layers.append({
            'type': 'conv2d_transpose',
            'name': 'up{}'.format(index),
            'in_channels': channels[index - 1],
            'out_channels': channels[index],
            'kernel': 4,
            'stride': 2,
            'padding': 1,
        })
        if config.use_batchnorm:
            layers.append({'type': 'batchnorm', 'name': 'bn{}'.format(index), 'channels': channels[index]})
        layers.append(_leaky('act{}'.format(index), config))

    layers += [
        {'type': 'conv2d', 'name': 'to_image', 'in_channels': channels[2], 'out_channels': 1,
         'kernel': 3, 'stride': 1, 'padding': 1},
        {'type': 'activation', 'name': 'out', 'kind': 'tanh'},
    ]

    return NetworkSpec(GENERATOR, (config.z_dim,), layers)


def build_discriminator(config):
    """Discriminator spec mapping (N, 1, S, S) images to (N, 1) probabilities

    Raises:
        ConfigValidationError: If config is invalid, including an unsupported image_size
    """
    config.validate()
    c = config.disc_channels
    convs = [(1, c, 4, 2), (c, 2 * c, 4, 2), (2 * c, 4 * c, 4, 2), (4 * c, 4 * c, 3, 1)]

    layers = []
    for index, (cin, cout, kernel, stride) in enumerate(convs, 1):
        layers.append({
            'type': 'conv2d',
            'name': 'conv{}'.format(index),
            'in_channels': cin,
            'out_channels': cout,
            'kernel': kernel,
            'stride': stride,
            'padding': 1,
        })
        if config.use_batchnorm and index > 1:
            layers.append({'type': 'batchnorm', 'name': 'bn{}'.format(index), 'channels': cout})
        layers.append(_leaky('act{}'.format(index), config))
        layers.append({'type': 'dropout', 'name': 'drop{}'.format(index), 'rate': config.dropout})

    side = config.image_size // 8
    layers += [
        {'type': 'flatten', 'name': 'flatten'},
        {'type': 'dense', 'name': 'score', 'in_features': 4 * c * side * side, 'out_features': 1},
        {'type': 'activation', 'name': 'out', 'kind': 'sigmoid'},
    ]

    return NetworkSpec(DISCRIMINATOR, (1, config.image_size, config.image_size), layers)


class GanModel(object):
    """Generator and discriminator with their parameters, Adam states and step counter

    Attributes:
        config (GanConfig): Architecture and schedule
        generator (Network): Generator network
        discriminator (Network): Discriminator network
        g_params (advsyn.nn.params.ParamStore): Generator parameters
        d_params (advsyn.nn.params.ParamStore): Discriminator parameters
        g_state (AdamState): Generator optimizer state
        d_state (AdamState): Discriminator optimizer state
        step (int): Completed alternating steps
    """

    def __init__(self, config, g_params, d_params, g_state=None, d_state=None, step=0):
        self.config = config.validate()
        self.generator = Network(build_generator(config))
        self.discriminator = Network(build_discriminator(config))

        if self.generator.output_shape != self.discriminator.input_shape:
            raise ShapeError('gan', 'generator emits {} but discriminator expects {}'.format(
                self.generator.output_shape,
                self.discriminator.input_shape
            ))

        self.g_params = g_params
        self.d_params = d_params
        self.g_state = g_state or AdamState(config.lr, config.beta1, config.beta2)
        self.d_state = d_state or AdamState(config.lr, config.beta1, config.beta2)
        self.step = step

    def __repr__(self):
        return '<{}: {}x{} z={} step={}>'.format(
            self.__class__.__name__,
            self.config.image_size,
            self.config.image_size,
            self.config.z_dim,
            self.step
        )

    @classmethod
    def initialize(cls, config, rng=None):
        """Fresh model with generator weights drawn before discriminator weights"""
        config.validate()
        rng = rng or Rng(config.seed, 'weights')
        g_params = init_weights(build_generator(config), rng)
        d_params = init_weights(build_discriminator(config), rng)
        return cls(config, g_params, d_params)

    def generate(self, z, mode='infer', rng=None):
        """Generator output for a (N, z_dim) latent batch"""
        return self.generator(self.g_params, z, mode, rng)

    def discriminate(self, images, mode='infer', rng=None):
        """Discriminator probabilities for a (N, 1, S, S) batch"""
        return self.discriminator(self.d_params, images, mode, rng)

    def to_checkpoint(self, checkpoint=None):
        checkpoint = checkpoint or Checkpoint()
        checkpoint.put_json('meta/config', self.config.to_dict())
        for network, params, state, group in (
            (self.generator, self.g_params, self.g_state, GENERATOR),
            (self.discriminator, self.d_params, self.d_state, DISCRIMINATOR),
        ):
            checkpoint.put_spec(network.spec)
            checkpoint.put_params(params)
            checkpoint.put_adam(group, state)
        checkpoint.put_int('counter/step', self.step)
        return checkpoint

    @classmethod
    def from_checkpoint(cls, checkpoint):
        """Rebuild a model from :meth:`to_checkpoint` records

        Raises:
            CheckpointError: If records are missing or the stored specs disagree with the stored config
        """
        config = GanConfig.from_dict(checkpoint.get_json('meta/config'))
        for name, builder in ((GENERATOR, build_generator), (DISCRIMINATOR, build_discriminator)):
            if checkpoint.get_spec(name) != builder(config):
                raise CheckpointError('stored {} spec does not match the stored config'.format(name))

        return cls(
            config,
            checkpoint.get_params(GENERATOR),
            checkpoint.get_params(DISCRIMINATOR),
            checkpoint.get_adam(GENERATOR),
            checkpoint.get_adam(DISCRIMINATOR),
            checkpoint.get_int('counter/step')
        )


def _check_finite(loss, where, step):
    value = loss.item()
    if not np.isfinite(value):
        raise DivergenceError(where, step=step, value=value)
    return value


def _update(params, tape, loss, state, where, step):
    grads = backward(tape, loss)
    try:
        adam_step(params, {name: grads[tensor] for name, tensor in params.items()}, state)
    except DivergenceError as error:
        raise DivergenceError('{} {}'.format(where, error.where), step=step)


def gan_train_step(model, real_batch, rng, dropout_rng=None, update_generator=True):
    """One alternating update: the discriminator first, then the generator through a frozen discriminator

    Args:
        model (GanModel): Model updated in place
        real_batch (Tensor|numpy.ndarray): (N, 1, S, S) real images in [-1, 1]
        rng (advsyn.core.rng.Rng): Latent noise source, normally the ``noise`` stream
        dropout_rng (advsyn.core.rng.Rng): Dropout masks, defaults to rng
        update_generator (bool): Run the generator phase; when False only its loss is measured

    Returns:
        tuple(float, float): (discriminator loss, generator loss)

    Raises:
        ShapeError: If real_batch does not match the discriminator input
        DivergenceError: On a non-finite loss or gradient, naming the sub-network
    """
    real = as_tensor(real_batch)
    expected = model.discriminator.input_shape
    if real.ndim != 4 or tuple(real.shape[1:]) != expected or not len(real):
        raise ShapeError('gan_train_step', 'real batch must be (N,) + {}, got {}'.format(expected, real.shape))

    dropout_rng = dropout_rng or rng
    count = len(real)
    step = model.step + 1
    z_dim = model.config.z_dim

    z = rng.normal((count, z_dim))
    g_buffers = dict(model.g_params.buffers)
    with no_grad():
        fake = model.generate(z, 'train', dropout_rng)
    # G running statistics only move in phase two
    model.g_params.buffers.update(g_buffers)

    with Tape() as tape:
        tape.watch(*model.d_params.values())
        d_real = model.discriminate(real, 'train', dropout_rng)
        d_fake = model.discriminate(fake.data, 'train', dropout_rng)
        d_loss = discriminator_loss(d_real, d_fake)

    d_value = _check_finite(d_loss, DISCRIMINATOR, step)
    _update(model.d_params, tape, d_loss, model.d_state, DISCRIMINATOR, step)

    z = rng.normal((count, z_dim))
    buffers = dict(model.d_params.buffers)

    if update_generator:
        with model.d_params.frozen(), Tape() as tape:
            tape.watch(*model.g_params.values())
            g_loss = generator_loss(model.discriminate(model.generate(z, 'train', dropout_rng), 'train', dropout_rng))
        g_value = _check_finite(g_loss, GENERATOR, step)
        _update(model.g_params, tape, g_loss, model.g_state, GENERATOR, step)
    else:
        with no_grad():
            g_loss = generator_loss(model.discriminate(model.generate(z, 'train', dropout_rng), 'train', dropout_rng))
        model.g_params.buffers.update(g_buffers)
        g_value = _check_finite(g_loss, GENERATOR, step)

    # Running statistics of the frozen side stay as phase one left them
    model.d_params.buffers.update(buffers)
    model.step = step

    return d_value, g_value


class GanSink(object):
    """Receiver of trainer events; subclasses override what they need"""

    def on_step(self, step, d_loss, g_loss):
        pass

    def on_samples(self, step, images, diversity):
        pass

    def on_epoch_end(self, epoch, trainer):
        pass


class MemorySink(GanSink):
    """Keeps every event in memory"""

    def __init__(self):
        self.losses = []
        self.samples = {}
        self.diversity = {}
        self.epochs = []

    def on_step(self, step, d_loss, g_loss):
        self.losses.append((step, d_loss, g_loss))

    def on_samples(self, step, images, diversity):
        self.samples[step] = images
        self.diversity[step] = diversity

    def on_epoch_end(self, epoch, trainer):
        self.epochs.append(epoch)


class BatchCycler(object):
    """Endless shuffled index batches over a dataset of fixed size

    Each pass over the data is a fresh permutation; a batch may straddle two passes.
    """

    def __init__(self, size, batch_size, rng):
        self.size = size
        self.batch_size = batch_size
        self.rng = rng
        self.order = np.zeros(0, dtype=np.int64)
        self.position = 0
        self.passes = 0

    def next(self):
        indices = []
        while len(indices) < self.batch_size:
            if self.position >= len(self.order):
                self.order = np.asarray(self.rng.permutation(self.size), dtype=np.int64)
                self.position = 0
                self.passes += 1
            take = min(self.batch_size - len(indices), len(self.order) - self.position)
            indices.extend(self.order[self.position:self.position + take].tolist())
            self.position += take
        return np.array(indices, dtype=np.int64)

    def save(self, checkpoint, key='batches'):
        checkpoint.put_array('cycler/{}/order'.format(key), self.order)
        checkpoint.put_int('cycler/{}/position'.format(key), self.position)
        checkpoint.put_int('cycler/{}/passes'.format(key), self.passes)
        checkpoint.put_rng(key, self.rng)

    def restore(self, checkpoint, key='batches'):
        self.order = checkpoint.get('cycler/{}/order'.format(key)).astype(np.int64)
        self.position = checkpoint.get_int('cycler/{}/position'.format(key))
        self.passes = checkpoint.get_int('cycler/{}/passes'.format(key))
        self.rng = checkpoint.get_rng(key)


@dataclass
class GanTrainResult(object):
    model: GanModel
    losses: list
    samples: list


def tile_grid(images, columns=4):
    """Arrange (N, 1, H, W) images in [-1, 1] into one 8-bit matrix, row-major"""
    images = np.asarray(images)
    count, _, height, width = images.shape
    rows = -(-count // columns)
    grid = np.full((rows * height, columns * width), -1.0)
    for index in range(count):
        row, column = divmod(index, columns)
        grid[row * height:(row + 1) * height, column * width:(column + 1) * width] = images[index, 0]
    return to_pixels(grid)


class GanTrainer(object):
    """Runs gan_train_step over a dataset of tumor images, feeding sinks

    Draws come from separate streams of config.seed: ``noise`` for latent vectors, ``dropout``,
    ``shuffle`` for batch order and ``probe`` for the fixed latent batch behind every sample grid.

    Args:
        dataset (ImageDataset): Positive images of size config.image_size
        config (GanConfig): Architecture and schedule
        sinks (list(GanSink)): Event receivers
        model (GanModel): Model to continue from, freshly initialized when omitted

    Raises:
        DataError: Empty dataset, negative images or a size mismatch
    """

    def __init__(self, dataset, config, sinks=(), model=None):
        self.config = config.validate()

        if not len(dataset):
            raise DataError('cannot train a GAN on an empty dataset')
        if dataset.count(POSITIVE) != len(dataset):
            raise DataError('GAN training expects tumor images only, {} has negatives'.format(dataset.name))
        if dataset.image_size != (config.image_size, config.image_size):
            raise DataError('dataset images are {}, config expects {}'.format(dataset.image_size, config.image_size))

        self.dataset = dataset
        self.sinks = list(sinks)
        self.model = model or GanModel.initialize(config)
        self.noise = Rng(config.seed, 'noise')
        self.dropout = Rng(config.seed, 'dropout')
        self.cycler = BatchCycler(len(dataset), config.batch_size, Rng(config.seed, 'shuffle'))
        self.probe = Rng(config.seed, 'probe').normal((config.probe_count, config.z_dim))
        self.losses = []
        self.samples = []

    def __repr__(self):
        return '<{}: {!r} on {!r}>'.format(self.__class__.__name__, self.model, self.dataset)

    def _emit(self, event, *args):
        for sink in self.sinks:
            getattr(sink, event)(*args)

    def sample(self):
        """Generator output for the probe batch and its diversity"""
        with no_grad():
            images = self.model.generate(self.probe).numpy()
        return images, sample_diversity(images)

    def run(self):
        config = self.config
        total = config.total_steps
        start = pendulum.now()

        if total * config.batch_size > len(self.dataset):
            logger.warning('{} steps of {} images recycle the {} training images'.format(
                total,
                config.batch_size,
                len(self.dataset)
            ))
        logger.info('Training GAN from step {} to {}: {!r}'.format(self.model.step, total, self.model))

        while self.model.step < total:
            batch = self.dataset.images[self.cycler.next()]
            try:
                d_loss, g_loss = gan_train_step(self.model, batch, self.noise, self.dropout)
            except DivergenceError as error:
                epoch = self.model.step // config.steps_per_epoch + 1
                raise DivergenceError(error.where, epoch=epoch, step=error.step, value=error.value)

            step = self.model.step
            self.losses.append((step, d_loss, g_loss))
            self._emit('on_step', step, d_loss, g_loss)
            logger.debug('step {}: d_loss={:.6f} g_loss={:.6f}'.format(step, d_loss, g_loss))

            if step % config.sample_every == 0:
                images, diversity = self.sample()
                self.samples.append((step, diversity))
                self._emit('on_samples', step, images, diversity)
                logger.info('step {}: sample diversity {:.6f}'.format(step, diversity))

            if step % config.steps_per_epoch == 0:
                epoch = step // config.steps_per_epoch
                recent = np.array([entry[1:] for entry in self.losses[-config.steps_per_epoch:]])
                logger.info('epoch {}/{}: mean d_loss={:.6f} g_loss={:.6f}'.format(
                    epoch,
                    config.epochs,
                    recent[:, 0].mean(),
                    recent[:, 1].mean()
                ))
                self._emit('on_epoch_end', epoch, self)

        logger.info('GAN training finished at step {} in {}'.format(self.model.step, (pendulum.now() - start).in_words()))

        return GanTrainResult(self.model, list(self.losses), list(self.samples))

    def to_checkpoint(self):
        """Model plus everything needed to continue the run identically"""
        checkpoint = self.model.to_checkpoint()
        checkpoint.put_rng('noise', self.noise)
        checkpoint.put_rng('dropout', self.dropout)
        self.cycler.save(checkpoint)
        checkpoint.put_array('log/losses', np.array(self.losses, dtype=np.float64).reshape(-1, 3))
        checkpoint.put_array('log/samples', np.array(self.samples, dtype=np.float64).reshape(-1, 2))
        return checkpoint

    @classmethod
    def resume(cls, dataset, checkpoint, sinks=(), epochs=None):
        """Continue a run saved by :meth:`to_checkpoint`

        Args:
            epochs (int): New epoch count, keeps the stored one when omitted
        """
        model = GanModel.from_checkpoint(checkpoint)
        if epochs is not None:
            model.config.epochs = epochs

        trainer = cls(dataset, model.config, sinks, model)
        trainer.noise = checkpoint.get_rng('noise')
        trainer.dropout = checkpoint.get_rng('dropout')
        trainer.cycler.restore(checkpoint)
        trainer.losses = [(int(s), d, g) for s, d, g in checkpoint.get('log/losses').tolist()]
        trainer.samples = [(int(s), d) for s, d in checkpoint.get('log/samples').tolist()]

        logger.info('Resumed {!r} at step {}'.format(trainer, model.step))
        return trainer


def train_gan(dataset, config, sinks=()):
    """Train a fresh model for config.epochs x config.steps_per_epoch steps

    Returns:
        GanTrainResult: Trained model, (step, d_loss, g_loss) log and (step, diversity) per sample grid
    """
    return GanTrainer(dataset, config, sinks).run()


def generate_images(model, n, rng, batch_size=64, name='synthetic'):
    """Draw n generator images as synthetic positives

    Raises:
        ValueError: If n < 1
    """
    if n < 1:
        raise ValueError('n must be >= 1, got {}'.format(n))

    z = rng.normal((n, model.config.z_dim))
    chunks = []
    with no_grad():
        for start in range(0, n, batch_size):
            chunks.append(model.generate(z[start:start + batch_size]).numpy())

    images = np.clip(np.concatenate(chunks), -1.0, 1.0)
    dataset = ImageDataset(images, [POSITIVE] * n, 'synthetic', name)
    logger.info('Generated {!r}'.format(dataset))
    return dataset
