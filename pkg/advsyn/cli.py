"""Command line pipeline

Subcommands mirror the pipeline stages: ``phantom`` and ``preprocess`` produce dataset
directories, ``train-gan`` and ``generate`` produce synthetic tumor images, ``train-clf`` merges,
balances, splits and trains the classifier, ``evaluate`` and ``compare-dist`` write reports.

Exit codes: 0 success, 2 configuration error, 3 data or checkpoint error, 4 numeric divergence.
"""

import argparse
import logging
import os
import sys

import numpy as np

from advsyn.classifier import Classifier, predict, train_classifier
from advsyn.config import RunConfig
from advsyn.core.rng import Rng
from advsyn.data.balance import balance, merge_and_balance, split
from advsyn.data.dataset import LABELS, POSITIVE, ImageDataset, load_dataset_dir, load_raw_dir, save_dataset_dir
from advsyn.data.pgm import save_image
from advsyn.data.phantom import make_phantom_dataset
from advsyn.data.transforms import preprocess
from advsyn.dcgan import GanModel, GanSink, GanTrainer, generate_images, tile_grid
from advsyn.evaluation.distribution import DistributionComparison, compare_real_synthetic
from advsyn.evaluation.metrics import evaluate_predictions, per_provenance_reports
from advsyn.exceptions import (
    CheckpointError,
    ConfigValidationError,
    DataError,
    DivergenceError,
    UnknownParameter,
)
from advsyn.persistence import Checkpoint
from advsyn.utils import pin_threads
from advsyn.utils.files import ensure_dir, write_csv, write_json
from advsyn.utils.version import get_package_version

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')

# Config section whose image_size each command's --size sets
SIZE_SECTIONS = {
    'phantom': 'phantom',
    'preprocess': 'classifier',
    'train-gan': 'gan',
    'train-clf': 'classifier',
}


def _common_arguments():
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group('global options')
    group.add_argument('--config', metavar='PATH', help='JSON run configuration; flags override its values')
    group.add_argument('--seed', type=int, metavar='U64', help='run seed for every random stream (default: config seed, 0)')
    group.add_argument('--out', metavar='DIR', help='output directory (default: config out_dir, "out")')
    group.add_argument('--strict-serial', action='store_true', help='pin BLAS and OpenMP to one thread')
    group.add_argument('--log-level', choices=LOG_LEVELS, default='INFO', help='logging verbosity (default: %(default)s)')
    return parent


def build_parser():
    parser = argparse.ArgumentParser(
        prog='advsyn',
        description='Synthesize tumor images with a DC-GAN and train and evaluate a CNN classifier on them.',
    )
    parser.add_argument('--version', action='version', version='%(prog)s ' + get_package_version())

    common = _common_arguments()
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    sub = commands.add_parser('phantom', parents=[common], help='write a procedural phantom dataset')
    sub.add_argument('--n-yes', type=int, default=500, help='tumor images (default: %(default)s)')
    sub.add_argument('--n-no', type=int, default=500, help='tumor-free images (default: %(default)s)')
    sub.add_argument('--size', type=int, help='image side (default: config phantom.image_size)')
    sub.set_defaults(handler=cmd_phantom)

    sub = commands.add_parser('preprocess', parents=[common], help='resize and normalize a raw yes/no PGM tree')
    sub.add_argument('--input', required=True, metavar='DIR', help='raw dataset directory')
    sub.add_argument('--size', type=int, help='target side (default: config classifier.image_size)')
    sub.add_argument('--contrast-stretch', action='store_true', help='stretch each image to the full range first')
    sub.set_defaults(handler=cmd_preprocess)

    sub = commands.add_parser('train-gan', parents=[common], help='train the DC-GAN on tumor images')
    sub.add_argument('--data', metavar='DIR', help='dataset directory (default: config data_root)')
    sub.add_argument('--resume', metavar='CKPT', help='continue from a gan_epoch_<k>.ckpt checkpoint')
    sub.add_argument('--size', type=int, help='image side (default: config gan.image_size)')
    sub.add_argument('--z-dim', type=int, help='latent vector length (default: config gan.z_dim)')
    sub.add_argument('--epochs', type=int, help='epochs (default: config gan.epochs)')
    sub.add_argument('--steps-per-epoch', type=int, help='steps per epoch (default: config gan.steps_per_epoch)')
    sub.add_argument('--batch-size', type=int, help='batch size (default: config gan.batch_size)')
    sub.add_argument('--sample-every', type=int, help='steps between sample grids (default: config gan.sample_every)')
    sub.set_defaults(handler=cmd_train_gan)

    sub = commands.add_parser('generate', parents=[common], help='write synthetic tumor images from a GAN checkpoint')
    sub.add_argument('--checkpoint', required=True, metavar='CKPT', help='GAN checkpoint')
    sub.add_argument('-n', '--n', type=int, help='images to generate (default: config synth_count, 400)')
    sub.set_defaults(handler=cmd_generate)

    sub = commands.add_parser('train-clf', parents=[common], help='merge, balance, split and train the classifier')
    sub.add_argument('--data', metavar='DIR', help='real dataset directory (default: config data_root)')
    sub.add_argument('--synth', metavar='DIR', help='synthetic dataset directory (default: config synth_dir)')
    sub.add_argument('--synth-count', type=int, help='synthetic images merged, 0 for the real-only baseline '
                                                     '(default: config synth_count, 400)')
    sub.add_argument('--size', type=int, help='image side (default: config classifier.image_size)')
    sub.add_argument('--max-epochs', type=int, help='epoch limit (default: config classifier.max_epochs)')
    sub.add_argument('--augment-before-split', action='store_true', default=None,
                     help='balance before splitting (default: config augment_before_split, false)')
    sub.set_defaults(handler=cmd_train_clf)

    sub = commands.add_parser('evaluate', parents=[common], help='write the classification report of a classifier checkpoint')
    sub.add_argument('--checkpoint', metavar='CKPT', help='classifier checkpoint (default: <out>/clf_best.ckpt)')
    sub.add_argument('--data', metavar='DIR', help='test dataset directory (default: <out>/test)')
    sub.set_defaults(handler=cmd_evaluate)

    sub = commands.add_parser('compare-dist', parents=[common], help='compare pixel-intensity distributions of two dataset directories')
    sub.add_argument('--real', required=True, metavar='DIR', help='real dataset directory')
    sub.add_argument('--synth', required=True, metavar='DIR', help='synthetic dataset directory')
    sub.add_argument('--bins', type=int, default=50, help='histogram bins over [-1, 1] (default: %(default)s)')
    sub.set_defaults(handler=cmd_compare_dist)

    return parser


def load_config(args):
    """RunConfig from --config with command line overrides applied, validated"""
    config = RunConfig.from_file(args.config) if args.config else RunConfig()

    if args.seed is not None:
        config.apply_seed(args.seed)
    if args.out is not None:
        config.out_dir = args.out

    size = getattr(args, 'size', None)
    if size is not None:
        getattr(config, SIZE_SECTIONS[args.command]).image_size = size

    overrides = {
        'z_dim': ('gan', 'z_dim'),
        'epochs': ('gan', 'epochs'),
        'steps_per_epoch': ('gan', 'steps_per_epoch'),
        'batch_size': ('gan', 'batch_size'),
        'sample_every': ('gan', 'sample_every'),
        'max_epochs': ('classifier', 'max_epochs'),
    }
    for flag, (section, key) in overrides.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(getattr(config, section), key, value)

    for flag in ('synth_count', 'augment_before_split'):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, flag, value)
    if getattr(args, 'data', None):
        config.data_root = args.data
    if getattr(args, 'synth', None) and args.command == 'train-clf':
        config.synth_dir = args.synth

    return config.validate()


def _require_dir(path, field):
    if not os.path.isdir(path):
        raise ConfigValidationError(field, path, 'is not a directory')


def _out(config, name):
    return os.path.join(config.out_dir, name)


def cmd_phantom(config, args):
    for flag in ('n_yes', 'n_no'):
        if getattr(args, flag) < 0:
            raise ConfigValidationError(flag.replace('_', '-'), getattr(args, flag), 'must be >= 0')

    dataset = make_phantom_dataset(config.phantom, args.n_yes, args.n_no)
    save_dataset_dir(dataset, config.out_dir, prefix='phantom')
    print('wrote {} phantom images to {}'.format(len(dataset), config.out_dir))


def cmd_preprocess(config, args):
    _require_dir(args.input, 'input')
    matrices, labels, provenance = load_raw_dir(args.input)
    if not matrices:
        raise DataError('{}: no images found'.format(args.input))

    dataset = preprocess(
        matrices,
        config.classifier.image_size,
        labels,
        provenance,
        contrast_stretch=args.contrast_stretch,
        name=os.path.basename(os.path.normpath(args.input))
    )
    save_dataset_dir(dataset, config.out_dir, prefix='img')
    print('wrote {} images of {}x{} to {}'.format(len(dataset), dataset.image_size[0], dataset.image_size[1], config.out_dir))


class DirectorySink(GanSink):
    """Writes GAN loss and sample logs, sample grids and epoch checkpoints below one directory"""

    def __init__(self, out_dir):
        self.out_dir = ensure_dir(out_dir)

    def on_samples(self, step, images, diversity):
        save_image(os.path.join(self.out_dir, 'samples_step_{}.pgm'.format(step)), tile_grid(images))

    def on_epoch_end(self, epoch, trainer):
        write_csv(
            os.path.join(self.out_dir, 'gan_loss.csv'),
            [(step, repr(d_loss), repr(g_loss)) for step, d_loss, g_loss in trainer.losses],
            ('step', 'd_loss', 'g_loss')
        )
        write_csv(
            os.path.join(self.out_dir, 'gan_samples.csv'),
            [(step, repr(diversity)) for step, diversity in trainer.samples],
            ('step', 'diversity')
        )
        path = os.path.join(self.out_dir, 'gan_epoch_{}.ckpt'.format(epoch))
        trainer.to_checkpoint().save(path)
        logger.info('Wrote {}'.format(path))


def cmd_train_gan(config, args):
    _require_dir(config.data_root, 'data_root')
    dataset = load_dataset_dir(config.data_root).with_label(POSITIVE, 'positives')
    sinks = [DirectorySink(config.out_dir)]

    if args.resume:
        trainer = GanTrainer.resume(dataset, Checkpoint.load(args.resume), sinks, epochs=args.epochs)
    else:
        trainer = GanTrainer(dataset, config.gan, sinks)

    result = trainer.run()
    print('trained GAN for {} steps, outputs in {}'.format(result.model.step, config.out_dir))


def cmd_generate(config, args):
    count = config.synth_count if args.n is None else args.n
    if count < 1:
        raise ConfigValidationError('n', count, 'must be >= 1')

    model = GanModel.from_checkpoint(Checkpoint.load(args.checkpoint))
    dataset = generate_images(model, count, Rng(config.seed, 'noise'))
    save_dataset_dir(dataset, config.out_dir, prefix='synthetic')
    print('wrote {} synthetic images to {}'.format(count, config.out_dir))


def _load_training_data(config):
    _require_dir(config.data_root, 'data_root')
    real = load_dataset_dir(config.data_root, 'real')

    missing = [label for label in LABELS if not real.count(label)]
    if missing:
        raise ConfigValidationError('data_root', config.data_root, 'lacks images of class {}'.format(missing))

    synthetic = None
    if config.synth_count:
        if not config.synth_dir:
            raise ConfigValidationError('synth_dir', None, 'required when synth_count > 0 (use --synth-count 0 for real only)')
        _require_dir(config.synth_dir, 'synth_dir')
        pool = load_dataset_dir(config.synth_dir, 'synthetic')
        if len(pool) < config.synth_count:
            raise DataError('{} holds {} images, {} requested'.format(config.synth_dir, len(pool), config.synth_count))
        synthetic = pool.subset(np.arange(config.synth_count))

    return real, synthetic


def cmd_train_clf(config, args):
    real, synthetic = _load_training_data(config)
    augmentation = Rng(config.seed, 'augmentation')
    splitting = Rng(config.seed, 'split')

    keep = 1.0 - config.classifier.validation_fraction

    if config.augment_before_split:
        merged = merge_and_balance(real, synthetic, augmentation, config.augment)
        train, test = split(merged, config.train_fraction, splitting)
        train, val = split(train, keep, splitting, names=('train', 'val'))
    else:
        pooled = ImageDataset.concat([real, synthetic], 'pooled')
        train, test = split(pooled, config.train_fraction, splitting)
        # Validation holds no augmented copies of training images
        train, val = split(train, keep, splitting, names=('train', 'val'))
        train = balance(train, augmentation, config.augment, 'train')

    best_path = _out(config, 'clf_best.ckpt')
    ensure_dir(config.out_dir)
    model, report = train_classifier(
        train,
        val,
        config.classifier,
        checkpoint_sink=lambda epoch, m: m.to_checkpoint().save(best_path)
    )
    model.to_checkpoint().save(best_path)

    write_csv(_out(config, 'train_report.csv'), report.rows(), report.header)
    save_dataset_dir(test, _out(config, 'test'), prefix='test')
    write_json(_out(config, 'split.json'), {
        name: {'negative': part.count(0), 'positive': part.count(1), 'total': len(part)}
        for name, part in (('train', train), ('val', val), ('test', test))
    })
    print('trained classifier for {} epochs (best {}, {}), outputs in {}'.format(
        len(report),
        report.best_epoch,
        report.stop_reason,
        config.out_dir
    ))


def cmd_evaluate(config, args):
    checkpoint = args.checkpoint or _out(config, 'clf_best.ckpt')
    data = args.data or _out(config, 'test')
    _require_dir(data, 'data')

    model = Classifier.from_checkpoint(Checkpoint.load(checkpoint))
    dataset = load_dataset_dir(data)
    if tuple(dataset.images.shape[1:]) != model.network.input_shape:
        raise DataError('{}: images are {}x{}, {} expects {}'.format(
            data,
            dataset.image_size[0],
            dataset.image_size[1],
            checkpoint,
            model.network.input_shape
        ))
    _, labels = predict(model, dataset)

    cm, report = evaluate_predictions(dataset.labels, labels)
    write_csv(_out(config, 'report.csv'), report.rows()[1:], report.rows()[0])
    write_csv(_out(config, 'confusion_matrix.csv'), cm.rows()[1:], cm.rows()[0])

    for flag, (_, part) in per_provenance_reports(dataset.labels, labels, dataset.provenance).items():
        rows = part.rows()
        write_csv(_out(config, 'report_{}.csv'.format(flag)), rows[1:], rows[0])

    print('accuracy {:.4f} on {} images (tn={} fp={} fn={} tp={})'.format(
        report.accuracy,
        cm.total,
        cm.tn,
        cm.fp,
        cm.fn,
        cm.tp
    ))


def cmd_compare_dist(config, args):
    _require_dir(args.real, 'real')
    _require_dir(args.synth, 'synth')
    if args.bins < 2:
        raise ConfigValidationError('bins', args.bins, 'must be >= 2')

    comparison = compare_real_synthetic(load_dataset_dir(args.real), load_dataset_dir(args.synth), args.bins)
    write_csv(_out(config, 'distribution.csv'), comparison.rows(), DistributionComparison.header)
    print('jensen-shannon divergence {:.6f}'.format(comparison.divergence))


def configure_logging(level):
    logging.basicConfig(
        level=getattr(logging, level),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr
    )


def main(argv=None):
    """Run one subcommand, returning its exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    if args.strict_serial:
        pin_threads()

    try:
        config = load_config(args)
        args.handler(config, args)
    except (ConfigValidationError, UnknownParameter) as error:
        logger.error('configuration error: {}'.format(error))
        return EXIT_CONFIG
    except (DataError, CheckpointError) as error:
        logger.error('data error: {}'.format(error))
        return EXIT_DATA
    except DivergenceError as error:
        logger.error('training diverged: {}'.format(error))
        return EXIT_DIVERGENCE

    return EXIT_OK
