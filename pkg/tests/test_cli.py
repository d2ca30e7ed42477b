import csv
import json
import os

import mock
import pytest

from advsyn import __main__ as entry
from advsyn.classifier import Classifier, ClassifierConfig, train_classifier
from advsyn.cli import EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGENCE, EXIT_OK, build_parser, main
from advsyn.exceptions import DivergenceError
from advsyn.utils import SERIAL_ENV

COMMANDS = ('phantom', 'preprocess', 'train-gan', 'generate', 'train-clf', 'evaluate', 'compare-dist')

TINY = {
    'gan': {'z_dim': 8, 'epochs': 1, 'steps_per_epoch': 2, 'batch_size': 2, 'sample_every': 1,
            'base_channels': 8, 'disc_channels': 2, 'probe_count': 4},
    'classifier': {'blocks': [[1, 4]], 'dense_units': 8, 'batch_size': 8},
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / 'tiny.json'
    path.write_text(json.dumps(TINY))
    return str(path)


def _phantoms(root, n_yes, n_no, size):
    assert main(['phantom', '--n-yes', str(n_yes), '--n-no', str(n_no), '--size', str(size), '--out', root]) == EXIT_OK
    return root


def _read_csv(path):
    with open(path, newline='') as f:
        return list(csv.reader(f))


@pytest.mark.parametrize('command', COMMANDS)
def test_every_command_has_help(command, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main([command, '--help'])

    assert excinfo.value.code == 0
    assert '--strict-serial' in capsys.readouterr().out


def test_command_is_required():
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args([])

    assert excinfo.value.code == 2


def test_phantom_writes_dataset(tmp_path, capsys):
    root = _phantoms(str(tmp_path / 'phantom'), 3, 2, 16)

    assert len(os.listdir(os.path.join(root, 'yes'))) == 3
    assert len(os.listdir(os.path.join(root, 'no'))) == 2
    assert _read_csv(os.path.join(root, 'manifest.csv'))[0] == ['filename', 'label', 'provenance']
    assert 'wrote 5 phantom images' in capsys.readouterr().out


def test_configuration_errors_exit_2(tmp_path, tiny_config):
    out = str(tmp_path / 'out')

    assert main(['phantom', '--size', '4', '--out', out]) == EXIT_CONFIG
    assert main(['phantom', '--n-yes', '-1', '--out', out]) == EXIT_CONFIG
    assert main(['train-clf', '--data', str(tmp_path / 'absent'), '--out', out]) == EXIT_CONFIG
    assert main(['train-gan', '--config', tiny_config, '--size', '48', '--out', out]) == EXIT_CONFIG

    bad = tmp_path / 'bad.json'
    bad.write_text('{"gan": {"zdim": 4}}')
    assert main(['phantom', '--config', str(bad), '--out', out]) == EXIT_CONFIG


def test_missing_synthetic_dir_is_a_config_error(tmp_path):
    data = _phantoms(str(tmp_path / 'data'), 2, 2, 16)

    assert main(['train-clf', '--data', data, '--size', '16', '--out', str(tmp_path / 'out')]) == EXIT_CONFIG


def test_data_errors_exit_3(tmp_path):
    data = _phantoms(str(tmp_path / 'data'), 2, 2, 16)
    out = str(tmp_path / 'out')

    assert main(['evaluate', '--data', data, '--checkpoint', str(tmp_path / 'absent.ckpt'), '--out', out]) == EXIT_DATA

    corrupt = tmp_path / 'corrupt.ckpt'
    corrupt.write_bytes(b'not a checkpoint')
    assert main(['generate', '--checkpoint', str(corrupt), '--out', out]) == EXIT_DATA


def test_evaluate_rejects_images_of_another_size(tmp_path):
    checkpoint = str(tmp_path / 'clf.ckpt')
    Classifier(ClassifierConfig(image_size=32, blocks=[[1, 4]], dense_units=8)).to_checkpoint().save(checkpoint)
    data = _phantoms(str(tmp_path / 'data'), 2, 2, 16)

    code = main(['evaluate', '--checkpoint', checkpoint, '--data', data, '--out', str(tmp_path / 'out')])

    assert code == EXIT_DATA
    assert not os.path.exists(str(tmp_path / 'out' / 'report.csv'))


def test_bad_manifest_is_a_data_error(tmp_path, tiny_config):
    data = _phantoms(str(tmp_path / 'data'), 2, 2, 16)
    manifest = os.path.join(data, 'manifest.csv')
    with open(manifest) as f:
        rows = f.read().replace(',1,real', ',7,real')
    with open(manifest, 'w') as f:
        f.write(rows)

    assert main(['compare-dist', '--real', data, '--synth', data, '--out', str(tmp_path / 'dist')]) == EXIT_DATA
    assert main([
        'train-clf', '--config', tiny_config, '--data', data, '--synth-count', '0',
        '--size', '16', '--out', str(tmp_path / 'out'),
    ]) == EXIT_DATA


def test_image_size_too_small_for_the_classifier_is_a_config_error(tmp_path):
    data = _phantoms(str(tmp_path / 'data'), 2, 2, 16)

    code = main(['train-clf', '--data', data, '--synth-count', '0', '--size', '4', '--out', str(tmp_path / 'out')])

    assert code == EXIT_CONFIG


def test_validation_split_holds_no_augmented_images(tmp_path, tiny_config):
    data = _phantoms(str(tmp_path / 'data'), 24, 12, 16)

    with mock.patch('advsyn.cli.train_classifier', wraps=train_classifier) as trainer:
        assert main([
            'train-clf', '--config', tiny_config, '--data', data, '--synth-count', '0',
            '--size', '16', '--max-epochs', '1', '--out', str(tmp_path / 'out'),
        ]) == EXIT_OK

    train, val = trainer.call_args[0][:2]
    assert (val.count(0), val.count(1)) == (1, 2)
    assert set(val.provenance) == {'real'}
    assert train.count(0) == train.count(1) == 18
    assert list(train.provenance).count('augmented') == 9


def test_divergence_exits_4(tmp_path, tiny_config):
    data = _phantoms(str(tmp_path / 'data'), 20, 20, 16)
    error = DivergenceError('classifier', epoch=1)

    with mock.patch('advsyn.cli.train_classifier', side_effect=error):
        code = main([
            'train-clf', '--config', tiny_config, '--data', data, '--synth-count', '0',
            '--size', '16', '--out', str(tmp_path / 'out'),
        ])

    assert code == EXIT_DIVERGENCE


def test_classifier_pipeline(tmp_path, tiny_config):
    data = _phantoms(str(tmp_path / 'data'), 20, 20, 16)
    out = str(tmp_path / 'out')

    assert main([
        'train-clf', '--config', tiny_config, '--data', data, '--synth-count', '0',
        '--size', '16', '--max-epochs', '2', '--seed', '3', '--out', out,
    ]) == EXIT_OK

    for name in ('clf_best.ckpt', 'train_report.csv', 'split.json'):
        assert os.path.exists(os.path.join(out, name))
    assert len(_read_csv(os.path.join(out, 'train_report.csv'))) == 3

    with open(os.path.join(out, 'split.json')) as f:
        counts = json.load(f)
    assert counts['test'] == {'negative': 4, 'positive': 4, 'total': 8}
    assert counts['train']['positive'] == counts['train']['negative']

    assert main(['evaluate', '--config', tiny_config, '--out', out]) == EXIT_OK

    report = _read_csv(os.path.join(out, 'report.csv'))
    assert report[0] == ['class', 'precision', 'recall', 'f1', 'support']
    assert [row[0] for row in report[1:3]] == ['no_tumor', 'tumor']
    assert _read_csv(os.path.join(out, 'confusion_matrix.csv'))[0] == ['truth', 'pred_no_tumor', 'pred_tumor']
    assert os.path.exists(os.path.join(out, 'report_real.csv'))


def test_gan_pipeline(tmp_path, tiny_config):
    data = _phantoms(str(tmp_path / 'data'), 4, 1, 32)
    gan_out = str(tmp_path / 'gan')
    synth_out = str(tmp_path / 'synth')

    assert main(['train-gan', '--config', tiny_config, '--data', data, '--size', '32', '--out', gan_out]) == EXIT_OK

    assert os.path.exists(os.path.join(gan_out, 'gan_epoch_1.ckpt'))
    assert os.path.exists(os.path.join(gan_out, 'samples_step_2.pgm'))
    assert len(_read_csv(os.path.join(gan_out, 'gan_loss.csv'))) == 3

    assert main([
        'train-gan', '--config', tiny_config, '--data', data, '--size', '32',
        '--resume', os.path.join(gan_out, 'gan_epoch_1.ckpt'), '--epochs', '2', '--out', gan_out,
    ]) == EXIT_OK
    assert os.path.exists(os.path.join(gan_out, 'gan_epoch_2.ckpt'))
    assert len(_read_csv(os.path.join(gan_out, 'gan_loss.csv'))) == 5

    assert main(['generate', '--checkpoint', os.path.join(gan_out, 'gan_epoch_2.ckpt'), '-n', '3', '--out', synth_out]) == EXIT_OK
    assert len(os.listdir(os.path.join(synth_out, 'yes'))) == 3

    dist_out = str(tmp_path / 'dist')
    assert main(['compare-dist', '--real', data, '--synth', synth_out, '--bins', '10', '--out', dist_out]) == EXIT_OK
    rows = _read_csv(os.path.join(dist_out, 'distribution.csv'))
    assert rows[0] == ['bin_center', 'real', 'synthetic']
    assert len(rows) == 11


def test_preprocess_resizes_raw_tree(tmp_path):
    raw = _phantoms(str(tmp_path / 'raw'), 2, 2, 16)
    out = str(tmp_path / 'pre')

    assert main(['preprocess', '--input', raw, '--size', '8', '--contrast-stretch', '--out', out]) == EXIT_OK

    assert len(os.listdir(os.path.join(out, 'yes'))) == 2
    with open(os.path.join(out, 'yes', os.listdir(os.path.join(out, 'yes'))[0]), 'rb') as f:
        assert f.read().startswith(b'P5\n8 8\n255\n')


def test_module_entry_pins_threads(tmp_path):
    with mock.patch.dict('os.environ', {}, clear=False):
        for name in SERIAL_ENV:
            os.environ.pop(name, None)

        code = entry.main(['phantom', '--strict-serial', '--n-yes', '1', '--n-no', '1', '--size', '8',
                           '--out', str(tmp_path / 'p')])

        assert code == EXIT_OK
        assert all(os.environ[name] == '1' for name in SERIAL_ENV)
