import dataclasses

import mock

import numpy as np
import pytest

from advsyn import dcgan
from advsyn.core.rng import Rng
from advsyn.data.dataset import ImageDataset
from advsyn.dcgan import (
    BatchCycler,
    GanModel,
    GanTrainer,
    MemorySink,
    build_discriminator,
    build_generator,
    gan_train_step,
    generate_images,
    tile_grid,
    train_gan,
)
from advsyn.exceptions import CheckpointError, ConfigValidationError, DataError, DivergenceError, ShapeError
from advsyn.nn.network import Network
from advsyn.persistence import Checkpoint


@pytest.fixture
def tumors(tiny_gan_config):
    images = Rng(0, 'phantom').uniform(-1.0, 1.0, (6, 1, 32, 32))
    return ImageDataset(images, [1] * 6, name='tumors')


@pytest.fixture
def model(tiny_gan_config):
    return GanModel.initialize(tiny_gan_config)


def _fingerprints(model):
    return model.g_params.fingerprint(), model.d_params.fingerprint()


def test_generator_projects_to_quarter_size_map(tiny_gan_config):
    generator = Network(build_generator(tiny_gan_config))

    assert generator.shape_after('to_map') == (8, 8, 8)
    assert generator.shape_after('up1') == (4, 16, 16)
    assert generator.output_shape == (1, 32, 32)


def test_discriminator_shapes(tiny_gan_config):
    discriminator = Network(build_discriminator(tiny_gan_config))

    assert discriminator.shape_after('conv3') == (8, 4, 4)
    assert discriminator.shape_after('conv4') == (8, 4, 4)
    assert discriminator.output_shape == (1,)


def test_batchnorm_variant(tiny_gan_config):
    config = dataclasses.replace(tiny_gan_config, use_batchnorm=True)

    generator = build_generator(config)
    discriminator = build_discriminator(config)

    assert [layer['name'] for layer in generator.layers if layer['type'] == 'batchnorm'] == ['bn0', 'bn1', 'bn2']
    assert [layer['name'] for layer in discriminator.layers if layer['type'] == 'batchnorm'] == ['bn2', 'bn3', 'bn4']


@pytest.mark.parametrize('changes', [
    {'image_size': 48},
    {'base_channels': 6},
    {'dropout': 1.0},
    {'z_dim': 0},
])
def test_invalid_configs(tiny_gan_config, changes):
    with pytest.raises(ConfigValidationError):
        build_generator(dataclasses.replace(tiny_gan_config, **changes))


def test_generated_images_in_range(model):
    images = model.generate(Rng(1, 'noise').normal((3, 8))).numpy()

    assert images.shape == (3, 1, 32, 32)
    assert images.min() >= -1.0 and images.max() <= 1.0


def test_zero_latents_give_identical_images(model):
    images = model.generate(np.zeros((3, 8))).numpy()

    np.testing.assert_array_equal(images[0], images[1])
    np.testing.assert_array_equal(images[0], images[2])


def test_discriminator_probabilities(model, tumors):
    scores = model.discriminate(tumors.images).numpy()

    assert scores.shape == (6, 1)
    assert np.all((scores > 0) & (scores < 1))


def test_initialization_is_deterministic(tiny_gan_config):
    first = GanModel.initialize(tiny_gan_config)
    second = GanModel.initialize(tiny_gan_config)
    other = GanModel.initialize(dataclasses.replace(tiny_gan_config, seed=12))

    assert _fingerprints(first) == _fingerprints(second)
    assert _fingerprints(first) != _fingerprints(other)


def test_train_step_updates_both_networks(model, tumors):
    before = _fingerprints(model)

    d_loss, g_loss = gan_train_step(model, tumors.images[:2], Rng(0, 'noise'))

    after = _fingerprints(model)
    assert np.isfinite(d_loss) and np.isfinite(g_loss)
    assert d_loss > 0 and g_loss > 0
    assert after[0] != before[0]
    assert after[1] != before[1]
    assert model.step == 1
    assert model.g_state.t == model.d_state.t == 1


def test_train_step_with_frozen_generator(model, tumors):
    generator_before, discriminator_before = _fingerprints(model)

    gan_train_step(model, tumors.images[:2], Rng(0, 'noise'), update_generator=False)

    assert model.g_params.fingerprint() == generator_before
    assert model.d_params.fingerprint() != discriminator_before
    assert model.g_state.t == 0
    assert model.step == 1


def test_frozen_generator_keeps_batchnorm_statistics(tiny_gan_config, tumors):
    model = GanModel.initialize(dataclasses.replace(tiny_gan_config, use_batchnorm=True))
    generator_before = model.g_params.fingerprint()

    gan_train_step(model, tumors.images[:2], Rng(0, 'noise'), update_generator=False)

    assert model.g_params.fingerprint() == generator_before


def test_each_phase_only_changes_its_own_network(tiny_gan_config, tumors):
    model = GanModel.initialize(dataclasses.replace(tiny_gan_config, use_batchnorm=True))
    generator_before = model.g_params.fingerprint()
    update = dcgan._update
    seen = []

    def recording_update(*args):
        seen.append(_fingerprints(model))
        update(*args)
        seen.append(_fingerprints(model))

    with mock.patch('advsyn.dcgan._update', side_effect=recording_update):
        gan_train_step(model, tumors.images[:2], Rng(0, 'noise'))

    (g_before_d, _), (g_after_d, d_after_d), _, (g_after_g, _) = seen
    assert g_before_d == g_after_d == generator_before
    assert model.d_params.fingerprint() == d_after_d
    assert model.g_params.fingerprint() == g_after_g != generator_before


def test_first_step_losses_start_near_chance(model, tumors):
    d_loss, g_loss = gan_train_step(model, tumors.images[:2], Rng(0, 'noise'))

    assert d_loss == pytest.approx(2 * np.log(2), abs=0.01)
    assert g_loss == pytest.approx(np.log(2), abs=0.01)


def test_discriminator_separates_constant_images_from_a_silent_generator(tiny_gan_config):
    model = GanModel.initialize(dataclasses.replace(tiny_gan_config, lr=0.005, dropout=0.0))
    for tensor in model.g_params.values():
        tensor.data[...] = 0.0
    real = np.ones((4, 1, 32, 32))
    rng = Rng(0, 'noise')

    losses = []
    for _ in range(200):
        d_loss, _ = gan_train_step(model, real, rng, update_generator=False)
        losses.append(d_loss)
        if d_loss < 0.1:
            break

    assert losses[-1] < 0.1
    assert model.g_state.t == 0


def test_zero_batch_gives_finite_losses(model):
    d_loss, g_loss = gan_train_step(model, np.zeros((2, 1, 32, 32)), Rng(0, 'noise'))

    assert np.isfinite(d_loss) and np.isfinite(g_loss)


def test_train_step_rejects_wrong_batch(model):
    with pytest.raises(ShapeError):
        gan_train_step(model, np.zeros((2, 1, 16, 16)), Rng(0, 'noise'))
    with pytest.raises(ShapeError):
        gan_train_step(model, np.zeros((0, 1, 32, 32)), Rng(0, 'noise'))


def test_train_step_reports_divergence(model, tumors):
    model.d_params['score.bias'].data[0] = np.nan

    with pytest.raises(DivergenceError) as excinfo:
        gan_train_step(model, tumors.images[:2], Rng(0, 'noise'))

    assert excinfo.value.where == 'discriminator'
    assert excinfo.value.step == 1


def test_trainer_feeds_sinks(tiny_gan_config, tumors):
    sink = MemorySink()

    result = train_gan(tumors, tiny_gan_config, [sink])

    assert [entry[0] for entry in sink.losses] == [1, 2, 3, 4, 5, 6]
    assert sorted(sink.samples) == [2, 4, 6]
    assert sink.samples[2].shape == (4, 1, 32, 32)
    assert sink.epochs == [1, 2]
    assert result.losses == sink.losses
    assert [step for step, _ in result.samples] == [2, 4, 6]
    assert result.model.step == 6


def test_training_is_deterministic(tiny_gan_config, tumors):
    first = train_gan(tumors, tiny_gan_config)
    second = train_gan(tumors, tiny_gan_config)

    assert first.losses == second.losses
    assert _fingerprints(first.model) == _fingerprints(second.model)


def test_zero_epochs_leave_the_model_untouched(tiny_gan_config, tumors):
    config = dataclasses.replace(tiny_gan_config, epochs=0)

    result = train_gan(tumors, config)

    assert result.losses == []
    assert result.model.step == 0
    assert _fingerprints(result.model) == _fingerprints(GanModel.initialize(config))


def test_resume_matches_uninterrupted_run(tiny_gan_config, tumors):
    full = train_gan(tumors, tiny_gan_config)

    half = GanTrainer(tumors, dataclasses.replace(tiny_gan_config, epochs=1))
    half.run()
    saved = Checkpoint.from_bytes(half.to_checkpoint().to_bytes())

    resumed = GanTrainer.resume(tumors, saved, epochs=2).run()

    assert resumed.model.step == 6
    assert resumed.losses == full.losses
    assert _fingerprints(resumed.model) == _fingerprints(full.model)


def test_model_checkpoint_round_trip(model, tumors):
    gan_train_step(model, tumors.images[:2], Rng(0, 'noise'))

    restored = GanModel.from_checkpoint(Checkpoint.from_bytes(model.to_checkpoint().to_bytes()))

    assert _fingerprints(restored) == _fingerprints(model)
    assert restored.step == 1
    assert restored.d_state.t == 1
    assert restored.config == model.config


def test_checkpoint_with_mismatched_config(model, tiny_gan_config):
    checkpoint = model.to_checkpoint()
    checkpoint.put_json('meta/config', dict(tiny_gan_config.to_dict(), z_dim=16))

    with pytest.raises(CheckpointError):
        GanModel.from_checkpoint(checkpoint)


@pytest.mark.parametrize('dataset', [
    ImageDataset.empty((32, 32)),
    ImageDataset(np.zeros((2, 32, 32)), [1, 0]),
    ImageDataset(np.zeros((2, 16, 16)), [1, 1]),
])
def test_trainer_rejects_datasets(tiny_gan_config, dataset):
    with pytest.raises(DataError):
        GanTrainer(dataset, tiny_gan_config)


def test_generate_images(model):
    synthetic = generate_images(model, 5, Rng(0, 'noise'), batch_size=2)

    assert len(synthetic) == 5
    assert synthetic.count(1) == 5
    assert set(synthetic.provenance) == {'synthetic'}
    assert synthetic.image_size == (32, 32)

    again = generate_images(model, 5, Rng(0, 'noise'), batch_size=5)
    np.testing.assert_allclose(again.images, synthetic.images, atol=1e-12)

    with pytest.raises(ValueError):
        generate_images(model, 0, Rng(0, 'noise'))


def test_batch_cycler_covers_each_pass():
    cycler = BatchCycler(5, 2, Rng(0, 'shuffle'))

    seen = np.concatenate([cycler.next() for _ in range(5)])

    assert sorted(seen[:5]) == [0, 1, 2, 3, 4]
    assert sorted(seen[5:]) == [0, 1, 2, 3, 4]
    assert cycler.passes == 2


def test_tile_grid():
    grid = tile_grid(np.ones((5, 1, 2, 3)), columns=4)

    assert grid.shape == (4, 12)
    assert grid.dtype == np.uint8
    assert grid[:2].min() == 255
    assert grid[2:, :3].min() == 255
    assert grid[2:, 3:].max() == 0
