"""Policy, normalizer, flattening and checkpoint contract tests."""

import json
import math

import numpy as np
import pytest

from policytune.errors import (
    CheckpointFormatError,
    CheckpointNotFoundError,
    CheckpointVersionError,
    DimensionChainError,
    DimensionMismatchError,
    NonFiniteParameterError,
)
from policytune.policy import (
    MlpPolicy,
    ObservationNormalizer,
    dumps_checkpoint,
    flatten,
    forward_mla,
    load_checkpoint,
    normalize,
    normalizer_checksum,
    save_checkpoint,
    unflatten,
)
from policytune.rng import Prng


def identity_normalizer(dim, clip=10.0, eps=1e-8):
    return ObservationNormalizer(np.zeros(dim), np.ones(dim), clip, eps)


def random_policy(rng, dims, clip=10.0):
    norm = ObservationNormalizer(rng.gaussian(dims[0]), rng.uniform(dims[0]) + 0.1, clip, 1e-8)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        layers.append((rng.gaussian(fan_out * fan_in).reshape(fan_out, fan_in),
                       rng.gaussian(fan_out)))
    low = -1.0 - rng.uniform(dims[-1])
    high = 1.0 + rng.uniform(dims[-1])
    return MlpPolicy(layers, norm, low, high)


class TestNormalize:
    def test_identity_case(self):
        # eps must be > 0; with var 1 and tiny eps the scale is ~1 exactly at 0
        norm = ObservationNormalizer([0.0, 0.0], [1.0, 1.0], 10.0, 1e-30)
        assert np.allclose(normalize(norm, [0.0, 0.0]), [0.0, 0.0], atol=0)

    def test_shift_and_scale(self):
        norm = ObservationNormalizer([1.0], [4.0], 10.0, 1e-30)
        assert normalize(norm, [5.0])[0] == pytest.approx(2.0, rel=1e-12)

    def test_clipping_saturates(self):
        norm = ObservationNormalizer([0.0], [1.0], 3.0, 1e-30)
        assert normalize(norm, [100.0])[0] == 3.0
        assert normalize(norm, [-100.0])[0] == -3.0

    def test_dimension_mismatch_names_lengths(self):
        norm = ObservationNormalizer([0.0, 0.0], [1.0, 1.0])
        with pytest.raises(DimensionMismatchError, match="expected length 2, got 3"):
            normalize(norm, [1.0, 2.0, 3.0])

    def test_output_always_within_clip(self):
        rng = Prng(5)
        norm = ObservationNormalizer(rng.gaussian(6), rng.uniform(6), 2.5, 1e-8)
        for _ in range(100):
            out = normalize(norm, rng.gaussian(6) * 1e6)
            assert np.all(out >= -2.5) and np.all(out <= 2.5)

    def test_rejects_bad_fields(self):
        with pytest.raises(DimensionMismatchError):
            ObservationNormalizer([0.0], [1.0, 1.0])
        with pytest.raises(CheckpointFormatError):
            ObservationNormalizer([0.0], [-1.0])
        with pytest.raises(CheckpointFormatError):
            ObservationNormalizer([0.0], [1.0], clip=0.0)
        with pytest.raises(CheckpointFormatError):
            ObservationNormalizer([0.0], [1.0], eps=0.0)
        with pytest.raises(NonFiniteParameterError):
            ObservationNormalizer([np.nan], [1.0])


class TestForwardMla:
    def test_zero_net_gives_midpoint_symmetric(self):
        pol = MlpPolicy([(np.zeros((1, 2)), np.zeros(1))], identity_normalizer(2),
                        [-1.0], [1.0])
        assert forward_mla(pol, [0.3, -0.7]).tolist() == [0.0]

    def test_zero_net_gives_midpoint_offset(self):
        pol = MlpPolicy([(np.zeros((1, 2)), np.zeros(1))], identity_normalizer(2),
                        [0.0], [4.0])
        assert forward_mla(pol, [0.3, -0.7]).tolist() == [2.0]

    def test_single_layer_tanh_value(self):
        # oracle: hand evaluation with math.tanh
        norm = ObservationNormalizer([0.0], [1.0], 10.0, 1e-30)
        pol = MlpPolicy([(np.array([[1.0]]), np.array([0.0]))], norm, [-1.0], [1.0])
        out = forward_mla(pol, [0.5])[0]
        assert out == pytest.approx(0.46211715726000974, abs=1e-15)
        assert out == pytest.approx(math.tanh(0.5), abs=1e-15)

    def test_output_respects_bounds_for_random_nets(self):
        rng = Prng(11)
        for _ in range(30):
            pol = random_policy(rng, (3, 8, 2))
            obs = rng.gaussian(3) * 100.0
            act = forward_mla(pol, obs)
            assert np.all(act >= pol.action_low) and np.all(act <= pol.action_high)

    def test_pure_function_bit_identical(self):
        rng = Prng(12)
        pol = random_policy(rng, (4, 16, 2))
        obs = rng.gaussian(4)
        first = forward_mla(pol, obs)
        for _ in range(1000):
            assert np.array_equal(forward_mla(pol, obs), first)

    def test_dimension_mismatch(self):
        pol = MlpPolicy([(np.zeros((1, 2)), np.zeros(1))], identity_normalizer(2),
                        [-1.0], [1.0])
        with pytest.raises(DimensionMismatchError):
            forward_mla(pol, [1.0])

    def test_nonfinite_weights_rejected_at_construction(self):
        with pytest.raises(NonFiniteParameterError):
            MlpPolicy([(np.array([[np.inf, 0.0]]), np.zeros(1))], identity_normalizer(2),
                      [-1.0], [1.0])


class TestFlattenUnflatten:
    def test_param_count_single_layer(self):
        pol = MlpPolicy([(np.zeros((1, 2)), np.zeros(1))], identity_normalizer(2),
                        [-1.0], [1.0])
        assert pol.param_count == 3
        assert flatten(pol).shape == (3,)

    def test_param_count_two_layer(self):
        # 2 -> 4 -> 1 with biases: (8 + 4) + (4 + 1) = 17
        pol = MlpPolicy([(np.zeros((4, 2)), np.zeros(4)), (np.zeros((1, 4)), np.zeros(1))],
                        identity_normalizer(2), [-1.0], [1.0])
        assert pol.param_count == 17

    def test_round_trip_many_shapes(self):
        rng = Prng(21)
        shapes = [(2, 1), (3, 5, 2), (4, 8, 8, 3), (1, 1), (5, 2, 2, 2, 1)]
        for i in range(100):
            dims = shapes[i % len(shapes)]
            pol = random_policy(rng, dims)
            v = rng.gaussian(pol.param_count)
            assert np.array_equal(flatten(unflatten(pol, v)), v)
            assert unflatten(pol, flatten(pol)) == pol

    def test_unflatten_keeps_normalizer_and_bounds(self):
        rng = Prng(22)
        pol = random_policy(rng, (3, 4, 2))
        before = normalizer_checksum(pol.normalizer)
        new = unflatten(pol, rng.gaussian(pol.param_count))
        assert normalizer_checksum(new.normalizer) == before
        assert new.normalizer is pol.normalizer
        assert np.array_equal(new.action_low, pol.action_low)
        assert np.array_equal(new.action_high, pol.action_high)

    def test_length_mismatch(self):
        pol = random_policy(Prng(23), (2, 2))
        with pytest.raises(DimensionMismatchError):
            unflatten(pol, np.zeros(pol.param_count + 1))

    def test_layout_is_layer_major_row_major(self):
        w0 = np.array([[1.0, 2.0], [3.0, 4.0]])
        b0 = np.array([5.0, 6.0])
        w1 = np.array([[7.0, 8.0]])
        b1 = np.array([9.0])
        pol = MlpPolicy([(w0, b0), (w1, b1)], identity_normalizer(2), [-1.0], [1.0])
        assert flatten(pol).tolist() == [1, 2, 3, 4, 5, 6, 7, 8, 9]


class TestCheckpointIO:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = Prng(31)
        pol = random_policy(rng, (3, 7, 2))
        path = tmp_path / "ckpt.json"
        save_checkpoint(pol, path)
        loaded = load_checkpoint(path)
        assert loaded == pol
        # a second save is byte-identical
        path2 = tmp_path / "ckpt2.json"
        save_checkpoint(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_serialization_uses_17_significant_digits(self):
        norm = ObservationNormalizer([0.1], [1.0], 10.0, 1e-8)
        pol = MlpPolicy([(np.array([[0.1]]), np.array([0.0]))], norm, [-1.0], [1.0])
        text = dumps_checkpoint(pol)
        assert "0.10000000000000001" in text

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointNotFoundError, match="checkpoint not found"):
            load_checkpoint(tmp_path / "nope.json")

    def test_version_error(self, tmp_path):
        pol = random_policy(Prng(32), (2, 1))
        doc = json.loads(dumps_checkpoint(pol))
        doc["format_version"] = 999
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(CheckpointVersionError, match="999"):
            load_checkpoint(path)

    def test_dimension_chain_error(self, tmp_path):
        pol = random_policy(Prng(33), (2, 3, 1))
        doc = json.loads(dumps_checkpoint(pol))
        doc["layers"][1]["in"] = 2  # breaks 3 -> chain
        doc["layers"][1]["weights"] = [0.0, 0.0]
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(DimensionChainError):
            load_checkpoint(path)

    def test_nan_rejected_at_load(self, tmp_path):
        pol = random_policy(Prng(34), (2, 1))
        text = dumps_checkpoint(pol).replace(dumps_checkpoint(pol).split('"weights": [')[1].split(",")[0], "NaN", 1)
        path = tmp_path / "nan.json"
        path.write_text(text)
        with pytest.raises(NonFiniteParameterError):
            load_checkpoint(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{this is not json")
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_defaults_recorded_back_into_saved_file(self, tmp_path):
        # a checkpoint omitting clip/eps loads with defaults and re-saves them explicitly
        pol = random_policy(Prng(35), (2, 1))
        doc = json.loads(dumps_checkpoint(pol))
        del doc["normalizer"]["clip"]
        del doc["normalizer"]["eps"]
        path = tmp_path / "defaults.json"
        path.write_text(json.dumps(doc))
        loaded = load_checkpoint(path)
        assert loaded.normalizer.clip == 10.0
        assert loaded.normalizer.eps == 1e-8
        assert '"clip": 10' in dumps_checkpoint(loaded)

    def test_policies_are_immutable(self):
        pol = random_policy(Prng(36), (2, 2))
        with pytest.raises(ValueError):
            pol.layers[0][0][0, 0] = 99.0
        with pytest.raises(ValueError):
            pol.normalizer.mean[0] = 99.0
