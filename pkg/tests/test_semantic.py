import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from ctxsal.context import Context, classify
from ctxsal.core import VOC_CLASSES, VOID
from ctxsal.exceptions import MalformedConfigFile, MissingUserLut
from ctxsal.semantic import (
    LutBank,
    SaliencyLut,
    apply_lut,
    default_lut_bank,
    format_lut_bank,
    load_lut_bank,
    save_lut_bank,
    select_lut,
    semantic_saliency,
)

DOG = VOC_CLASSES.index("dog")


def labels_strategy():
    return arrays(np.int64, (5, 6), elements=st.sampled_from(list(range(21)) + [VOID]))


def random_lut(rng, name="r"):
    return SaliencyLut(name, rng.random(21), float(rng.random()))


class TestApplyLut:
    def test_background_constant(self):
        lut = default_lut_bank().contexts[Context.PET]
        np.testing.assert_array_equal(apply_lut(np.zeros((3, 4), int), lut), np.full((3, 4), 0.1))

    def test_indicator_lut(self, rng):
        w = np.zeros(21)
        w[DOG] = 1.0
        labels = rng.choice([0, 7, DOG, VOID], size=(6, 6))
        np.testing.assert_array_equal(apply_lut(labels, SaliencyLut("dog", w)), labels == DOG)

    def test_matches_lookup_oracle(self, rng):
        for _ in range(10):
            labels = rng.choice(list(range(21)) + [VOID], size=(8, 8))
            lut = random_lut(rng)
            ref = oracles.lut_lookup(labels.tolist(), lut.weights.tolist(), lut.void_weight)
            np.testing.assert_array_equal(apply_lut(labels, lut), ref)

    @given(labels_strategy(), st.randoms(use_true_random=False))
    def test_permutation_commutes(self, labels, rnd):
        lut = random_lut(np.random.default_rng(rnd.randint(0, 2**32)))
        perm = np.arange(labels.size)
        rnd.shuffle(perm)
        permuted = labels.ravel()[perm].reshape(labels.shape)
        np.testing.assert_array_equal(apply_lut(permuted, lut).ravel(), apply_lut(labels, lut).ravel()[perm])

    @given(labels_strategy())
    def test_codomain(self, labels):
        lut = random_lut(np.random.default_rng(0))
        allowed = set(lut.weights.tolist()) | {lut.void_weight}
        assert set(apply_lut(labels, lut).ravel().tolist()) <= allowed

    @given(labels_strategy(), st.integers(0, 20), st.integers(0, 20))
    def test_swapping_weights(self, labels, a, b):
        lut = random_lut(np.random.default_rng(1))
        w = lut.weights.copy()
        w[a], w[b] = w[b], w[a]
        swapped = SaliencyLut("s", w, lut.void_weight)
        out, out2 = apply_lut(labels, lut), apply_lut(labels, swapped)
        untouched = (labels != a) & (labels != b)
        np.testing.assert_array_equal(out[untouched], out2[untouched])
        np.testing.assert_array_equal(out2[labels == a], lut.weights[b])
        np.testing.assert_array_equal(out2[labels == b], lut.weights[a])

    @pytest.mark.parametrize("weights", [np.full(21, 1.5), np.zeros(20), np.full(21, np.nan)])
    def test_invalid_lut(self, weights):
        with pytest.raises(ValueError):
            SaliencyLut("bad", weights)


class TestSelectLut:
    def test_keyed(self):
        bank = default_lut_bank()
        assert select_lut(bank, Context.VEHICLE) is bank.contexts[Context.VEHICLE]

    def test_user_precedence(self, rng):
        base = default_lut_bank()
        user = random_lut(rng, "user")
        bank = LutBank(base.contexts, user)
        for ctx in Context:
            assert select_lut(bank, ctx, user_override=True) is user

    def test_missing_user(self):
        with pytest.raises(MissingUserLut):
            select_lut(default_lut_bank(), Context.PET, user_override=True)

    def test_bank_needs_all_contexts(self):
        contexts = dict(default_lut_bank().contexts)
        del contexts[Context.INDOOR]
        with pytest.raises(ValueError):
            LutBank(contexts)


class TestDefaults:
    def test_weights(self):
        bank = default_lut_bank()
        pet = bank.contexts[Context.PET]
        assert pet.weights[VOC_CLASSES.index("cat")] == 1.0
        assert pet.weights[DOG] == 1.0
        assert pet.weights[VOC_CLASSES.index("person")] == 0.8
        assert pet.weights[VOC_CLASSES.index("car")] == 0.4
        assert pet.weights[0] == 0.1 and pet.void_weight == 0.0
        vehicle = bank.contexts[Context.VEHICLE]
        assert vehicle.weights[VOC_CLASSES.index("train")] == 1.0
        assert bank.contexts[Context.OTHERS].weights[VOC_CLASSES.index("person")] == 1.0
        assert bank.user is None

    def test_packaged_file_matches_code(self):
        assert load_lut_bank() == default_lut_bank()


class TestLutFiles:
    def test_round_trip_with_user(self, tmp_path, rng):
        bank = LutBank(default_lut_bank().contexts, random_lut(rng, "user"))
        path = tmp_path / "bank.cfg"
        save_lut_bank(bank, path)
        loaded = load_lut_bank(path)
        assert loaded.user == bank.user
        for ctx in Context:
            np.testing.assert_array_equal(loaded.contexts[ctx].weights, bank.contexts[ctx].weights)

    def test_missing_key(self, tmp_path):
        text = format_lut_bank(default_lut_bank()).replace("dog = 1.0\n", "", 1)
        path = tmp_path / "bank.cfg"
        path.write_text(text)
        with pytest.raises(MalformedConfigFile, match="dog"):
            load_lut_bank(path)

    def test_missing_section(self, tmp_path):
        text = format_lut_bank(default_lut_bank())
        path = tmp_path / "bank.cfg"
        path.write_text(text.split("[vehicle]")[0])
        with pytest.raises(MalformedConfigFile, match="Vehicle"):
            load_lut_bank(path)

    @pytest.mark.parametrize("old, new", [("[pet]", "[jungle]"), ("cat = 1.0", "cat = 2.0"),
                                          ("cat = 1.0", "cat = high"), ("cat = 1.0", "kat = 1.0")])
    def test_bad_content(self, tmp_path, old, new):
        path = tmp_path / "bank.cfg"
        path.write_text(format_lut_bank(default_lut_bank()).replace(old, new, 1))
        with pytest.raises(MalformedConfigFile):
            load_lut_bank(path)


class TestSemanticSaliency:
    def test_dog_image_uses_pet_lut(self, quick_model):
        labels = np.zeros((20, 20), int)
        labels[3:17, 3:17] = DOG
        labels[0, :] = VOID
        bank = default_lut_bank()
        smap, ctx = semantic_saliency(labels, bank, quick_model)
        assert ctx is Context.PET == classify(quick_model, labels)
        expected = oracles.lut_lookup(labels.tolist(), bank.contexts[Context.PET].weights.tolist(), 0.0)
        np.testing.assert_array_equal(smap, expected)
        assert np.all(smap[labels == DOG] == 1.0)

    def test_all_background(self, quick_model):
        bank = default_lut_bank()
        smap, ctx = semantic_saliency(np.zeros((4, 4), int), bank, quick_model)
        np.testing.assert_array_equal(smap, bank.contexts[ctx].weights[0])

    def test_deterministic(self, quick_model, rng):
        labels = rng.choice([0, 7, DOG, 15], size=(10, 10))
        a = semantic_saliency(labels, default_lut_bank(), quick_model)
        b = semantic_saliency(labels, default_lut_bank(), quick_model)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]

    def test_user_override(self, quick_model, rng):
        user = random_lut(rng, "user")
        bank = LutBank(default_lut_bank().contexts, user)
        labels = rng.choice([0, 7, DOG], size=(6, 6))
        smap, _ = semantic_saliency(labels, bank, quick_model, user_override=True)
        np.testing.assert_array_equal(smap, apply_lut(labels, user))
