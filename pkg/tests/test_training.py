"""Self-adversarial loss, negative sampling, and base-model training."""

import math

import numpy as np
import pytest

from ankge import (
    BaseTrainConfig,
    DataError,
    DivergenceError,
    EmbeddingModel,
    TripleStore,
    get_family,
    init_model,
    sample_negatives,
    self_adversarial_loss,
    train_base,
)
from ankge.families import log_sigmoid
from ankge.training import _batch_loss_and_grads


def config_with(**kwargs):
    base = dict(
        margin=1.0,
        adversarial_temperature=1.0,
        negative_samples=2,
        batch_size=16,
        learning_rate=1e-3,
        epochs=1,
        dim=4,
        seed=0,
    )
    base.update(kwargs)
    return BaseTrainConfig(**base)


def frozen_softmax(scores, temperature):
    z = temperature * np.asarray(scores, float)
    z = z - np.max(z)
    e = np.exp(z)
    return e / np.sum(e)


def loss_reference(model, positive, negatives, config, p):
    """Loss recomputed with the adversarial weights held fixed."""
    f_pos = model.score_triple_ids(np.asarray(positive))[0]
    f_neg = model.score_triple_ids(negatives)
    return float(
        log_sigmoid(config.margin - f_pos)
        + np.sum(p * log_sigmoid(f_neg - config.margin))
    )


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            config_with(negative_samples=0)
        with pytest.raises(ValueError):
            config_with(batch_size=0)
        with pytest.raises(ValueError):
            config_with(dim=0)
        with pytest.raises(ValueError):
            config_with(epochs=-1)
        with pytest.raises(ValueError):
            config_with(learning_rate=0.0)

    def test_negative_and_zero_margin_allowed(self):
        assert config_with(margin=-8.0).margin == -8.0
        assert config_with(margin=0.0).margin == 0.0


class TestLossValues:
    def transe_micro_model(self):
        fam = get_family("transe")
        entity = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        relation = np.array([[1.0, 0.0]])
        return EmbeddingModel(family=fam, dim=2, entity_emb=entity, relation_emb=relation)

    def test_hand_case_against_scalar_recomputation(self):
        model = self.transe_micro_model()
        config = config_with(margin=1.0, adversarial_temperature=1.0)
        positive = np.array([0, 0, 1])  # score 0
        negatives = np.array([[0, 0, 2], [0, 0, 0]])  # scores -2, -1
        p0 = 1.0 / (1.0 + math.e)
        p1 = math.e / (1.0 + math.e)

        def logsig(x):
            return -math.log1p(math.exp(-x))

        expected = logsig(1.0) + p0 * logsig(-3.0) + p1 * logsig(-2.0)
        loss, _ = self_adversarial_loss(model, positive, negatives, config)
        assert loss == pytest.approx(expected, abs=1e-10)

    def test_singleton_negative_has_unit_weight(self, make_model):
        model = make_model("transe", seed=2)
        positive = np.array([0, 1, 2])
        negative = np.array([[0, 1, 5]])
        for temp in (0.1, 1.0, 7.0):
            config = config_with(adversarial_temperature=temp, negative_samples=1)
            loss, _ = self_adversarial_loss(model, positive, negative, config)
            assert loss == pytest.approx(
                loss_reference(model, positive, negative, config, np.array([1.0])), abs=1e-12
            )

    def test_duplicated_negative_equals_singleton(self, make_model):
        # two identical negatives share the weight mass, so the sum collapses
        model = make_model("pairre", seed=3)
        config = config_with()
        positive = np.array([1, 0, 4])
        single = np.array([[1, 0, 6]])
        double = np.array([[1, 0, 6], [1, 0, 6]])
        loss_single, _ = self_adversarial_loss(model, positive, single, config)
        loss_double, _ = self_adversarial_loss(model, positive, double, config)
        assert loss_double == pytest.approx(loss_single, abs=1e-12)

    def test_temperature_limits(self, make_model):
        model = make_model("transe", seed=4)
        positive = np.array([0, 1, 2])
        negatives = np.array([[0, 1, 3], [0, 1, 5], [0, 1, 6]])
        f_neg = model.score_triple_ids(negatives)

        config = config_with(adversarial_temperature=1e-9, negative_samples=3)
        loss, _ = self_adversarial_loss(model, positive, negatives, config)
        uniform = np.full(3, 1.0 / 3.0)
        assert loss == pytest.approx(
            loss_reference(model, positive, negatives, config, uniform), abs=1e-8
        )

        config = config_with(adversarial_temperature=200.0, negative_samples=3)
        loss, _ = self_adversarial_loss(model, positive, negatives, config)
        hard = np.zeros(3)
        hard[np.argmax(f_neg)] = 1.0
        assert loss == pytest.approx(
            loss_reference(model, positive, negatives, config, hard), abs=1e-6
        )

    def test_rejects_empty_or_misshapen_negatives(self, make_model):
        model = make_model("transe")
        config = config_with()
        with pytest.raises(DataError):
            self_adversarial_loss(model, [0, 0, 1], np.empty((0, 3), dtype=np.int64), config)
        with pytest.raises(DataError):
            self_adversarial_loss(model, [0, 0, 1], np.array([[1, 2]]), config)


class TestLossGradients:
    @pytest.mark.parametrize("family", ["transe", "rotate", "hake", "pairre"])
    def test_fd_with_frozen_weights(self, family, make_model):
        """Analytic gradients treat the adversarial weights as constants."""
        model = make_model(family, num_entities=8, num_relations=3, dim=3, seed=17)
        config = config_with(margin=0.5, adversarial_temperature=1.3, negative_samples=4)
        rng = np.random.default_rng(18)
        positive = np.array([0, 1, 2])
        negatives = np.stack(
            [np.full(4, 0), np.full(4, 1), rng.integers(0, 8, size=4)], axis=1
        )
        loss0, grads = self_adversarial_loss(model, positive, negatives, config)
        p = frozen_softmax(
            model.score_triple_ids(negatives), config.adversarial_temperature
        )
        assert loss0 == pytest.approx(
            loss_reference(model, positive, negatives, config, p), abs=1e-12
        )
        step = 1e-5

        def fd_rows(table, ids, analytic):
            for row_pos, row_id in enumerate(ids):
                numeric = np.zeros(table.shape[1])
                for j in range(table.shape[1]):
                    orig = table[row_id, j]
                    table[row_id, j] = orig + step
                    hi = loss_reference(model, positive, negatives, config, p)
                    table[row_id, j] = orig - step
                    lo = loss_reference(model, positive, negatives, config, p)
                    table[row_id, j] = orig
                    numeric[j] = (hi - lo) / (2.0 * step)
                denom = max(np.linalg.norm(analytic[row_pos]), np.linalg.norm(numeric), 1e-10)
                assert np.linalg.norm(analytic[row_pos] - numeric) / denom < 1e-4

        fd_rows(model.entity_emb, grads.entity_ids, grads.entity_grads)
        fd_rows(model.relation_emb, grads.relation_ids, grads.relation_grads)
        if model.family.uses_mix:
            numeric = np.zeros_like(model.mix)
            for j in range(model.mix.shape[0]):
                orig = model.mix[j]
                model.mix[j] = orig + step
                hi = loss_reference(model, positive, negatives, config, p)
                model.mix[j] = orig - step
                lo = loss_reference(model, positive, negatives, config, p)
                model.mix[j] = orig
                numeric[j] = (hi - lo) / (2.0 * step)
            denom = max(np.linalg.norm(grads.mix_grad), np.linalg.norm(numeric), 1e-10)
            assert np.linalg.norm(grads.mix_grad - numeric) / denom < 1e-4

    def test_touched_ids_unique_and_sorted(self, make_model):
        model = make_model("transe", seed=5)
        config = config_with()
        loss, grads = self_adversarial_loss(
            model, [2, 1, 2], np.array([[2, 1, 0], [2, 1, 2]]), config
        )
        assert np.all(np.diff(grads.entity_ids) > 0)
        assert np.all(np.diff(grads.relation_ids) >= 1) or grads.relation_ids.shape[0] == 1


class TestBatchPath:
    @pytest.mark.parametrize("family", ["transe", "hake"])
    def test_batch_equals_mean_of_singles(self, family, make_model):
        model = make_model(family, num_entities=10, num_relations=4, dim=3, seed=6)
        config = config_with(negative_samples=3)
        rng = np.random.default_rng(7)
        batch = np.stack(
            [
                rng.integers(0, 10, size=5),
                rng.integers(0, 4, size=5),
                rng.integers(0, 10, size=5),
            ],
            axis=1,
        )
        neg_tails = rng.integers(0, 10, size=(5, 3))
        loss_batch, grads_batch = _batch_loss_and_grads(model, batch, neg_tails, config)

        singles = []
        ent_acc: dict[int, np.ndarray] = {}
        rel_acc: dict[int, np.ndarray] = {}
        mix_acc = np.zeros_like(model.mix)
        for i in range(batch.shape[0]):
            negs = np.tile(batch[i], (3, 1))
            negs[:, 2] = neg_tails[i]
            loss_i, grads_i = self_adversarial_loss(model, batch[i], negs, config)
            singles.append(loss_i)
            for row_id, row in zip(grads_i.entity_ids, grads_i.entity_grads):
                ent_acc[int(row_id)] = ent_acc.get(int(row_id), 0.0) + row
            for row_id, row in zip(grads_i.relation_ids, grads_i.relation_grads):
                rel_acc[int(row_id)] = rel_acc.get(int(row_id), 0.0) + row
            if grads_i.mix_grad is not None:
                mix_acc += grads_i.mix_grad

        assert loss_batch == pytest.approx(np.mean(singles), abs=1e-12)
        assert sorted(ent_acc) == list(grads_batch.entity_ids)
        for row_id, row in zip(grads_batch.entity_ids, grads_batch.entity_grads):
            np.testing.assert_allclose(row, ent_acc[int(row_id)] / 5.0, atol=1e-14)
        for row_id, row in zip(grads_batch.relation_ids, grads_batch.relation_grads):
            np.testing.assert_allclose(row, rel_acc[int(row_id)] / 5.0, atol=1e-14)
        if model.family.uses_mix:
            np.testing.assert_allclose(grads_batch.mix_grad, mix_acc / 5.0, atol=1e-14)


class TestSampleNegatives:
    def test_tail_only_corruption(self, tiny_store):
        rng = np.random.default_rng(0)
        triple = tiny_store.train[3]
        negs = sample_negatives(tiny_store, triple, 20, rng)
        assert negs.shape == (20, 3)
        assert np.all(negs[:, 0] == triple[0])
        assert np.all(negs[:, 1] == triple[1])
        assert np.all((0 <= negs[:, 2]) & (negs[:, 2] < tiny_store.num_entities))

    def test_reproducible(self, tiny_store):
        a = sample_negatives(tiny_store, tiny_store.train[0], 10, np.random.default_rng(5))
        b = sample_negatives(tiny_store, tiny_store.train[0], 10, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_single_entity_universe(self):
        store = TripleStore(
            entities=["only"],
            relations=["r"],
            train=np.array([[0, 0, 0]]),
            valid=np.empty((0, 3), dtype=np.int64),
            test=np.empty((0, 3), dtype=np.int64),
            augmented=True,
        )
        negs = sample_negatives(store, [0, 0, 0], 4, np.random.default_rng(0))
        assert np.all(negs[:, 2] == 0)

    def test_rejects_nonpositive_count(self, tiny_store):
        with pytest.raises(ValueError):
            sample_negatives(tiny_store, tiny_store.train[0], 0, np.random.default_rng(0))


class TestTrainBase:
    def test_requires_augmented_store(self):
        from ankge import build_store

        store = build_store([("a", "r", "b")])
        with pytest.raises(DataError, match="augmented"):
            train_base(store, "transe", config_with(), verbose=False)

    def test_requires_nonempty_train(self):
        store = TripleStore(
            entities=["a"],
            relations=["r"],
            train=np.empty((0, 3), dtype=np.int64),
            valid=np.empty((0, 3), dtype=np.int64),
            test=np.empty((0, 3), dtype=np.int64),
            augmented=True,
        )
        with pytest.raises(DataError, match="empty"):
            train_base(store, "transe", config_with(), verbose=False)

    def test_zero_epochs_returns_margin_scaled_init(self, tiny_store):
        config = config_with(margin=-8.0, epochs=0, dim=4, seed=9)
        model = train_base(tiny_store, "transe", config, verbose=False)
        rng = np.random.default_rng(9)
        expected, _ = init_model(
            "transe",
            tiny_store.num_entities,
            tiny_store.num_relations,
            4,
            rng,
            (abs(config.margin) + 2.0) / config.dim,
        )
        np.testing.assert_array_equal(model.entity_emb, expected.entity_emb)
        np.testing.assert_array_equal(model.relation_emb, expected.relation_emb)

    def test_deterministic(self, tiny_store):
        config = config_with(epochs=3, dim=4, seed=21, margin=-4.0)
        a = train_base(tiny_store, "rotate", config, verbose=False)
        b = train_base(tiny_store, "rotate", config, verbose=False)
        assert a.digest() == b.digest()

    def test_seed_changes_result(self, tiny_store):
        a = train_base(tiny_store, "transe", config_with(epochs=1, seed=1), verbose=False)
        b = train_base(tiny_store, "transe", config_with(epochs=1, seed=2), verbose=False)
        assert a.digest() != b.digest()

    def test_training_log_written(self, tiny_store, tmp_path):
        log = tmp_path / "logs" / "train.csv"
        train_base(tiny_store, "transe", config_with(epochs=2), log_path=log, verbose=False)
        lines = log.read_text().strip().splitlines()
        assert lines[0] == "epoch,loss,wall_time"
        assert len(lines) == 3
        assert lines[1].startswith("1,")

    def test_on_step_called_per_batch(self, tiny_store):
        calls = []
        config = config_with(epochs=3, batch_size=7)
        train_base(
            tiny_store, "transe", config, verbose=False, on_step=lambda m: calls.append(m)
        )
        batches_per_epoch = math.ceil(tiny_store.train.shape[0] / 7)
        assert len(calls) == 3 * batches_per_epoch

    def test_hake_modulus_positive_at_every_step(self, tiny_store):
        mins = []
        config = config_with(epochs=2, dim=3, learning_rate=0.1, margin=-4.0)

        def check(model):
            k = model.dim
            mins.append(float(np.min(model.relation_emb[:, :k])))

        train_base(tiny_store, "hake", config, verbose=False, on_step=check)
        assert mins and min(mins) > 0.0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_raises(self, tiny_store):
        config = config_with(
            margin=-8.0, learning_rate=1e250, epochs=3, dim=4, negative_samples=4
        )
        with pytest.raises(DivergenceError, match="non-finite"):
            train_base(tiny_store, "hake", config, verbose=False)

    def test_learns_separation_on_tiny_graph(self, tiny_store):
        """Gold triples end up scored clearly above random corruptions."""
        config = BaseTrainConfig(
            margin=-8.0,
            adversarial_temperature=1.0,
            negative_samples=4,
            batch_size=16,
            learning_rate=2e-3,
            epochs=200,
            dim=8,
            seed=1,
        )
        model = train_base(tiny_store, "transe", config, verbose=False)
        gold = model.score_triple_ids(tiny_store.train)
        rng = np.random.default_rng(99)
        corrupt = []
        for triple in tiny_store.train:
            negs = sample_negatives(tiny_store, triple, 8, rng)
            keep = negs[:, 2] != triple[2]
            if keep.any():
                corrupt.append(model.score_triple_ids(negs[keep]))
        corrupt = np.concatenate(corrupt)
        assert gold.mean() > corrupt.mean() + 0.5
