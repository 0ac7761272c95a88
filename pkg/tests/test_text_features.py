import json

import numpy as np
import pytest

from vtfusion import text_features as tf

from oracles import chi2_cdf_quad, covariance_eigen_reference


class TestTokenize:
    def test_basic(self):
        assert tf.tokenize("Stop SHOUTING now!") == ["stop", "shouting", "now"]

    def test_contractions_collapse(self):
        assert tf.tokenize("don't") == ["dont"]

    def test_numbers_kept(self):
        assert tf.tokenize("call 911 now") == ["call", "911", "now"]

    def test_punctuation_only_dropped(self):
        assert tf.tokenize("... -- !!") == []

    def test_empty(self):
        assert tf.tokenize("") == []


class TestLexicon:
    def test_wildcard_prefix_match(self):
        lex = tf.Lexicon(categories={"anger": ["kill*", "rage"]})
        match = lex.matcher("anger")
        assert match("killing")
        assert match("kill")
        assert match("rage")
        assert not match("raged")
        assert not match("skill")

    def test_empty_category_rejected(self):
        with pytest.raises(ValueError):
            tf.Lexicon(categories={"x": []})

    def test_uppercase_pattern_rejected(self):
        with pytest.raises(ValueError):
            tf.Lexicon(categories={"x": ["Bad"]})

    def test_load_lexicon(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("# comment\nanger: kill* rage\nswear: damn*\n")
        lex = tf.load_lexicon(path)
        assert lex.category_names == ["anger", "swear"]
        assert lex.matcher("swear")("damnit")

    def test_load_lexicon_duplicate_category(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("a: x\na: y\n")
        with pytest.raises(ValueError, match="duplicate"):
            tf.load_lexicon(path)


class TestCategoryCounts:
    def test_proportions(self):
        lex = tf.Lexicon(categories={"anger": ["kill*"], "function": ["i", "you"]})
        vec = tf.category_counts(["i", "will", "kill", "you"], lex)
        np.testing.assert_allclose(vec.proportions, [0.25, 0.5])
        assert vec.token_count == 4

    def test_empty_tokens(self):
        vec = tf.category_counts([], tf.default_lexicon())
        np.testing.assert_array_equal(vec.proportions, 0.0)
        assert vec.token_count == 0

    def test_default_lexicon_sane(self):
        vec = tf.category_counts(tf.tokenize("I hate this and I will fight"),
                                 tf.default_lexicon())
        by_name = dict(zip(vec.category_names, vec.proportions))
        assert by_name["anger"] > 0
        assert by_name["function"] > 0


class TestPca:
    def test_recovers_dominant_direction(self, rng):
        direction = np.array([3.0, 4.0]) / 5.0
        data = rng.normal(0, 1, (500, 1)) * direction + rng.normal(0, 0.01, (500, 2))
        model = tf.pca_fit(data, variance_target=0.9)
        assert model.n_components == 1
        assert abs(np.dot(model.components[0], direction)) == pytest.approx(1.0, abs=1e-3)

    def test_variance_target_one_keeps_all(self, rng):
        data = rng.normal(0, 1, (50, 4))
        model = tf.pca_fit(data, variance_target=1.0)
        assert model.n_components == 4
        assert model.explained_variance_ratio.sum() == pytest.approx(1.0)

    def test_ratios_match_covariance_eigen(self, rng):
        data = rng.normal(0, 1, (80, 6)) @ rng.normal(0, 1, (6, 6))
        model = tf.pca_fit(data, variance_target=1.0)
        want = covariance_eigen_reference(data)
        np.testing.assert_allclose(model.explained_variance_ratio, want, atol=1e-10)

    def test_components_orthonormal(self, rng):
        data = rng.normal(0, 1, (60, 5))
        model = tf.pca_fit(data, variance_target=1.0)
        gram = model.components @ model.components.T
        np.testing.assert_allclose(gram, np.eye(model.n_components), atol=1e-10)

    def test_sign_normalization(self, rng):
        data = rng.normal(0, 1, (60, 5))
        model = tf.pca_fit(data, variance_target=1.0)
        for row in model.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_transform_centers(self, rng):
        data = rng.normal(3.0, 1.0, (100, 4))
        model = tf.pca_fit(data, variance_target=1.0)
        proj = tf.pca_transform(model, data)
        np.testing.assert_allclose(proj.mean(axis=0), 0.0, atol=1e-10)

    def test_transform_single_vector(self, rng):
        data = rng.normal(0, 1, (30, 3))
        model = tf.pca_fit(data)
        out = tf.pca_transform(model, data[0])
        assert out.shape == (model.n_components,)

    def test_zero_variance_degenerate(self):
        data = np.full((10, 3), 2.0)
        model = tf.pca_fit(data)
        assert model.n_components == 1
        np.testing.assert_array_equal(model.explained_variance_ratio, [0.0])

    def test_reconstruction_with_all_components(self, rng):
        data = rng.normal(0, 1, (40, 4))
        model = tf.pca_fit(data, variance_target=1.0)
        proj = tf.pca_transform(model, data)
        recon = proj @ model.components + model.mean
        np.testing.assert_allclose(recon, data, atol=1e-10)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            tf.pca_fit(np.zeros((1, 3)))
        with pytest.raises(ValueError):
            tf.pca_fit(np.zeros((5, 3)), variance_target=0.0)


class TestBartlett:
    def test_correlated_data_rejects_sphericity(self, rng):
        base = rng.normal(0, 1, (200, 1))
        data = np.hstack([base + rng.normal(0, 0.1, (200, 1)) for _ in range(4)])
        out = tf.bartlett_sphericity(data)
        assert out["p_value"] < 1e-6
        assert out["dof"] == 6

    def test_independent_data_large_p(self, rng):
        data = rng.normal(0, 1, (500, 4))
        out = tf.bartlett_sphericity(data)
        assert out["p_value"] > 0.01

    def test_p_value_matches_quadrature(self, rng):
        data = rng.normal(0, 1, (100, 3))
        data[:, 1] += 0.4 * data[:, 0]
        out = tf.bartlett_sphericity(data)
        want = 1.0 - chi2_cdf_quad(out["statistic"], out["dof"])
        assert out["p_value"] == pytest.approx(want, abs=1e-8)

    def test_singular_correlation_flagged(self, rng):
        col = rng.normal(0, 1, (50, 1))
        data = np.hstack([col, 2.0 * col, rng.normal(0, 1, (50, 1))])
        out = tf.bartlett_sphericity(data)
        assert out["singular"]
        assert out["p_value"] == 0.0

    def test_zero_variance_column_rejected(self):
        data = np.zeros((10, 3))
        data[:, 0] = np.arange(10)
        with pytest.raises(ValueError, match="zero-variance"):
            tf.bartlett_sphericity(data)

    def test_needs_more_rows_than_columns(self, rng):
        with pytest.raises(ValueError):
            tf.bartlett_sphericity(rng.normal(0, 1, (3, 5)))


class TestEmbeddings:
    def test_load_roundtrip(self, tmp_path, rng):
        path = tmp_path / "emb.jsonl"
        vec = rng.normal(0, 1, 768)
        with open(path, "w") as fh:
            fh.write(json.dumps({"id": "s1", "vec": vec.tolist()}) + "\n")
        records = tf.load_embeddings(path)
        assert set(records) == {"s1"}
        np.testing.assert_allclose(records["s1"].vector, vec)

    def test_wrong_dimension_rejected(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text(json.dumps({"id": "s1", "vec": [0.0] * 10}) + "\n")
        with pytest.raises(ValueError, match="dimension"):
            tf.load_embeddings(path)

    def test_record_validation(self):
        with pytest.raises(ValueError):
            tf.EmbeddingRecord("x", np.zeros(7))
        with pytest.raises(ValueError):
            tf.EmbeddingRecord("x", np.full(768, np.nan))

    def test_hash_embedding_deterministic_and_unit(self):
        a = tf.hash_embedding("some transcript")
        b = tf.hash_embedding("some transcript")
        c = tf.hash_embedding("another transcript")
        np.testing.assert_array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0)
        assert not np.allclose(a, c)
        assert a.shape == (768,)
