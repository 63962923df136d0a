import json

import numpy as np
import pytest

from rdposterior.data import (
    DatasetError,
    PreprocessConfig,
    TabularDataset,
    load_csv,
    load_schema,
    preprocess_glm,
    synth_bernoulli,
    synth_glm,
    write_matrix_csv,
)
from rdposterior.glm import inv_link

SCHEMA = {"sex": "categorical", "length": "numeric", "rings": "label"}


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_well_formed(self, tmp_path):
        path = write(tmp_path, "sex,length,rings\nM,0.5,9\nF,0.7,12\nI,0.1,3\n")
        ds = load_csv(path, SCHEMA)
        assert len(ds) == 3
        assert ds.rows[0] == {"sex": "M", "length": 0.5, "rings": "9"}
        assert ds.label_column == "rings"

    def test_missing_field_names_line(self, tmp_path):
        path = write(tmp_path, "sex,length,rings\nM,0.5,9\nF,0.7\n")
        with pytest.raises(DatasetError, match="line 3"):
            load_csv(path, SCHEMA)

    def test_bad_numeric_names_line_and_column(self, tmp_path):
        path = write(tmp_path, "sex,length,rings\nM,abc,9\n")
        with pytest.raises(DatasetError, match="line 2.*length"):
            load_csv(path, SCHEMA)

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "")
        ds = load_csv(path, SCHEMA)
        assert len(ds) == 0
        assert ds.columns == list(SCHEMA)

    def test_header_schema_mismatch(self, tmp_path):
        path = write(tmp_path, "sex,width,rings\nM,0.5,9\n")
        with pytest.raises(DatasetError):
            load_csv(path, SCHEMA)

    def test_schema_loader(self, tmp_path):
        path = tmp_path / "schema.json"
        path.write_text(json.dumps(SCHEMA), encoding="utf-8")
        assert load_schema(path) == SCHEMA
        bad = tmp_path / "bad.json"
        bad.write_text("[]", encoding="utf-8")
        with pytest.raises(DatasetError):
            load_schema(bad)

    def test_label_column_required(self):
        with pytest.raises(DatasetError):
            TabularDataset("x", ["a"], {"a": "numeric"})


def abalone_like(n=90, seed=5):
    gen = np.random.Generator(np.random.PCG64(seed))
    rows = ["sex,length,diam,height,whole,shucked,viscera,shell,extra,rings"]
    for _ in range(n):
        sex = gen.choice(["M", "F", "I"])
        nums = gen.uniform(0.05, 1.5, size=8)
        rings = gen.integers(1, 25)
        rows.append(",".join([sex] + [f"{v:.4f}" for v in nums] + [str(rings)]))
    schema = {"sex": "categorical", "rings": "label"}
    for col in ("length", "diam", "height", "whole", "shucked", "viscera", "shell", "extra"):
        schema[col] = "numeric"
    return "\n".join(rows) + "\n", schema


class TestPreprocess:
    def make(self, tmp_path):
        text, schema = abalone_like()
        ds = load_csv(write(tmp_path, text), schema)
        cfg = PreprocessConfig(split_seed=3, label_rule=lambda v: int(float(v) < 10))
        return preprocess_glm(ds, cfg)

    def test_rows_unit_norm(self, tmp_path):
        split = self.make(tmp_path)
        for mat in (split.train_x, split.test_x):
            assert np.allclose(np.linalg.norm(mat, axis=1), 1.0, atol=1e-12)
        assert split.c == 1.0

    def test_one_hot_expansion_counts(self, tmp_path):
        split = self.make(tmp_path)
        # 1 categorical with 3 observed levels (full encoding) + 8 numerics.
        # The quoted "9 dimensions" for this schema corresponds to the raw
        # column count; the full one-hot convention gives 11 and the
        # difference is surfaced here rather than absorbed.
        assert split.train_x.shape[1] == 11
        assert split.train_x.shape[1] != 9
        assert [n for n in split.feature_names if n.startswith("sex=")] == [
            "sex=F", "sex=I", "sex=M"]

    def test_split_disjoint_exhaustive_deterministic(self, tmp_path):
        text, schema = abalone_like()
        ds = load_csv(write(tmp_path, text), schema)
        cfg = PreprocessConfig(split_seed=3, label_rule=lambda v: int(float(v) < 10))
        a = preprocess_glm(ds, cfg)
        b = preprocess_glm(ds, cfg)
        assert np.array_equal(a.train_x, b.train_x)
        assert np.array_equal(a.test_x, b.test_x)
        assert len(a.train_y) + len(a.test_y) == len(ds)
        assert len(a.test_y) == round(len(ds) / 3)

    def test_out_of_range_test_values_clip_to_train_max(self, tmp_path):
        # two sentinel rows: one beyond the train range, one exactly at its
        # max; once both land in the test split, clipping must make their
        # processed feature vectors identical
        lengths = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 7.0, 100.0]
        markers = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 55.0, 55.0]
        text = "length,marker,rings\n" + "".join(
            f"{l},{m},1\n" for l, m in zip(lengths, markers)
        )
        schema = {"length": "numeric", "marker": "numeric", "rings": "label"}
        ds = load_csv(write(tmp_path, text), schema)
        for seed in range(200):
            # replay the split permutation to find a seed that sends both
            # sentinels (original rows 8 and 9) to the test side
            perm = np.random.Generator(np.random.PCG64(seed)).permutation(10)
            test_idx = list(perm[:3])
            if not {8, 9} <= set(test_idx):
                continue
            cfg = PreprocessConfig(test_fraction=0.3, split_seed=seed,
                                   label_rule=lambda v: int(float(v) >= 1))
            split = preprocess_glm(ds, cfg)
            a, b = test_idx.index(8), test_idx.index(9)
            assert np.allclose(split.test_x[a], split.test_x[b], atol=1e-12)
            return
        pytest.fail("sentinel rows never landed together in the test split")

    def test_constant_feature_scales_to_zero(self, tmp_path):
        text = "sex,length,rings\nM,2.0,1\nF,2.0,0\nM,2.0,1\nF,2.0,0\n"
        schema = {"sex": "categorical", "length": "numeric", "rings": "label"}
        ds = load_csv(write(tmp_path, text), schema)
        split = preprocess_glm(ds, PreprocessConfig(split_seed=1))
        idx = split.feature_names.index("length")
        assert np.all(split.train_x[:, idx] == 0.0)

    def test_unseen_test_category_is_zero_block(self, tmp_path):
        from rdposterior.data import _expand

        kinds = {"sex": "categorical", "length": "numeric", "rings": "label"}
        rows = [{"sex": "Z", "length": 0.4, "rings": "1"},
                {"sex": "M", "length": 0.2, "rings": "0"}]
        # categories fit on a train split that never saw Z
        mat = _expand(rows, ["sex", "length", "rings"], kinds, {"sex": ["F", "M"]})
        assert np.array_equal(mat[0, :2], [0.0, 0.0])
        assert np.array_equal(mat[1, :2], [0.0, 1.0])

    def test_unseen_test_category_processes_cleanly(self, tmp_path):
        # Z only ever appears once; whenever the split sends it to the test
        # side the pipeline must still produce unit-norm rows
        text = "sex,length,rings\n" + "".join(
            f"{'M' if i else 'Z'},{0.1 * (i + 1):.2f},{i % 2}\n" for i in range(12)
        )
        schema = {"sex": "categorical", "length": "numeric", "rings": "label"}
        ds = load_csv(write(tmp_path, text), schema)
        for seed in range(40):
            split = preprocess_glm(ds, PreprocessConfig(split_seed=seed))
            if "sex=Z" not in split.feature_names:
                assert np.allclose(np.linalg.norm(split.test_x, axis=1), 1.0, atol=1e-12)
                return
        pytest.skip("category Z never isolated to the test split")

    def test_label_rule_must_be_binary(self, tmp_path):
        text, schema = abalone_like(20)
        ds = load_csv(write(tmp_path, text), schema)
        with pytest.raises(DatasetError):
            preprocess_glm(ds, PreprocessConfig(label_rule=lambda v: float(v)))

    def test_cache_roundtrip(self, tmp_path):
        split = self.make(tmp_path)
        out = tmp_path / "cached.csv"
        write_matrix_csv(out, split.train_x, split.train_y, split.feature_names)
        header = out.read_text().splitlines()[0].split(",")
        assert header == split.feature_names + ["label"]


class TestSynthBernoulli:
    def test_boundary_rejected(self):
        for rho in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                synth_bernoulli(10, rho, 0)

    def test_mean_concentrates(self):
        bits = synth_bernoulli(100_000, 0.5, 17)
        assert 0.49 <= bits.mean() <= 0.51

    def test_deterministic(self):
        assert np.array_equal(synth_bernoulli(500, 0.3, 4), synth_bernoulli(500, 0.3, 4))
        assert not np.array_equal(synth_bernoulli(500, 0.3, 4), synth_bernoulli(500, 0.3, 5))


class TestSynthGlm:
    def test_rows_on_unit_sphere(self):
        x, y = synth_glm(400, 6, np.ones(6), "logistic", 9)
        assert np.allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-12)
        assert set(np.unique(y)) <= {0.0, 1.0}

    def test_deterministic(self):
        a = synth_glm(100, 3, np.array([1.0, -2.0, 0.5]), "logistic", 12)
        b = synth_glm(100, 3, np.array([1.0, -2.0, 0.5]), "logistic", 12)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_label_rate_matches_link_expectation(self):
        w = np.array([4.0, 0.0, 0.0])
        x, y = synth_glm(50_000, 3, w, "logistic", 13)
        expected = inv_link("logistic", x @ w).mean()
        se = np.sqrt(expected * (1.0 - expected) / len(y))
        assert abs(y.mean() - expected) < 4.0 * se

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            synth_glm(10, 3, np.ones(4), "logistic", 0)
