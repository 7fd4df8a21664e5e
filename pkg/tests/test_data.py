import struct

import numpy as np
import pytest

from neurontrim import (
    Dataset,
    SparseRegressionSpec,
    as_reconstruction,
    downscale,
    export_csv,
    gen_sparse_regression,
    load_mnist,
    make_rng,
    save_idx_images,
    save_idx_labels,
    subsample,
    synthetic_digit_images,
)
from neurontrim.data import dataset_to_idx_arrays, load_idx_images, load_idx_labels
from neurontrim.errors import ArgumentError, DataFormatError, DimensionError


class TestSparseRegression:
    def test_shapes(self):
        spec = SparseRegressionSpec(n_features=20, n_nonzero=2, n_train=500, n_test=500)
        train, test, x0 = gen_sparse_regression(make_rng(0), spec)
        assert train.inputs.shape == (500, 20) and train.targets.shape == (500, 1)
        assert test.inputs.shape == (500, 20) and test.targets.shape == (500, 1)
        assert x0.shape == (20,) and (x0 != 0).sum() == 2

    def test_noiseless_consistency(self):
        spec = SparseRegressionSpec(n_train=50, n_test=50, noise_sigma=0.0)
        train, test, x0 = gen_sparse_regression(make_rng(1), spec)
        assert np.array_equal(train.targets, (train.inputs @ x0)[:, None])
        assert np.array_equal(test.targets, (test.inputs @ x0)[:, None])

    def test_null_signal(self):
        spec = SparseRegressionSpec(n_nonzero=0, n_train=10, n_test=10, noise_sigma=0.0)
        train, _, x0 = gen_sparse_regression(make_rng(2), spec)
        assert np.array_equal(x0, np.zeros(20))
        assert np.array_equal(train.targets, np.zeros((10, 1)))

    def test_spec_validation(self):
        with pytest.raises(ArgumentError):
            SparseRegressionSpec(n_nonzero=21)
        with pytest.raises(ArgumentError):
            SparseRegressionSpec(n_train=10, n_test=20)
        with pytest.raises(ArgumentError):
            SparseRegressionSpec(noise_sigma=-1.0)


class TestIdxFiles:
    def write_pair(self, tmp_path, images, labels):
        ip, lp = tmp_path / "im.idx", tmp_path / "lb.idx"
        save_idx_images(ip, images)
        save_idx_labels(lp, labels)
        return ip, lp

    def test_round_trip(self, tmp_path):
        rng = make_rng(3)
        images = rng.integers(0, 256, size=(7, 4, 4)).astype(np.uint8)
        labels = rng.integers(0, 10, size=7).astype(np.uint8)
        ip, lp = self.write_pair(tmp_path, images, labels)
        assert np.array_equal(load_idx_images(ip), images)
        assert np.array_equal(load_idx_labels(lp), labels)

    def test_dataset_round_trip_through_bytes(self, tmp_path):
        ds = synthetic_digit_images(make_rng(4), 12, side=16, margin=2)
        images, labels = dataset_to_idx_arrays(ds)
        ip, lp = self.write_pair(tmp_path, images, labels)
        loaded = load_mnist(ip, lp)
        assert np.array_equal(loaded.inputs, ds.inputs)
        assert np.array_equal(loaded.classes, ds.classes)
        # and writing the loaded dataset back yields identical bytes
        images2, labels2 = dataset_to_idx_arrays(loaded)
        ip2, lp2 = tmp_path / "im2.idx", tmp_path / "lb2.idx"
        save_idx_images(ip2, images2)
        save_idx_labels(lp2, labels2)
        assert ip.read_bytes() == ip2.read_bytes()
        assert lp.read_bytes() == lp2.read_bytes()

    def test_pixels_scaled_to_unit_interval(self, tmp_path):
        images = np.full((2, 3, 3), 255, dtype=np.uint8)
        ip, lp = self.write_pair(tmp_path, images, np.zeros(2, dtype=np.uint8))
        ds = load_mnist(ip, lp)
        assert ds.inputs.max() == 1.0 and ds.inputs.min() == 1.0
        assert ds.input_dim == 9

    def test_bad_image_magic(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(struct.pack(">IIII", 0x805, 1, 2, 2) + b"\0" * 4)
        with pytest.raises(DataFormatError, match="magic"):
            load_idx_images(path)

    def test_truncated_image_file(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(struct.pack(">IIII", 0x803, 2, 2, 2) + b"\0" * 5)
        with pytest.raises(DataFormatError, match="offset 16"):
            load_idx_images(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "tiny.idx"
        path.write_bytes(b"\0\0")
        with pytest.raises(DataFormatError, match="offset 0"):
            load_idx_labels(path)

    def test_count_mismatch(self, tmp_path):
        images = np.zeros((3, 2, 2), dtype=np.uint8)
        labels = np.zeros(4, dtype=np.uint8)
        ip, lp = self.write_pair(tmp_path, images, labels)
        with pytest.raises(DataFormatError, match="3 images but 4 labels"):
            load_mnist(ip, lp)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "long.idx"
        path.write_bytes(struct.pack(">II", 0x801, 1) + b"\0\0")
        with pytest.raises(DataFormatError, match="trailing"):
            load_idx_labels(path)


class TestViews:
    def test_subsample_unique_and_complete(self):
        ds = synthetic_digit_images(make_rng(5), 20, side=16, margin=2)
        sub = subsample(ds, make_rng(6), 8)
        assert len(sub) == 8
        rows = {tuple(r) for r in sub.inputs}
        all_rows = [tuple(r) for r in ds.inputs]
        assert all(r in all_rows for r in rows)

    def test_subsample_everything_keeps_multiset(self):
        ds = synthetic_digit_images(make_rng(7), 10, side=16, margin=2)
        sub = subsample(ds, make_rng(8), 10)
        assert sorted(map(tuple, sub.inputs)) == sorted(map(tuple, ds.inputs))

    def test_subsample_bounds(self):
        ds = synthetic_digit_images(make_rng(9), 4, side=16, margin=2)
        with pytest.raises(ArgumentError):
            subsample(ds, make_rng(0), 5)

    def test_downscale_shapes(self):
        ds = synthetic_digit_images(make_rng(10), 3)
        small = downscale(ds, 2)
        assert small.input_dim == 196  # 14 x 14

    def test_downscale_preserves_constants(self):
        ds = Dataset(np.full((2, 16), 0.25), classes=np.zeros(2, dtype=int),
                     task="classification")
        small = downscale(ds, 2)
        assert np.allclose(small.inputs, 0.25)

    def test_downscale_validation(self):
        ds = Dataset(np.zeros((1, 15)), targets=np.zeros((1, 1)))
        with pytest.raises(DimensionError):
            downscale(ds, 2)
        square = Dataset(np.zeros((1, 16)), targets=np.zeros((1, 1)))
        with pytest.raises(ArgumentError):
            downscale(square, 3)

    def test_reconstruction_view(self):
        ds = synthetic_digit_images(make_rng(11), 5, side=16, margin=2)
        recon = as_reconstruction(ds)
        assert recon.task == "reconstruction"
        assert np.array_equal(recon.targets, recon.inputs)
        pooled = downscale(recon, 2)
        assert np.array_equal(pooled.targets, pooled.inputs)


class TestSyntheticDigits:
    def test_margins_are_exactly_zero(self):
        ds = synthetic_digit_images(make_rng(12), 40)
        images = ds.inputs.reshape(-1, 28, 28)
        assert np.all(images[:, :4, :] == 0.0)
        assert np.all(images[:, -4:, :] == 0.0)
        assert np.all(images[:, :, :4] == 0.0)
        assert np.all(images[:, :, -4:] == 0.0)
        assert images.max() > 0.5  # glyphs actually present

    def test_labels_in_range_and_deterministic(self):
        a = synthetic_digit_images(make_rng(13), 25)
        b = synthetic_digit_images(make_rng(13), 25)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.classes, b.classes)
        assert set(np.unique(a.classes)) <= set(range(10))


class TestCsvExport:
    def test_regression_layout(self, tmp_path):
        spec = SparseRegressionSpec(n_features=3, n_nonzero=1, n_train=4, n_test=4)
        train, _, _ = gen_sparse_regression(make_rng(14), spec)
        path = tmp_path / "train.csv"
        export_csv(train, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x0,x1,x2,y0"
        assert len(lines) == 5
        values = [float(v) for v in lines[1].split(",")]
        assert values[:3] == train.inputs[0].tolist()
        assert values[3] == train.targets[0, 0]

    def test_classification_layout(self, tmp_path):
        ds = synthetic_digit_images(make_rng(15), 3, side=16, margin=2)
        path = tmp_path / "digits.csv"
        export_csv(ds, path)
        header = path.read_text().splitlines()[0]
        assert header.endswith(",class")
