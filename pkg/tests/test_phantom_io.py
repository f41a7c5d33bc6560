import numpy as np
import pytest

from odmvq import io as fileio
from odmvq.core import Codebook, ContractError, LabelMap, MultibandImage
from odmvq.phantom import ClusterSpec, PhantomSpec, add_noise, generate_phantom, separated_means


def spec3(std=0.02, noise=0.0, h=30, w=30):
    return PhantomSpec(h, w, 1, [ClusterSpec((0.1,), std, 0.3), ClusterSpec((0.5,), std, 0.3),
                                 ClusterSpec((0.9,), std, 0.4)], noise)


class TestPhantom:
    def test_zero_std_is_piecewise_constant(self):
        image, truth = generate_phantom(spec3(std=0.0))
        assert np.array_equal(image.pixels[:, 0], np.array([0.1, 0.5, 0.9])[truth.flat])

    def test_sample_means(self):
        image, truth = generate_phantom(spec3(), seed=5)
        for k, m in enumerate((0.1, 0.5, 0.9)):
            assert abs(image.pixels[truth.flat == k, 0].mean() - m) < 0.01

    def test_noise_keeps_truth(self):
        a_img, a_lab = generate_phantom(spec3(noise=0.0), seed=2)
        b_img, b_lab = generate_phantom(spec3(noise=9.0), seed=2)
        assert np.array_equal(a_lab.labels, b_lab.labels)
        assert not np.array_equal(a_img.data, b_img.data)

    def test_counts_follow_fractions(self):
        _, truth = generate_phantom(spec3(h=10, w=10))
        assert truth.counts(3).tolist() == [30, 30, 40]

    def test_deterministic(self):
        a, _ = generate_phantom(spec3(noise=3), seed=1)
        b, _ = generate_phantom(spec3(noise=3), seed=1)
        assert np.array_equal(a.data, b.data)

    @pytest.mark.parametrize("bad", [
        dict(clusters=[ClusterSpec((0.5,), 0.0, 0.5)]),
        dict(clusters=[ClusterSpec((1.5,), 0.0, 1.0)]),
        dict(clusters=[ClusterSpec((0.5, 0.5), 0.0, 1.0)]),
        dict(noise_percent=-1.0),
    ])
    def test_invalid(self, bad):
        kw = dict(height=2, width=2, bands=1, clusters=[ClusterSpec((0.5,), 0.0, 1.0)])
        kw.update(bad)
        with pytest.raises(ContractError):
            PhantomSpec(**kw)

    def test_separated_means(self):
        m = separated_means(4, 3, seed=0, min_gap=0.3)
        gaps = np.linalg.norm(m[:, None] - m[None], axis=2)[np.triu_indices(4, 1)]
        assert gaps.min() >= 0.3

    def test_add_noise(self):
        im = MultibandImage(np.full((4, 4, 2), 0.5))
        assert add_noise(im, 0.0) is im
        noisy = add_noise(im, 5.0, seed=3)
        assert not np.array_equal(noisy.data, im.data)
        assert np.array_equal(noisy.data, add_noise(im, 5.0, seed=3).data)


class TestIo:
    def test_pgm_round_trip_8_and_16_bit(self, tmp_path, rng):
        for maxval in (255, 65535):
            arr = rng.integers(0, maxval + 1, (5, 7))
            fileio.write_pgm(tmp_path / "a.pgm", arr, maxval)
            back, mv = fileio.read_pgm(tmp_path / "a.pgm")
            assert mv == maxval and np.array_equal(back, arr)

    def test_plain_pgm(self, tmp_path):
        (tmp_path / "p.pgm").write_text("P2\n# comment\n2 1\n255\n0 255\n")
        arr, mv = fileio.read_pgm(tmp_path / "p.pgm")
        assert arr.tolist() == [[0, 255]] and mv == 255

    def test_unsupported_format(self, tmp_path):
        (tmp_path / "x.pgm").write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(fileio.FormatError):
            fileio.read_pgm(tmp_path / "x.pgm")

    def test_ingest_constant_bands(self, tmp_path):
        paths = []
        for b in range(3):
            paths.append(tmp_path / f"b{b}.pgm")
            fileio.write_pgm(paths[-1], np.full((2, 2), 255))
        im = fileio.ingest(paths)
        assert im.bands == 3 and np.all(im.data == 1.0)

    def test_ingest_normalisation(self, tmp_path):
        paths = []
        for b, v in enumerate((0, 128, 255)):
            paths.append(tmp_path / f"b{b}.pgm")
            fileio.write_pgm(paths[-1], np.full((1, 1), v))
        assert fileio.ingest(paths).pixels[0].tolist() == [0.0, 128 / 255, 1.0]

    def test_ingest_single_band(self, tmp_path):
        fileio.write_pgm(tmp_path / "b.pgm", np.zeros((3, 2), int))
        assert fileio.ingest(tmp_path / "b.pgm").bands == 1

    def test_ingest_mismatch(self, tmp_path):
        fileio.write_pgm(tmp_path / "a.pgm", np.zeros((2, 2), int))
        fileio.write_pgm(tmp_path / "b.pgm", np.zeros((3, 2), int))
        with pytest.raises(fileio.FormatError):
            fileio.ingest([tmp_path / "a.pgm", tmp_path / "b.pgm"])

    def test_multiband_round_trip(self, tmp_path, rng):
        im = MultibandImage(rng.integers(0, 65536, (4, 5, 3)) / 65535)
        files = fileio.save_image(tmp_path / "img.mbi", im)
        assert len(files) == 4
        assert np.array_equal(fileio.ingest(tmp_path / "img.mbi").data, im.data)

    def test_labels_round_trip(self, tmp_path):
        lm = LabelMap(np.array([[0, 1], [2, 1]]))
        fileio.write_labels(tmp_path / "l.pgm", lm)
        assert np.array_equal(fileio.read_labels(tmp_path / "l.pgm").labels, lm.labels)

    def test_codebook_round_trip(self, tmp_path, rng):
        book = Codebook(rng.random((4, 3)))
        fileio.write_codebook(tmp_path / "c.txt", book, {"method": "KM", "seed": 3})
        back, meta = fileio.read_codebook(tmp_path / "c.txt")
        assert np.array_equal(back.centroids, book.centroids)
        assert meta == {"method": "KM", "seed": "3"}

    def test_codebook_header_mismatch(self, tmp_path):
        (tmp_path / "c.txt").write_text("odmvq-codebook 1\nclasses 2\nbands 1\ncentroid 0.5\n")
        with pytest.raises(fileio.FormatError):
            fileio.read_codebook(tmp_path / "c.txt")
