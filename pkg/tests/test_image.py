import numpy as np
import pytest

from sgsr.image import PgmError, load_pgm, psnr, save_pgm


def write_raw(path, blob):
    with open(path, "wb") as fh:
        fh.write(blob)


class TestLoadPgm:
    def test_direct_byte_mapping(self, tmp_path):
        path = tmp_path / "tiny.pgm"
        write_raw(path, b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
        image = load_pgm(path)
        assert image.shape == (2, 2)
        assert image.dtype == np.float64
        assert image.tolist() == [[0.0, 255.0], [128.0, 64.0]]

    def test_ascii_variant_rejected(self, tmp_path):
        path = tmp_path / "ascii.pgm"
        write_raw(path, b"P2\n2 2\n255\n0 1 2 3\n")
        with pytest.raises(PgmError, match="unsupported PGM variant"):
            load_pgm(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.pgm"
        write_raw(path, b"P5\n2 2\n255\n" + bytes([0, 255, 128]))
        with pytest.raises(PgmError, match="truncated payload"):
            load_pgm(path)

    def test_wrong_maxval(self, tmp_path):
        path = tmp_path / "maxval.pgm"
        write_raw(path, b"P5\n2 2\n127\n" + bytes(4))
        with pytest.raises(PgmError, match="maxval"):
            load_pgm(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "garbage.pgm"
        write_raw(path, b"GIF89a....")
        with pytest.raises(PgmError, match="malformed header"):
            load_pgm(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_pgm(tmp_path / "nope.pgm")


class TestSavePgm:
    @pytest.mark.parametrize(
        "value,expected", [(300.0, 255), (-5.0, 0), (127.5, 128), (64.25, 64)]
    )
    def test_clamp_and_round(self, tmp_path, value, expected):
        path = tmp_path / "one.pgm"
        save_pgm(np.array([[value]]), path)
        assert load_pgm(path)[0, 0] == expected

    def test_round_trip_lossless_for_integer_images(self, tmp_path, rng):
        image = rng.integers(0, 256, size=(13, 21)).astype(np.float64)
        path = tmp_path / "rt.pgm"
        save_pgm(image, path)
        assert np.array_equal(load_pgm(path), image)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "hdr.pgm"
        save_pgm(np.zeros((3, 5)), path)
        with open(path, "rb") as fh:
            assert fh.read().startswith(b"P5\n5 3\n255\n")


class TestPsnr:
    def test_identical_hits_sentinel(self):
        image = np.full((4, 4), 17.0)
        assert psnr(image, image) == 99.0

    def test_full_scale_error(self):
        zeros = np.zeros((8, 8))
        assert psnr(zeros, np.full((8, 8), 255.0)) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_ten_error(self):
        zeros = np.zeros((8, 8))
        assert psnr(zeros, np.full((8, 8), 10.0)) == pytest.approx(28.1308, abs=1e-3)

    def test_symmetry(self, rng):
        a = rng.uniform(0, 255, size=(6, 7))
        b = rng.uniform(0, 255, size=(6, 7))
        assert psnr(a, b) == psnr(b, a)

    def test_decreases_with_error_magnitude(self):
        base = np.zeros((5, 5))
        values = [psnr(base, np.full((5, 5), delta)) for delta in (1.0, 2.0, 4.0, 8.0)]
        assert all(hi > lo for hi, lo in zip(values, values[1:]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            psnr(np.zeros((2, 2)), np.zeros((2, 3)))
