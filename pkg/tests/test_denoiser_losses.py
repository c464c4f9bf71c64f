import numpy as np
import pytest

from hdrec.denoiser.losses import (
    build_featnet,
    l1_loss,
    perceptual_loss,
    total_loss,
)
from hdrec.errors import ParameterError, ShapeError


class TestL1:
    def test_identical_is_zero(self):
        x = np.random.default_rng(0).uniform(0, 1, (8, 8))
        assert l1_loss(x, x) == 0.0

    def test_constant_difference(self):
        x = np.zeros((8, 8))
        assert l1_loss(x + 0.3, x) == pytest.approx(0.3, abs=1e-15)

    def test_matches_elementwise_mean_oracle(self):
        gen = np.random.default_rng(5)
        a = gen.uniform(0, 1, (8, 8))
        b = gen.uniform(0, 1, (8, 8))
        oracle = 0.0
        for i in range(8):
            for j in range(8):
                oracle += abs(b[i, j] - a[i, j])
        oracle /= 64.0
        assert l1_loss(a, b) == pytest.approx(oracle, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            l1_loss(np.zeros((4, 4)), np.zeros((4, 5)))


class TestFeatureNet:
    def test_seed_reproducibility(self):
        a = build_featnet(11)
        b = build_featnet(11)
        for key in a.params:
            assert np.array_equal(a.params[key], b.params[key])

    def test_output_is_quarter_resolution(self):
        net = build_featnet(0)
        out = net.forward(np.zeros((1, 32, 48, 1)))
        assert out.shape == (1, 8, 12, 64)

    def test_contrast_change_is_visible(self):
        net = build_featnet(1)
        gen = np.random.default_rng(2)
        img = gen.uniform(0, 1, (16, 16))
        assert perceptual_loss(img, 0.5 * img, net) > 0.0

    def test_weights_frozen(self):
        net = build_featnet(2)
        with pytest.raises(ValueError):
            net.params["feat0.w"][0, 0, 0, 0] = 1.0


class TestPerceptual:
    def test_identical_is_zero(self):
        net = build_featnet(3)
        x = np.random.default_rng(4).uniform(0, 1, (16, 16))
        assert perceptual_loss(x, x, net) == 0.0

    def test_symmetric(self):
        net = build_featnet(5)
        gen = np.random.default_rng(6)
        a = gen.uniform(0, 1, (16, 16))
        b = gen.uniform(0, 1, (16, 16))
        assert perceptual_loss(a, b, net) == pytest.approx(
            perceptual_loss(b, a, net), abs=1e-15
        )


class TestTotal:
    def test_beta_zero_reduces_to_l1(self):
        gen = np.random.default_rng(7)
        a = gen.uniform(0, 1, (8, 8))
        b = gen.uniform(0, 1, (8, 8))
        report = total_loss(a, b, alpha=0.7, beta=0.0)
        assert report.total == 0.7 * report.l1
        assert report.perceptual == 0.0

    def test_both_zero(self):
        a = np.random.default_rng(8).uniform(0, 1, (8, 8))
        report = total_loss(a, 1 - a, alpha=0.0, beta=0.0)
        assert report.total == 0.0

    def test_default_weights_recombine(self):
        net = build_featnet(9)
        gen = np.random.default_rng(10)
        a = gen.uniform(0, 1, (16, 16))
        b = gen.uniform(0, 1, (16, 16))
        report = total_loss(a, b, alpha=1.0, beta=0.1, featnet=net)
        l1 = l1_loss(a, b)
        perc = perceptual_loss(a, b, net)
        assert report.total == pytest.approx(1.0 * l1 + 0.1 * perc, abs=1e-12)
        assert report.l1 == l1
        assert report.perceptual == perc

    def test_negative_weights_rejected(self):
        with pytest.raises(ParameterError):
            total_loss(np.zeros((8, 8)), np.zeros((8, 8)), alpha=-1.0, beta=0.0)
