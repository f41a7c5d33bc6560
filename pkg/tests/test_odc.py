import numpy as np
import pytest

from odmvq.core import MultibandImage
from odmvq.odc import (
    DegenerateConfigurationError,
    OdcConfig,
    _fuse,
    anticontradiction_memberships,
    odc_classify,
    odc_train,
    pole_forces,
)
from odmvq.phantom import ClusterSpec, PhantomSpec, generate_phantom, separated_means

import oracles

SMALL = dict(initial_poles=10, historical_phases=2, phase_length=50, min_force=0.05, min_contradiction=0.05,
             max_contradiction=0.98, max_crisis=0.05, max_poles=10)


def three_cluster_phantom(seed):
    means = separated_means(3, 3, seed=100 + seed, min_gap=0.35)
    spec = PhantomSpec(64, 64, 3, [ClusterSpec(tuple(m), 0.03, 1 / 3) for m in means], 1.0)
    image, truth = generate_phantom(spec, seed)
    return image, truth, means


class TestMemberships:
    def test_rows_sum_to_one(self, rng):
        px, poles = rng.random((50, 3)), rng.random((4, 3))
        for kind in ("canonical", "max_entropy"):
            mu = anticontradiction_memberships(px, poles, kind, lam=255 / 4)
            assert np.allclose(mu.sum(axis=1), 1.0, atol=1e-12)

    def test_canonical_is_fcm_q2(self, rng):
        from odmvq.metrics import fuzzy_memberships
        px, poles = rng.random((20, 2)), rng.random((3, 2))
        assert np.allclose(anticontradiction_memberships(px, poles, "canonical"), fuzzy_memberships(px, poles, 2.0))

    def test_pixel_on_pole(self):
        mu = anticontradiction_memberships(np.array([[0.2, 0.2]]), np.array([[0.2, 0.2], [0.9, 0.9]]), "canonical")
        assert mu.tolist() == [[1.0, 0.0]]

    def test_gibbs_form(self):
        mu = anticontradiction_memberships(np.array([[0.0]]), np.array([[0.0], [np.log(2)]]), "max_entropy", 1.0)
        assert mu[0] == pytest.approx([2 / 3, 1 / 3])

    def test_kernel_matches_numpy(self, rng):
        from odmvq import _kernels
        px, poles = rng.random((10, 3)), rng.random((5, 3))
        for me, lam in ((False, 1.0), (True, 40.0)):
            ref = anticontradiction_memberships(px, poles, "max_entropy" if me else "canonical", lam)
            out = np.empty(5)
            for i in range(10):
                _kernels.anticontradiction(px[i], poles, me, lam, out)
                assert np.allclose(out, ref[i], atol=1e-14)


class TestCrisisParts:
    def test_forces(self):
        px = np.array([[0.0], [0.1], [0.9], [1.0]])
        assert pole_forces(px, np.array([[0.0], [1.0], [0.5]])).tolist() == [0.5, 0.5, 0.0]

    def test_force_weighted_fusion(self):
        out = _fuse(np.array([[0.0], [0.01], [0.9]]), np.array([0.75, 0.25, 0.0]), 0.05, 1.0)
        assert out[:, 0] == pytest.approx([0.0025, 0.9])


class TestTrain:
    def test_constant_image_collapses_to_one_pole(self):
        im = MultibandImage(np.full((8, 8, 3), 0.3))
        model = odc_train(im, OdcConfig(initial_poles=6, phase_length=5, max_crisis=0.2))
        assert model.codebook.size == 1
        assert np.allclose(model.codebook.centroids, 0.3)
        assert odc_classify(im, model).flat.max() == 0

    @pytest.mark.parametrize("kind", ["canonical", "max_entropy"])
    def test_recovers_three_clusters(self, kind):
        image, truth, means = three_cluster_phantom(0)
        model = odc_train(image, OdcConfig(membership=kind, rng_seed=0, **SMALL))
        assert model.codebook.size == 3
        assert oracles.match_means(model.codebook.centroids, means, 0.05)
        # labels agree with ground truth up to a relabelling
        labels = odc_classify(image, model).flat
        truth = truth.flat
        agree = sum(np.bincount(labels[truth == k]).max() for k in range(3)) / labels.size
        assert agree >= 0.95

    def test_pruning_everything_raises(self):
        image, _, _ = three_cluster_phantom(1)
        with pytest.raises(DegenerateConfigurationError):
            odc_train(image, OdcConfig(min_force=0.99, phase_length=2))

    def test_history_and_cap(self):
        image, _, _ = three_cluster_phantom(2)
        model = odc_train(image, OdcConfig(initial_poles=12, phase_length=3, min_force=0.0, max_poles=5,
                                           min_contradiction=0.0))
        assert model.codebook.size <= 5
        assert [h.phase for h in model.history] == [0, 1]
        assert model.forces.sum() == pytest.approx(1.0)

    def test_deterministic(self):
        image, _, _ = three_cluster_phantom(3)
        cfg = OdcConfig(phase_length=5, rng_seed=8)
        assert np.array_equal(odc_train(image, cfg).codebook.centroids, odc_train(image, cfg).codebook.centroids)

    def test_epochs_match_python_loop(self):
        r = np.random.default_rng(5)
        px = r.random((12, 2))
        im = MultibandImage.from_pixels(px, 3, 4)
        cfg = OdcConfig(initial_poles=3, historical_phases=1, phase_length=3, min_force=0.0, min_contradiction=0.0,
                        max_poles=3, initial_step=0.2, step_decay=0.5, rng_seed=6)
        rng = np.random.default_rng(6)
        w = px[rng.choice(12, size=3, replace=False)].copy()
        eta = 0.2
        for _ in range(3):
            for i in rng.permutation(12):
                d = [np.sqrt(((px[i] - w[k]) ** 2).sum()) for k in range(3)]
                if min(d) == 0:
                    mu = [float(x == 0) / d.count(0.0) for x in d]
                else:
                    inv = [1 / x**2 for x in d]
                    mu = [v / sum(inv) for v in inv]
                for k in range(3):
                    w[k] += eta * mu[k] ** 2 * (px[i] - w[k])
            eta *= 0.5
        assert np.allclose(odc_train(im, cfg).codebook.centroids, w, rtol=0, atol=1e-14)
