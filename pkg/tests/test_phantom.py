import numpy as np
import pytest

from stretchtomo.core import Volume
from stretchtomo.phantom import (PatchSpec, PhantomSpec, crop_patch,
                                 make_phantom, sample_corner, sample_patch)

from oracles import moments


class TestMakePhantom:
    def test_deterministic_under_seed(self):
        spec = PhantomSpec(dims=(8, 24, 24), cell_count=6, rng_seed=5)
        a = make_phantom(spec)
        b = make_phantom(spec)
        assert np.array_equal(a.data, b.data)
        c = make_phantom(PhantomSpec(dims=(8, 24, 24), cell_count=6, rng_seed=6))
        assert not np.array_equal(a.data, c.data)

    def test_normalized_output(self):
        v = make_phantom(PhantomSpec(dims=(8, 32, 32), cell_count=8, rng_seed=1))
        m, var = moments(v.data)
        assert abs(m) < 1e-5
        assert abs(var - 1.0) < 1e-4

    def test_single_cell_has_no_membranes(self):
        v = make_phantom(PhantomSpec(dims=(8, 32, 32), cell_count=1, rng_seed=2))
        # smooth texture only: no darkened boundary voxels pull far below
        frac_dark = float((v.data < -3.0).mean())
        assert frac_dark < 0.01

    def test_cells_membrane_fraction_in_band(self):
        v = make_phantom(PhantomSpec(dims=(32, 128, 128), style="cells",
                                     cell_count=20, rng_seed=3))
        frac = float((v.data < -0.5).mean())
        assert 0.02 <= frac <= 0.30

    def test_blobs_style_is_smooth_and_normalized(self):
        v = make_phantom(PhantomSpec(dims=(8, 32, 32), style="blobs",
                                     cell_count=4, rng_seed=4))
        grad = np.abs(np.diff(v.data, axis=2)).max()
        assert grad < 1.5  # no membrane-style jumps
        assert abs(float(v.data.mean(dtype=np.float64))) < 1e-5

    def test_validation(self):
        with pytest.raises(ValueError):
            PhantomSpec(dims=(0, 4, 4))
        with pytest.raises(ValueError):
            PhantomSpec(dims=(4, 4, 4), cell_count=0)
        with pytest.raises(ValueError):
            PhantomSpec(dims=(4, 4, 4), style="wiggles")


class TestSamplePatch:
    def test_whole_volume_patch_is_normalized_volume(self):
        rng = np.random.default_rng(0)
        v = Volume(rng.normal(2.0, 3.0, (4, 8, 8)).astype(np.float32))
        p = sample_patch(v, PatchSpec(patch_dims=(4, 8, 8), rng_seed=0))
        assert p.dims == v.dims
        m, var = moments(p.data)
        assert abs(m) < 1e-5 and abs(var - 1.0) < 1e-4

    def test_patch_larger_than_volume_rejected(self):
        v = Volume(np.zeros((4, 8, 8), np.float32))
        with pytest.raises(ValueError, match="patch"):
            sample_patch(v, PatchSpec(patch_dims=(8, 8, 8), rng_seed=0))

    def test_corner_distribution_uniform(self):
        # depth 64, patch depth 32: 33 valid corners, 10k seeded draws
        counts = np.zeros(33, dtype=np.int64)
        for seed in range(10_000):
            z, _, _ = sample_corner((64, 8, 8), (32, 8, 8), seed)
            counts[z] += 1
        p = 1.0 / 33.0
        se = np.sqrt(p * (1 - p) / 10_000)
        assert np.all(np.abs(counts / 10_000 - p) <= 3 * se), counts / 10_000

    def test_patch_moments(self):
        rng = np.random.default_rng(8)
        v = Volume(rng.normal(0, 1, (16, 32, 32)).astype(np.float32))
        p = sample_patch(v, PatchSpec(patch_dims=(8, 16, 16), rng_seed=3))
        m, var = moments(p.data)
        assert abs(m) < 1e-5 and abs(var - 1.0) < 1e-4

    def test_crop_matches_seeded_corner(self):
        rng = np.random.default_rng(9)
        v = Volume(rng.normal(0, 1, (12, 16, 16)).astype(np.float32))
        spec = PatchSpec(patch_dims=(4, 8, 8), rng_seed=17)
        corner = sample_corner(v.dims, spec.patch_dims, spec.rng_seed)
        assert np.array_equal(sample_patch(v, spec).data,
                              crop_patch(v, corner, spec.patch_dims).data)
