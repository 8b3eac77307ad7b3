import json

import numpy as np
import pytest

from stretchtomo.augment import AugmentSpec, augment_pipeline
from stretchtomo.config import SweepConfig
from stretchtomo.core import (StretchtomoError, TiltGeometry, Volume,
                              normalize_zero_mean_unit_var)
from stretchtomo.evaluation import (MetricsReport, SweepRow, mse, plan_tiling,
                                    run_sweep)
from stretchtomo.evaluation import _patch_seed
from stretchtomo.filters import FilterSpec, fbp
from stretchtomo.phantom import PhantomSpec, crop_patch, make_phantom
from stretchtomo.projector import ProjectorSpec, project

from oracles import mse_two_pass


class TestTiling:
    def test_paper_scale_plan(self):
        plan = plan_tiling((992, 1000, 1000), (32, 512, 512))
        assert plan.n_patches == 124
        assert plan.axis_overlap() == (0, 24, 24)

    def test_axis_corner_examples(self):
        plan = plan_tiling((32, 1000, 1000), (32, 512, 512))
        ys = sorted({c[1] for c in plan.corners})
        assert ys == [0, 488]
        plan2 = plan_tiling((992, 32, 32), (32, 32, 32))
        zs = sorted({c[0] for c in plan2.corners})
        assert zs == list(range(0, 961, 32))
        assert len(zs) == 31

    def test_single_tile_when_equal(self):
        plan = plan_tiling((8, 8, 8), (8, 8, 8))
        assert plan.corners == ((0, 0, 0),)

    def test_every_voxel_covered(self):
        vol_dims, patch_dims = (10, 7, 13), (4, 3, 5)
        plan = plan_tiling(vol_dims, patch_dims)
        hit = np.zeros(vol_dims, dtype=int)
        for c in plan.corners:
            sl = tuple(slice(a, a + p) for a, p in zip(c, patch_dims))
            hit[sl] += 1
        assert hit.min() >= 1

    def test_overlap_formula(self):
        plan = plan_tiling((10, 7, 13), (4, 3, 5))
        expect = tuple(max(0, -(-l // p) * p - l) for l, p in ((10, 4), (7, 3), (13, 5)))
        assert plan.axis_overlap() == expect

    def test_patch_too_large_rejected(self):
        with pytest.raises(ValueError, match="patch"):
            plan_tiling((4, 4, 4), (8, 4, 4))


class TestMse:
    def test_identical_is_zero(self):
        v = Volume(np.random.default_rng(0).normal(size=(3, 4, 5)).astype(np.float32))
        assert mse(v, v) == 0.0

    def test_unit_offset(self):
        a = Volume(np.zeros((2, 3, 4), np.float32))
        b = Volume(np.ones((2, 3, 4), np.float32))
        assert mse(a, b) == 1.0

    def test_against_two_pass_oracle(self):
        rng = np.random.default_rng(4)
        a = Volume(rng.normal(size=(4, 8, 8)).astype(np.float32))
        b = Volume(rng.normal(size=(4, 8, 8)).astype(np.float32))
        got = mse(a, b)
        ref = mse_two_pass(a.data, b.data)
        assert abs(got - ref) <= 1e-9 * ref

    def test_dims_mismatch(self):
        with pytest.raises(ValueError, match="dims"):
            mse(Volume(np.zeros((2, 2, 2), np.float32)),
                Volume(np.zeros((2, 2, 3), np.float32)))


class TestReport:
    def test_aggregates(self):
        row = SweepRow("fbp", 0.3, 2, [1.0, 2.0, 3.0, 4.0])
        assert row.mean == 2.5
        assert np.isclose(row.stderr, np.std([1, 2, 3, 4], ddof=1) / 2.0)

    def test_permutation_invariant_aggregation(self):
        a = SweepRow("bp", 0.0, 0, [3.0, 1.0, 2.0])
        b = SweepRow("bp", 0.0, 0, [1.0, 2.0, 3.0])
        assert a.mean == b.mean and a.stderr == b.stderr

    def test_csv_layout(self, tmp_path):
        rep = MetricsReport(rows=[SweepRow("fbp", 0.0, 0, [0.5, 0.7])])
        rep.to_csv(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "path,noise,n_misaligned,n_patches,mse_mean,mse_stderr"
        assert lines[1].startswith("fbp,0,0,2,0.6")


def toy_sweep_config(**overrides):
    base = dict(
        representations=("bp", "fbp"),
        noise_levels=(0.0, 0.3),
        misalign_counts=(0,),
        angles_deg=tuple(np.linspace(-60.0, 60.0, 8)),
        patch_dims=(8, 16, 16),
        phantom=PhantomSpec(dims=(16, 32, 32), style="cells", cell_count=8,
                            rng_seed=4),
        seed=99,
    )
    base.update(overrides)
    return SweepConfig(**base)


class TestSweep:
    def test_classical_sweep_shape_and_finiteness(self):
        report = run_sweep(toy_sweep_config())
        assert len(report.rows) == 4  # 2 paths x 2 noise levels
        for row in report.rows:
            assert len(row.patch_mses) == 8  # tiling of 16x32x32 by 8x16x16
            assert all(np.isfinite(m) and m > 0 for m in row.patch_mses)

    def test_cell_matches_manual_recomputation(self):
        cfg = toy_sweep_config(representations=("fbp",), noise_levels=(0.3,))
        report = run_sweep(cfg)
        vol = make_phantom(cfg.phantom)
        plan = plan_tiling(vol.dims, cfg.patch_dims)
        geometry = TiltGeometry(cfg.angles_deg, 16, 16)
        pspec = ProjectorSpec(geometry, 8, True)
        for p_idx in (0, 5):
            gt = crop_patch(vol, plan.corners[p_idx], cfg.patch_dims)
            y = project(gt, pspec)
            aspec = AugmentSpec(noise_ratio=0.3, n_misaligned=0, shift_range=3,
                                rng_seed=_patch_seed(cfg.seed, p_idx))
            aug, _ = augment_pipeline(y, aspec)
            rec = fbp(aug, FilterSpec(), pspec)
            rec = Volume(normalize_zero_mean_unit_var(rec.data))
            manual = mse(gt, rec)
            assert np.isclose(report.rows[0].patch_mses[p_idx], manual, rtol=1e-7)

    def test_identity_path_scores_zero(self):
        cfg = toy_sweep_config(representations=("identity",),
                               noise_levels=(0.0,), misalign_counts=(0,))
        report = run_sweep(cfg)
        assert all(m == 0.0 for m in report.rows[0].patch_mses)

    def test_fbp_noise_monotonicity(self):
        cfg = toy_sweep_config(representations=("fbp",), noise_levels=(0.0, 0.4))
        report = run_sweep(cfg)
        quiet, noisy = report.rows[0], report.rows[1]
        assert noisy.mean > quiet.mean

    def test_determinism_byte_identical_csv(self, tmp_path):
        cfg = toy_sweep_config()
        run_sweep(cfg).to_csv(tmp_path / "a.csv")
        run_sweep(cfg).to_csv(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_missing_model_fails_before_running(self):
        cfg = toy_sweep_config(representations=("stretch",),
                               models={"stretch": "/nonexistent/ckpt"})
        with pytest.raises(StretchtomoError, match="checkpoint"):
            run_sweep(cfg)

    def test_neural_path_invokes_infer_command(self, tmp_path):
        # stub "trainer": reads the representation stack, writes a volume of
        # the right dims; exercises the subprocess + STTO interop surface
        script = tmp_path / "stub_infer.py"
        script.write_text(
            "import argparse, numpy as np\n"
            "from stretchtomo.core import Volume\n"
            "from stretchtomo.stto import read_tensor, write_tensor\n"
            "ap = argparse.ArgumentParser()\n"
            "ap.add_argument('--in', dest='inp'); ap.add_argument('--out')\n"
            "ap.add_argument('--ckpt')\n"
            "a = ap.parse_args()\n"
            "stack = read_tensor(a.inp)\n"
            "out = np.tile(stack.data.mean(axis=0), (8, 1, 1))\n"
            "write_tensor(Volume(out), a.out)\n"
        )
        ckpt = tmp_path / "model.ckpt"
        ckpt.write_text("stub")
        cfg = toy_sweep_config(
            representations=("stretch",),
            noise_levels=(0.0,),
            models={"stretch": str(ckpt)},
            infer_cmd=f"python3 {script} --in {{inp}} --out {{out}} --ckpt {{ckpt}}",
        )
        report = run_sweep(cfg)
        assert len(report.rows) == 1
        assert all(np.isfinite(m) and m > 0 for m in report.rows[0].patch_mses)

    def test_json_report_contains_per_patch_detail(self, tmp_path):
        cfg = toy_sweep_config(representations=("bp",), noise_levels=(0.0,))
        report = run_sweep(cfg)
        report.to_json(tmp_path / "r.json")
        payload = json.loads((tmp_path / "r.json").read_text())
        assert payload["rows"][0]["n_patches"] == 8
        assert len(payload["rows"][0]["patch_mses"]) == 8
        assert payload["metadata"]["seed"] == 99
