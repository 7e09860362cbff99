import math

import numpy as np
import pytest

from cortico import synth
from cortico.diffusion import DiffusionConfig
from cortico.gabor import (
    GaborParams,
    affine_fit,
    inverse_transform,
    lift,
    make_bank,
)
from cortico.pipeline import (
    CompletionRequest,
    blend_composite,
    complete_image,
    load_image,
    load_mask,
    load_volume,
    rmse_region,
    save_image,
    save_volume,
)


def small_gabor(**kw):
    defaults = dict(sigma=2.0, K=8, frequencies=(0.5, 0.8, 1.1), M=3)
    defaults.update(kw)
    return GaborParams(**defaults)


def quick_diffusion(**kw):
    defaults = dict(mode="approximate", dt=0.1, t_max=0.5, tol=0.0)
    defaults.update(kw)
    return DiffusionConfig(**defaults)


class TestImageIO:
    def test_pgm_save_load_roundtrip_bytes(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.uniform(size=(32, 32))
        p1 = tmp_path / "a.pgm"
        p2 = tmp_path / "b.pgm"
        save_image(img, p1)
        loaded = load_image(p1)
        save_image(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_png_roundtrip_values(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(16, 16))
        p = tmp_path / "a.png"
        save_image(img, p)
        loaded = load_image(p)
        u8 = np.floor(np.clip(img, 0, 1) * 255 + 0.5)
        np.testing.assert_allclose(loaded, u8 / 255.0, atol=1e-12)

    def test_endpoint_mapping(self, tmp_path):
        img = np.zeros((4, 4))
        img[0, 0] = 1.0
        img[1, 1] = 128.0 / 255.0
        p = tmp_path / "e.pgm"
        save_image(img, p)
        loaded = load_image(p)
        assert loaded[0, 0] == 1.0
        assert loaded[2, 2] == 0.0
        assert loaded[1, 1] == pytest.approx(128.0 / 255.0)

    def test_round_half_up(self, tmp_path):
        # 0.5/255 scaled: value exactly halfway between two codes rounds up
        img = np.full((4, 4), 100.5 / 255.0)
        p = tmp_path / "r.pgm"
        save_image(img, p)
        raw = p.read_bytes()
        assert raw.endswith(bytes([101] * 16))

    def test_color_rejected_without_flag(self, tmp_path):
        from PIL import Image
        p = tmp_path / "c.png"
        Image.new("RGB", (8, 8), (10, 200, 30)).save(p)
        with pytest.raises(ValueError):
            load_image(p)
        arr = load_image(p, allow_color=True)
        assert arr.shape == (8, 8)

    def test_nonsquare_rejected(self, tmp_path):
        from PIL import Image
        p = tmp_path / "ns.png"
        Image.new("L", (8, 12), 7).save(p)
        with pytest.raises(ValueError):
            load_image(p)

    def test_high_bit_depth_rejected(self, tmp_path):
        from PIL import Image
        p = tmp_path / "hb.png"
        Image.new("I", (8, 8), 1000).save(p)
        with pytest.raises(ValueError):
            load_image(p)

    def test_clamp_only_at_export(self, tmp_path):
        img = np.full((4, 4), 1.7)
        img[0, 0] = -0.3
        p = tmp_path / "cl.pgm"
        save_image(img, p)
        loaded = load_image(p)
        assert loaded[1, 1] == 1.0
        assert loaded[0, 0] == 0.0


class TestMaskIO:
    def test_zero_and_full(self, tmp_path):
        z = tmp_path / "z.pgm"
        save_image(np.zeros((8, 8)), z)
        assert not load_mask(z).any()
        f = tmp_path / "f.pgm"
        save_image(np.ones((8, 8)), f)
        assert load_mask(f).all()

    def test_checkerboard(self, tmp_path):
        board = np.indices((8, 8)).sum(axis=0) % 2
        p = tmp_path / "cb.pgm"
        save_image(board.astype(float), p)
        np.testing.assert_array_equal(load_mask(p), board.astype(bool))


class TestRmseRegion:
    def test_identical(self):
        a = np.random.default_rng(0).uniform(size=(8, 8))
        assert rmse_region(a, a, np.ones((8, 8), bool)) == 0.0

    def test_constant_offset(self):
        a = np.zeros((8, 8))
        region = np.zeros((8, 8), bool)
        region[2:5, 2:5] = True
        assert rmse_region(a, a + 0.1, region) == pytest.approx(0.1)

    def test_half_region_difference(self):
        a = np.zeros((4, 4))
        b = np.zeros((4, 4))
        region = np.ones((4, 4), bool)
        b[:2] = 1.0  # half the region differs by 1
        assert rmse_region(a, b, region) == pytest.approx(math.sqrt(0.5))

    def test_empty_region(self):
        with pytest.raises(ValueError):
            rmse_region(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4), bool))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            rmse_region(np.zeros((4, 4)), np.zeros((5, 5)), np.ones((4, 4), bool))


class TestVolumeIO:
    def make_volume(self):
        p = small_gabor()
        rng = np.random.default_rng(3)
        img = rng.uniform(size=(24, 24))
        return lift(img, make_bank(p))

    def test_round_trip_bit_exact(self, tmp_path):
        vol = self.make_volume()
        path = tmp_path / "v.crtx"
        save_volume(vol, path)
        back = load_volume(path)
        np.testing.assert_array_equal(back.data, vol.data)
        assert back.params.K == vol.params.K
        assert back.params.frequencies == vol.params.frequencies
        assert back.params.M == vol.params.M
        assert back.params.sigma == vol.params.sigma
        assert back.params.delta_s == vol.params.delta_s

    def test_magic_and_version(self, tmp_path):
        vol = self.make_volume()
        path = tmp_path / "v.crtx"
        save_volume(vol, path)
        raw = bytearray(path.read_bytes())
        bad = tmp_path / "bad.crtx"
        bad.write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(ValueError, match="magic"):
            load_volume(bad)
        raw2 = bytearray(path.read_bytes())
        raw2[4] = 99
        bad2 = tmp_path / "badv.crtx"
        bad2.write_bytes(bytes(raw2))
        with pytest.raises(ValueError, match="version"):
            load_volume(bad2)

    def test_truncated_payload(self, tmp_path):
        vol = self.make_volume()
        path = tmp_path / "v.crtx"
        save_volume(vol, path)
        raw = path.read_bytes()
        trunc = tmp_path / "t.crtx"
        trunc.write_bytes(raw[:-16])
        with pytest.raises(ValueError, match="payload"):
            load_volume(trunc)
        extra = tmp_path / "x.crtx"
        extra.write_bytes(raw + b"\0" * 8)
        with pytest.raises(ValueError, match="payload"):
            load_volume(extra)

    def test_header_layout(self, tmp_path):
        # magic, u32 version, u32 N/K/L/M, f64 sigma/dtheta/ds, f64 freqs
        import struct
        vol = self.make_volume()
        path = tmp_path / "v.crtx"
        save_volume(vol, path)
        raw = path.read_bytes()
        assert raw[:4] == b"CRTX"
        version, = struct.unpack_from("<I", raw, 4)
        n, k, l, m = struct.unpack_from("<4I", raw, 8)
        sigma, dtheta, ds = struct.unpack_from("<3d", raw, 24)
        assert (version, n, k, l, m) == (1, 24, 8, 3, 3)
        assert sigma == vol.params.sigma
        assert dtheta == pytest.approx(math.pi / 8)
        assert ds == vol.params.delta_s
        freqs = struct.unpack_from("<3d", raw, 48)
        assert freqs == vol.params.frequencies
        payload = np.frombuffer(raw[48 + 24:], dtype="<c16")
        assert payload[0] == vol.data.reshape(-1)[0]


class TestBlendComposite:
    def test_outside_mask_untouched(self):
        rng = np.random.default_rng(4)
        img = rng.uniform(size=(16, 16))
        recon = rng.uniform(size=(16, 16))
        mask = np.zeros((16, 16), bool)
        mask[6:10, 6:10] = True
        out = blend_composite(img, recon, mask, band=2)
        assert np.array_equal(out[~mask], img[~mask])

    def test_deep_interior_takes_reconstruction(self):
        img = np.zeros((20, 20))
        recon = np.ones((20, 20))
        mask = np.zeros((20, 20), bool)
        mask[5:15, 5:15] = True
        out = blend_composite(img, recon, mask, band=2)
        assert out[10, 10] == 1.0

    def test_band_zero_is_hard_splice(self):
        img = np.zeros((10, 10))
        recon = np.full((10, 10), 0.8)
        mask = np.zeros((10, 10), bool)
        mask[4:6, :] = True
        out = blend_composite(img, recon, mask, band=0)
        assert (out[mask] == 0.8).all()
        assert (out[~mask] == 0.0).all()

    def test_rim_blends_toward_nearest_input(self):
        img = np.zeros((12, 12))
        recon = np.ones((12, 12))
        mask = np.zeros((12, 12), bool)
        mask[4:8, :] = True
        out = blend_composite(img, recon, mask, band=2)
        # depth-1 pixels mix 1/3 recon with 2/3 nearest outside value (0)
        assert out[4, 6] == pytest.approx(1.0 / 3.0)
        assert out[5, 6] == pytest.approx(2.0 / 3.0)


class TestCompleteImage:
    def test_empty_mask_returns_input_verbatim(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(size=(24, 24))
        req = CompletionRequest(image=img, mask=np.zeros((24, 24), bool),
                                gabor=small_gabor(),
                                diffusion=quick_diffusion(tol=1e-4))
        rep = complete_image(req)
        np.testing.assert_array_equal(rep.completed, img)
        assert rep.iterations == 1  # nothing evolves, criterion fires at once

    def test_outside_mask_fidelity(self):
        img = synth.weave_texture(32, seed=7)
        mask = np.zeros((32, 32), bool)
        mask[12:18, 10:20] = True
        corrupted = img.copy()
        corrupted[mask] = 0.0
        req = CompletionRequest(image=corrupted, mask=mask, gabor=small_gabor(),
                                diffusion=quick_diffusion())
        rep = complete_image(req)
        assert np.array_equal(rep.completed[~mask], corrupted[~mask])

    def test_all_corrupted_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(image=np.zeros((16, 16)),
                              mask=np.ones((16, 16), bool))

    def test_mask_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(image=np.zeros((16, 16)),
                              mask=np.zeros((8, 8), bool))

    def test_determinism(self):
        img = synth.wood_texture(32, seed=2)
        mask = np.zeros((32, 32), bool)
        mask[14:18, :] = True
        corrupted = img.copy()
        corrupted[mask] = 0.0

        def run():
            req = CompletionRequest(image=corrupted, mask=mask,
                                    gabor=small_gabor(),
                                    diffusion=quick_diffusion())
            return complete_image(req, ground_truth=img)

        a, b = run(), run()
        np.testing.assert_array_equal(a.completed, b.completed)
        assert a.rmse_masked == b.rmse_masked
        assert a.iterations == b.iterations

    def test_degenerate_diffusion_reduces_to_round_trip(self):
        # With tol=inf and a vanishing time step the pipeline degenerates
        # to lift -> inverse; the composite then differs from the input only
        # inside the mask, where it equals the affine-fitted round trip.
        img = synth.weave_texture(32, seed=9)
        mask = np.zeros((32, 32), bool)
        mask[13:19, 13:19] = True
        corrupted = img.copy()
        corrupted[mask] = 0.0
        gab = small_gabor()
        req = CompletionRequest(image=corrupted, mask=mask, gabor=gab,
                                diffusion=quick_diffusion(dt=1e-9, t_max=1e-9,
                                                          tol=math.inf),
                                blend_band=0)
        rep = complete_image(req)
        assert rep.iterations == 1
        assert np.array_equal(rep.completed[~mask], corrupted[~mask])
        bank = make_bank(gab)
        raw = inverse_transform(lift(corrupted, bank), bank)
        a, b = affine_fit(raw, corrupted, ~mask)
        np.testing.assert_allclose(rep.completed[mask], (a * raw + b)[mask],
                                   atol=1e-6)

    def test_report_serialization(self):
        img = synth.wood_texture(24, seed=1)
        mask = np.zeros((24, 24), bool)
        mask[10:14, 10:14] = True
        req = CompletionRequest(image=img, mask=mask, gabor=small_gabor(),
                                diffusion=quick_diffusion())
        rep = complete_image(req, ground_truth=img)
        import json
        rec = json.loads(rep.to_json())
        for key in ("iterations", "final_rel_change", "converged", "mode",
                    "stencil", "stage_ms", "rmse_masked"):
            assert key in rec
        assert set(rec["stage_ms"]) == {"lift", "diffusion", "reconstruct"}

    def test_single_frequency_uses_projection(self):
        img = synth.stripes(32, period=8.0)
        mask = np.zeros((32, 32), bool)
        mask[14:18, :] = True
        corrupted = img.copy()
        corrupted[mask] = 0.5
        req = CompletionRequest(image=corrupted, mask=mask,
                                gabor=small_gabor(frequencies=(2 * math.pi / 8,)),
                                diffusion=quick_diffusion())
        rep = complete_image(req, ground_truth=img)
        assert rep.rmse_masked is not None
        assert np.isfinite(rep.completed).all()
