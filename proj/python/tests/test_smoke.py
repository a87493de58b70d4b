import numpy as np
import pytest

import phishbench as pb


def test_published_rates():
    r = pb.compute_rates(n_p=312355, n_tp=204880, i_tp=200134)
    assert r["tpr_cell"] == "204,880/312,355 (65.59%)"
    assert abs(r["ident_precision"] - 200134 / 204880) < 1e-12
    assert r["fpr"] is None


def test_url_tools():
    assert pb.parse_registrable("https://www.facebook.com/x")["registrable"] == "facebook.com"
    assert "faceb00k.com" in pb.typosquats("facebook.com", "homoglyph")
    assert not pb.verify_brand_domain("https://home.barclays/", ["barclays.co.uk"])
    assert pb.verify_brand_domain("https://home.barclays/", ["barclays.co.uk"], brand_token_scan=True)
    with pytest.raises(pb.ValidationError):
        pb.typosquats("facebook.com", "bitsquat")


def test_manipulation_is_local_and_seeded(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(60, 80, 3), dtype=np.uint8)
    out, affected = pb.manipulate(img, (10, 10, 30, 20), "Flipping", seed=3)
    assert out.shape == img.shape
    assert affected
    mask = np.zeros(img.shape[:2], dtype=bool)
    for x, y, w, h in affected:
        mask[y : y + h, x : x + w] = True
    assert np.array_equal(out[~mask], img[~mask])
    again, _ = pb.manipulate(img, (10, 10, 30, 20), "Flipping", seed=3)
    assert np.array_equal(out, again)

    pb.write_png(tmp_path / "a.png", out)
    assert np.array_equal(pb.read_png(tmp_path / "a.png"), out)


def test_quality_and_similarity():
    img = np.full((32, 32, 3), 100, dtype=np.uint8)
    assert pb.ssim(img, img) == pytest.approx(1.0)
    assert pb.psnr(img, img + 1) == pytest.approx(48.1308, rel=1e-5)
    assert pb.emd_similarity(img, img) == pytest.approx(1.0)
    assert pb.phash(img) == pb.phash(img.copy())
    with pytest.raises(pb.ShapeError):
        pb.ssim(img, img[:, :, :2])


def test_fgsm_stays_in_the_ball():
    rng = np.random.default_rng(1)
    logo = rng.random((24, 40, 3))
    ref = rng.random((24, 40, 3))
    r = pb.attack(logo, ref, "attack=FGSM;epsilon=8/255")
    assert r["logo"].shape == logo.shape
    assert np.max(np.abs(r["logo"] - logo)) <= 8 / 255 + 1e-12
    assert r["final_score"] < r["initial_score"]


def test_synthetic_corpus(tmp_path):
    p = pb.synth_corpus(tmp_path, brands=3, seed=1)
    assert p["manifest"].exists()
    assert (p["refs"]).is_dir()
