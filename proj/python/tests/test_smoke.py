import json

import numpy as np
import pytest

import ot2m


@pytest.fixture(scope="module")
def clips():
    return ot2m.gen_synthetic(count=6, min_frames=40, max_frames=80, seed=3)


def test_synthetic_is_deterministic(clips):
    again = ot2m.gen_synthetic(count=6, min_frames=40, max_frames=80, seed=3)
    for a, b in zip(clips, again):
        assert a["text"] == b["text"]
        assert np.array_equal(a["motion"].frames, b["motion"].frames)
    assert clips[0]["motion"].frames.shape[1] == ot2m.FEATURE_DIM


def test_split_merge_round_trip(clips):
    m = clips[0]["motion"]
    parts = ot2m.split_parts(m)
    assert parts.shape == (len(m), 5, 71)
    back = ot2m.merge_parts(parts, m.fps)
    assert np.max(np.abs(back.frames - m.frames)) <= 1e-12


def test_motion_file_round_trip(tmp_path, clips):
    m = clips[1]["motion"]
    path = tmp_path / "clip.ot2m"
    ot2m.write_motion(path, m)
    back = ot2m.read_motion(path)
    assert np.array_equal(back.frames, m.frames.astype(np.float32).astype(np.float64))


def test_errors_carry_their_kind(tmp_path):
    with pytest.raises(ot2m.Error, match="IoError"):
        ot2m.read_motion(tmp_path / "missing.ot2m")
    with pytest.raises(ot2m.Error, match="EmptyInput"):
        ot2m.merge_texts([])


def test_filter_worked_examples():
    def track(n, visible=17):
        rows = []
        for i in range(n):
            kps = [[1, 1, 0.9]] * visible + [[1, 1, 0.1]] * (17 - visible)
            rows.append(json.dumps({"frame_idx": i, "bbox": [0, 0, 300, 400], "frame_size": [640, 480],
                                    "keypoints": kps}))
        return "\n".join(rows)

    assert ot2m.filter_track(track(120))["accepted"]
    assert ot2m.filter_track(track(120, visible=7))["reasons"] == ["min_visible_keypoints"]


def test_concat_and_plausibility(clips):
    a, b = clips[0]["motion"], clips[1]["motion"]
    out, seam = ot2m.concat_motions(a, b, window=8)
    assert len(out) == len(a) + 8 + len(b)
    assert seam["max_angular_velocity"] <= seam["max_endpoint_distance"] / 8 + 1e-9
    assert ot2m.score_plausibility(a)["pass"]
    assert ot2m.merge_texts(["Walks.", "Sits"]) == "walks, then sits"


def test_metrics():
    a = np.random.default_rng(0).normal(size=(50, 4))
    assert abs(ot2m.fid(a, a)) <= 1e-9
    fd = ot2m.frechet_distance(np.array([0.0]), np.array([[1.0]]), np.array([3.0]), np.array([[4.0]]))
    assert fd == pytest.approx(9.0 + 1.0)
    r1, r2, r3 = ot2m.r_precision(a, a, pool=8, seed=1)
    assert r1 == 1.0 and r3 == 1.0
    assert ot2m.diversity(a, pairs=10, seed=0) > 0.0


def test_tokenizer_pipeline(tmp_path, clips):
    tok = ot2m.Tokenizer(layers=2, width=8, codebook_size=32, latent_dim=8, batch_size=2, seed=1)
    log = ot2m.train_tokenizer(tok, [c["motion"] for c in clips], 3)
    assert len(log) == 3
    for step in log:
        assert abs(step["total"] - (step["whole_body"] + step["parts"] + step["commitment"])) <= 1e-9
    m = clips[0]["motion"]
    tokens = tok.tokenize(m)
    assert tokens.shape == ((len(m) + 3) // 4, 5, 2)
    assert tokens.max() < 32
    path = tmp_path / "tok.ckpt"
    tok.save(path)
    again = ot2m.Tokenizer.load(path)
    assert np.array_equal(again.tokenize(m), tokens)
    ot2m.write_tokens(tmp_path / "t.ot2t", tokens, 32)
    assert np.array_equal(ot2m.read_tokens(tmp_path / "t.ot2t"), tokens)
    rec = again.detokenize(tokens, 20.0)
    assert len(rec) == tokens.shape[0] * 4
    assert ot2m.mpjpe(m, rec.slice(0, len(m))) > 0.0


def test_render_and_gradcheck(clips):
    svg = ot2m.render_svg(clips[0]["motion"], stride=10)
    assert svg.count('class="figure"') == (len(clips[0]["motion"]) + 9) // 10
    errors = ot2m.gradcheck(instances=2, seed=0)
    assert max(errors.values()) <= 1e-3
