import numpy as np
import pytest

from gazerec.fusion import (
    EmptySequence,
    ScoreSequence,
    WindowTooSmall,
    fuse_majority,
    fuse_mean,
    fuse_windowed,
)


def seq(scores, video_id="v"):
    return ScoreSequence.from_arrays(video_id, range(len(scores)), scores)


class TestMeanFusion:
    def test_sum_beats_per_frame_majority(self):
        # two of three frames argmax to class 1, but class 0 wins the sum
        s = seq([[0.4, 0.6], [0.9, 0.1], [0.4, 0.6]])
        decision = fuse_mean(s)
        np.testing.assert_allclose(decision.scores, [1.7, 1.3])
        assert decision.category == 0
        assert not decision.tie
        assert fuse_majority(s).category == 1

    def test_single_frame(self):
        d = fuse_mean(seq([[0.1, 0.7, 0.2]]))
        assert d.category == 1

    def test_identical_frames_match_single(self):
        frame = [0.2, 0.5, 0.3]
        assert fuse_mean(seq([frame] * 7)).category == fuse_mean(seq([frame])).category

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            scores = rng.random((6, 5))
            s1 = seq(scores)
            s2 = seq(scores * 37.5)
            assert fuse_mean(s1).category == fuse_mean(s2).category

    def test_order_independence(self):
        rng = np.random.default_rng(1)
        scores = rng.random((8, 4))
        shuffled = scores[rng.permutation(8)]
        assert fuse_mean(seq(scores)).category == fuse_mean(seq(shuffled)).category

    def test_tie_flag(self):
        d = fuse_mean(seq([[0.5, 0.5]]))
        assert d.category == 0
        assert d.tie

    def test_empty(self):
        with pytest.raises(EmptySequence):
            fuse_mean(ScoreSequence("v", ()))

    def test_recovery_with_under_forty_percent_correct(self):
        # 3 of 10 frames argmax-correct for class 2, yet the sum recovers
        # it: correct frames are confident, wrong frames are weak and
        # spread over different classes
        strong = [0.02, 0.03, 0.9, 0.05]
        weak_a = [0.4, 0.25, 0.3, 0.05]
        weak_b = [0.05, 0.4, 0.3, 0.25]
        frames = [strong] * 3 + [weak_a] * 4 + [weak_b] * 3
        s = seq(frames)
        correct_frames = sum(1 for f in frames if int(np.argmax(f)) == 2)
        assert correct_frames / len(frames) < 0.4
        assert fuse_mean(s).category == 2
        assert fuse_majority(s).category != 2


class TestMajority:
    def test_counts(self):
        s = seq([[0.1, 0.9, 0.0], [0.2, 0.7, 0.1], [0.0, 0.3, 0.7]])
        d = fuse_majority(s)
        assert d.category == 1
        assert not d.tie

    def test_tie_lowest_id(self):
        s = seq([[0.1, 0.9], [0.9, 0.1]])
        d = fuse_majority(s)
        assert d.category == 0
        assert d.tie

    def test_one_hot_majority_agrees_with_mean(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n, c = 9, 4
            winner = int(rng.integers(c))
            labels = [winner] * 5 + list(rng.integers(c, size=n - 5))
            scores = np.eye(c)[labels]
            s = seq(scores)
            if labels.count(winner) * 2 > n:
                assert fuse_mean(s).category == winner
                assert fuse_majority(s).category == winner

    def test_empty(self):
        with pytest.raises(EmptySequence):
            fuse_majority(ScoreSequence("v", ()))


class TestWindowed:
    def test_window_one_is_per_frame_argmax(self):
        rng = np.random.default_rng(3)
        scores = rng.random((10, 3))
        out = fuse_windowed(seq(scores), 1)
        assert [c for _, c in out] == [int(np.argmax(s)) for s in scores]

    def test_full_window_matches_mean_fusion(self):
        rng = np.random.default_rng(4)
        scores = rng.random((12, 5))
        s = seq(scores)
        out = fuse_windowed(s, len(scores))
        assert out[-1][1] == fuse_mean(s).category

    def test_distractor_burst_overridden(self):
        # 2-frame distractor burst inside a window of 5 gets outvoted
        good = [0.1, 0.8, 0.1]
        bad = [0.7, 0.2, 0.1]
        scores = [good] * 4 + [bad] * 2 + [good] * 4
        out = fuse_windowed(seq(scores), 5)
        assert all(c == 1 for _, c in out[6:])
        per_frame = fuse_windowed(seq(scores), 1)
        assert any(c == 0 for _, c in per_frame)

    def test_order_sensitivity_witness(self):
        # windowed fusion depends on order while plain mean fusion does not
        a = [[0.9, 0.1]] * 3 + [[0.2, 0.8]] * 3
        b = a[::-1]
        wa = fuse_windowed(seq(a), 3)
        wb = fuse_windowed(seq(b), 3)
        assert [c for _, c in wa] != [c for _, c in wb]
        assert fuse_mean(seq(a)).category == fuse_mean(seq(b)).category

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmall):
            fuse_windowed(seq([[1.0, 0.0]]), 0)


class TestSequence:
    def test_frame_indices_must_increase(self):
        with pytest.raises(ValueError):
            ScoreSequence("v", ((1, np.array([1.0])), (1, np.array([1.0]))))
