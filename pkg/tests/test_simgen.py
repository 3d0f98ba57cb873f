import numpy as np
import pytest

from gazerec import CATEGORY_NAMES
from gazerec.datasetio import read_meta, read_split, read_truth, synced_fixations
from gazerec.simgen import (
    GazePhysiology,
    OverlappingObjects,
    SceneObject,
    SceneSpec,
    build_script,
    generate_corpus,
    make_scene,
    render_scene,
    simulate_gaze,
    split_counts,
    write_recording,
)


def simple_spec(**kwargs):
    obj = SceneObject(category=5, color=(200, 30, 30), size=40, center=(100, 90))
    defaults = dict(
        frame_dims=(320, 180),
        objects=(obj,),
        background=(255, 255, 255),
        jitter_amplitude=0.0,
        blur_probability=0.0,
        noise_sigma=0.0,
    )
    defaults.update(kwargs)
    return SceneSpec(**defaults)


class TestRender:
    def test_single_square_on_white(self):
        # the rectangular silhouette occupies exactly its inset box
        frame = render_scene(simple_spec(), seed=0)
        non_white = np.any(frame != 255, axis=2)
        ys, xs = np.nonzero(non_white)
        box = SceneObject(5, (0, 0, 0), 40, (100, 90)).box
        assert box.x0 <= xs.min() < xs.max() < box.x1
        assert box.y0 <= ys.min() < ys.max() < box.y1
        inset = frame[ys.min() + 2 : ys.max() - 1, xs.min() + 2 : xs.max() - 1]
        assert np.all(inset == (200, 30, 30))

    def test_deterministic_bytes(self):
        spec = simple_spec(noise_sigma=2.0, blur_probability=0.5)
        a = render_scene(spec, seed=11)
        b = render_scene(spec, seed=11)
        np.testing.assert_array_equal(a, b)
        c = render_scene(spec, seed=12)
        assert not np.array_equal(a, c)

    def test_blur_preserves_mean(self):
        spec = simple_spec()
        sharp = render_scene(spec, seed=0, force_blur=False)
        blurred = render_scene(spec, seed=0, force_blur=True)
        assert not np.array_equal(sharp, blurred)
        assert abs(sharp.mean() - blurred.mean()) <= 0.5

    def test_overlapping_objects_rejected(self):
        a = SceneObject(1, (200, 0, 0), 40, (100, 90))
        b = SceneObject(2, (0, 0, 200), 40, (110, 90))
        spec = simple_spec(objects=(a, b))
        with pytest.raises(OverlappingObjects):
            render_scene(spec, seed=0)

    def test_all_categories_render_distinct(self):
        rng = np.random.default_rng(0)
        renders = []
        for cat in range(1, len(CATEGORY_NAMES)):
            obj = SceneObject(cat, (120, 120, 120), 48, (100, 90))
            frame = render_scene(simple_spec(objects=(obj,)), seed=0)
            renders.append(np.any(frame != 255, axis=2))
        for i in range(len(renders)):
            for j in range(i + 1, len(renders)):
                assert (renders[i] != renders[j]).sum() > 50


class TestGazeSimulation:
    def scene(self, seed=0):
        rng = np.random.default_rng(seed)
        return make_scene(3, rng, (320, 180))

    def test_phase_durations_in_ranges(self):
        phys = GazePhysiology()
        for seed in range(25):
            spec, target = self.scene(seed)
            script = build_script(spec, target, np.random.default_rng(seed), phys)
            names = [p.name for p in script.phases]
            assert names[0] == "discovery"
            assert names[-1] == "grasp"
            for p in script.phases:
                if p.name == "discovery":
                    assert 240 <= p.duration_ms <= 300
                elif p.name == "fixation":
                    assert p.duration_ms >= 250
                elif p.name == "distractor":
                    assert 100 <= p.duration_ms <= 500
                elif p.name == "grasp":
                    assert 400 <= p.duration_ms <= 900

    def test_no_distractor_keeps_gaze_on_target(self):
        phys = GazePhysiology(distractor_fraction=(0.0, 0.0), blink_probability=0.0)
        spec, target = self.scene(1)
        script, track, _ = simulate_gaze(spec, target, 1, phys)
        assert all(p.name != "distractor" for p in script.phases)
        box = spec.objects[target].box
        discovery_end = script.phases[0].end_ms
        jitter = spec.jitter_amplitude
        for s in track.samples:
            if s.t >= discovery_end:
                assert box.x0 - jitter <= s.x <= box.x1 + jitter
                assert box.y0 - jitter <= s.y <= box.y1 + jitter

    def test_distractor_run_lands_on_non_target(self):
        phys = GazePhysiology(distractor_fraction=(0.25, 0.25), blink_probability=0.0)
        spec, target = self.scene(2)
        script, track, _ = simulate_gaze(spec, target, 3, phys)
        runs = [p for p in script.phases if p.name == "distractor"]
        assert runs
        jitter = spec.jitter_amplitude
        for run in runs:
            assert run.object_index != target
            box = spec.objects[run.object_index].box
            inside = [
                s
                for s in track.samples
                if run.start_ms <= s.t < run.end_ms and s.valid
            ]
            assert inside
            for s in inside:
                assert box.x0 - jitter <= s.x <= box.x1 + jitter

    def test_blink_of_120_ms_is_six_samples(self):
        spec, target = self.scene(3)
        phys = GazePhysiology(blink_probability=1.0, blink_ms=(120.0, 120.0), max_blinks=1)
        _, track, _ = simulate_gaze(spec, target, 4, phys)
        invalid = [s for s in track.samples if not s.valid]
        assert len(invalid) == 6
        ts = [s.t for s in invalid]
        assert ts == [ts[0] + 20.0 * i for i in range(6)]

    def test_stream_rate_ratio(self):
        spec, target = self.scene(4)
        script, track, _ = simulate_gaze(spec, target, 5)
        n_frames = int(script.total_ms // 40.0)
        assert abs(len(track.samples) - 2 * n_frames) <= 2


class TestRecording:
    def test_truth_covers_frames_and_contains_gaze(self, tmp_path):
        rng = np.random.default_rng(7)
        spec, target = make_scene(2, rng, (320, 180))
        phys = GazePhysiology(blink_probability=0.0)
        write_recording(tmp_path, "v0", spec, target, 7, phys)
        meta = read_meta(tmp_path, "v0")
        truth = read_truth(tmp_path, "v0")
        assert len(truth) == meta.n_frames
        assert all(r.label == spec.objects[target].category for r in truth)
        fixes = synced_fixations(tmp_path, "v0")
        for row in truth:
            if row.phase in ("fixation", "grasp") and row.frame in fixes:
                f = fixes[row.frame]
                if not f.interpolated:
                    assert row.box.contains(f.x, f.y)

    def test_frames_written(self, tmp_path):
        rng = np.random.default_rng(8)
        spec, target = make_scene(6, rng, (320, 180))
        paths = write_recording(tmp_path, "v1", spec, target, 8)
        meta = read_meta(tmp_path, "v1")
        for i in range(meta.n_frames):
            assert paths.frame_path(i).exists()


class TestCorpus:
    def test_split_arithmetic(self):
        assert split_counts(5) == (3, 1, 1)
        assert split_counts(10) == (6, 2, 2)
        assert split_counts(1) == (1, 0, 0)
        assert split_counts(2) == (1, 0, 1)

    def test_forty_videos_split_24_8_8(self, tmp_path):
        root = generate_corpus(40, tmp_path / "data", seed=5, frame_dims=(160, 96))
        split = read_split(root)
        assert len(split) == 40
        counts = {s: list(split.values()).count(s) for s in ("train", "val", "test")}
        assert counts == {"train": 24, "val": 8, "test": 8}
        # balanced classes: 5 videos each, split 3/1/1 per class
        per_class = {}
        for vid in split:
            cat = read_meta(root, vid).target_category
            per_class.setdefault(cat, []).append(split[vid])
        assert len(per_class) == 8
        for splits in per_class.values():
            assert sorted(splits) == ["test", "train", "train", "train", "val"]

    def test_single_video_goes_to_train(self, tmp_path):
        root = generate_corpus(1, tmp_path / "one", seed=6, frame_dims=(160, 96))
        assert read_split(root) == {"v0000": "train"}

    def test_determinism(self, tmp_path):
        a = generate_corpus(2, tmp_path / "a", seed=9, frame_dims=(160, 96))
        b = generate_corpus(2, tmp_path / "b", seed=9, frame_dims=(160, 96))
        for vid in ("v0000", "v0001"):
            ga = (a / "videos" / vid / "gaze.csv").read_bytes()
            gb = (b / "videos" / vid / "gaze.csv").read_bytes()
            assert ga == gb
            fa = (a / "videos" / vid / "frames" / "000000.png").read_bytes()
            fb = (b / "videos" / vid / "frames" / "000000.png").read_bytes()
            assert fa == fb
