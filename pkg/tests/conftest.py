import pytest

from gazerec.simgen import GazePhysiology, generate_corpus


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Eight tiny videos (one per class), deterministic, no blinks so
    every frame has reliable gaze."""
    root = tmp_path_factory.mktemp("corpus") / "data"
    phys = GazePhysiology(
        fixation_total_ms=(700.0, 900.0),
        grasp_ms=(400.0, 450.0),
        distractor_fraction=(0.05, 0.15),
        blink_probability=0.0,
    )
    generate_corpus(8, root, seed=13, frame_dims=(192, 108), phys=phys)
    return root
