"""Gaze-driven object recognition for egocentric video.

Pipeline stages: gaze/frame synchronization, distance-adaptive foveal
saliency, saliency-selected object proposals, CNN classification and
temporal score fusion, plus a synthetic scene/gaze simulator and a
semi-automatic annotation service.
"""

__version__ = "0.1.0"

CATEGORY_NAMES = [
    "background",
    "cone",
    "cylinder",
    "hemisphere",
    "hexagonal_prism",
    "rectangular_prism",
    "rectangular_pyramid",
    "triangular_prism",
    "triangular_pyramid",
]

NUM_CLASSES = len(CATEGORY_NAMES)

# ids 1..8; 0 is the background / rejection category
OBJECT_CLASS_IDS = tuple(range(1, NUM_CLASSES))
