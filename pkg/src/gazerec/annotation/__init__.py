"""Semi-automatic annotation: persistence and the local HTTP service."""

from .store import AnnotationStore, ValidationFailed, VideoAnnotation

__all__ = ["AnnotationStore", "ValidationFailed", "VideoAnnotation"]
