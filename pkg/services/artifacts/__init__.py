"""
Artifact Service Package

Run directories and the artifacts written into them.
"""
from .artifact_service import artifact_service, ArtifactService

__all__ = ["artifact_service", "ArtifactService"]
