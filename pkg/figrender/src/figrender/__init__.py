"""Figure rendering for spincavity run artifacts.

Reads only files listed in a run manifest (verified by checksum) and turns
them into phase-space contour panels, time-series panels, and
achievable-region plots.  No physics is computed here.
"""

from .manifest import ChecksumMismatch, ManifestReader, MissingArtifact
from .render import RenderJob, render

__version__ = "0.1.0"
