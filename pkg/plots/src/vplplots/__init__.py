"""Publication-style figures from the lab's CSV/JSON artifacts."""

from .artifacts import ArtifactError, MapArtifact, load_map, load_nodal, load_zeros
from .render import FigureRequest, render_density, render_nodal, render_phase

__version__ = "0.1.0"
