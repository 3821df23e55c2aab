"""Figure regeneration from swarmseek run bundles.

Reads only the published bundle files (trajectory.csv, metrics.json,
manifest.json); no simulation code is imported.
"""

__version__ = "0.1.0"

from .bundle import Bundle, SchemaMismatch, load_bundle   # noqa: F401
from .render import FIGURE_KINDS, PlotJob, render          # noqa: F401
