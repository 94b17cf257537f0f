"""gibbsched-plots: figures from gibbsched output files.

Consumes the versioned sweep CSV written by ``gibbsched run`` and the
decision-profile CSV written by ``gibbsched oracle --dump-profile``, and
renders them as publication-style matplotlib figures. The CSV files are the
only coupling to the simulator: this package never imports it.
"""

__version__ = "0.1.0"
