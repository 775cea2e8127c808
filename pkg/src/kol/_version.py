"""Single source of the tool version for output embedding.

Kept in its own module so low-level writers can stamp outputs without
importing the package root (which would be circular).
"""

__version__ = "0.1.0"
