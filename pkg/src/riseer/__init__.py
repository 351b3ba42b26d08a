"""Regional industrial structure evolution, rebuilt from enterprise registrations."""

__version__ = "0.1.0"
