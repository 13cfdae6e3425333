"""calmkit: sensing-driven calm-moment prompting with a deterministic study simulator."""

__version__ = "0.1.0"
