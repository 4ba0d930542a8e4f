"""Reference inference service for the hallu-audit backend wire protocol."""

__version__ = "0.1.0"
