"""safeguard: self-hosted personal-safety service."""

__version__ = "0.1.0"
