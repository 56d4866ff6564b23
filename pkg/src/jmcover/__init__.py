"""Cover times of Johnson-Mehl growth and coverage thresholds of Boolean models."""

__version__ = "0.1.0"
