"""Space-time difference systems, their spectra, classical marchers and an ideal HHL simulator."""

__version__ = "0.1.0"
