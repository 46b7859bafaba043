"""Out-of-band power jamming in WDM links: synthetic telemetry, ML detection and
localization, and a reallocation-based prevention simulator."""

__version__ = "0.1.0"
