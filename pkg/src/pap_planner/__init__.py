"""Energy-efficient multi-lap trajectory planning for a UAV access point with IRS assistance."""

__version__ = "0.1.0"
