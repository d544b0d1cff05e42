"""Handover performance models for multicast Mobile IPv6 schemes.

Closed-form loss/delay windows, an event-driven single-handover simulator,
a honeycomb mobility simulator and a CSV experiment runner.
"""

__version__ = "0.1.0"
