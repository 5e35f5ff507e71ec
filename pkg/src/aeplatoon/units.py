"""Unit conversions used at the configuration and reporting boundary."""

KMH_PER_MPS = 3.6


def kmh_to_mps(v):
    return v / KMH_PER_MPS


def mps_to_kmh(v):
    return v * KMH_PER_MPS


def km_to_m(x):
    return x * 1000.0


def m_to_km(x):
    return x / 1000.0


def kn_to_n(w):
    return w * 1000.0


def min_to_s(t):
    return t * 60.0


def format_speed_kmh(v_mps, digits=6):
    """Human-readable speed, e.g. ``format_speed_kmh(27.777...) == '100 km/h'``."""
    return f"{mps_to_kmh(v_mps):.{digits}g} km/h"
