"""Bundled fixtures."""

from importlib.resources import files


def sysid_fixture_path():
    """Noise-free PRBS log of K=0.2 m/s/V, tau=0.5 s wheels, 10 s at 200 Hz."""
    return files(__name__) / "sysid_fixture.csv"
