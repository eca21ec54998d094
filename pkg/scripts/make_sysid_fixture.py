"""Regenerate the bundled noise-free sysid fixture (K=0.2 m/s/V, tau=0.5 s on both wheels)."""

from pathlib import Path

from userfollow.plant import ActuatorParams
from userfollow.sysid import synthesize_log, write_sysid_csv

OUT = Path(__file__).resolve().parents[1] / "src" / "userfollow" / "data" / "sysid_fixture.csv"

if __name__ == "__main__":
    log = synthesize_log(ActuatorParams((0.2, 0.2), (0.5, 0.5)), duration=10.0, rate=200.0, seed=7)
    write_sysid_csv(log, OUT)
    print(OUT)
