"""Two sweeps: map size against the localization threshold gamma, and
success against chassis radius with and without Tryout.

    python demos/03_gamma_and_radius.py
"""
from toponav.harness.config import RunConfig
from toponav.harness.fixtures import load_suite
from toponav.harness.suite import gamma_sweep, run_suite

allowed = load_suite("allowed")
print("gamma  node_count  SR")
for g, s in gamma_sweep([allowed], [0.25, 0.5, 0.75, 1.0]):
    print(f"{g:5.2f}  {s['node_count']:10.1f}  {s['SR']:.2f}")

forbidden = load_suite("forbidden")
print("\nradius  SR(tryout)  SR(no tryout)")
for r in (0.10, 0.14, 0.18):
    on = run_suite(forbidden, "teacher", RunConfig(chassis_radius=r)).summary()["SR"]
    off = run_suite(forbidden, "teacher", RunConfig(chassis_radius=r, tryout=False)).summary()["SR"]
    print(f"{r:6.2f}  {on:10.2f}  {off:13.2f}")
