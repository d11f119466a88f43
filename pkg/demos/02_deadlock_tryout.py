"""Forbidden sliding turns oblique corridors into traps; Tryout gets out.

    python demos/02_deadlock_tryout.py
"""
from toponav.harness.config import RunConfig
from toponav.harness.fixtures import load_suite
from toponav.harness.suite import run_suite

sc = load_suite("deadlock")
print(f"{sc.name}: {len(sc.episodes)} episodes, chassis radius {sc.regime.chassis_radius} m")

for tryout in (False, True):
    run = run_suite(sc, "teacher", RunConfig(tryout=tryout))
    print(f"\ntryout={'on' if tryout else 'off'}")
    for o in run.outcomes:
        ev = o.trace.control.tryout_events
        print(f"  {o.episode_id} SR={o.result.SR:.0f} CT={o.result.CT:3d} AT={o.result.AT:4d} "
              f"tryout_attempts={len(ev):3d} escapes={sum(e.escaped for e in ev)}")
    s = run.summary()
    print(f"  mean SR={s['SR']:.2f} CT={s['CT']:.1f}")
