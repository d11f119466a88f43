"""Walk one episode of the sliding-allowed suite and watch the map grow.

    python demos/01_map_one_episode.py [out.svg]
"""
import sys

from toponav.harness.config import RunConfig
from toponav.harness.episode import run_episode
from toponav.harness.fixtures import load_suite
from toponav.harness.plot import plot_trace

sc = load_suite("allowed")
ep = sc.episodes[2]   # a wall with a door between start and goal
print(f"{sc.name}/{ep.id}: start={ep.start} goal={ep.goal}")

result, trace = run_episode(sc, ep, "teacher", RunConfig())

# one line per goal prediction: where the agent stood, what it saw, where it went
for d in trace.decisions:
    kinds = [n["kind"] for n in d.graph["nodes"]]
    print(f"step {d.step:2d} pose=({d.pose[0]:5.2f},{d.pose[1]:5.2f}) "
          f"waypoints={len(d.waypoints)} ghosts={kinds.count('ghost'):2d} visited={kinds.count('visited'):2d} "
          f"goal={d.goal}")

print("stop reason:", trace.stop_reason)
print(" ".join(f"{k}={v:.3g}" for k, v in result.as_dict().items()))

out = sys.argv[1] if len(sys.argv) > 1 else "episode.svg"
print("wrote", plot_trace(trace.records(), out, sc.world))
