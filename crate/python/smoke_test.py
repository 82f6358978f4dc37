"""Smoke test for the conslaw extension module.

Build and copy the module next to this file first:

    cargo build -p conslaw-py --features extension-module --release
    cp target/release/libconslaw.so python/conslaw.so
    python3 python/smoke_test.py
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import conslaw  # noqa: E402


def check(name, ok):
    print(f"{name}: {'ok' if ok else 'FAILED'}")
    return ok


def main():
    results = []

    cubic = conslaw.PolyFlux.cubic()
    fan = conslaw.solve_riemann(cubic, -1.0, 1.0)
    kinds = [w[0] for w in fan.waves]
    results.append(check("cubic fan is shock then rarefaction", kinds == ["shock", "rarefaction"]))
    results.append(check("shock speed 3/4", abs(fan.waves[0][1] - 0.75) < 1e-12))
    results.append(check("rarefaction value", abs(fan.sample(1.2) - math.sqrt(0.4)) < 1e-12))

    u = conslaw.CellField(0.0, 1.0, [0.0, 1.0, 0.5, 2.0, 1.5, 3.0], 0.0, 3.0)
    p = conslaw.project_monotone(u)
    q = conslaw.project_monotone_infsup(u)
    results.append(check("monotone projection", p.is_monotone()
                         and max(abs(a - b) for a, b in zip(p.values, q.values)) < 1e-12))
    results.append(check("block means", p.values == [0.0, 0.75, 0.75, 1.75, 1.75, 3.0]))

    values, s = conslaw.project_l1ball([3.0, -1.0, 0.5], 1.0, 2.0)
    results.append(check("l1 ball threshold", abs(s - 1.0) < 1e-12 and values == [2.0, 0.0, 0.0]))

    burgers = conslaw.PolyFlux.burgers()
    data = conslaw.CellField.random_bv(3, -5.0, 5.0, 200, -1.0, 1.0)
    end, report = conslaw.run(data, burgers, 1.0, targets=["monotone", "interval"])
    summary = conslaw.audit(report)
    d2 = report.series("d2_monotone")
    results.append(check("godunov decay audit passes", summary["passed"] and d2[-1] < d2[0]))
    results.append(check("report ends at t_end", report.times[-1] == 1.0 and len(end) >= len(data)))

    bumped = conslaw.DecayReport([0.0, 1.0, 2.0], [("d2_monotone", [1.0, 0.5, 0.7])])
    bad = conslaw.audit(bumped)
    results.append(check("injected increase is flagged",
                         not bad["passed"] and bad["violations"][0][:2] == ("d2_monotone", 1)))

    try:
        conslaw.run(data, burgers, 1.0, cfl_ratio=0.6)
        results.append(check("cfl ratio rejected", False))
    except ValueError:
        results.append(check("cfl ratio rejected", True))

    print(f"{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
