#!/usr/bin/env python3
"""Smoke test for the ggflow_py extension module.

Builds nothing itself: expects `cargo build -p ggflow-py` (debug or release)
to have produced the cdylib already. The library is copied into a temp
directory under the importable name `ggflow_py.so` and exercised end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    candidates = []
    for profile in ("release", "debug"):
        for name in ("libggflow_py.so", "libggflow_py.dylib", "ggflow_py.dll"):
            p = REPO / "target" / profile / name
            if p.exists():
                candidates.append(p)
    if not candidates:
        sys.exit(
            "ggflow_py cdylib not found under target/{release,debug}; "
            "run `cargo build -p ggflow-py` first"
        )
    # prefer the most recently built artifact
    return max(candidates, key=lambda p: p.stat().st_mtime)


def check(label: str, ok: bool, detail: str = "") -> None:
    if not ok:
        sys.exit(f"FAIL {label}: {detail}")
    print(f"ok   {label}")


def main() -> None:
    lib = locate_cdylib()
    with tempfile.TemporaryDirectory() as tmp:
        shutil.copy(lib, Path(tmp) / "ggflow_py.so")
        sys.path.insert(0, tmp)
        import ggflow_py as gg

        # dissipation pair: convex duality and derivative consistency
        d = gg.Dissipation.cosh(1.0, 2.0)
        for v in (-3.0, -0.7, 0.0, 1.3, 5.0):
            w = d.dpsi(v)
            fy = d.psi(v) + d.psi_star(w) - v * w
            check(f"fenchel-young at v={v}", abs(fy) < 1e-10, f"residual {fy}")
            check(
                f"derivative inverse at v={v}",
                abs(d.dpsi_star(w) - v) < 1e-8 * (1 + abs(v)),
                f"{d.dpsi_star(w)} vs {v}",
            )

        # constant-tilt landscape: closed-form flow endpoint
        land = gg.Landscape("linear_tilt", {"g": 0.5})
        check("landscape gradient", land.gradient(0.3, 0.1) == 0.5)
        flow = gg.generalized_flow(land, alpha=1.0, beta=1.0, x0=0.0, t_end=1.0)
        expect = -2.0 * math.sinh(0.5)
        got = flow["values"][-1]
        check("sinh flow endpoint", abs(got - expect) < 1e-7, f"{got} vs {expect}")

        # the flow solution is a zero of its own action
        rep = gg.action(flow["dt"], flow["values"], land, 1.0, 1.0)
        check("action vanishes on solution", abs(rep["total"]) < 1e-7, str(rep["total"]))

        # quadratic flow on a harmonic well relaxes exponentially
        well = gg.Landscape("quadratic_loading", {"ell1": 0.0, "t_max": 2.0})
        qf = gg.quadratic_flow(well, omega=0.5, x0=1.0, t_end=2.0)
        got = qf["values"][-1]
        check("quadratic flow endpoint", abs(got - math.exp(-2.0)) < 1e-7, str(got))

        # rate-independent evolution under double-well loading produces a jump
        dw = gg.Landscape("double_well_loading", {"tilt1": 1.0})
        ri = gg.rate_independent_flow(dw, a=0.1, x0=-1.0, t_end=1.0)
        check("stick-slip jump recorded", len(ri["jumps"]) == 1, str(ri["jumps"]))
        bal = gg.action_rate_independent(
            1.0 / 2048.0,
            [i / 2048.0 for i in range(2049)],
            gg.Landscape("linear_tilt", {"g": 0.0}),
            1.0,
        )
        check("flat-landscape balance is |Dx| - 0 + 0 >= 0", bal["total"] > 0.9)

        # jump cost: closed form agrees with brute force and dominates A|dx|
        c1 = gg.jump_cost(-1.0, 1.0, 0.5, dw, 0.1)
        c2 = gg.jump_cost(-1.0, 1.0, 0.5, dw, 0.1, brute_force=True)
        check("jump cost closed vs brute", abs(c1 - c2) < 1e-6, f"{c1} vs {c2}")
        check("jump cost lower bound", c1 >= 0.1 * 2.0 - 1e-12, str(c1))

        # stochastic path: deterministic under a fixed seed, lands on lattice
        t1, x1, exited = gg.simulate(land, 200, 1.0, 1.0, 0.0, 1.0, seed=42)
        t2, x2, _ = gg.simulate(land, 200, 1.0, 1.0, 0.0, 1.0, seed=42)
        check("simulation reproducible", (t1, x1) == (t2, x2))
        check("simulation nontrivial", len(t1) > 10, f"{len(t1)} events")
        check("exit flag off", not exited)
        on_lattice = all(abs(x * 200 - round(x * 200)) < 1e-9 for x in x1)
        check("positions on lattice", on_lattice)

        print("PASS: all smoke checks succeeded")


if __name__ == "__main__":
    main()
