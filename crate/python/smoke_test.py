"""Quick end-to-end check of the Python bindings.

Build first:  pip install --no-build-isolation -e crates/python
"""

import math

import irsplan


def main():
    cfg = irsplan.ExperimentConfig()
    assert cfg.cell_radius == 250.0 and cfg.users == 500

    base = irsplan.coverage_range(cfg)
    assert abs(base["range"] - 563.0) < 1.0, base
    near = irsplan.coverage_range(cfg, 20.0)
    assert near["range"] > base["range"]

    x = irsplan.inv_reg_upper_gamma(3.0, 0.95)
    assert abs(irsplan.reg_upper_gamma(3.0, x) - 0.95) < 1e-10

    s = irsplan.composite_stats(cfg, 150.0, 150.0, 0.0)
    assert math.isclose(s["alpha"], s["mean_z2"] ** 2 / s["var_z2"], rel_tol=1e-12)

    res = irsplan.line_search(cfg, 5, 3)
    assert res.plan.irs_counts == [5]
    a1 = irsplan.algorithm1(cfg, 5)
    assert math.isclose(res.nu_bar, a1.nu_bar, rel_tol=1e-12)
    table = res.ring_table(cfg)
    assert [row["ring"] for row in table] == [0, 1]

    bench = irsplan.benchmarks(cfg, res.plan)
    names = [b["scheme"] for b in bench]
    assert names == ["ap-equal-power", "ap-cipc", "irs-equal-power", "irs-mean-cipc"]
    assert all(b["nu_bar"] <= res.nu_bar + 1e-12 for b in bench)

    plan = irsplan.RingPlan(cfg, [250.0, 224.0, 185.0, 120.0], [10, 56, 34])
    ev = irsplan.evaluate_plan(cfg, plan)
    assert ev.plan.violations(cfg) == []
    assert ev.nu_bar > bench[1]["nu_bar"]

    try:
        irsplan.line_search(cfg, 20, 1)
    except irsplan.InfeasibleError as e:
        assert "near_ap_max" in str(e)
    else:
        raise AssertionError("expected InfeasibleError")

    small = cfg.with_overrides(["mc.n_topologies=2", "mc.n_fading=200"])
    report = irsplan.validate_plan_mc(small, res)
    assert report["mc"]["n_topologies"] == 2

    print(f"ok: line search M=5 nu={res.nu_bar:.5f}, M=100 layout nu={ev.nu_bar:.5f}")


if __name__ == "__main__":
    main()
