"""Smoke test for the rbffd Python extension.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import math

import rbffd


def main():
    cfg = rbffd.Config("case = annulus\nh = 0.1\napproach = composed\nseed = 3\n")
    assert cfg.case == "annulus" and cfg.seed == 3
    assert rbffd.Config(cfg.echo()).echo() == cfg.echo()

    cloud = rbffd.generate_nodes(cfg)
    assert len(cloud) == len(cloud.positions) == len(cloud.kinds)
    assert "boundary" in cloud.kinds and "interior" in cloud.kinds

    # second derivative of x^2 over the first node's support
    pts = cloud.positions
    idx, w = rbffd.operator_weights(pts, 0, pts[0], "dxx", m=3, degree=2)
    assert abs(sum(wi * pts[j][0] ** 2 for j, wi in zip(idx, w)) - 2.0) < 1e-8

    mat = rbffd.Material.plastic(1.0, 0.3, 0.01, hardening=0.25)
    state, tangent, dgamma = mat.return_map(rbffd.MaterialState(), [0.05, -0.02, 0.0, 0.01])
    assert dgamma > 0.0 and state.epbar > 0.0
    assert mat.yield_function(state.stress, state.epbar) < 1e-9
    assert len(tangent) == 4

    sol = rbffd.solve(cfg)
    assert sol.converged, sol.report_csv
    assert len(sol.displacement) == len(sol)
    assert all(math.isfinite(u) for uv in sol.displacement for u in uv)
    assert sol.steps()[0]["converged"]

    try:
        rbffd.Config("case = annulus\nh = 0.1\nbogus = 1\n")
    except rbffd.RbffdError as e:
        assert "bogus" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    for name, ok, detail in rbffd.check(seed=2):
        print(("PASS" if ok else "FAIL"), name, detail)
        assert ok
    print(f"smoke test ok: {len(sol)} nodes, {len(sol.steps())} load step(s)")


if __name__ == "__main__":
    main()
