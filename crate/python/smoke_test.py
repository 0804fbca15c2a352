"""Smoke test for the ecoepi Python module.

Build and run:
    cargo build --release -p ecoepi-py --features extension-module
    cp target/release/libecoepi.so python/ecoepi.so
    python3 python/smoke_test.py
"""

import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import ecoepi


def main():
    params = ecoepi.Params()
    resp = ecoepi.Response("holling1", k=1.0)
    assert resp.family == "holling1"
    assert resp.f(2.0, 0.0, 1.0) == 2.0

    report = ecoepi.thresholds(params, resp, 1.0, 0.1, 0.0)
    th = report["thresholds"]
    assert abs(th["theta_u"] - 1.32) < 1e-12, th
    assert report["extinction"]["infected"]["holds"]

    noise = ecoepi.Noise("torus_rotation", q0=1.0, eps=0.1, seed=7)
    lam = noise.lambda_at(3.0)
    assert 0.9 <= lam <= 1.1
    assert abs(noise.shift(1.0).lambda_at(2.0) - lam) < 1e-12

    times, states = ecoepi.integrate(params, noise, 0.0, 20.0, [1.0, 0.5, 0.5], response=resp)
    assert times[-1] == 20.0
    assert all(min(x) >= 0.0 for x in states)

    x = ecoepi.pullback_state(params, noise, 30.0, [1.0, 0.5, 0.5], response=resp)
    y = ecoepi.pullback_state(params, noise, 30.0, [3.0, 0.0, 1.0], response=resp)
    assert ecoepi.hausdorff_semidist([x], [y]) < 1e-3

    # The S-axis attractor is the point S*(omega).
    si = ecoepi.pullback_state(params, noise, 60.0, [1.0, 0.0, 0.0], variant="si")
    assert abs(si[0] - noise.s_star(params.as_dict()["mu"])) < 1e-6

    scenario = ecoepi.Scenario("noise.seed = 3\n")
    scenario.set("model.beta", "0.3")
    assert "model.beta = 0.3" in scenario.to_config()
    assert ecoepi.Scenario(scenario.to_config()).to_config() == scenario.to_config()
    assert scenario.check()["passed"]
    pb = scenario.pullback()
    # Grid corners on the invariant plane P = 0 keep the section from being a point.
    assert pb["converged"] and pb["diameter"] > 0.1

    try:
        ecoepi.Params(mu=2.0)
    except ValueError:
        pass
    else:
        raise AssertionError("mu >= c must be rejected")

    with tempfile.TemporaryDirectory() as out:
        assert ecoepi.run_cli(["--out", out, "thresholds"]) == 0
        assert ecoepi.run_cli(["--out", out, "bogus"]) == 2

    print("smoke test ok:", "theta_u =", th["theta_u"], "diameter =", pb["diameter"])


if __name__ == "__main__":
    main()
