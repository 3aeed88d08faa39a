"""Smoke test for the ergolab Python extension.

Build and install first, e.g.

    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml

then run ``python python/smoke_test.py``.
"""

import math

import ergolab


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    t = ergolab.Transformation()
    assert close(t.alpha[0], (math.sqrt(5) - 1) / 2, 1e-15)
    p = t.apply([0.9])
    assert close(t.inverse_apply(p)[0], 0.9, 1e-15)
    assert len(t.orbit([0.0], 5)) == 5

    free = ergolab.SamplingFunction.constant(0.0)
    est = ergolab.lyapunov_real(free, 3.0, t, steps=100_000, orbits=4)
    expected = math.log((3 + math.sqrt(5)) / 2)
    assert close(est["value"], expected, 5e-3), est
    inside = ergolab.lyapunov_real(free, 1.0, t, steps=100_000, orbits=4)
    assert inside["value"] <= 0.01, inside

    m = ergolab.m_function(free, 1j, [0.0], t)
    assert abs(m["m"] - 1.6180339887j) <= 1e-8, m

    cos2 = ergolab.SamplingFunction.cosine(2.0)
    herman = cos2.scaled(1.5)
    g = ergolab.lyapunov_real(herman, 0.3, t, steps=50_000, orbits=4)
    assert g["value"] >= math.log(1.5) - 0.05, g

    z = 0.5 + 0.2j
    real = ergolab.lyapunov_real(cos2, z, t, steps=100_000, orbits=8)
    cplx = ergolab.lyapunov_complex(cos2, z, t, samples=32)
    tol = max(1e-3, 3 * math.hypot(real["std_error"], cplx["std_error"]))
    assert abs(real["value"] - cplx["value"]) <= tol, (real, cplx)

    step = ergolab.SamplingFunction.step([0.0, 0.5], [0.0, 1.5])
    moll = step.mollify(16)
    assert moll.l1_distance(step) > 0.0
    text = cos2.to_text()
    assert ergolab.SamplingFunction.from_text(text).to_text() == text

    meas = ergolab.estimate_m(free, t, cells=100, delta_gamma=0.05, steps=20_000, orbits=4)
    assert close(meas["value"], 4.0, 0.1), meas["value"]

    w = ergolab.sc_weight(0.0, [-1.0, 0.0, 1.0])
    assert close(w[0], w[2], 1e-8) and w[1] > 0

    try:
        ergolab.Transformation([0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("rational rotation accepted")

    print("ergolab python smoke test: ok")


if __name__ == "__main__":
    main()
