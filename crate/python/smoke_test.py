"""Smoke test for the `siegel` extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install target/wheels/siegel-*.whl`, then run this file.
"""

import cmath
import json
import math

import siegel


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    catalog = siegel.Family.catalog()
    assert len(catalog) == 6, catalog
    quad = siegel.Family("quadratic")
    assert quad.v == 0.25 and quad.symmetry_order == 1
    assert close(quad.log_bound, math.log(4 * 0.25), 1e-15)
    assert siegel.Family("sin").symmetry_reduce().name == "reduced:sin"

    # series arithmetic
    a = siegel.Series([0, 1, 1, 0, 0, 0])
    inv = a.revert()
    assert [round(c.real) for c in inv.coeffs] == [0, 1, -1, 2, -5, 14]
    ident = a.compose(inv)
    assert all(close(c, e, 1e-12) for c, e in zip(ident.coeffs, siegel.Series.identity(5).coeffs))
    assert close(a(0.1), 0.11, 1e-15)
    assert siegel.Series.from_json(a.to_json()) == a
    assert (a - a).coeffs == [0j] * 6

    # Koenigs coefficients by hand: h_2 = -2, h_3 = 8/3 at lambda = 1/2
    h = siegel.koenigs_series(quad, 0.5, 16)
    assert close(h.coeffs[2], -2, 1e-12) and close(h.coeffs[3], 8 / 3, 1e-12)

    g, floor = siegel.siegel_series(quad, "golden", 64)
    assert floor > 1e-3 and g.degree == 64

    y = siegel.yoccoz_w(quad, 0.01)
    assert abs(y.w / y.lam - 0.25) <= 0.05, y
    assert close(y.u, math.log(0.25), 0.2)

    est = siegel.RhoEstimator(quad, "radial", depth=10)
    golden = est.estimate("golden")
    assert golden.rho <= quad.log_bound + 0.1 and not golden.diverging
    half = siegel.RhoEstimator(quad, "radial", depth=12).estimate("rat:1/2")
    assert half.diverging and half.rho == -math.inf
    assert json.dumps(half.to_dict())

    try:
        siegel.RhoEstimator(quad, "coeff").estimate("rat:1/2")
    except siegel.NumericalError as e:
        assert "small_divisor_breakdown" in str(e)
    else:
        raise AssertionError("rational alpha must break the Siegel recurrence")

    try:
        siegel.yoccoz_w(quad, 1.5)
    except siegel.PreconditionError:
        pass
    else:
        raise AssertionError("|lambda| > 1 must be rejected")

    w2 = siegel.Series([0, 0, 1] + [0] * 6)
    n = siegel.qa_norm(w2, 1.0, 4)
    assert close(n.value, 1.0, 1e-12) and n.argmax_k == 0
    assert siegel.qa_distance(w2, w2, 1.0, 4) == 0.0

    assert close(siegel.rotation_from_cf([1, 2, 3]), 7 / 10, 1e-15)

    curve = siegel.boundary(quad, "golden", math.log(0.27), 64)
    assert curve["self_intersections"] == 0 and curve["gprime_min_disc"] > 0
    first = complex(*curve["curve"][0]["value"])
    assert abs(first) > 0 and cmath.isfinite(first)

    report = siegel.construct(quad, "golden", 0.05, golden.rho - 0.3, 0)
    assert report["depth"] == 0 and report["steps"] == []

    print("smoke test passed")


if __name__ == "__main__":
    main()
