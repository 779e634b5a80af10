"""Smoke test for the `propa` extension. Run after
`pip install --no-build-isolation -e crates/python`."""

from fractions import Fraction

import propa


def main():
    q3 = propa.Graph.generate("hypercube:3")
    assert len(q3) == 8 and len(q3.edges) == 12, q3

    rep = propa.epsilon(q3, 2, method="both")
    assert rep["epsilon"] == Fraction(2, 7), rep["epsilon"]
    assert propa.verify(q3, rep) == []

    # a tampered capacity must be caught
    edge = next(iter(rep["dual"]["kappa"]))
    rep["dual"]["kappa"][edge] = "1/2"
    assert propa.verify(q3, rep), "tampered certificate accepted"

    heawood = propa.Graph.generate("heawood")
    gamma, witness = propa.cheeger(heawood, 2)
    assert gamma == Fraction(6, 5) and witness
    assert propa.girth_formula(3, 2) == (Fraction(4, 5), Fraction(6, 5))
    assert propa.cube_formula(3, 1) == 1

    q2 = propa.Graph(4, [(0, 1), (1, 3), (3, 2), (2, 0)], name="square")
    assert propa.mean_value(q2, 1) == Fraction(2, 3)
    assert propa.uniform_value(q2) == propa.mean_value(q2)

    # lift the dual of a solve back into a full certificate
    dual = propa.epsilon(q2, 1, method="dual")["dual"]
    eta = [Fraction(dual["eta"][str(i)]) for i in range(4)]
    kappa = [Fraction(dual["kappa"][f"{u}-{v}"]) for u, v in q2.edges]
    cert = propa.lift(q2, eta, kappa, 1)
    assert Fraction(cert["objective"]) == Fraction(2, 3)
    assert propa.verify(q2, cert, 1) == []
    try:
        propa.lift(q2, [1, 0, 0, 0], [0, 0, 0, 0])
    except ValueError as e:
        assert "exceed" in str(e)
    else:
        raise AssertionError("infeasible lift accepted")
    try:
        propa.lift(q2, [0.5, 0, 0, 0], [0, 0, 0, 0])
    except ValueError:
        pass
    else:
        raise AssertionError("float demand accepted")

    order, vorb, eorb = propa.orbits(q2, [[1, 3, 0, 2]])
    assert order == 4 and vorb == [[0, 1, 2, 3]] and len(eorb) == 1

    try:
        propa.cheeger(heawood, 2, cap=4)
    except propa.ResourceLimitError:
        pass
    else:
        raise AssertionError("cap not enforced")

    print("smoke test ok")


if __name__ == "__main__":
    main()
