"""Quick end-to-end check of the pyorbifold extension."""
import json

import pyorbifold as po


def main():
    assert po.hilbert_symbol(-1, -1, 2) == -1
    assert po.hilbert_symbol(-1, -1, "real") == -1
    assert po.hilbert_symbol("3/4", 5, 5) == -1

    dwa = po.example_model("dwa")
    assert json.loads(dwa)["schema"] == po.SCHEMA_VERSION

    g = po.classify(dwa, [0, 0, 1, 4])
    assert g["relevant_primes"] == [2] and not g["integral"]
    assert po.invariant_at_point(dwa, [0, 0, 1, 4], "real") == "0"

    verdict = po.solve_local(dwa, 7, off_divisor=True)
    assert verdict["status"] == "YES"
    prof = po.invariant_profile(dwa, 7, mode="darmon", weight=4)
    assert prof["achieved"] == ["0"] and prof["complete"]

    family = po.example_model("family-demo")
    assert po.invariant_profile(family, 5)["achieved"] == ["1/2"]

    conic = po.example_model("conic-3adic")
    assert po.search(conic, 50, flag="campana") == []
    assert len(po.search(conic, 10)) > 0

    assert po.member_valid(41, 1, 1, 1) and not po.member_valid(42, 1, 1, 1)
    assert po.census_count(1000) == 54
    rows = po.growth_table([1000, 10000])
    assert [r["count"] for r in rows] == [54, 2305]

    reports = po.paper_verify("p1-automorphism")
    assert reports[0]["passed"]

    try:
        po.hilbert_symbol(0, 3, 3)
    except RuntimeError:
        pass
    else:
        raise AssertionError("zero argument accepted")
    try:
        po.classify("{}", [1, 1, 1])
    except ValueError:
        pass
    else:
        raise AssertionError("bad model accepted")

    print("pyorbifold smoke test passed")


if __name__ == "__main__":
    main()
