import pytest

import regkit


def test_tree_universe():
    trees = regkit.generate_trees("2", 4)
    assert len(trees) == 44
    assert all("key" in t for t in trees)


def test_rooted_negative_extraction():
    terms = regkit.coproduct("I(Xi)^2", kind="rminus")
    assert {t["pretty"]: t["coef"] for t in terms} == {
        "1 (x) I(Xi)^2": "1",
        "I(Xi) (x) I(Xi)": "2",
        "I(Xi)^2 (x) 1": "1",
    }


def test_hist_and_age():
    h = regkit.hist(["I(Xi)^3"])
    assert len(h["trees"]) == 8
    assert regkit.age("Xi") == 2


def test_bphz_from_a_table():
    values = [{"tree": "Xi", "value": 0}, {"tree": "I(Xi)", "value": 0},
              {"tree": "I(Xi)^2", "value": 0.5}, {"tree": "I(Xi)^3", "value": 0.1}]
    ell = regkit.bphz(["I(Xi)^3"], values=values)
    assert sorted(ell.values()) == pytest.approx([-0.5, -0.1])


def test_missing_expectation_is_an_error():
    with pytest.raises(regkit.RegkitError):
        regkit.bphz(["I(Xi)^2"], values=[{"tree": "Xi", "value": 0}])


def test_kernel_norm():
    r = regkit.kernel_norm({"beta": 2, "order": 0, "N": 4}, resolution=24)
    assert r["mode"] == "analytic"
    assert r["value"] == pytest.approx(0.968, abs=1e-3)


def test_constant_coefficient_heat_kernel():
    import math
    r = regkit.heat_eval({"a": "0.9", "b": "0", "c": "0"}, (0.2, 0.1))
    exact = math.exp(-0.01 / (4 * 0.9 * 0.2)) / math.sqrt(4 * math.pi * 0.9 * 0.2)
    assert r["Gamma_N"] == pytest.approx(exact, rel=1e-14)
    assert r["E"] == 0


def test_verify_subset():
    report = regkit.verify(only=[2, 4])
    assert report["pass"]
    assert [c["id"] for c in report["checks"]] == [2, 4]


def test_bad_config():
    with pytest.raises(regkit.RegkitError):
        regkit.verify({"no_such_key": 1})
