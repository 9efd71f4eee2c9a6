from fractions import Fraction

import pytest

import reludeep


def abs_net():
    text = (
        "RELUNET v1\nname abs\nprovenance target\ninput 1\nruns 2\n"
        "layer 2 1 relu 1\nw 1\nw -1\nb 0 0\n"
        "layer 1 2 identity 1\nw 1 1\nb 0\nend\n"
    )
    return reludeep.Network.deserialize(text)


def test_evaluate_exact():
    net = abs_net()
    assert net.evaluate([Fraction(-1, 3)]) == [Fraction(1, 3)]
    assert net.evaluate(["5/7"]) == [Fraction(5, 7)]
    assert net.evaluate([-2]) == [2]
    assert net.stats()["params"] == 7


def test_generate_is_deterministic():
    a = reludeep.generate_target(2, 3, 3, seed=5)
    b = reludeep.generate_target(2, 3, 3, seed=5)
    assert a.serialize() == b.serialize()
    s = a.stats()
    assert (s["width"], s["depth"]) == (3, 3)
    with pytest.raises(ValueError):
        reludeep.generate_target(3, 2, 2)


def test_narrow_compile_and_verify():
    t = reludeep.generate_target(1, 2, 2, seed=3)
    c = reludeep.compile_narrow(t)
    assert c.provenance == "compiled-narrow"
    assert c.stats()["width"] <= 10
    r = reludeep.verify(t, c, mode="goodset", samples=50)
    assert r["pass"]
    assert r["max_error"] <= Fraction(1, 16)
    assert "verdict = pass" in r["text"]


def test_minwidth_and_bounded():
    t = reludeep.generate_target(2, 2, 2, seed=4)
    mw = reludeep.compile_minwidth(t, eps="1/2")
    assert mw.stats()["width"] <= 10
    assert reludeep.verify(t, mw, mode="goodset", samples=30, eps="1/2")["pass"]
    nb = reludeep.bound_weights(reludeep.compile_narrow(t, eps="1/2"))
    assert nb.stats()["max_abs_weight"] <= 2


def test_exact_rewrite():
    t = reludeep.generate_target(1, 2, 3, seed=2)
    e = reludeep.exact_deep(t)
    assert e.stats()["width"] <= 6
    assert e.depth == reludeep.exact_depth(t) <= 18
    for x in [Fraction(-10**6), Fraction(1, 3), 0, 7]:
        assert e.evaluate([x]) == t.evaluate([x])
    r = reludeep.verify(t, e, mode="exact", samples=30)
    assert r["pass"] and r["max_error"] == 0
    assert reludeep.efficiency_report(t, e)["regime"] == "quadratic"


def test_round_trip(tmp_path):
    t = reludeep.generate_target(2, 2, 2, seed=9)
    path = str(tmp_path / "t.net")
    t.save(path)
    assert reludeep.Network.load(path).serialize() == t.serialize()
    with pytest.raises(ValueError):
        reludeep.Network.deserialize("RELUNET v1\ngarbage\n")


def test_bad_config_key():
    t = reludeep.generate_target(1, 2, 2)
    with pytest.raises(ValueError):
        reludeep.compile_narrow(t, colour="red")
