"""Smoke test for the enflo extension module.

Build and run:

    cargo build --release -p enflo-py --features extension-module
    cp target/release/libenflo.so python/enflo.so
    python3 python/smoke_test.py

or install with `maturin develop -m crates/py/pyproject.toml`.
"""

import math

import enflo


def main():
    tiny = enflo.SpaceSpec(8, 2, 2, 1)
    assert (tiny.support(0), tiny.support(1), tiny.step(1)) == (2, 1, 2)
    assert tiny.group_order() == 512
    assert tiny.segment_count(1) == 256

    std3 = enflo.SpaceSpec.standard(3)
    assert (std3.q, std3.d, std3.p, std3.levels) == (16, 54, 3, 2)

    assert enflo.distance(tiny, [0, 0], [3, 7]) == 3
    assert enflo.segment_level(tiny, [0, 0], [2, 0]) == 1
    assert enflo.segment_level(tiny, [0, 0], [1, 0]) is None

    h = enflo.transitive_isometry(tiny, ([0, 0], [2, 0]), ([1, 3], [1, 5]))
    assert h.apply([0, 0]) == [1, 3] and h.apply([2, 0]) == [1, 5]
    assert h.inverse().apply([1, 3]) == [0, 0]

    for m in (1, 2):
        assert enflo.verify_double_simplex(std3, m)["pass"]
    u, v = enflo.double_simplex(std3, 2)
    assert len(u) == len(v) == 3

    sum_c, sum_s, gap, witness = enflo.double_simplex_gap([[0, 0], [2, 0]], [[1, 1], [1, -1]])
    assert gap == witness >= 0

    table = enflo.Embedding.random_table(tiny, 3, 10, 1)
    chain = enflo.chain_check(tiny, table)
    assert chain["verdict"] == "pass", chain

    orbit = enflo.orbit_check(tiny, 1, table)
    assert orbit["regularity"]["edge_multiplicity"] == 8

    cert = enflo.certificate(tiny, enflo.Embedding.circle())
    assert abs(cert["ratio"] - 1 / (2 * math.sin(math.pi / 8))) < 1e-9
    assert cert["ratio"] <= math.sqrt(2)

    assert enflo.graph_metric_check(tiny)["pass"]
    assert enflo.group_embedding_check(tiny, pairs=20, word_budget=8)["pass"]

    try:
        enflo.SpaceSpec(8, 4, 2, 3)
    except ValueError as e:
        assert "divisible" in str(e)
    else:
        raise AssertionError("invalid spec accepted")

    print("enflo smoke test: ok")


if __name__ == "__main__":
    main()
