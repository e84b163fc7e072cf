import math

import numpy as np
import pytest

from autoblock import (
    ArityMismatchError,
    CycleError,
    InvalidParameterError,
    LengthMismatchError,
    UnknownReferenceError,
    build_graph,
)


def normal_node(name, mean=0.0, sd=1.0, kind="parameter", value=None):
    node = {"name": name, "kind": kind, "family": "normal",
            "params": {"mean": mean, "sd": sd}}
    if value is not None:
        node["value"] = value
    return node


def test_single_node_graph():
    g = build_graph({"nodes": [normal_node("x")]})
    assert g.d == 1
    assert g.slot_names == ("x",)
    assert g.dependents("x") == set()


def test_two_node_chain_edge():
    g = build_graph({"nodes": [
        normal_node("x"),
        normal_node("y", mean="x", kind="data", value=0.3),
    ]})
    assert g.d == 1
    assert g.dependents("x") == {"y"}


def test_self_reference_is_a_cycle():
    with pytest.raises(CycleError):
        build_graph({"nodes": [normal_node("x", mean="x")]})


def test_mutual_cycle():
    with pytest.raises(CycleError):
        build_graph({"nodes": [
            normal_node("a", mean="b"),
            normal_node("b", mean="a"),
        ]})


def test_unknown_reference():
    with pytest.raises(UnknownReferenceError):
        build_graph({"nodes": [normal_node("x", mean="nope")]})


def test_wrong_params_rejected():
    with pytest.raises(ArityMismatchError):
        build_graph({"nodes": [{
            "name": "x", "kind": "parameter", "family": "normal",
            "params": {"mean": 0.0}}]})
    with pytest.raises(ArityMismatchError):
        build_graph({"nodes": [{
            "name": "x", "kind": "parameter", "family": "normal",
            "params": {"mean": 0.0, "sd": 1.0, "extra": 2.0}}]})


def test_duplicate_names_rejected():
    with pytest.raises(ArityMismatchError):
        build_graph({"nodes": [normal_node("x"), normal_node("x")]})


def test_standard_normal_log_density_at_mode():
    g = build_graph({"nodes": [normal_node("x")]})
    assert g.log_density(["x"]) == pytest.approx(-0.5 * math.log(2 * math.pi))


def test_gamma_log_density():
    g = build_graph({"nodes": [{
        "name": "x", "kind": "parameter", "family": "gamma",
        "params": {"shape": 1.0, "rate": 1.0}, "value": 1.0}]})
    assert g.log_density(["x"]) == pytest.approx(-1.0)


def test_mvn_identity_log_density():
    g = build_graph({"nodes": [{
        "name": "v", "kind": "parameter", "family": "mvnormal",
        "params": {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}}]})
    assert g.log_density(["v"]) == pytest.approx(-math.log(2 * math.pi))


def test_mvn_log_density_matches_dense_formula():
    cov = np.array([[2.0, 0.6, 0.1], [0.6, 1.5, -0.2], [0.1, -0.2, 0.9]])
    mean = np.array([0.5, -1.0, 2.0])
    x = np.array([1.0, 0.0, 1.5])
    g = build_graph({"nodes": [{
        "name": "v", "kind": "parameter", "family": "mvnormal",
        "params": {"mean": mean.tolist(), "cov": cov.tolist()},
        "value": x.tolist()}]})
    diff = x - mean
    expected = (-0.5 * diff @ np.linalg.solve(cov, diff)
                - 0.5 * np.linalg.slogdet(cov)[1]
                - 1.5 * math.log(2 * math.pi))
    assert g.log_density(["v"]) == pytest.approx(expected, rel=1e-12)


def test_out_of_support_is_minus_inf_not_error():
    g = build_graph({"nodes": [{
        "name": "x", "kind": "parameter", "family": "gamma",
        "params": {"shape": 2.0, "rate": 1.0}, "value": 2.0}]})
    g.set_theta([-1.0])
    assert g.log_density(["x"]) == -math.inf


def test_invalid_literal_sd_rejected_at_build():
    with pytest.raises(InvalidParameterError):
        build_graph({"nodes": [normal_node("x", sd=-1.0)]})


def test_non_pd_literal_covariance_rejected():
    with pytest.raises(InvalidParameterError):
        build_graph({"nodes": [{
            "name": "v", "kind": "parameter", "family": "mvnormal",
            "params": {"mean": [0.0, 0.0], "cov": [[1.0, 2.0], [2.0, 1.0]]}}]})


def test_discrete_family_only_for_data():
    with pytest.raises(InvalidParameterError):
        build_graph({"nodes": [{
            "name": "x", "kind": "parameter", "family": "poisson",
            "params": {"rate": 1.0}}]})


def test_data_requires_value():
    with pytest.raises(InvalidParameterError):
        build_graph({"nodes": [{
            "name": "y", "kind": "data", "family": "normal",
            "params": {"mean": 0.0, "sd": 1.0}}]})


def test_dependents_through_deterministic():
    g = build_graph({"nodes": [
        normal_node("x"),
        {"name": "double", "kind": "deterministic", "op": "affine",
         "inputs": ["x"], "params": {"coefficients": [2.0], "offset": 0.0}},
        normal_node("y", mean="double", kind="data", value=1.0),
    ]})
    assert g.dependents("x") == {"y"}


def test_dependents_stop_at_stochastic():
    g = build_graph({"nodes": [
        normal_node("a"),
        normal_node("b", mean="a"),
        normal_node("y", mean="b", kind="data", value=0.0),
    ]})
    assert g.dependents("a") == {"b"}
    assert g.dependents("b") == {"y"}


def test_dependents_never_contains_self():
    g = build_graph({"nodes": [
        normal_node("a"),
        normal_node("y", mean="a", kind="data", value=0.0),
    ]})
    assert "a" not in g.dependents("a")


def test_set_get_theta_round_trip():
    g = build_graph({"nodes": [normal_node("a"), normal_node("b")]})
    values = np.array([0.25, -1.5])
    g.set_theta(values)
    assert np.array_equal(g.get_theta(), values)


def test_vector_node_occupies_consecutive_slots():
    g = build_graph({"nodes": [
        normal_node("a"),
        {"name": "v", "kind": "parameter", "family": "mvnormal",
         "params": {"mean": [0.0, 0.0, 0.0], "cov": np.eye(3).tolist()}},
    ]})
    assert g.slot_names == ("a", "v[0]", "v[1]", "v[2]")
    g.set_theta([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(g.node("v").value, [2.0, 3.0, 4.0])


def test_length_mismatch():
    g = build_graph({"nodes": [normal_node("a"), normal_node("b")]})
    with pytest.raises(LengthMismatchError):
        g.set_theta([1.0])


def test_log_density_additivity_over_partitions():
    rng = np.random.default_rng(11)
    g = build_graph({"nodes": [
        normal_node("a"),
        {"name": "s", "kind": "parameter", "family": "gamma",
         "params": {"shape": 2.0, "rate": 1.0}},
        normal_node("m", mean="a"),
        normal_node("y0", mean="m", sd="s", kind="data", value=0.7),
        normal_node("y1", mean="m", sd="s", kind="data", value=-0.2),
    ]})
    names = ["a", "s", "m", "y0", "y1"]
    for _ in range(20):
        g.set_theta(np.abs(rng.standard_normal(3)) + 0.1)
        total = g.log_density(names)
        split = g.log_density(["a", "y1"]) + g.log_density(["s", "m", "y0"])
        assert total == pytest.approx(split, rel=1e-12)
        singles = sum(g.log_density([n]) for n in names)
        assert total == pytest.approx(singles, rel=1e-12)


def test_stale_propagation_matches_full_recompute():
    spec = {"nodes": [
        normal_node("a"),
        normal_node("b"),
        {"name": "lin", "kind": "deterministic", "op": "affine",
         "inputs": ["a", "b"], "params": {"coefficients": [1.0, -2.0],
                                          "offset": 0.5}},
        {"name": "e", "kind": "deterministic", "op": "exp",
         "inputs": ["lin"], "params": {}},
        {"name": "y", "kind": "data", "family": "normal",
         "params": {"mean": "e", "sd": 1.0}, "value": 0.9},
    ]}
    g = build_graph(spec)
    rng = np.random.default_rng(5)
    for _ in range(25):
        theta = rng.standard_normal(2)
        g.set_theta(theta)
        lazy = g.log_density(["y"])
        fresh = build_graph(spec)
        fresh.set_theta(theta)
        assert lazy == fresh.log_density(["y"])
        # per-slot writes must propagate too
        g.set_slot(0, theta[0] + 1.0)
        fresh.set_theta([theta[0] + 1.0, theta[1]])
        assert g.log_density(["y"]) == fresh.log_density(["y"])


def test_deterministic_construction():
    spec = {"nodes": [
        normal_node("a"),
        {"name": "v", "kind": "parameter", "family": "mvnormal",
         "params": {"mean": 0.0, "cov": [[1.0, 0.5], [0.5, 1.0]]}},
        normal_node("y", mean="a", kind="data", value=0.1),
    ]}
    g1 = build_graph(spec)
    g2 = build_graph(spec)
    assert g1.topo_order() == g2.topo_order()
    assert g1.slot_names == g2.slot_names
    assert np.array_equal(g1.initial_theta, g2.initial_theta)


def test_initial_values_family_defaults():
    g = build_graph({"nodes": [
        normal_node("a", mean=3.0),
        {"name": "s", "kind": "parameter", "family": "gamma",
         "params": {"shape": 2.0, "rate": 0.5}},
        {"name": "p", "kind": "parameter", "family": "beta",
         "params": {"a": 2.0, "b": 6.0}},
        normal_node("over", value=9.0),
    ]})
    assert np.allclose(g.initial_theta, [3.0, 4.0, 0.25, 9.0])


def test_expit_and_affine_values():
    g = build_graph({"nodes": [
        normal_node("a", value=0.0),
        {"name": "lin", "kind": "deterministic", "op": "affine",
         "inputs": ["a"], "params": {"coefficients": [2.0], "offset": 1.0}},
        {"name": "p", "kind": "deterministic", "op": "expit",
         "inputs": ["a"], "params": {}},
        {"name": "y", "kind": "data", "family": "normal",
         "params": {"mean": "lin", "sd": 1.0}, "value": 0.0},
    ]})
    g.refresh()
    assert g.node("lin").value == pytest.approx(1.0)
    assert g.node("p").value == pytest.approx(0.5)
    g.set_theta([2.0])
    g.refresh()
    assert g.node("lin").value == pytest.approx(5.0)
    assert g.node("p").value == pytest.approx(1.0 / (1.0 + math.exp(-2.0)))


def test_expcov_matrix_entries():
    dist = [[0.0, 1.0], [1.0, 0.0]]
    g = build_graph({"nodes": [
        {"name": "K", "kind": "deterministic", "op": "expcov",
         "params": {"sigma": 2.0, "range": 0.5, "distances": dist}},
        {"name": "g", "kind": "parameter", "family": "mvnormal",
         "params": {"mean": 0.0, "cov": "K"}},
    ]})
    g.refresh()
    K = g.node("K").value
    assert K[0, 0] == pytest.approx(4.0, rel=1e-6)
    assert K[0, 1] == pytest.approx(4.0 * math.exp(-2.0), rel=1e-6)
    assert K[0, 1] == K[1, 0]


def test_eval_counts_instrumentation():
    g = build_graph({"nodes": [
        normal_node("x"),
        normal_node("y", mean="x", kind="data", value=0.0),
    ]})
    g.reset_eval_counts()
    g.log_density(["x"])
    g.log_density(["x", "y"])
    x_idx = g.node("x").index
    y_idx = g.node("y").index
    assert g.eval_counts[x_idx] == 2
    assert g.eval_counts[y_idx] == 1


def test_log_density_rejects_deterministic_nodes():
    g = build_graph({"nodes": [
        normal_node("x"),
        {"name": "e", "kind": "deterministic", "op": "exp",
         "inputs": ["x"], "params": {}},
        {"name": "y", "kind": "data", "family": "poisson",
         "params": {"rate": "e"}, "value": 2},
    ]})
    with pytest.raises(InvalidParameterError):
        g.log_density(["e"])


def test_binomial_and_poisson_densities():
    g = build_graph({"nodes": [
        {"name": "p", "kind": "parameter", "family": "beta",
         "params": {"a": 2.0, "b": 2.0}, "value": 0.25},
        {"name": "y", "kind": "data", "family": "binomial",
         "params": {"size": 4, "prob": "p"}, "value": 1},
        {"name": "z", "kind": "data", "family": "poisson",
         "params": {"rate": 3.0}, "value": 2},
    ]})
    expected_binom = math.log(4) + math.log(0.25) + 3 * math.log(0.75)
    assert g.log_density(["y"]) == pytest.approx(expected_binom)
    expected_pois = 2 * math.log(3.0) - 3.0 - math.log(2.0)
    assert g.log_density(["z"]) == pytest.approx(expected_pois)
