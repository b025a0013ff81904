import json

import numpy as np
import pytest

from fikit import (
    build_graph,
    build_grid_1d,
    build_grid_2d,
    build_heisenberg_grid,
    hopf_lax,
    legendre,
    PowerForm,
    wasserstein_p,
)
from fikit.exceptions import InvalidArgumentError
from fikit.io import (
    convex_from_config,
    load_field,
    load_space,
    load_tabulated,
    save_field,
    save_hopf_lax,
    save_plan,
    save_potentials,
    save_space,
    save_tabulated,
    space_from_dict,
    space_to_dict,
)


@pytest.mark.parametrize("build", [lambda: build_grid_1d(-1, 1, 21),
                                   lambda: build_grid_2d(0, 1, 4),
                                   lambda: build_graph(4, [(0, 1, 0.3), (1, 2, 0.7), (2, 3, 1.1)]),
                                   lambda: build_heisenberg_grid(3, 0.3)])
def test_space_round_trip(tmp_path, build):
    s = build()
    save_space(s, tmp_path / "s.json")
    back = load_space(tmp_path / "s.json")
    assert back.kind == s.kind
    assert np.array_equal(back.dist, s.dist)
    assert np.array_equal(back.edges, s.edges)
    assert back.approximate == s.approximate


def test_space_document_fields(tmp_path):
    doc = space_to_dict(build_grid_1d(0, 1, 3))
    assert set(doc) >= {"kind", "points", "metric", "geo_tol"}
    assert doc["metric"]["type"] == "matrix"
    assert doc["points"][1] == {"id": 1, "coords": [0.5]}
    g = space_to_dict(build_graph(3, [(0, 1, 1), (1, 2, 2)]))
    assert g["metric"] == {"type": "graph", "edges": [[0, 1, 1.0], [1, 2, 2.0]]}


def test_custom_matrix_space():
    doc = {"kind": "custom", "points": [{"id": 0}, {"id": 1}],
           "metric": {"type": "matrix", "data": [[0, 2], [2, 0]]}, "geo_tol": 0}
    s = space_from_dict(doc)
    assert s.dist[0, 1] == 2 and s.coords is None


def test_tampered_generator_matrix():
    doc = space_to_dict(build_grid_1d(0, 1, 3))
    doc["metric"]["data"][0][2] = 3.0
    with pytest.raises(InvalidArgumentError):
        space_from_dict(doc)


def test_field_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    v = rng.normal(size=50) * 10.0 ** rng.integers(-20, 20, size=50)
    save_field(v, tmp_path / "f.csv")
    text = (tmp_path / "f.csv").read_bytes()
    assert text.startswith(b"point_id,value\n") and b"\r" not in text
    assert np.array_equal(load_field(tmp_path / "f.csv", 50), v)


def test_field_errors(tmp_path):
    (tmp_path / "bad.csv").write_text("id,value\n0,1\n")
    with pytest.raises(InvalidArgumentError):
        load_field(tmp_path / "bad.csv")
    (tmp_path / "gap.csv").write_text("point_id,value\n0,1\n2,3\n")
    with pytest.raises(InvalidArgumentError):
        load_field(tmp_path / "gap.csv")
    save_field([1.0, 2.0], tmp_path / "two.csv")
    with pytest.raises(InvalidArgumentError):
        load_field(tmp_path / "two.csv", 3)


def test_result_tables(tmp_path):
    s = build_grid_1d(0, 1, 5)
    g = np.array([1.0, 0.0, 2.0, 0.5, 0.0])
    save_hopf_lax(hopf_lax(s, g, 0.5, 2.0), tmp_path / "u.csv")
    lines = (tmp_path / "u.csv").read_text().splitlines()
    assert lines[0] == "point_id,u,argmin_id" and len(lines) == 6
    mu = np.full(5, 0.2)
    nu = np.array([0.5, 0.5, 0, 0, 0])
    plan = wasserstein_p(mu, nu, s, 2)
    save_plan(plan, tmp_path / "plan.csv")
    save_potentials(plan, tmp_path / "pot.csv")
    rows = (tmp_path / "plan.csv").read_text().splitlines()
    assert rows[0] == "src_id,dst_id,mass"
    assert sum(float(r.split(",")[2]) for r in rows[1:]) == pytest.approx(1.0)
    assert (tmp_path / "pot.csv").read_text().startswith("point_id,f,g\n")


def test_tabulated_round_trip(tmp_path):
    t = legendre(PowerForm(2), np.linspace(0, 4, 81))
    save_tabulated(t, tmp_path / "L.csv")
    back = load_tabulated(tmp_path / "L.csv")
    assert np.array_equal(back.grid, t.grid) and np.array_equal(back.values, t.values)
    assert convex_from_config({"table": str(tmp_path / "L.csv")})(1.0) == t(1.0)
    assert convex_from_config(json.loads('{"power": 3}'))(3.0) == 9.0
    with pytest.raises(InvalidArgumentError):
        convex_from_config({"exp": 1})
