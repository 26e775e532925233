import asyncio
import math

import pytest
from fastapi.routing import APIRoute
from fastapi.testclient import TestClient

from pcgmum.main import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture
def config_payload(d3_config):
    return d3_config.model_dump(mode="json", by_alias=True)


def test_root_and_status(client):
    assert client.get("/").json()["message"] == "PCG MUM Toolkit API"
    status = client.get("/status").json()
    assert status["status"] == "running"
    assert client.get("/api/v1/health").json()["status"] == "healthy"


def test_rmax(client):
    response = client.get("/api/v1/rmax/9")
    assert response.status_code == 200
    assert response.json() == {
        "d": 9, "smallest_prime_factor": 3, "r_max": 4, "kind": "prime-power", "behaviour": "different"
    }


def test_rmax_domain_error(client):
    response = client.get("/api/v1/rmax/1")
    assert response.status_code == 422
    assert response.json()["error"] == "domain_error"


def test_search(client):
    response = client.post("/api/v1/search", json={"d": 4, "m_bound": 6})
    assert response.status_code == 200
    assert response.json()["r_found"] == 3


def test_construct(client):
    response = client.post("/api/v1/construct", json={"d": 3, "Q": "1", "R": 4, "m_col0": [1, 2, 1]})
    assert response.status_code == 200
    body = response.json()
    assert body["m_matrix"]["m"] == [[], [1], [2, 1], [1, 1, 1]]
    assert body["periods_px"][1] == pytest.approx(131.165, abs=0.01)


def test_construct_errors(client):
    bound = client.post("/api/v1/construct", json={"d": 3, "R": 5, "m_col0": [1, 2, 1, 1]})
    assert bound.status_code == 422
    assert bound.json()["error"] == "bound_exceeded"
    failed = client.post("/api/v1/construct", json={"d": 2, "R": 3, "m_col0": [1, 1]})
    assert failed.json()["context"]["pair"] == [2, 1]


def test_verify(client, config_payload):
    response = client.post("/api/v1/verify", json={"config": config_payload})
    assert response.status_code == 200
    body = response.json()
    assert body["passed"] is True
    assert body["schema"] == "pcgmum.report/1"


def test_verify_validation_error(client):
    response = client.post("/api/v1/verify", json={"config": {"d": 3}})
    assert response.status_code == 422


def test_simulate(client, config_payload):
    response = client.post("/api/v1/simulate", json={
        "config": config_payload, "j": 0, "k": 2, "grid_size": 4096
    })
    assert response.status_code == 200
    body = response.json()
    assert body["entropy_bits"] >= 1.58
    assert sum(body["probs"]) == pytest.approx(1.0, abs=1e-9)


def test_simulate_unknown_direction(client, config_payload):
    response = client.post("/api/v1/simulate", json={"config": config_payload, "j": 0, "k": 7})
    assert response.status_code == 422
    assert response.json()["error"] == "domain_error"


def test_tables(client, config_payload):
    response = client.post("/api/v1/tables", json={"config": config_payload})
    assert response.status_code == 200
    body = response.json()
    assert body["schema"] == "pcgmum.tables/1"
    assert len(body["entropy"]) == 4


def test_sweep(client, config_payload):
    response = client.post("/api/v1/sweep", json={
        "config": config_payload, "j": 0, "k": 2, "start_px": 90, "stop_px": 95
    })
    assert response.status_code == 200
    body = response.json()
    assert len(body["samples"]) == 6
    assert [marker["m"] for marker in body["markers"]] == [2]


def test_compute_endpoints_run_off_the_event_loop():
    handlers = {route.path: route.endpoint for route in app.routes if isinstance(route, APIRoute)}
    for path in ["/api/v1/search", "/api/v1/construct", "/api/v1/verify", "/api/v1/simulate",
                 "/api/v1/tables", "/api/v1/sweep", "/api/v1/rmax/{d}"]:
        assert not asyncio.iscoroutinefunction(handlers[path]), path


def test_construct_rounded_to_pixels(client):
    response = client.post("/api/v1/construct", json={
        "d": 3, "Q": "1", "R": 4, "m_col0": [1, 2, 1], "round_pixels": True
    })
    assert response.status_code == 200
    body = response.json()
    assert body["pixels"] == [93, 132, 93, 132]
    assert body["rounded_report"]["passed"] is True


def test_verify_raw_directions(client, d3_config):
    # same configuration, listed out of order with one direction in the lower half-plane
    directions = {
        "d": 3,
        "angles": [d3_config.angles[2], d3_config.angles[0], d3_config.angles[1] + math.pi, d3_config.angles[3]],
        "periods": [d3_config.periods[2], d3_config.periods[0], d3_config.periods[1], d3_config.periods[3]],
    }
    response = client.post("/api/v1/verify", json={"directions": directions})
    assert response.status_code == 200
    assert response.json()["passed"] is True


def test_verify_needs_one_source(client, config_payload):
    directions = {"d": 3, "angles": [0.0], "periods": [1.0]}
    assert client.post("/api/v1/verify", json={"config": config_payload, "directions": directions}).status_code == 422
    assert client.post("/api/v1/verify", json={}).status_code == 422


def test_simulate_convergence(client, config_payload):
    response = client.post("/api/v1/simulate", json={
        "config": config_payload, "j": 0, "k": 2, "convergence_sizes": [1024, 4096]
    })
    assert response.status_code == 200
    points = response.json()["convergence"]
    assert [point["grid_size"] for point in points] == [1024, 4096]
    assert points[-1]["max_deviation"] < 1e-3


def test_tables_sensitivity(client, config_payload):
    response = client.post("/api/v1/tables", json={"config": config_payload, "sensitivity": True})
    assert response.status_code == 200
    assert len(response.json()["outcome_spread"]) == 4
