"""HTTP service: routes, validation, persistence, parity with the CLI."""

import base64
import io
import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest
from PIL import Image

from voltf import (PhantomSpec, make_phantom, save_model, serialize_volume,
                   volume_header)
from voltf.neural import MlpNetwork
from voltf.service import make_server

PHANTOM = PhantomSpec(dims=(16, 16, 16), background_value=0.2,
                      shells=(((7.5, 7.5, 7.5), 5.0, 0.8),))

CAMERA = {"eye": [7.5, 7.5, -40.0], "lookat": [7.5, 7.5, 7.5],
          "up": [0, 1, 0], "projection": "orthographic", "half_height": 9.0,
          "width": 32, "height": 32}

GOOD_FILTERS = [
    {"center": [0.4, 0.1], "size": [0.2, 0.1], "kernel": "gauss",
     "color": [1, 1, 0], "opacity": 0.35},
    {"center": [0.6, 0.25], "size": [0.15, 0.2], "kernel": "sine",
     "color": [1, 0, 0], "opacity": 0.6},
]


class Client:
    def __init__(self, port):
        self.base = f"http://127.0.0.1:{port}"

    def request(self, method, path, body=None, as_json=True):
        data = json.dumps(body).encode() if as_json and body is not None \
            else body
        req = urllib.request.Request(self.base + path, data=data,
                                     method=method)
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, resp.read(), dict(resp.headers)
        except urllib.error.HTTPError as err:
            return err.code, err.read(), dict(err.headers)

    def get(self, path):
        return self.request("GET", path)

    def post(self, path, body=None, as_json=True):
        return self.request("POST", path, body, as_json)

    def put(self, path, body):
        return self.request("PUT", path, body)


@pytest.fixture
def server(tmp_path):
    srv = make_server(port=0, data_dir=tmp_path / "data", max_voxels=64 ** 3)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()
    thread.join(timeout=5)


@pytest.fixture
def client(server):
    return Client(server.server_address[1])


def upload_volume(client, phantom=PHANTOM):
    v = make_phantom(phantom)
    body = {"header": volume_header(v),
            "raw_base64": base64.b64encode(serialize_volume(v)).decode()}
    status, data, _ = client.post("/volumes", body)
    assert status == 201
    return json.loads(data)["volume_id"]


def upload_model(client, net=None):
    net = net or MlpNetwork([2048, 4, 8],
                            [np.zeros((2048, 4)), np.zeros((4, 8))],
                            [np.zeros(4), np.zeros(8)])
    status, data, _ = client.post("/models", save_model(net), as_json=False)
    assert status == 201
    return json.loads(data)["model_id"]


def create_session(client, vid, mid=None):
    body = {"volume_id": vid}
    if mid:
        body["model_id"] = mid
    status, data, _ = client.post("/sessions", body)
    assert status == 201
    return json.loads(data)["session_id"]


class TestVolumesAndModels:
    def test_upload_and_list(self, client):
        vid = upload_volume(client)
        status, data, _ = client.get("/volumes")
        assert status == 200
        assert vid in json.loads(data)["volumes"]

    def test_histogram_json_and_png(self, client):
        vid = upload_volume(client)
        status, data, _ = client.get(f"/volumes/{vid}/histogram")
        assert status == 200
        hist = json.loads(data)
        assert len(hist["counts"]) == 256
        assert sum(sum(row) for row in hist["counts"]) == 16 ** 3
        status, data, headers = client.get(f"/volumes/{vid}/histogram.png")
        assert status == 200
        assert headers["Content-Type"] == "image/png"
        assert Image.open(io.BytesIO(data)).size == (256, 256)

    def test_unknown_volume_404(self, client):
        status, _, _ = client.get("/volumes/deadbeef/histogram")
        assert status == 404

    def test_oversized_volume_413(self, client):
        big = {"header": {"dims": [65, 65, 65], "spacing": [1, 1, 1],
                          "dtype": "u8"},
               "raw_base64": ""}
        status, _, _ = client.post("/volumes", big)
        assert status == 413

    def test_model_upload_and_list(self, client):
        mid = upload_model(client)
        status, data, _ = client.get("/models")
        assert mid in json.loads(data)["models"]

    def test_bad_model_422(self, client):
        status, _, _ = client.post("/models", b"not json", as_json=False)
        assert status == 422

    def test_persistence_across_restart(self, tmp_path):
        data_dir = tmp_path / "persist"
        srv = make_server(port=0, data_dir=data_dir)
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        client = Client(srv.server_address[1])
        vid = upload_volume(client)
        mid = upload_model(client)
        srv.shutdown()
        srv.server_close()
        thread.join(timeout=5)

        srv2 = make_server(port=0, data_dir=data_dir)
        thread2 = threading.Thread(target=srv2.serve_forever, daemon=True)
        thread2.start()
        client2 = Client(srv2.server_address[1])
        _, vols, _ = client2.get("/volumes")
        _, models, _ = client2.get("/models")
        assert vid in json.loads(vols)["volumes"]
        assert mid in json.loads(models)["models"]
        srv2.shutdown()
        srv2.server_close()
        thread2.join(timeout=5)


class TestSessions:
    def test_create_requires_known_volume(self, client):
        status, _, _ = client.post("/sessions", {"volume_id": "missing"})
        assert status == 404

    def test_filters_start_empty(self, client):
        sid = create_session(client, upload_volume(client))
        status, data, _ = client.get(f"/sessions/{sid}/filters")
        assert status == 200
        assert json.loads(data) == []

    def test_put_filters_round_trip(self, client):
        sid = create_session(client, upload_volume(client))
        status, data, _ = client.put(f"/sessions/{sid}/filters", GOOD_FILTERS)
        assert status == 200
        _, data, _ = client.get(f"/sessions/{sid}/filters")
        got = json.loads(data)
        assert len(got) == 2
        assert got[0]["center"] == [0.4, 0.1]

    def test_invalid_put_is_422_with_field_and_leaves_session_unchanged(self, client):
        sid = create_session(client, upload_volume(client))
        client.put(f"/sessions/{sid}/filters", GOOD_FILTERS)
        bad = [dict(GOOD_FILTERS[0], opacity=1.5)]
        status, data, _ = client.put(f"/sessions/{sid}/filters", bad)
        assert status == 422
        err = json.loads(data)
        assert err["field"] == "filters[0].opacity"
        _, data, _ = client.get(f"/sessions/{sid}/filters")
        assert len(json.loads(data)) == 2   # previous list intact

    def test_autoplace_with_zero_model(self, client):
        vid = upload_volume(client)
        mid = upload_model(client)
        sid = create_session(client, vid, mid)
        status, data, _ = client.post(f"/sessions/{sid}/autoplace")
        assert status == 200
        filters = json.loads(data)
        assert len(filters) == 2
        for f in filters:
            assert f["center"] == [0.5, 0.5]
            assert f["size"] == [0.5, 0.5]
        assert filters[0]["color"] == [1.0, 1.0, 0.0]
        assert filters[1]["color"] == [1.0, 0.0, 0.0]

    def test_autoplace_without_model_422(self, client):
        sid = create_session(client, upload_volume(client))
        status, _, _ = client.post(f"/sessions/{sid}/autoplace")
        assert status == 422

    def test_render_empty_filters_is_background(self, client):
        sid = create_session(client, upload_volume(client))
        body = {"camera": CAMERA,
                "settings": {"background": [0.1, 0.2, 0.3, 1.0]}}
        status, data, headers = client.post(f"/sessions/{sid}/render", body)
        assert status == 200
        assert headers["Content-Type"] == "image/png"
        img = np.asarray(Image.open(io.BytesIO(data)))
        assert img.shape == (32, 32, 4)
        expected = np.rint(np.array([0.1, 0.2, 0.3, 1.0]) * 255)
        assert np.array_equal(np.unique(img.reshape(-1, 4), axis=0)[0], expected)
        assert len(np.unique(img.reshape(-1, 4), axis=0)) == 1

    def test_render_matches_cli_bytes(self, client, tmp_path):
        from voltf.cli import main as cli_main
        vid = upload_volume(client)
        sid = create_session(client, vid)
        client.put(f"/sessions/{sid}/filters", GOOD_FILTERS)
        body = {"camera": CAMERA, "settings": {"step": 0.5}}
        status, service_png, _ = client.post(f"/sessions/{sid}/render", body)
        assert status == 200

        from voltf import write_volume
        write_volume(tmp_path / "vol", make_phantom(PHANTOM))
        (tmp_path / "filters.json").write_text(json.dumps(GOOD_FILTERS))
        (tmp_path / "camera.json").write_text(json.dumps(CAMERA))
        out_png = tmp_path / "cli.png"
        assert cli_main(["render", "--volume", str(tmp_path / "vol"),
                         "--filters", str(tmp_path / "filters.json"),
                         "--camera", str(tmp_path / "camera.json"),
                         "--out", str(out_png), "--step", "0.5"]) == 0
        assert out_png.read_bytes() == service_png

    def test_unknown_session_404(self, client):
        for method, path in [("GET", "/sessions/nope/filters"),
                             ("POST", "/sessions/nope/autoplace"),
                             ("POST", "/sessions/nope/render")]:
            status, _, _ = client.request(method, path, body={} if method == "POST" else None)
            assert status == 404
