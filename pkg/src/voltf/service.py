"""HTTP/JSON facade over the pipeline for the browser editor.

Volumes and models persist on disk under content-hash names; sessions
are in-memory and ephemeral. All bodies are JSON unless noted; images
come back as PNG.

Routes:
    POST /volumes {"header": {...}, "raw_base64": "..."} -> {"volume_id"}
    GET  /volumes -> {"volumes": [ids]}
    GET  /volumes/{id}/histogram -> histogram JSON
    GET  /volumes/{id}/histogram.png -> grayscale PNG
    POST /sessions {"volume_id", "model_id"?} -> {"session_id"}
    GET  /sessions/{id}/filters -> filter list JSON
    PUT  /sessions/{id}/filters <- filter list JSON (422 on bad fields)
    POST /sessions/{id}/autoplace -> filter list JSON
    POST /sessions/{id}/render {"camera": {...}, "settings": {...}} -> PNG
    GET  /models -> {"models": [ids]}
    POST /models <- model JSON -> {"model_id"}
"""

import base64
import hashlib
import io
import json
import os
import re
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from PIL import Image

from . import histogram, neural, renderer, transfer_function, volume
from .autoplace import predict_filters
from .errors import InvalidFilter, VoltfError

DEFAULT_MAX_VOXELS = 512 ** 3


def _content_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".upload-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


class _Session:
    def __init__(self, session_id, volume_id, model_id=None):
        self.id = session_id
        self.volume_id = volume_id
        self.model_id = model_id
        self.filters = []
        self.lock = threading.Lock()   # serializes mutating requests


class VoltfService:
    """Stores plus request logic, kept separate from HTTP plumbing so
    tests can drive it through a real server on an ephemeral port."""

    def __init__(self, data_dir=None, max_voxels=DEFAULT_MAX_VOXELS):
        self.data_dir = Path(data_dir) if data_dir else None
        self.max_voxels = max_voxels
        self.volumes = {}      # id -> Volume
        self.histograms = {}   # volume id -> JointHistogram (lazy)
        self.gradients = {}    # volume id -> GradientVolume (lazy)
        self.models = {}       # id -> MlpNetwork
        self.sessions = {}
        self.store_lock = threading.Lock()
        self.session_counter = 0
        if self.data_dir:
            self._restore()

    def _restore(self):
        vol_dir = self.data_dir / "volumes"
        if vol_dir.is_dir():
            for header_path in sorted(vol_dir.glob("*.json")):
                raw_path = header_path.with_suffix(".raw")
                if raw_path.exists():
                    header = json.loads(header_path.read_text(encoding="utf-8"))
                    v = volume.load_volume(raw_path.read_bytes(), header)
                    self.volumes[header_path.stem] = v
        model_dir = self.data_dir / "models"
        if model_dir.is_dir():
            for path in sorted(model_dir.glob("*.json")):
                self.models[path.stem] = neural.load_model(path.read_bytes())

    # -- volumes -----------------------------------------------------

    def add_volume(self, header: dict, raw: bytes) -> str:
        dims = header.get("dims", [])
        if len(dims) == 3 and int(dims[0]) * int(dims[1]) * int(dims[2]) > self.max_voxels:
            raise _TooLarge(f"volume exceeds the {self.max_voxels}-voxel cap")
        v = volume.load_volume(raw, header)
        vid = _content_id(raw + json.dumps(header, sort_keys=True).encode())
        with self.store_lock:
            self.volumes[vid] = v
            if self.data_dir:
                _atomic_write(self.data_dir / "volumes" / f"{vid}.json",
                              json.dumps(volume.volume_header(v)).encode())
                _atomic_write(self.data_dir / "volumes" / f"{vid}.raw",
                              volume.serialize_volume(v))
        return vid

    def volume_histogram(self, vid):
        if vid not in self.volumes:
            raise KeyError(vid)
        with self.store_lock:
            if vid not in self.histograms:
                g = volume.gradient_magnitude(self.volumes[vid])
                self.gradients[vid] = g
                self.histograms[vid] = histogram.joint_histogram(
                    self.volumes[vid], g)
        return self.histograms[vid]

    # -- models ------------------------------------------------------

    def add_model(self, body: bytes) -> str:
        net = neural.load_model(body)   # validates
        mid = _content_id(body)
        with self.store_lock:
            self.models[mid] = net
            if self.data_dir:
                _atomic_write(self.data_dir / "models" / f"{mid}.json", body)
        return mid

    # -- sessions ----------------------------------------------------

    def create_session(self, volume_id, model_id=None) -> str:
        if volume_id not in self.volumes:
            raise KeyError(volume_id)
        if model_id is not None and model_id not in self.models:
            raise KeyError(model_id)
        with self.store_lock:
            self.session_counter += 1
            sid = f"s{self.session_counter:08d}"
            self.sessions[sid] = _Session(sid, volume_id, model_id)
        return sid

    def autoplace(self, session: _Session):
        if session.model_id is None:
            raise VoltfError("session has no model attached")
        net = self.models[session.model_id]
        h = self.volume_histogram(session.volume_id)
        geoms = predict_filters(net, h)
        return transfer_function.heart_preset(geoms)

    def render_png(self, session: _Session, camera_obj, settings_obj,
                   filters) -> bytes:
        v = self.volumes[session.volume_id]
        h = self.volume_histogram(session.volume_id)
        g = self.gradients[session.volume_id]
        lut = transfer_function.rasterize(filters)
        cam = renderer.camera_from_json(camera_obj)
        settings = renderer.settings_from_json(settings_obj or {})
        image = renderer.render(v, g, lut, cam, settings,
                                gradient_scale=h.gradient_scale)
        buf = io.BytesIO()
        Image.fromarray(renderer.image_to_uint8(image)).save(buf, format="PNG")
        return buf.getvalue()


class _TooLarge(VoltfError):
    pass


class _Handler(BaseHTTPRequestHandler):
    service: VoltfService = None
    static_dir: Path = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):   # quiet by default
        pass

    # -- helpers -----------------------------------------------------

    def _body(self):
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _send(self, status, payload: bytes, content_type="application/json"):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _json(self, status, obj):
        self._send(status, json.dumps(obj).encode("utf-8"))

    def _error(self, status, message, field=None):
        obj = {"error": message}
        if field:
            obj["field"] = field
        self._json(status, obj)

    def _session_or_404(self, sid):
        session = self.service.sessions.get(sid)
        if session is None:
            self._error(404, f"unknown session {sid!r}")
        return session

    # -- GET ----------------------------------------------------------

    def do_GET(self):
        try:
            if self.path == "/volumes":
                self._json(200, {"volumes": sorted(self.service.volumes)})
            elif self.path == "/models":
                self._json(200, {"models": sorted(self.service.models)})
            elif m := re.fullmatch(r"/volumes/([^/]+)/histogram", self.path):
                try:
                    h = self.service.volume_histogram(m.group(1))
                except KeyError:
                    return self._error(404, f"unknown volume {m.group(1)!r}")
                self._json(200, histogram.histogram_to_json(h))
            elif m := re.fullmatch(r"/volumes/([^/]+)/histogram\.png", self.path):
                try:
                    h = self.service.volume_histogram(m.group(1))
                except KeyError:
                    return self._error(404, f"unknown volume {m.group(1)!r}")
                buf = io.BytesIO()
                Image.fromarray(histogram.render_histogram_image(h)).save(
                    buf, format="PNG")
                self._send(200, buf.getvalue(), "image/png")
            elif m := re.fullmatch(r"/sessions/([^/]+)/filters", self.path):
                session = self._session_or_404(m.group(1))
                if session:
                    with session.lock:
                        body = transfer_function.filters_to_json(session.filters)
                    self._json(200, body)
            elif self.static_dir:
                self._static()
            else:
                self._error(404, f"no route for GET {self.path}")
        except Exception as exc:   # pragma: no cover - last resort
            self._error(500, str(exc))

    def _static(self):
        rel = self.path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) \
                or not target.is_file():
            return self._error(404, f"no route for GET {self.path}")
        types = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".png": "image/png",
                 ".map": "application/json"}
        self._send(200, target.read_bytes(),
                   types.get(target.suffix, "application/octet-stream"))

    # -- POST ---------------------------------------------------------

    def do_POST(self):
        try:
            body = self._body()
            if self.path == "/volumes":
                self._post_volume(body)
            elif self.path == "/models":
                try:
                    mid = self.service.add_model(body)
                except VoltfError as exc:
                    return self._error(422, str(exc))
                self._json(201, {"model_id": mid})
            elif self.path == "/sessions":
                self._post_session(body)
            elif m := re.fullmatch(r"/sessions/([^/]+)/autoplace", self.path):
                session = self._session_or_404(m.group(1))
                if session:
                    with session.lock:
                        try:
                            filters = self.service.autoplace(session)
                        except VoltfError as exc:
                            return self._error(422, str(exc))
                        session.filters = filters
                        self._json(200, transfer_function.filters_to_json(filters))
            elif m := re.fullmatch(r"/sessions/([^/]+)/render", self.path):
                session = self._session_or_404(m.group(1))
                if session:
                    try:
                        obj = json.loads(body or b"{}")
                        with session.lock:
                            filters = list(session.filters)
                        png = self.service.render_png(
                            session, obj["camera"], obj.get("settings"), filters)
                    except (KeyError, ValueError, VoltfError) as exc:
                        return self._error(422, f"bad render request: {exc}")
                    self._send(200, png, "image/png")
            else:
                self._error(404, f"no route for POST {self.path}")
        except Exception as exc:   # pragma: no cover
            self._error(500, str(exc))

    def _post_volume(self, body):
        try:
            obj = json.loads(body)
            header = obj["header"]
            raw = base64.b64decode(obj["raw_base64"])
        except (ValueError, KeyError, TypeError) as exc:
            return self._error(422, f"bad volume upload: {exc}")
        try:
            vid = self.service.add_volume(header, raw)
        except _TooLarge as exc:
            return self._error(413, str(exc))
        except VoltfError as exc:
            return self._error(422, str(exc))
        self._json(201, {"volume_id": vid})

    def _post_session(self, body):
        try:
            obj = json.loads(body)
            volume_id = obj["volume_id"]
        except (ValueError, KeyError) as exc:
            return self._error(422, f"bad session request: {exc}")
        try:
            sid = self.service.create_session(volume_id, obj.get("model_id"))
        except KeyError as exc:
            return self._error(404, f"unknown id {exc.args[0]!r}")
        self._json(201, {"session_id": sid})

    # -- PUT ----------------------------------------------------------

    def do_PUT(self):
        try:
            if m := re.fullmatch(r"/sessions/([^/]+)/filters", self.path):
                session = self._session_or_404(m.group(1))
                if not session:
                    return
                body = self._body()
                try:
                    items = json.loads(body)
                    filters = transfer_function.filters_from_json(items)
                except json.JSONDecodeError as exc:
                    return self._error(422, f"not JSON: {exc}")
                except InvalidFilter as exc:
                    # Session is untouched on any 422.
                    return self._error(422, exc.message, field=exc.field)
                with session.lock:
                    session.filters = filters
                    self._json(200, transfer_function.filters_to_json(filters))
            else:
                self._error(404, f"no route for PUT {self.path}")
        except Exception as exc:   # pragma: no cover
            self._error(500, str(exc))


def make_server(port=0, data_dir=None, max_voxels=DEFAULT_MAX_VOXELS,
                static_dir=None):
    """ThreadingHTTPServer bound to port (0 = ephemeral). Caller runs
    serve_forever(), typically on a thread in tests."""
    service = VoltfService(data_dir=data_dir, max_voxels=max_voxels)
    handler = type("BoundHandler", (_Handler,), {
        "service": service,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    server.voltf_service = service
    return server


def serve_forever(port=8080, data_dir=None, max_voxels=DEFAULT_MAX_VOXELS,
                  static_dir=None):
    data_dir = data_dir or os.environ.get("VOLTF_DATA")
    server = make_server(port=port, data_dir=data_dir, max_voxels=max_voxels,
                         static_dir=static_dir)
    host, bound_port = server.server_address
    print(f"voltf service on http://{host}:{bound_port}"
          + (f" (data: {data_dir})" if data_dir else ""))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
