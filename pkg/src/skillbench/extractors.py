"""Run extraction adapters over a corpus: wire protocol, timing, cost accounting.

Adapters are external processes or services wrapping a concrete model. The
wire protocol (``skillbench/1``) is line-delimited JSON:

  handshake (first line from a subprocess adapter, or GET {endpoint}/handshake):
      {"protocol": "skillbench/1", "name": ..., "kind": "ner"|"llm"}
  request (one per line on stdin, or POST {endpoint}/extract):
      {"id": ..., "title": ..., "desc": ...}
  response (one per line on stdout, or the POST response body):
      {"id": ..., "skills": [...], "raw_output": optional string,
       "latency_sec": optional, "tokens_in": optional, "tokens_out": optional}

The response id must echo the request id. When ``raw_output`` is present the
harness parses it with :func:`parse_skill_list` (semicolon-separated skills);
otherwise the ``skills`` list is taken as-is, normalized. Harness-side
wall-clock latency around each call is the authoritative per-vacancy timing;
adapter-reported ``latency_sec`` is kept separately. Environment variables
(API keys) pass through to subprocess adapters untouched.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Literal, Mapping, Sequence

import requests

from . import PROTOCOL
from .corpus import VacancyRecord

logger = logging.getLogger(__name__)

PROMPT_PLACEHOLDER = "[*job description*]"

AdapterKind = Literal["ner", "llm"]
Transport = Literal["subprocess", "http"]


class AdapterError(RuntimeError):
    """Handshake failure, timeout, transport loss, or a malformed response."""


@dataclass(frozen=True)
class AdapterManifest:
    """Description of one extractor process or service."""

    name: str
    kind: AdapterKind
    transport: Transport
    command: tuple[str, ...] | None = None
    endpoint: str | None = None
    model_size_params: int | None = None
    price_in_per_mtok: float | None = None
    price_out_per_mtok: float | None = None
    timeout_sec: float = 120.0
    max_retries: int = 1
    extra_env: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("ner", "llm"):
            raise ValueError(f"adapter {self.name}: unknown kind {self.kind!r}")
        if self.transport == "subprocess" and not self.command:
            raise ValueError(f"adapter {self.name}: subprocess transport needs a command")
        if self.transport == "http" and not self.endpoint:
            raise ValueError(f"adapter {self.name}: http transport needs an endpoint")
        if self.transport not in ("subprocess", "http"):
            raise ValueError(f"adapter {self.name}: unknown transport {self.transport!r}")
        if (self.price_in_per_mtok is None) != (self.price_out_per_mtok is None):
            raise ValueError(
                f"adapter {self.name}: cost reporting needs both price_in_per_mtok "
                f"and price_out_per_mtok"
            )

    @property
    def has_prices(self) -> bool:
        return self.price_in_per_mtok is not None and self.price_out_per_mtok is not None

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "AdapterManifest":
        known = {
            "name", "kind", "transport", "command", "endpoint", "model_size_params",
            "price_in_per_mtok", "price_out_per_mtok", "timeout_sec", "max_retries",
            "extra_env",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown adapter manifest keys: {sorted(unknown)}")
        data = dict(raw)
        if "command" in data and data["command"] is not None:
            cmd = data["command"]
            if isinstance(cmd, str):
                raise ValueError("adapter command must be an argv list, not a string")
            data["command"] = tuple(str(part) for part in cmd)
        return cls(**data)  # type: ignore[arg-type]


@dataclass(frozen=True)
class ExtractionRequest:
    id: str
    title: str
    desc: str

    @classmethod
    def from_record(cls, record: VacancyRecord) -> "ExtractionRequest":
        return cls(id=record.id, title=record.title, desc=record.desc)

    def to_json_line(self) -> str:
        return json.dumps(
            {"id": self.id, "title": self.title, "desc": self.desc}, ensure_ascii=False
        )


@dataclass(frozen=True)
class ExtractionResponse:
    id: str
    skills: tuple[str, ...]
    raw_output: str | None = None
    latency_sec: float | None = None  # adapter-reported, informational
    tokens_in: int | None = None
    tokens_out: int | None = None


@dataclass(frozen=True)
class UsageRecord:
    """Harness-side per-call accounting used for timing and cost reports."""

    vacancy_id: str
    wall_latency_sec: float
    tokens_in: int | None
    tokens_out: int | None
    cost_usd: float
    cost_available: bool


@dataclass(frozen=True)
class AdapterFailure:
    vacancy_id: str
    error: str


@dataclass
class AdapterRunResult:
    manifest: AdapterManifest
    handshake: dict
    results: list[tuple[ExtractionResponse, UsageRecord]]
    failures: list[AdapterFailure]


def parse_skill_list(raw: str) -> list[str]:
    """Split a semicolon-separated skill string into a clean list.

    Trims whitespace, drops empties, strips trailing sentence periods, and
    deduplicates case-folded while keeping the first surface form. Parsing
    the re-join of its own output is a no-op.
    """
    out: list[str] = []
    seen: set[str] = set()
    for part in raw.split(";"):
        s = part.strip()
        while s.endswith("."):
            s = s[:-1].rstrip()
        if not s:
            continue
        key = s.casefold()
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    return out


def normalize_skills(skills: Sequence[str]) -> list[str]:
    """Trim, drop empties, dedupe case-folded keeping the first surface form."""
    out: list[str] = []
    seen: set[str] = set()
    for raw in skills:
        s = raw.strip()
        if not s:
            continue
        key = s.casefold()
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    return out


def prompt_render(template: str, record: VacancyRecord) -> str:
    """Insert the record's description verbatim at the placeholder token."""
    if PROMPT_PLACEHOLDER not in template:
        raise ValueError(f"template is missing the placeholder {PROMPT_PLACEHOLDER!r}")
    return template.replace(PROMPT_PLACEHOLDER, record.desc)


def default_prompt(lang: str = "ru") -> str:
    """The shipped extraction prompt (Russian default, English also available)."""
    name = f"extraction_{lang}.txt"
    return resources.files("skillbench.prompts").joinpath(name).read_text("utf-8").strip()


def record_cost(
    manifest: AdapterManifest, tokens_in: int | None, tokens_out: int | None
) -> tuple[float, bool]:
    """Per-record USD cost; (0.0, unavailable) when prices or tokens are missing."""
    if not manifest.has_prices or tokens_in is None or tokens_out is None:
        return 0.0, False
    cost = (
        tokens_in * manifest.price_in_per_mtok / 1e6
        + tokens_out * manifest.price_out_per_mtok / 1e6
    )
    return cost, True


@dataclass(frozen=True)
class CostSummary:
    total_usd: float
    records: int
    records_without_cost: int

    @property
    def complete(self) -> bool:
        return self.records_without_cost == 0


def compute_cost(usage: Sequence[UsageRecord]) -> CostSummary:
    """Sum per-record costs, flagging records that lacked prices or tokens."""
    total = 0.0
    missing = 0
    for u in usage:
        total += u.cost_usd
        if not u.cost_available:
            missing += 1
    return CostSummary(total_usd=total, records=len(usage), records_without_cost=missing)


# --- transports -------------------------------------------------------------

def _parse_handshake(raw: object, manifest: AdapterManifest) -> dict:
    if not isinstance(raw, dict):
        raise AdapterError(f"adapter {manifest.name}: handshake is not an object")
    if raw.get("protocol") != PROTOCOL:
        raise AdapterError(
            f"adapter {manifest.name}: expected protocol {PROTOCOL!r}, "
            f"got {raw.get('protocol')!r}"
        )
    if raw.get("kind") not in ("ner", "llm"):
        raise AdapterError(f"adapter {manifest.name}: handshake kind {raw.get('kind')!r}")
    return raw


def _parse_response(raw_line_or_obj: object, request: ExtractionRequest) -> ExtractionResponse:
    if isinstance(raw_line_or_obj, (str, bytes)):
        try:
            obj = json.loads(raw_line_or_obj)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"response is not valid JSON: {exc}") from exc
    else:
        obj = raw_line_or_obj
    if not isinstance(obj, dict):
        raise AdapterError(f"response is not an object: {obj!r}")
    if obj.get("error") is not None:
        raise AdapterError(f"adapter reported an error: {obj['error']}")
    resp_id = obj.get("id")
    if resp_id is None or str(resp_id) != request.id:
        raise AdapterError(f"response id {resp_id!r} does not echo request id {request.id!r}")
    raw_output = obj.get("raw_output")
    if raw_output is not None and not isinstance(raw_output, str):
        raise AdapterError(f"raw_output must be a string, got {raw_output!r}")
    if isinstance(raw_output, str):
        skills = parse_skill_list(raw_output)
    else:
        raw_skills = obj.get("skills", [])
        if not isinstance(raw_skills, list) or any(
            not isinstance(s, str) for s in raw_skills
        ):
            raise AdapterError(f"skills must be a list of strings, got {raw_skills!r}")
        skills = normalize_skills(raw_skills)

    def _opt_int(key: str) -> int | None:
        v = obj.get(key)
        if v is None:
            return None
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise AdapterError(f"{key} must be a non-negative integer, got {v!r}")
        return v

    latency = obj.get("latency_sec")
    if latency is not None and not isinstance(latency, (int, float)):
        raise AdapterError(f"latency_sec must be a number, got {latency!r}")
    return ExtractionResponse(
        id=request.id,
        skills=tuple(skills),
        raw_output=raw_output,
        latency_sec=float(latency) if latency is not None else None,
        tokens_in=_opt_int("tokens_in"),
        tokens_out=_opt_int("tokens_out"),
    )


class _SubprocessTransport:
    """One adapter process; a reader thread feeds stdout lines to a queue."""

    def __init__(self, manifest: AdapterManifest) -> None:
        self._manifest = manifest
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[object] = queue.Queue()
        self.handshake = self._start()

    def _start(self) -> dict:
        import os

        env = dict(os.environ)
        env.update(self._manifest.extra_env)
        try:
            self._proc = subprocess.Popen(
                list(self._manifest.command or ()),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
                env=env,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise AdapterError(
                f"adapter {self._manifest.name}: cannot start {self._manifest.command}: {exc}"
            ) from exc
        self._lines = queue.Queue()
        reader = threading.Thread(target=self._read_loop, args=(self._proc,), daemon=True)
        reader.start()
        line = self._next_line(self._manifest.timeout_sec, "handshake")
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(
                f"adapter {self._manifest.name}: handshake line is not JSON: {line!r}"
            ) from exc
        return _parse_handshake(raw, self._manifest)

    def _read_loop(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _next_line(self, timeout: float, what: str) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise AdapterError(
                f"adapter {self._manifest.name}: timed out after {timeout}s waiting for {what}"
            ) from None
        if line is None:
            raise AdapterError(f"adapter {self._manifest.name}: process closed its stdout")
        return line

    def call(self, request: ExtractionRequest) -> ExtractionResponse:
        proc = self._proc
        if proc is None or proc.poll() is not None:
            raise AdapterError(f"adapter {self._manifest.name}: process is not running")
        assert proc.stdin is not None
        try:
            proc.stdin.write(request.to_json_line() + "\n")
            proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise AdapterError(f"adapter {self._manifest.name}: write failed: {exc}") from exc
        line = self._next_line(self._manifest.timeout_sec, f"response to id {request.id}")
        return _parse_response(line, request)

    def reset(self) -> None:
        self.close()
        self.handshake = self._start()

    def close(self) -> None:
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.stdin is not None:
                proc.stdin.close()
            proc.wait(timeout=5)
        except (OSError, ValueError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()
        self._proc = None


class _HttpTransport:
    def __init__(self, manifest: AdapterManifest) -> None:
        self._manifest = manifest
        self._endpoint = (manifest.endpoint or "").rstrip("/")
        self._session = requests.Session()
        self.handshake = self._do_handshake()

    def _do_handshake(self) -> dict:
        url = self._endpoint + "/handshake"
        try:
            resp = self._session.get(url, timeout=self._manifest.timeout_sec)
            resp.raise_for_status()
            raw = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise AdapterError(
                f"adapter {self._manifest.name}: handshake at {url} failed: {exc}"
            ) from exc
        return _parse_handshake(raw, self._manifest)

    def call(self, request: ExtractionRequest) -> ExtractionResponse:
        url = self._endpoint + "/extract"
        try:
            resp = self._session.post(
                url,
                json={"id": request.id, "title": request.title, "desc": request.desc},
                timeout=self._manifest.timeout_sec,
            )
            resp.raise_for_status()
            body = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise AdapterError(f"adapter {self._manifest.name}: {url} failed: {exc}") from exc
        return _parse_response(body, request)

    def reset(self) -> None:
        pass

    def close(self) -> None:
        self._session.close()


def _open_transport(manifest: AdapterManifest):
    if manifest.transport == "subprocess":
        return _SubprocessTransport(manifest)
    return _HttpTransport(manifest)


def _call_with_retries(
    transport, manifest: AdapterManifest, request: ExtractionRequest
) -> tuple[ExtractionResponse, float]:
    last_error: AdapterError | None = None
    for attempt in range(manifest.max_retries + 1):
        if attempt:
            logger.warning(
                "adapter %s: retrying id %s (attempt %d): %s",
                manifest.name, request.id, attempt + 1, last_error,
            )
            try:
                transport.reset()
            except AdapterError as exc:
                last_error = exc
                continue
        start = time.perf_counter()
        try:
            response = transport.call(request)
        except AdapterError as exc:
            last_error = exc
            continue
        wall = time.perf_counter() - start
        return response, wall
    assert last_error is not None
    raise last_error


def run_adapter(
    manifest: AdapterManifest,
    records: Sequence[VacancyRecord],
    parallelism: int = 1,
) -> AdapterRunResult:
    """Send every record through the adapter, timing each call harness-side.

    Results come back in dataset order. Records that still fail after the
    retry budget become :class:`AdapterFailure` entries; they are excluded
    from metrics by callers but must be surfaced in reports. ``parallelism``
    > 1 runs that many transports concurrently (subprocess adapters get one
    process each); the default of 1 keeps latency measurements uncontended.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    parallelism = min(parallelism, max(1, len(records)))
    transports = [_open_transport(manifest) for _ in range(parallelism)]
    handshake = transports[0].handshake

    indexed: list[tuple[int, ExtractionResponse, UsageRecord]] = []
    failures: list[tuple[int, AdapterFailure]] = []
    lock = threading.Lock()
    work: queue.SimpleQueue[tuple[int, VacancyRecord]] = queue.SimpleQueue()
    for item in enumerate(records):
        work.put(item)

    def drain(transport) -> None:
        while True:
            try:
                index, record = work.get_nowait()
            except queue.Empty:
                return
            request = ExtractionRequest.from_record(record)
            try:
                response, wall = _call_with_retries(transport, manifest, request)
            except AdapterError as exc:
                with lock:
                    failures.append((index, AdapterFailure(record.id, str(exc))))
                continue
            cost, available = record_cost(manifest, response.tokens_in, response.tokens_out)
            usage = UsageRecord(
                vacancy_id=record.id,
                wall_latency_sec=wall,
                tokens_in=response.tokens_in,
                tokens_out=response.tokens_out,
                cost_usd=cost,
                cost_available=available,
            )
            with lock:
                indexed.append((index, response, usage))

    try:
        if parallelism == 1:
            drain(transports[0])
        else:
            threads = [
                threading.Thread(target=drain, args=(t,), daemon=True) for t in transports
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
    finally:
        for t in transports:
            t.close()

    indexed.sort(key=lambda item: item[0])
    failures.sort(key=lambda item: item[0])
    return AdapterRunResult(
        manifest=manifest,
        handshake=handshake,
        results=[(resp, usage) for _, resp, usage in indexed],
        failures=[f for _, f in failures],
    )


def load_manifests(path: str | object) -> list[AdapterManifest]:
    """Read adapter manifests from a JSON array or a TOML [[adapter]] file."""
    from pathlib import Path

    p = Path(path)  # type: ignore[arg-type]
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".toml":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib  # type: ignore[no-redef]
        data = tomllib.loads(text).get("adapter", [])
    else:
        data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError(f"{p}: expected a list of adapter manifests")
    manifests = [AdapterManifest.from_dict(item) for item in data]
    names = [m.name for m in manifests]
    if len(set(names)) != len(names):
        raise ValueError(f"{p}: adapter names must be unique")
    return manifests
