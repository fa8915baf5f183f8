"""Newline-delimited JSON request/response client for child-process endpoints.

One object per line over the child's standard streams, UTF-8, no pretty
printing. Requests carry a monotonically increasing id; the endpoint must
echo it. One request is in flight at a time per endpoint.

Request/response shapes:

    {"id":0,"op":"hello"}                      -> {"id":0,"ok":true,"name":str,"d":int,"l_max":int}
    {"id":n,"op":"encode","text":str}          -> {"id":n,"ok":true,"embedding":[[...]]}
    {"id":n,"op":"decode","embedding":[[...]],
     "prompt_id":str}                          -> {"id":n,"ok":true,"text":str}
    {"id":n,"op":"validate","text":str}        -> {"id":n,"ok":true,"valid":bool}
    {"id":n,"op":"score","text":str}           -> {"id":n,"ok":true,"score":real}
    any failure                                -> {"id":n,"ok":false,"error":str}
"""

from __future__ import annotations

import json
import select
import subprocess


class ProtocolError(RuntimeError):
    """Endpoint broke the wire contract (bad line, wrong id, error reply, timeout)."""


class EndpointClient:
    """Serialized client for one child-process endpoint."""

    def __init__(self, command, timeout: float = 60.0):
        self._command = list(command)
        self._timeout = timeout
        self._next_id = 0
        self._proc = subprocess.Popen(
            self._command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=None,
        )
        self._buffer = b""
        self.name: str | None = None
        self.d: int | None = None
        self.l_max: int | None = None

    def hello(self) -> dict:
        reply = self.request("hello")
        for key in ("name", "d", "l_max"):
            if key not in reply:
                raise ProtocolError(f"hello reply missing {key!r}: {reply}")
        self.name = str(reply["name"])
        self.d = int(reply["d"])
        self.l_max = int(reply["l_max"])
        return reply

    def request(self, op: str, **fields) -> dict:
        if self._proc.poll() is not None:
            raise ProtocolError(f"endpoint process exited with code {self._proc.returncode}")
        req_id = self._next_id
        self._next_id += 1
        payload = {"id": req_id, "op": op, **fields}
        line = json.dumps(payload, ensure_ascii=False) + "\n"
        try:
            self._proc.stdin.write(line.encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"endpoint pipe closed while sending: {exc}") from exc

        raw = self._read_line()
        try:
            reply = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"endpoint sent a malformed line: {raw[:200]!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"endpoint reply is not an object: {reply!r}")
        if reply.get("id") != req_id:
            raise ProtocolError(f"endpoint answered id {reply.get('id')!r}, expected {req_id}")
        if not reply.get("ok", False):
            raise ProtocolError(f"endpoint error for op {op!r}: {reply.get('error', 'unknown')}")
        return reply

    def _read_line(self) -> str:
        stdout = self._proc.stdout
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([stdout], [], [], self._timeout)
            if not ready:
                raise ProtocolError(f"endpoint timed out after {self._timeout}s")
            chunk = stdout.read1(65536)
            if not chunk:
                raise ProtocolError("endpoint closed its stdout mid-request")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "EndpointClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
