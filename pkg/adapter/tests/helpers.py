"""Minimal wire-protocol client for driving the adapter under test."""

import json
import select
import subprocess


class MiniClient:
    def __init__(self, command, timeout=30.0):
        self.proc = subprocess.Popen(
            list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE
        )
        self.timeout = timeout
        self.next_id = 0
        self._buf = b""

    def send_raw(self, line: str) -> None:
        self.proc.stdin.write((line + "\n").encode("utf-8"))
        self.proc.stdin.flush()

    def read_reply(self) -> dict:
        while b"\n" not in self._buf:
            ready, _, _ = select.select([self.proc.stdout], [], [], self.timeout)
            if not ready:
                raise TimeoutError("adapter did not answer in time")
            chunk = self.proc.stdout.read1(65536)
            if not chunk:
                raise RuntimeError("adapter closed stdout")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return json.loads(line)

    def request(self, op: str, **fields) -> dict:
        rid = self.next_id
        self.next_id += 1
        self.send_raw(json.dumps({"id": rid, "op": op, **fields}))
        reply = self.read_reply()
        assert reply["id"] == rid, f"id mismatch: {reply}"
        return reply

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
