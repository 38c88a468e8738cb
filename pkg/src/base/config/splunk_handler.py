import collections
import json
import logging
import threading
import time
import traceback

import requests

LEVEL_MAP = {
    "DEBUG": "Debug",
    "INFO": "Information",
    "WARNING": "Warning",
    "ERROR": "Error",
    "CRITICAL": "Critical",
}


class SplunkHECHandler(logging.Handler):
    """
    Splunk HEC logging handler for batch CLI runs.
    Buffers payloads in a bounded deque and ships them from a daemon thread.
    """

    def __init__(
        self, host: str, token: str, url: str, application_name: str, timeout=2, max_queue_size=1000
    ):
        super().__init__()
        self.host = host
        self.token = token
        self.url = url
        self.application_name = application_name
        self.timeout = timeout
        self.queue = collections.deque(maxlen=max_queue_size)  # drops oldest when full
        self._wakeup = threading.Event()
        self._stop_event = threading.Event()
        self._thread = None
        self._session = None

    def start(self):
        """Call once when a run starts."""
        self._session = requests.Session()
        self._session.headers.update(
            {
                "Authorization": f"Splunk {self.token}",
                "Content-Type": "application/json",
            }
        )
        self._thread = threading.Thread(target=self._worker_loop, name="splunk-hec", daemon=True)
        self._thread.start()

    def stop(self):
        """Call when a run ends; flushes whatever is still queued."""
        self._stop_event.set()
        self._wakeup.set()
        if self._thread:
            self._thread.join(timeout=self.timeout * 3)
        if self._session:
            self._session.close()

    def emit(self, record):
        """Non-blocking enqueue."""
        try:
            self.queue.append(self._format_payload(record))
            self._wakeup.set()
        except Exception:
            self.handleError(record)

    def _format_payload(self, record):
        props = {}
        skip_keys = {"msg", "levelname", "levelno", "args"}
        for key, value in record.__dict__.items():
            if key not in skip_keys:
                props[key] = self._safe_json_value(value)

        payload = {
            "time": record.created,
            "host": self.host,
            "event": {
                "Level": LEVEL_MAP.get(record.levelname, record.levelname),
                "RenderedMessage": record.getMessage(),
                "System": self.application_name,
                "Properties": props,
            },
        }

        if record.exc_info:
            payload["event"]["Exception"] = "".join(traceback.format_exception(*record.exc_info))

        return payload

    def _safe_json_value(self, value):
        try:
            json.dumps(value)
            return value
        except (TypeError, OverflowError, ValueError):
            return str(value)

    def _send(self, payload) -> bool:
        for attempt in range(3):  # retry up to 3 times
            try:
                resp = self._session.post(self.url, json=payload, timeout=self.timeout)
                if resp.status_code < 400:
                    return True
            except requests.RequestException:
                time.sleep(0.5 * (attempt + 1))
        return False

    def _worker_loop(self):
        while not self._stop_event.is_set() or self.queue:
            if not self.queue:
                self._wakeup.wait(timeout=0.5)
                self._wakeup.clear()
                continue
            payload = self.queue.popleft()
            if not self._send(payload):
                self.handleError(logging.makeLogRecord({"msg": payload["event"]["RenderedMessage"]}))
