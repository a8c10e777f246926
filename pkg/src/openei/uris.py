"""Four-field resource URI grammar: parsing, validation, canonical form.

A resource path names either an algorithm or a data stream:

    /ei_algorithms/<scenario>/<algorithm>[/key=value[&key=value...]][?key=value...]
    /ei_data/<realtime|historical>/<sensor_id>[/key=value...][?key=value...]

Scenario is closed to {vehicles, safety, home, health}.  Arguments may ride
in a trailing path field (``.../camera1/timestamp=present_time``) or in a
query string; both spellings parse to the same ordered pair list and the
canonical form always uses the query spelling.  An optional
``scheme://host:port`` prefix is accepted and captured.

Anything outside the grammar raises MalformedUri naming the offending
field; parsing never throws anything else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MalformedUri

RESOURCE_KINDS = ("ei_algorithms", "ei_data")
SCENARIOS = ("vehicles", "safety", "home", "health")
DATA_TYPES = ("realtime", "historical")

_FIELD_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")
_KEY_RE = re.compile(r"[A-Za-z0-9_]+\Z")
_VALUE_RE = re.compile(r"[A-Za-z0-9_.:\-]*\Z")
_HOST_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")


@dataclass(frozen=True)
class ResourceUri:
    resource_kind: str
    field3: str  # scenario for algorithms, data type for data
    field4: str  # algorithm name or sensor id
    args: tuple[tuple[str, str], ...] = ()
    host: str = ""
    port: int | None = None

    @property
    def scenario(self) -> str:
        return self.field3

    @property
    def data_type(self) -> str:
        return self.field3

    @property
    def name(self) -> str:
        return self.field4

    def arg(self, key: str, default: str | None = None) -> str | None:
        """First occurrence wins when a key repeats."""
        for k, v in self.args:
            if k == key:
                return v
        return default

    def has_arg(self, key: str) -> bool:
        return any(k == key for k, _ in self.args)


def _parse_pairs(text: str, where: str) -> tuple[tuple[str, str], ...]:
    pairs = []
    for chunk in text.split("&"):
        key, eq, value = chunk.partition("=")
        if not eq:
            raise MalformedUri(where, f"argument {chunk!r} is not key=value")
        if not _KEY_RE.match(key):
            raise MalformedUri(where, f"bad argument key {key!r}")
        if not _VALUE_RE.match(value):
            raise MalformedUri(where, f"bad argument value {value!r}")
        pairs.append((key, value))
    return tuple(pairs)


def _split_authority(text: str) -> tuple[str, int | None, str]:
    host, port = "", None
    if "://" in text:
        scheme, _, rest = text.partition("://")
        if scheme not in ("http", "https"):
            raise MalformedUri("scheme", f"unsupported scheme {scheme!r}")
        authority, slash, remainder = rest.partition("/")
        if not slash:
            raise MalformedUri("path", "no path after authority")
        if ":" in authority:
            host, _, port_text = authority.partition(":")
            if not port_text.isdigit():
                raise MalformedUri("port", f"bad port {port_text!r}")
            port = int(port_text)
        else:
            host = authority
        if host and not _HOST_RE.match(host):
            raise MalformedUri("host", f"bad host {host!r}")
        text = "/" + remainder
    return host, port, text


def parse_uri(path_and_query: str) -> ResourceUri:
    """Parse a resource path (optionally with scheme://host:port) into fields."""
    if not isinstance(path_and_query, str) or not path_and_query:
        raise MalformedUri("path", "empty input")
    host, port, text = _split_authority(path_and_query)

    path, question, query = text.partition("?")
    path = path.removeprefix("/")
    if path.endswith("/"):
        path = path[:-1]
    if not path:
        raise MalformedUri("path", "empty path")

    segments = path.split("/")
    if any(segment == "" for segment in segments):
        raise MalformedUri("path", "empty path field")
    if len(segments) < 3 or len(segments) > 4:
        raise MalformedUri(
            "path", f"expected 3 path fields plus optional arguments, got {len(segments)}"
        )

    kind = segments[0]
    if kind not in RESOURCE_KINDS:
        raise MalformedUri("resource_kind", f"unknown resource kind {kind!r}")

    field3 = segments[1]
    if kind == "ei_algorithms":
        if field3 not in SCENARIOS:
            raise MalformedUri("scenario", f"unknown scenario {field3!r}")
    else:
        if field3 not in DATA_TYPES:
            raise MalformedUri("data_type", f"unknown data type {field3!r}")

    field4 = segments[2]
    if "=" in field4:
        raise MalformedUri(
            "name", f"field {field4!r} looks like an argument; name field missing"
        )
    if not _FIELD_RE.match(field4):
        raise MalformedUri("name", f"bad name field {field4!r}")

    args: tuple[tuple[str, str], ...] = ()
    if len(segments) == 4:
        args += _parse_pairs(segments[3], "path_args")
    if question:
        args += _parse_pairs(query, "query_args")

    return ResourceUri(
        resource_kind=kind, field3=field3, field4=field4, args=args, host=host, port=port
    )


def format_uri(uri: ResourceUri) -> str:
    """Canonical text form: query-string spelling, no authority."""
    path = f"/{uri.resource_kind}/{uri.field3}/{uri.field4}"
    if uri.args:
        path += "?" + "&".join(f"{k}={v}" for k, v in uri.args)
    return path


def canonical(path_and_query: str) -> str:
    return format_uri(parse_uri(path_and_query))
