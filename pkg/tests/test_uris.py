import random
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openei.errors import MalformedUri
from openei.uris import (
    DATA_TYPES,
    RESOURCE_KINDS,
    SCENARIOS,
    canonical,
    format_uri,
    parse_uri,
)


class TestDocumentedExamples:
    def test_realtime_data_uri(self):
        uri = parse_uri("/ei_data/realtime/camera1/timestamp=present_time")
        assert uri.resource_kind == "ei_data"
        assert uri.data_type == "realtime"
        assert uri.name == "camera1"
        assert uri.args == (("timestamp", "present_time"),)

    def test_detection_algorithm_uri(self):
        uri = parse_uri("/ei_algorithms/safety/detection/video=video")
        assert uri.resource_kind == "ei_algorithms"
        assert uri.scenario == "safety"
        assert uri.name == "detection"
        assert uri.args == (("video", "video"),)

    def test_power_monitor_uri_without_args(self):
        uri = parse_uri("/ei_algorithms/home/power_monitor")
        assert uri.scenario == "home"
        assert uri.name == "power_monitor"
        assert uri.args == ()

    def test_full_url_with_authority(self):
        uri = parse_uri("http://192.168.1.5:8080/ei_data/realtime/camera1/timestamp=present_time")
        assert uri.host == "192.168.1.5"
        assert uri.port == 8080
        assert format_uri(uri) == "/ei_data/realtime/camera1?timestamp=present_time"


class TestSpellings:
    def test_query_and_path_args_are_equivalent(self):
        a = parse_uri("/ei_data/historical/cam/start=3&end=7")
        b = parse_uri("/ei_data/historical/cam?start=3&end=7")
        assert a == b

    def test_mixed_spelling_preserves_order_path_first(self):
        uri = parse_uri("/ei_algorithms/safety/detection/video=video?objective=latency")
        assert uri.args == (("video", "video"), ("objective", "latency"))

    def test_leading_slash_optional(self):
        assert parse_uri("ei_data/realtime/cam") == parse_uri("/ei_data/realtime/cam")

    def test_single_trailing_slash_tolerated(self):
        assert canonical("/ei_algorithms/home/power_monitor/") == "/ei_algorithms/home/power_monitor"

    def test_first_occurrence_wins_for_duplicate_keys(self):
        uri = parse_uri("/ei_data/historical/cam/start=1&start=2")
        assert uri.arg("start") == "1"


MALFORMED = [
    "",
    "/",
    "/ei_video/realtime/cam",
    "/ei_data/warm/cam",
    "/ei_algorithms/factory/detection",
    "/ei_data/realtime",
    "/ei_data/realtime/cam/extra/field",
    "/ei_data/realtime/timestamp=present_time",
    "/ei_data//cam",
    "/ei_data/realtime/cam/notanarg",
    "/ei_data/realtime/cam/=value",
    "/ei_data/realtime/cam/key=bad value",
    "/ei_data/realtime/cam?key",
    "ftp://host:1/ei_data/realtime/cam",
    "http://host:port/ei_data/realtime/cam",
    "/ei_data/realtime/cam with space",
]


@pytest.mark.parametrize("text", MALFORMED)
def test_malformed_inputs_raise_malformed_uri(text):
    with pytest.raises(MalformedUri) as excinfo:
        parse_uri(text)
    assert excinfo.value.field  # the offending field is always named


def generate_wellformed(rng):
    """Random URI in any accepted spelling plus its expected canonical form."""
    kind = rng.choice(RESOURCE_KINDS)
    field3 = rng.choice(SCENARIOS if kind == "ei_algorithms" else DATA_TYPES)
    name_chars = string.ascii_lowercase + string.digits + "_.-"
    name = "".join(rng.choice(name_chars) for _ in range(rng.randint(1, 12)))
    n_args = rng.randint(0, 3)
    args = []
    for _ in range(n_args):
        key = "".join(
            rng.choice(string.ascii_lowercase + string.digits + "_")
            for _ in range(rng.randint(1, 8))
        )
        value = "".join(
            rng.choice(string.ascii_lowercase + string.digits + "_.:-")
            for _ in range(rng.randint(0, 8))
        )
        args.append((key, value))
    pair_text = "&".join(f"{k}={v}" for k, v in args)
    spelling = rng.choice(("path", "query", "split")) if args else "none"
    base = f"/{kind}/{field3}/{name}"
    if spelling == "none":
        text = base
    elif spelling == "path":
        text = f"{base}/{pair_text}"
    elif spelling == "query":
        text = f"{base}?{pair_text}"
    else:
        cut = rng.randint(1, len(args))
        head = "&".join(f"{k}={v}" for k, v in args[:cut])
        tail = "&".join(f"{k}={v}" for k, v in args[cut:])
        text = f"{base}/{head}" + (f"?{tail}" if tail else "")
    if rng.random() < 0.3:
        text = text.lstrip("/")
    if rng.random() < 0.3:
        text = f"http://10.0.0.{rng.randint(1, 250)}:{rng.randint(1, 65535)}/" + text.lstrip("/")
    expected = base + (f"?{pair_text}" if args else "")
    return text, expected


def test_fuzzed_round_trip_matches_independent_canonicalizer():
    rng = random.Random(8080)
    for _ in range(2000):
        text, expected = generate_wellformed(rng)
        assert format_uri(parse_uri(text)) == expected


def test_parse_format_is_a_fixed_point():
    rng = random.Random(1)
    for _ in range(500):
        text, _ = generate_wellformed(rng)
        once = format_uri(parse_uri(text))
        assert format_uri(parse_uri(once)) == once


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=60))
def test_arbitrary_text_never_panics(text):
    try:
        uri = parse_uri(text)
    except MalformedUri:
        return
    # anything accepted must round-trip through its canonical form
    assert parse_uri(format_uri(uri)).args == uri.args


def mutate(rng, text):
    ops = ("insert", "delete", "replace", "truncate", "duplicate_slash")
    op = rng.choice(ops)
    if not text:
        return rng.choice(("/", "?", "=", "x"))
    i = rng.randrange(len(text))
    junk = rng.choice("/?=&# %\t\\^")
    if op == "insert":
        return text[:i] + junk + text[i:]
    if op == "delete":
        return text[:i] + text[i + 1 :]
    if op == "replace":
        return text[:i] + junk + text[i + 1 :]
    if op == "truncate":
        return text[:i]
    return text[:i] + "//" + text[i:]


def test_mutated_uris_error_cleanly_or_stay_wellformed():
    rng = random.Random(2024)
    for _ in range(2000):
        text, _ = generate_wellformed(rng)
        broken = mutate(rng, text)
        try:
            uri = parse_uri(broken)
        except MalformedUri:
            continue
        # a mutation may still be grammatical; canonical must then be stable
        assert format_uri(parse_uri(format_uri(uri))) == format_uri(uri)
