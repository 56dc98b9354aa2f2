from __future__ import annotations

import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from webreview.harvest.urls import InvalidURLError, normalize_url, url_host


@pytest.mark.parametrize("raw, expected", [
    ("HTTPS://Example.COM:443/a?utm_source=x&b=2&a=1#frag", "https://example.com/a?a=1&b=2"),
    ("http://example.com", "http://example.com/"),
    ("http://example.com:80/x", "http://example.com/x"),
    ("http://example.com:8080/x", "http://example.com:8080/x"),
    ("https://x.org/p?fbclid=1&gclid=2&UTM_Medium=3", "https://x.org/p"),
    ("https://x.org/p?b=2&a=9&b=1", "https://x.org/p?a=9&b=2&b=1"),
    ("https://x.org/A%20B?q=a%2Fb", "https://x.org/A%20B?q=a%2Fb"),
    ("  https://x.org/p  ", "https://x.org/p"),
])
def test_normalize_examples(raw, expected):
    assert normalize_url(raw) == expected


@pytest.mark.parametrize("raw", ["", "example.com/a", "ftp://x.org/f", "mailto:a@b.c", "http://", "/rel/path",
                                 "http://x.org:notaport/", None])
def test_invalid_urls(raw):
    with pytest.raises(InvalidURLError):
        normalize_url(raw)


def test_url_host():
    assert url_host("https://Sub.Example.org:8443/x") == "sub.example.org"


_seg = st.text(string.ascii_letters + string.digits + "-._~%", min_size=0, max_size=8)
_key = st.sampled_from(["a", "b", "q", "utm_source", "page", "fbclid", "Z"])


@st.composite
def urls(draw):
    scheme = draw(st.sampled_from(["http", "https", "HTTP", "HttpS"]))
    host = draw(st.sampled_from(["example.com", "EXAMPLE.org", "a.b.c.net"]))
    port = draw(st.sampled_from(["", ":80", ":443", ":8080"]))
    path = "".join("/" + s for s in draw(st.lists(_seg, max_size=3)))
    query = "&".join(f"{k}={v}" for k, v in draw(st.lists(st.tuples(_key, _seg), max_size=4)))
    frag = draw(st.sampled_from(["", "#x", "#"]))
    return f"{scheme}://{host}{port}{path}{'?' + query if query else ''}{frag}"


@given(urls())
def test_normalize_is_idempotent(u):
    once = normalize_url(u)
    assert normalize_url(once) == once


@given(urls())
def test_normalized_form_has_no_tracking_or_fragment(u):
    n = normalize_url(u)
    assert "#" not in n and "utm_" not in n and "fbclid" not in n
    assert n.split("://", 1)[0] in ("http", "https")
