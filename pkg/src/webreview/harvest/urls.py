"""URL normalization used for deduplication and quasi-gold-standard comparison."""

from __future__ import annotations

from urllib.parse import urlsplit, urlunsplit

TRACKING_PARAMS = frozenset({"fbclid", "gclid"})
DEFAULT_PORTS = {"http": 80, "https": 443}


class InvalidURLError(ValueError):
    pass


def _is_tracking(key: str) -> bool:
    key = key.lower()
    return key.startswith("utm_") or key in TRACKING_PARAMS


def normalize_url(raw: str) -> str:
    """Return the canonical form of an absolute http(s) URL.

    Scheme and host are lowercased, default ports and the fragment are
    dropped, ``utm_*``/``fbclid``/``gclid`` parameters are removed and the
    remaining parameters are sorted by key (stable, so repeated keys keep
    their relative order). Percent-encoding is left untouched, which makes
    the function a fixpoint on its own output.

    Raises:
        InvalidURLError: ``raw`` is not an absolute http(s) URL.
    """
    if not isinstance(raw, str):
        raise InvalidURLError(f"not a string: {raw!r}")
    text = raw.strip()
    try:
        parts = urlsplit(text)
        port = parts.port
    except ValueError as exc:
        raise InvalidURLError(f"unparseable URL {raw!r}: {exc}") from None
    scheme = parts.scheme.lower()
    if scheme not in DEFAULT_PORTS or not parts.hostname:
        raise InvalidURLError(f"not an absolute http(s) URL: {raw!r}")

    host = parts.hostname.lower()
    if ":" in host:
        host = f"[{host}]"
    netloc = host
    if port is not None and port != DEFAULT_PORTS[scheme]:
        netloc = f"{host}:{port}"
    if parts.username is not None:
        userinfo = parts.username
        if parts.password is not None:
            userinfo += ":" + parts.password
        netloc = f"{userinfo}@{netloc}"

    path = parts.path or "/"

    pairs = [p for p in parts.query.split("&") if p]
    pairs = [p for p in pairs if not _is_tracking(p.split("=", 1)[0])]
    pairs.sort(key=lambda p: p.split("=", 1)[0])
    query = "&".join(pairs)

    return urlunsplit((scheme, netloc, path, query, ""))


def url_host(url: str) -> str:
    return (urlsplit(url).hostname or "").lower()
